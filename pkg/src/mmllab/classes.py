"""Adversary and model function classes, and the closed-form solvers.

The linear solver works with feature tensors indexed by (s, a, s'); the
next-state integral of the displayed normal equations is a finite sum here.
Tabular counting is the special case with standard-basis features, and the
two must agree bit for bit on identical data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .losses import AdversaryPair
from .mdp import Dataset, TransitionModel, ValueFunction, WeightFunction
from .rkhs import KernelSpec

RCOND_SINGULAR = 1e-12


class ClassKind(str, enum.Enum):
    TABULAR_BALL = "tabular-ball"
    FINITE_GRID = "finite-grid"
    LINEAR_SPAN = "linear-span"
    RKHS_UNIT_BALL = "rkhs-unit-ball"


@dataclass(frozen=True)
class LinearClass:
    """Model features phi and adversary features psi over (s, a, s') triples."""

    phi: np.ndarray  # (S, A, S, d)
    psi: np.ndarray  # (S, A, S, d)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        psi = np.asarray(self.psi, dtype=np.float64)
        if phi.ndim != 4 or psi.shape != phi.shape:
            raise ValueError("phi and psi must share shape (S, A, S, d)")
        if phi.shape[3] < 1:
            raise ValueError("feature dimension must be >= 1")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def d(self) -> int:
        return self.phi.shape[3]

    @classmethod
    def tabular_basis(cls, n_states: int, n_actions: int) -> "LinearClass":
        """Standard basis e_i with i = s*A*S + a*S + s'; phi = psi."""
        d = n_states * n_actions * n_states
        phi = np.eye(d).reshape(n_states, n_actions, n_states, d)
        return cls(phi=phi, psi=phi)


@dataclass(frozen=True)
class FunctionClassHandle:
    """A searchable adversary class: finite grid, sup-norm ball, span, or RKHS ball."""

    kind: ClassKind
    bound: float = 0.0
    pairs: tuple[AdversaryPair, ...] = field(default=())
    linear: LinearClass | None = None
    kernel: KernelSpec | None = None
    n_states: int = 0
    n_actions: int = 0

    def __post_init__(self):
        if self.kind is ClassKind.FINITE_GRID and not self.pairs:
            raise ValueError("finite grid must be non-empty")
        if self.kind is ClassKind.TABULAR_BALL:
            if self.bound < 0:
                raise ValueError("ball bound must be nonnegative")
            if self.n_states < 1 or self.n_actions < 1:
                raise ValueError("tabular ball needs the instance sizes")
        if self.kind is ClassKind.LINEAR_SPAN and self.linear is None:
            raise ValueError("linear span needs a LinearClass")
        if self.kind is ClassKind.RKHS_UNIT_BALL and self.kernel is None:
            raise ValueError("RKHS ball needs a KernelSpec")

    @classmethod
    def tabular_ball(
        cls, bound: float, n_states: int, n_actions: int
    ) -> "FunctionClassHandle":
        return cls(
            kind=ClassKind.TABULAR_BALL,
            bound=float(bound),
            n_states=n_states,
            n_actions=n_actions,
        )

    @classmethod
    def finite_grid(cls, pairs: Sequence[AdversaryPair]) -> "FunctionClassHandle":
        return cls(kind=ClassKind.FINITE_GRID, pairs=tuple(pairs))

    @classmethod
    def linear_span(cls, linear: LinearClass) -> "FunctionClassHandle":
        return cls(kind=ClassKind.LINEAR_SPAN, linear=linear)

    @classmethod
    def rkhs_unit_ball(cls, kernel: KernelSpec) -> "FunctionClassHandle":
        return cls(kind=ClassKind.RKHS_UNIT_BALL, kernel=kernel)


def solve_linear_closed_form(data: Dataset, cls: LinearClass) -> np.ndarray:
    """Coefficients zeroing the empirical loss along every adversary direction.

    Solves ``M^T alpha = b`` with ``M = sum_i sum_{s'} phi(s_i,a_i,s') psi(s_i,a_i,s')^T``
    and ``b = sum_i psi(s_i,a_i,s'_i)``; the common 1/n cancels and is dropped.
    """
    S, A = data.n_states, data.n_actions
    if cls.phi.shape[:3] != (S, A, S):
        raise ValueError("feature tensors disagree with the data index ranges")
    # per-(s,a) next-state sums, then accumulate by observed counts
    cross = np.einsum("saxd,saxe->sade", cls.phi, cls.psi)
    counts = np.zeros((S, A))
    np.add.at(counts, (data.s, data.a), 1.0)
    m = np.einsum("sa,sade->de", counts, cross)
    b = cls.psi[data.s, data.a, data.s_next].sum(axis=0)
    rcond = np.linalg.cond(m)
    if not np.isfinite(rcond) or 1.0 / rcond < RCOND_SINGULAR:
        raise np.linalg.LinAlgError(
            f"normal matrix is rank deficient (condition estimate {rcond:.3e})"
        )
    alpha = np.linalg.solve(m.T, b)
    residual = np.abs(m.T @ alpha - b).max() / max(1.0, len(data))
    if residual > 1e-10:
        raise ArithmeticError(
            f"closed form left a per-direction loss of {residual:g} (> 1e-10)"
        )
    return alpha


def tabular_model_from_coefficients(
    alpha: np.ndarray, n_states: int, n_actions: int
) -> TransitionModel:
    """Reshape standard-basis coefficients into a transition model."""
    probs = np.asarray(alpha, dtype=np.float64).reshape(n_states, n_actions, n_states)
    return TransitionModel(probs)


def solve_tabular(data: Dataset, n_states: int, n_actions: int) -> TransitionModel:
    """Empirical conditional frequencies; requires every (s, a) observed."""
    counts = np.zeros((n_states, n_actions, n_states))
    np.add.at(counts, (data.s, data.a, data.s_next), 1.0)
    totals = counts.sum(axis=2)
    missing = np.argwhere(totals == 0)
    if missing.size:
        pairs = ", ".join(f"(s={s}, a={a})" for s, a in missing[:8])
        more = "" if len(missing) <= 8 else f" and {len(missing) - 8} more"
        raise ValueError(f"no data for state-action pairs {pairs}{more}")
    return TransitionModel(counts / totals[:, :, None])


def _ball_levels(bound: float, resolution: int) -> list[float]:
    # nested across resolutions: level set {bound / k : k <= r} grows with r
    return [bound / k for k in range(1, resolution + 1)]


def enumerate_adversaries(
    handle: FunctionClassHandle, resolution: int = 1
) -> list[AdversaryPair]:
    """Concrete (w, V) pairs for grid-searchable classes.

    For the sup-norm ball the enumeration is separable: signed scaled basis
    vectors and the constant vector for each of w and V, crossed.  Every
    standard-basis pair at the full bound is always included, which is what
    the zero-loss uniqueness check needs.  Output at resolution r is a
    prefix-closed subset of resolution r+1.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if handle.kind is ClassKind.FINITE_GRID:
        return list(handle.pairs)
    if handle.kind is not ClassKind.TABULAR_BALL:
        raise ValueError(f"cannot enumerate class kind {handle.kind}")
    return enumerate_tabular_ball(
        handle.bound, handle.n_states, handle.n_actions, resolution
    )


def enumerate_tabular_ball(
    bound: float, n_states: int, n_actions: int, resolution: int = 1
) -> list[AdversaryPair]:
    """Signed-basis and constant directions inside the sup-norm ball."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    pairs: list[AdversaryPair] = []
    w_dirs: list[np.ndarray] = []
    v_dirs: list[np.ndarray] = []
    for level in _ball_levels(bound, resolution):
        for sign in (1.0, -1.0):
            for s in range(n_states):
                for a in range(n_actions):
                    w = np.zeros((n_states, n_actions))
                    w[s, a] = sign * level
                    w_dirs.append(w)
            for x in range(n_states):
                v = np.zeros(n_states)
                v[x] = sign * level
                v_dirs.append(v)
        w_dirs.append(np.full((n_states, n_actions), level))
        v_dirs.append(np.full(n_states, level))
    for w in w_dirs:
        for v in v_dirs:
            pairs.append(AdversaryPair(WeightFunction(w), ValueFunction(v)))
    return pairs
