"""Kernel adversary classes: closed-form inner maxima over RKHS unit balls.

For tabular indices the kernels are evaluated on an embedding of each
state/action (identity coordinates by default, one-hot optionally), so all
Gram matrices are small dense tables.  Expectations over a tabular model
are taken exactly by default; the sampled path exists for parity with
settings where the model can only be simulated.

RBF convention: exp(-||u - v||^2 / (2 * bandwidth^2)) per coordinate, and
the product kernel multiplies the s, a and s' factors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _backend
from .mdp import Dataset, TransitionModel


class KernelKind(str, enum.Enum):
    RBF_PRODUCT = "rbf-product"
    RBF_NEXTSTATE_ONLY = "rbf-nextstate-only"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    bandwidth_s: float
    bandwidth_a: float
    bandwidth_snext: float
    embedding_s: np.ndarray  # (S, e_s)
    embedding_a: np.ndarray  # (A, e_a)

    def __post_init__(self):
        for name in ("bandwidth_s", "bandwidth_a", "bandwidth_snext"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        emb_s = np.atleast_2d(np.asarray(self.embedding_s, dtype=np.float64))
        emb_a = np.atleast_2d(np.asarray(self.embedding_a, dtype=np.float64))
        object.__setattr__(self, "embedding_s", emb_s)
        object.__setattr__(self, "embedding_a", emb_a)

    @classmethod
    def identity(
        cls,
        n_states: int,
        n_actions: int,
        kind: KernelKind = KernelKind.RBF_PRODUCT,
        bandwidth_s: float = 1.0,
        bandwidth_a: float = 1.0,
        bandwidth_snext: float = 1.0,
    ) -> "KernelSpec":
        """Embed index i as the scalar coordinate [i]."""
        return cls(
            kind=kind,
            bandwidth_s=bandwidth_s,
            bandwidth_a=bandwidth_a,
            bandwidth_snext=bandwidth_snext,
            embedding_s=np.arange(n_states, dtype=np.float64)[:, None],
            embedding_a=np.arange(n_actions, dtype=np.float64)[:, None],
        )

    @classmethod
    def one_hot(
        cls,
        n_states: int,
        n_actions: int,
        kind: KernelKind = KernelKind.RBF_PRODUCT,
        bandwidth_s: float = 1.0,
        bandwidth_a: float = 1.0,
        bandwidth_snext: float = 1.0,
    ) -> "KernelSpec":
        return cls(
            kind=kind,
            bandwidth_s=bandwidth_s,
            bandwidth_a=bandwidth_a,
            bandwidth_snext=bandwidth_snext,
            embedding_s=np.eye(n_states),
            embedding_a=np.eye(n_actions),
        )

    def gram_s(self) -> np.ndarray:
        return rbf_gram(self.embedding_s, self.bandwidth_s)

    def gram_a(self) -> np.ndarray:
        return rbf_gram(self.embedding_a, self.bandwidth_a)

    def gram_snext(self) -> np.ndarray:
        return rbf_gram(self.embedding_s, self.bandwidth_snext)


def rbf_gram(embedding: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gram table K[i, j] = exp(-||e_i - e_j||^2 / (2 bandwidth^2))."""
    sq = ((embedding[:, None, :] - embedding[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(over="ignore"):
        scaled = sq / (2.0 * bandwidth**2) if np.isfinite(bandwidth) else np.zeros_like(sq)
    return np.exp(-scaled)


def _record_rows(
    data: Dataset,
    model: TransitionModel,
    n_model_samples: int | None,
    seed: int,
) -> np.ndarray:
    """Per-record next-state law under the model: exact rows or sampled histograms."""
    rows = model.probs[data.s, data.a]
    if n_model_samples is None:
        return rows
    if n_model_samples < 1:
        raise ValueError("n_model_samples must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random((len(data), n_model_samples))
    cum = np.cumsum(rows, axis=1)
    draws = np.minimum(
        (cum[:, None, :] <= u[:, :, None]).sum(axis=2), model.probs.shape[2] - 1
    )
    hist = np.zeros_like(rows)
    np.add.at(hist, (np.repeat(np.arange(len(data)), n_model_samples), draws.ravel()), 1.0)
    return hist / n_model_samples


def rkhs_max_mml_sq(
    data: Dataset,
    kernel: KernelSpec,
    model: TransitionModel,
    n_model_samples: int | None = None,
    seed: int = 0,
) -> float:
    """Squared inner maximum of the consistency loss over the RKHS unit ball.

    Double mean over ordered record pairs of

        E_{x,x~P} K((s,a,x),(s~,a~,x~)) - 2 E_{x~P} K((s,a,x),(s~,a~,s~'))
            + K((s,a,s'),(s~,a~,s~')),

    with product kernel K = K_s K_a K_snext.  Exact model expectations by
    default; pass ``n_model_samples`` to use seeded draws instead.  Clamped
    at zero against floating cancellation.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if kernel.kind is not KernelKind.RBF_PRODUCT:
        raise ValueError("rkhs_max_mml_sq needs a product kernel")
    gsa = kernel.gram_s()[np.ix_(data.s, data.s)] * kernel.gram_a()[np.ix_(data.a, data.a)]
    k3 = kernel.gram_snext()
    rows = _record_rows(data, model, n_model_samples, seed)
    mrows = rows @ k3
    total = _backend.gram_accumulate(
        np.ascontiguousarray(gsa),
        np.ascontiguousarray(mrows),
        np.ascontiguousarray(rows),
        np.ascontiguousarray(k3),
        np.ascontiguousarray(data.s_next),
    )
    if total < -1e-12:
        raise ArithmeticError(f"closed form returned {total:g} < -1e-12")
    return max(float(total), 0.0)


def _vaml_sq_terms(
    kernel: KernelSpec,
    model: TransitionModel,
    s: np.ndarray,
    a: np.ndarray,
    s_next: np.ndarray,
    n_model_samples: int | None,
    seed: int,
) -> np.ndarray:
    k3 = kernel.gram_snext()
    rows = model.probs[s, a]
    if n_model_samples is not None:
        rng = np.random.default_rng(seed)
        u = rng.random((len(s), n_model_samples))
        cum = np.cumsum(rows, axis=1)
        draws = np.minimum(
            (cum[:, None, :] <= u[:, :, None]).sum(axis=2), model.probs.shape[2] - 1
        )
        hist = np.zeros_like(rows)
        np.add.at(hist, (np.repeat(np.arange(len(s)), n_model_samples), draws.ravel()), 1.0)
        rows = hist / n_model_samples
    mrows = rows @ k3
    terms = (
        (mrows * rows).sum(axis=1)
        - 2.0 * mrows[np.arange(len(s)), s_next]
        + k3[s_next, s_next]
    )
    return np.maximum(terms, 0.0)


def rkhs_max_vaml(
    data: Dataset,
    kernel: KernelSpec,
    model: TransitionModel,
    n_model_samples: int | None = None,
    seed: int = 0,
) -> float:
    """Value-aware loss with the RKHS unit ball: the per-record squared
    supremum E_{x,x~P}K3 - 2 E_{x~P}K3(x, s') + K3(s', s'), averaged."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    if kernel.kind is not KernelKind.RBF_NEXTSTATE_ONLY:
        raise ValueError("rkhs_max_vaml needs a next-state-only kernel")
    terms = _vaml_sq_terms(
        kernel, model, data.s, data.a, data.s_next, n_model_samples, seed
    )
    return float(terms.mean())


def vaml_record_sups(
    kernel: KernelSpec,
    model: TransitionModel,
    s: np.ndarray,
    a: np.ndarray,
    s_next: np.ndarray,
) -> np.ndarray:
    """Per-record RKHS-ball supremum |E_{x~P}[V] - V(s')|: the square root
    of the closed-form squared supremum, for the next-state-only kernel."""
    return np.sqrt(_vaml_sq_terms(kernel, model, s, a, s_next, None, 0))


def median_bandwidth(
    data: Dataset, coordinate: str, max_exact: int = 2000, seed: int = 0
) -> float:
    """Median pairwise absolute distance of one identity-embedded coordinate.

    Exact over all unordered pairs for batches up to ``max_exact`` records;
    larger batches are subsampled with the given seed.
    """
    values = {"S": data.s, "A": data.a, "SNEXT": data.s_next}.get(coordinate.upper())
    if values is None:
        raise ValueError("coordinate must be one of 'S', 'A', 'SNEXT'")
    values = values.astype(np.float64)
    if np.unique(values).size < 2:
        raise ValueError(f"coordinate {coordinate}: all values identical, zero bandwidth")
    if len(values) > max_exact:
        rng = np.random.default_rng(seed)
        values = rng.choice(values, size=max_exact, replace=False)
    diffs = np.abs(values[:, None] - values[None, :])
    iu = np.triu_indices(len(values), k=1)
    med = float(np.median(diffs[iu]))
    if med <= 0:
        raise ValueError(f"coordinate {coordinate}: median pairwise distance is zero")
    return med
