"""Model-learning loss functionals.

Each loss has an empirical form over a dataset and, where meaningful, an
exact form that replaces the sample average with the expectation under the
data distribution and true dynamics.  The exact data distribution is the
behavior policy's discounted occupancy normalized to total mass one.

All values are signed; the minimax layer applies the absolute value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mdp import (
    Dataset,
    Policy,
    TabularMdp,
    TransitionModel,
    ValueFunction,
    WeightFunction,
    behavior_data_distribution,
    density_ratio,
    solve_occupancy,
    solve_value_function,
)


class LossKind(str, enum.Enum):
    MML = "mml"
    MLE = "mle"
    VAML_L2 = "vaml-l2"
    VAML_L1 = "vaml-l1"
    RESIDUAL_MML = "residual-mml"
    CI = "ci"


class IdentityVariant(str, enum.Enum):
    """Which exact adversary pair realizes the evaluation-error identity."""

    WSTAR_VP = "wstar-vp"  # (true-occupancy ratio, model value function)
    WP_VSTAR = "wp-vstar"  # (model-occupancy ratio, true value function)


@dataclass(frozen=True)
class LossValue:
    value: float
    n_samples: int
    kind: LossKind

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("loss value must be finite")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")


@dataclass(frozen=True)
class AdversaryPair:
    """One (w, V) element of the adversary product class."""

    w: WeightFunction
    v: ValueFunction


def _check_model(model: TransitionModel, n_states: int, n_actions: int) -> None:
    if model.probs.shape != (n_states, n_actions, n_states):
        raise ValueError("model shape disagrees with the data index ranges")


def _expected_values(model: TransitionModel, v: np.ndarray) -> np.ndarray:
    # E_{x ~ P(.|s,a)}[V(x)] for every (s, a), exact tabular dot product
    return model.probs @ v


def mml_loss(data: Dataset, adversary: AdversaryPair, model: TransitionModel) -> LossValue:
    """E_n[ w(s,a) (E_{x~P}[V(x)] - V(s')) ] with the inner expectation exact."""
    _check_model(model, data.n_states, data.n_actions)
    ev = _expected_values(model, adversary.v.values)
    terms = adversary.w.values[data.s, data.a] * (
        ev[data.s, data.a] - adversary.v.values[data.s_next]
    )
    return LossValue(float(terms.mean()), len(data), LossKind.MML)


def mml_loss_exact(
    mdp: TabularMdp,
    behavior: Policy,
    adversary: AdversaryPair,
    model: TransitionModel,
) -> LossValue:
    """Exact expectation of the adversarial one-step consistency error."""
    _check_model(model, mdp.n_states, mdp.n_actions)
    data_sa = behavior_data_distribution(mdp, behavior)
    ev_model = _expected_values(model, adversary.v.values)
    ev_true = mdp.transition @ adversary.v.values
    value = float((data_sa * adversary.w.values * (ev_model - ev_true)).sum())
    return LossValue(value, data_sa.size, LossKind.MML)


def mle_loss(data: Dataset, model: TransitionModel) -> LossValue:
    """Average negative log-likelihood of the observed transitions."""
    _check_model(model, data.n_states, data.n_actions)
    probs = model.probs[data.s, data.a, data.s_next]
    zero = probs <= 0.0
    if zero.any():
        i = int(np.argmax(zero))
        raise ValueError(
            "model assigns probability 0 to observed transition "
            f"(s={data.s[i]}, a={data.a[i]}, s'={data.s_next[i]}) at record {i}"
        )
    return LossValue(float(-np.log(probs).mean()), len(data), LossKind.MLE)


def mle_loss_exact(mdp: TabularMdp, behavior: Policy, model: TransitionModel) -> LossValue:
    """Expected negative log-likelihood (cross-entropy) under the data law."""
    _check_model(model, mdp.n_states, mdp.n_actions)
    data_sa = behavior_data_distribution(mdp, behavior)
    support = (data_sa[:, :, None] * mdp.transition) > 0
    if np.any(support & (model.probs <= 0)):
        s, a, x = np.argwhere(support & (model.probs <= 0))[0]
        raise ValueError(
            f"model assigns probability 0 to supported transition (s={s}, a={a}, s'={x})"
        )
    with np.errstate(divide="ignore"):
        log_p = np.where(model.probs > 0, np.log(np.where(model.probs > 0, model.probs, 1.0)), 0.0)
    value = float(-(data_sa[:, :, None] * mdp.transition * log_p).sum())
    return LossValue(value, data_sa.size, LossKind.MLE)


def _vaml_sup_per_record(v_class, model: TransitionModel, s, a, s_next) -> np.ndarray:
    """sup over V of |E_{x~P}[V] - V(s')| for each record, exact per class kind."""
    from .classes import ClassKind, FunctionClassHandle  # circular at import time

    if not isinstance(v_class, FunctionClassHandle):
        raise TypeError("v_class must be a FunctionClassHandle")
    if v_class.kind is ClassKind.FINITE_GRID:
        sups = np.zeros(len(s))
        for pair in v_class.pairs:
            ev = _expected_values(model, pair.v.values)
            vals = np.abs(ev[s, a] - pair.v.values[s_next])
            sups = np.maximum(sups, vals)
        return sups
    if v_class.kind is ClassKind.TABULAR_BALL:
        # linear functional over the sup-norm ball: sup = bound * ||P(.|s,a) - e_{s'}||_1
        rows = model.probs[s, a]
        l1 = np.abs(rows).sum(axis=1) - np.abs(rows[np.arange(len(s)), s_next]) + np.abs(
            rows[np.arange(len(s)), s_next] - 1.0
        )
        return v_class.bound * l1
    if v_class.kind is ClassKind.RKHS_UNIT_BALL:
        from .rkhs import vaml_record_sups

        return vaml_record_sups(v_class.kernel, model, s, a, s_next)
    raise ValueError(f"unsupported value class kind for VAML: {v_class.kind}")


def vaml_loss(data: Dataset, v_class, model: TransitionModel, norm: str = "L2") -> LossValue:
    """Value-aware loss: per-record supremum over the value class.

    L2 averages the squared sup, L1 the absolute sup.
    """
    _check_model(model, data.n_states, data.n_actions)
    sups = _vaml_sup_per_record(v_class, model, data.s, data.a, data.s_next)
    if norm == "L2":
        return LossValue(float((sups**2).mean()), len(data), LossKind.VAML_L2)
    if norm == "L1":
        return LossValue(float(sups.mean()), len(data), LossKind.VAML_L1)
    raise ValueError("norm must be 'L2' or 'L1'")


def vaml_loss_exact(
    mdp: TabularMdp, behavior: Policy, v_class, model: TransitionModel, norm: str = "L2"
) -> LossValue:
    """Exact expectation of the per-sample supremum over (s, a, s')."""
    _check_model(model, mdp.n_states, mdp.n_actions)
    data_sa = behavior_data_distribution(mdp, behavior)
    s_idx, a_idx = np.meshgrid(
        np.arange(mdp.n_states), np.arange(mdp.n_actions), indexing="ij"
    )
    value = 0.0
    for x in range(mdp.n_states):
        sups = _vaml_sup_per_record(
            v_class, model, s_idx.ravel(), a_idx.ravel(), np.full(s_idx.size, x)
        ).reshape(mdp.n_states, mdp.n_actions)
        weight = data_sa * mdp.transition[:, :, x]
        value += float((weight * (sups**2 if norm == "L2" else sups)).sum())
    kind = LossKind.VAML_L2 if norm == "L2" else LossKind.VAML_L1
    return LossValue(value, data_sa.size, kind)


def residual_mml_loss(
    data: Dataset,
    adversary: AdversaryPair,
    base_model: TransitionModel,
    model: TransitionModel,
    variant: str = "paper",
) -> LossValue:
    """Residual-dynamics loss against a baseline model.

    ``variant='paper'`` keeps the printed inner term
    ``E_{x~P0}[(P0-P)/P0 V] - V(s')`` which simplifies to
    ``E_{P0}[V] - E_P[V] - V(s')``; ``variant='corrected'`` uses
    ``E_{P0}[V] + (E_{P0}[V] - E_P[V]) - V(s')`` so that the baseline model
    itself recovers the plain consistency loss.  Only tests exercise the
    corrected form.
    """
    _check_model(model, data.n_states, data.n_actions)
    _check_model(base_model, data.n_states, data.n_actions)
    bad = (base_model.probs <= 0) & (model.probs > 0)
    observed = np.zeros((data.n_states, data.n_actions), dtype=bool)
    observed[data.s, data.a] = True
    if np.any(bad & observed[:, :, None]):
        s, a, x = np.argwhere(bad & observed[:, :, None])[0]
        raise ZeroDivisionError(
            f"base model has zero probability at (s={s}, a={a}, s'={x}) "
            "where the candidate model puts mass"
        )
    ev_base = _expected_values(base_model, adversary.v.values)
    ev_model = np.where(base_model.probs > 0, model.probs, 0.0) @ adversary.v.values
    if variant == "paper":
        inner = ev_base - ev_model
    elif variant == "corrected":
        inner = 2.0 * ev_base - ev_model
    else:
        raise ValueError("variant must be 'paper' or 'corrected'")
    terms = adversary.w.values[data.s, data.a] * (
        inner[data.s, data.a] - adversary.v.values[data.s_next]
    )
    return LossValue(float(terms.mean()), len(data), LossKind.RESIDUAL_MML)


def exact_adversary_pair(
    mdp: TabularMdp,
    target: Policy,
    behavior: Policy,
    model: TransitionModel,
    variant: IdentityVariant,
) -> AdversaryPair:
    """The (w, V) pair that makes the evaluation-error identity exact."""
    data_sa = behavior_data_distribution(mdp, behavior)
    if variant is IdentityVariant.WSTAR_VP:
        occ = solve_occupancy(mdp, target)
        v = solve_value_function(mdp, target, model)
    else:
        occ = solve_occupancy(mdp, target, model)
        v = solve_value_function(mdp, target)
    return AdversaryPair(w=density_ratio(occ, data_sa), v=v)


def ope_error_identity(
    mdp: TabularMdp,
    target: Policy,
    behavior: Policy,
    model: TransitionModel,
    variant: IdentityVariant = IdentityVariant.WSTAR_VP,
) -> tuple[float, float]:
    """Evaluation-error identity, both sides computed independently.

    lhs = J(pi, P) - J(pi, P*); rhs = gamma * exact loss at the matched
    adversary pair.  The two agree to floating precision for any model;
    this is the core correctness oracle for the package.
    """
    from .mdp import evaluate_policy

    lhs = evaluate_policy(mdp, target, model) - evaluate_policy(mdp, target)
    pair = exact_adversary_pair(mdp, target, behavior, model, variant)
    rhs = mdp.gamma * mml_loss_exact(mdp, behavior, pair, model).value
    return lhs, rhs
