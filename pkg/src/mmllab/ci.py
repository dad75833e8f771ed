"""Confidence-interval estimation of a policy value over finite grids.

The interval loss is the reweighted reward minus the discounted consistency
loss; the upper bound takes min over models of the max over adversaries and
the lower bound the max of the min.  Values stay signed throughout: unlike
the minimax model fit, no absolute value is applied anywhere here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classes import FunctionClassHandle, enumerate_adversaries
from .losses import AdversaryPair, mml_loss, mml_loss_exact
from .mdp import Dataset, Policy, TabularMdp, TransitionModel, behavior_data_distribution
from .minimax import LossContext


@dataclass(frozen=True)
class CiResult:
    lower: float
    upper: float
    midpoint: float
    gap: float
    argmin_model: int  # attains the upper bound
    argmax_model: int  # attains the lower bound
    j_true: float | None = None

    def __post_init__(self):
        if not np.isclose(self.gap, self.upper - self.lower, atol=1e-12):
            raise ValueError("gap must equal upper - lower")
        if not np.isclose(self.midpoint, 0.5 * (self.upper + self.lower), atol=1e-12):
            raise ValueError("midpoint must be the average of the bounds")


def ci_loss(
    data: Dataset, adversary: AdversaryPair, model: TransitionModel, gamma: float
) -> float:
    """E_n[w r] - gamma * consistency loss, with logged rewards."""
    reward_term = float((adversary.w.values[data.s, data.a] * data.r).mean())
    return reward_term - gamma * mml_loss(data, adversary, model).value


def ci_loss_exact(
    mdp: TabularMdp, behavior: Policy, adversary: AdversaryPair, model: TransitionModel
) -> float:
    data_sa = behavior_data_distribution(mdp, behavior)
    reward_term = float((data_sa * adversary.w.values * mdp.reward_mean).sum())
    return reward_term - mdp.gamma * mml_loss_exact(mdp, behavior, adversary, model).value


def _cell_value(
    context: LossContext, pair: AdversaryPair, model: TransitionModel, gamma: float
) -> float:
    if context.is_exact:
        return ci_loss_exact(context.mdp, context.behavior, pair, model)
    return ci_loss(context.data, pair, model, gamma)


def ci_bounds(
    context: LossContext,
    model_grid: Sequence[TransitionModel],
    adversaries: FunctionClassHandle,
    gamma: float | None = None,
    resolution: int = 1,
    j_true: float | None = None,
) -> CiResult:
    """upper = min_P max_(w,V) of the interval loss; lower = max_P min_(w,V).

    ``gamma`` is taken from the exact context's environment when omitted.
    """
    if not model_grid:
        raise ValueError("model grid must be non-empty")
    pairs = enumerate_adversaries(adversaries, resolution)
    if not pairs:
        raise ValueError("adversary grid must be non-empty")
    if gamma is None:
        if not context.is_exact:
            raise ValueError("gamma is required with an empirical context")
        gamma = context.mdp.gamma
    table = np.array(
        [
            [_cell_value(context, pair, model, gamma) for pair in pairs]
            for model in model_grid
        ]
    )
    per_model_max = table.max(axis=1)
    per_model_min = table.min(axis=1)
    upper_idx = int(per_model_max.argmin())
    lower_idx = int(per_model_min.argmax())
    upper = float(per_model_max[upper_idx])
    lower = float(per_model_min[lower_idx])
    return CiResult(
        lower=lower,
        upper=upper,
        midpoint=0.5 * (upper + lower),
        gap=upper - lower,
        argmin_model=upper_idx,
        argmax_model=lower_idx,
        j_true=j_true,
    )
