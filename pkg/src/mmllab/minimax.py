"""Outer minimization over a model grid with inner adversary maximization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classes import ClassKind, FunctionClassHandle, enumerate_adversaries
from .losses import (
    AdversaryPair,
    LossKind,
    mle_loss,
    mle_loss_exact,
    mml_loss,
    mml_loss_exact,
    vaml_loss,
    vaml_loss_exact,
)
from .mdp import Dataset, Policy, TabularMdp, TransitionModel
from .rkhs import rkhs_max_mml_sq


@dataclass(frozen=True)
class LossContext:
    """Where loss expectations come from: a dataset or the exact data law."""

    data: Dataset | None = None
    mdp: TabularMdp | None = None
    behavior: Policy | None = None

    def __post_init__(self):
        if self.data is None and (self.mdp is None or self.behavior is None):
            raise ValueError("need either a dataset or (mdp, behavior)")

    @classmethod
    def empirical(cls, data: Dataset) -> "LossContext":
        return cls(data=data)

    @classmethod
    def exact(cls, mdp: TabularMdp, behavior: Policy) -> "LossContext":
        return cls(mdp=mdp, behavior=behavior)

    @property
    def is_exact(self) -> bool:
        return self.data is None

    def mml(self, pair: AdversaryPair, model: TransitionModel) -> float:
        if self.is_exact:
            return mml_loss_exact(self.mdp, self.behavior, pair, model).value
        return mml_loss(self.data, pair, model).value

    def mle(self, model: TransitionModel) -> float:
        if self.is_exact:
            return mle_loss_exact(self.mdp, self.behavior, model).value
        return mle_loss(self.data, model).value

    def vaml(self, v_class: FunctionClassHandle, model: TransitionModel, norm: str) -> float:
        if self.is_exact:
            return vaml_loss_exact(self.mdp, self.behavior, v_class, model, norm).value
        return vaml_loss(self.data, v_class, model, norm).value


@dataclass(frozen=True)
class ModelSelection:
    chosen_index: int
    chosen_model: TransitionModel
    inner_max: float
    per_model_inner_max: tuple[tuple[int, float], ...]
    adversary_argmax: AdversaryPair | str | None

    def __post_init__(self):
        best = min(v for _, v in self.per_model_inner_max)
        if not np.isclose(best, self.inner_max, rtol=0, atol=0):
            raise ValueError("inner_max must be the minimum over models")
        if self.inner_max < 0:
            raise ValueError("inner_max must be nonnegative")


def _inner_max(
    context: LossContext,
    model: TransitionModel,
    adversaries: FunctionClassHandle,
    loss_kind: LossKind,
    resolution: int,
) -> tuple[float, AdversaryPair | str | None]:
    if loss_kind is LossKind.MLE:
        return context.mle(model), None
    if loss_kind in (LossKind.VAML_L2, LossKind.VAML_L1):
        norm = "L2" if loss_kind is LossKind.VAML_L2 else "L1"
        return context.vaml(adversaries, model, norm), None
    if loss_kind is not LossKind.MML:
        raise ValueError(f"unsupported loss kind {loss_kind}")
    if adversaries.kind is ClassKind.RKHS_UNIT_BALL:
        if context.is_exact:
            raise ValueError("RKHS inner maximum needs an empirical dataset")
        sq = rkhs_max_mml_sq(context.data, adversaries.kernel, model)
        return float(np.sqrt(sq)), "rkhs-unit-ball"
    best = -1.0
    best_pair: AdversaryPair | None = None
    for pair in enumerate_adversaries(adversaries, resolution):
        value = abs(context.mml(pair, model))
        if value > best:
            best, best_pair = value, pair
    if best_pair is None:
        raise ValueError("adversary class enumerated to nothing")
    return best, best_pair


def minimize_finite(
    context: LossContext,
    model_grid: Sequence[TransitionModel],
    adversaries: FunctionClassHandle,
    loss_kind: LossKind,
    resolution: int = 1,
) -> ModelSelection:
    """argmin over the grid of the inner maximum of |loss|.

    Enumerable classes maximize by enumeration, the RKHS ball by its closed
    form; MLE and VAML carry their own (or no) supremum and contribute one
    value per model.  Ties break to the lowest model index.
    """
    if not model_grid:
        raise ValueError("model grid must be non-empty")
    per_model: list[tuple[int, float]] = []
    argmaxes: list[AdversaryPair | str | None] = []
    for idx, model in enumerate(model_grid):
        value, arg = _inner_max(context, model, adversaries, loss_kind, resolution)
        per_model.append((idx, value))
        argmaxes.append(arg)
    best_idx = min(per_model, key=lambda iv: (iv[1], iv[0]))[0]
    return ModelSelection(
        chosen_index=best_idx,
        chosen_model=model_grid[best_idx],
        inner_max=per_model[best_idx][1],
        per_model_inner_max=tuple(per_model),
        adversary_argmax=argmaxes[best_idx],
    )


def misspec_gap(
    context: LossContext,
    model_grid: Sequence[TransitionModel],
    restricted_class: FunctionClassHandle,
    target_pairs: Sequence[AdversaryPair] | Sequence[Sequence[AdversaryPair]],
    resolution: int = 1,
) -> float:
    """How far the restricted class is from the exact adversary objects.

    For each model, the distance from each of its target pairs to the class
    is measured through the loss of the difference; linearity of the loss in
    the w*V product turns that into a difference of two loss evaluations.
    ``target_pairs`` is either one list shared by all models or one list per
    model (the two-family form takes the max across families).
    """
    if not model_grid:
        raise ValueError("model grid must be non-empty")
    if not target_pairs:
        raise ValueError("need at least one target pair")
    nested = isinstance(target_pairs[0], (list, tuple))
    if nested and len(target_pairs) != len(model_grid):
        raise ValueError("per-model targets must align with the model grid")
    class_pairs = enumerate_adversaries(restricted_class, resolution)
    worst = 0.0
    for idx, model in enumerate(model_grid):
        targets = target_pairs[idx] if nested else target_pairs
        for target in targets:
            target_loss = context.mml(target, model)
            best = min(
                abs(target_loss - context.mml(h, model)) for h in class_pairs
            )
            worst = max(worst, best)
    return worst
