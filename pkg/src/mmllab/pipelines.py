"""End-to-end evaluation and optimization pipelines.

``run_ope`` fits a model by the chosen loss and reports the exact policy
value alongside the minimax bound; ``run_opo`` plans in the fitted model;
the pessimistic path penalizes ensemble disagreement before planning.

Realizability is handled by explicit builders: ``exact_ope_adversaries``
and ``exact_opo_adversaries`` inject the oracle (w, V) objects into the
adversary class so that the error bounds hold exactly; with grid classes
the bounds are reported but nothing is asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classes import FunctionClassHandle, solve_tabular
from .losses import (
    AdversaryPair,
    IdentityVariant,
    LossKind,
    exact_adversary_pair,
)
from .mdp import (
    Dataset,
    Policy,
    TabularMdp,
    TransitionModel,
    behavior_data_distribution,
    density_ratio,
    evaluate_policy,
    generate_dataset,
    sample_transitions,
    solve_occupancy,
    solve_value_function,
)
from .minimax import LossContext, ModelSelection, minimize_finite


@dataclass(frozen=True)
class OpeReport:
    j_true: float
    j_model: float
    abs_error: float
    bound: float
    log_relative_mse: float | None
    loss_kind: LossKind
    chosen_index: int
    n_transitions: int
    seed: int
    support_ok: bool

    def __post_init__(self):
        if not math.isclose(self.abs_error, abs(self.j_model - self.j_true), rel_tol=0, abs_tol=1e-12):
            raise ValueError("abs_error must equal |j_model - j_true|")


@dataclass(frozen=True)
class OpoReport:
    j_optimal: float
    j_achieved: float
    suboptimality: float
    bound: float
    loss_kind: LossKind
    chosen_index: int
    n_transitions: int
    seed: int


@dataclass(frozen=True)
class PessimisticMdp:
    """Ensemble-mean dynamics with disagreement flags routed to an absorber."""

    mdp: TabularMdp  # assembled pessimistic MDP on n_states + 1 states
    base: TransitionModel  # ensemble mean on the original states
    usad: np.ndarray  # (S, A) bool disagreement flags
    halt_penalty: float
    alpha: float
    absorbing_state: int


@dataclass(frozen=True)
class MorelReport:
    j_policy: float
    j_behavior: float
    j_optimal: float
    alpha: float
    n_flagged: int
    loss_kind: LossKind
    seed: int


def exact_ope_adversaries(
    mdp: TabularMdp,
    target: Policy,
    behavior: Policy,
    models: Sequence[TransitionModel],
    variant: IdentityVariant = IdentityVariant.WSTAR_VP,
) -> FunctionClassHandle:
    """Adversary grid holding the matched oracle pair for every grid model."""
    pairs = [
        exact_adversary_pair(mdp, target, behavior, model, variant)
        for model in models
    ]
    return FunctionClassHandle.finite_grid(pairs)


def exact_opo_adversaries(
    mdp: TabularMdp,
    behavior: Policy,
    models: Sequence[TransitionModel],
    tol: float = 1e-10,
) -> tuple[FunctionClassHandle, Policy]:
    """Adversary grid with the optimization-theorem objects for every model.

    For each model P the pair set contains (w under the true dynamics of the
    true-optimal policy, V in P of that policy) and the same for P's own
    optimal policy.  Returns the class and the true-optimal policy.
    """
    data_sa = behavior_data_distribution(mdp, behavior)
    pi_star = plan_optimal(mdp.transition, mdp.reward_mean, mdp.gamma, tol)
    w_star = density_ratio(solve_occupancy(mdp, pi_star), data_sa)
    pairs: list[AdversaryPair] = []
    for model in models:
        pi_model = plan_optimal(model.probs, mdp.reward_mean, mdp.gamma, tol)
        w_model = density_ratio(solve_occupancy(mdp, pi_model), data_sa)
        pairs.append(
            AdversaryPair(w=w_star, v=solve_value_function(mdp, pi_star, model))
        )
        pairs.append(
            AdversaryPair(w=w_model, v=solve_value_function(mdp, pi_model, model))
        )
    return FunctionClassHandle.finite_grid(pairs), pi_star


def _check_support(mdp: TabularMdp, target: Policy, behavior: Policy) -> bool:
    data_sa = behavior_data_distribution(mdp, behavior)
    occ = solve_occupancy(mdp, target)
    return bool(np.all(data_sa[occ.mass > 0] > 0))


def _make_context(
    mdp: TabularMdp,
    behavior: Policy,
    loss_mode: str,
    n_transitions: int,
    seed: int,
    data_sampling: str,
) -> LossContext:
    if loss_mode == "exact":
        return LossContext.exact(mdp, behavior)
    if loss_mode != "empirical":
        raise ValueError("loss_mode must be 'exact' or 'empirical'")
    if data_sampling == "iid":
        data = sample_transitions(
            mdp, behavior_data_distribution(mdp, behavior), n_transitions, seed
        )
    elif data_sampling == "episodic":
        data = generate_dataset(mdp, behavior, n_transitions, max(n_transitions, 1), seed)
    else:
        raise ValueError("data_sampling must be 'iid' or 'episodic'")
    return LossContext.empirical(data)


def run_ope(
    mdp: TabularMdp,
    behavior: Policy,
    target: Policy,
    models: Sequence[TransitionModel] | str,
    adversaries: FunctionClassHandle,
    loss_kind: LossKind,
    n_transitions: int,
    seed: int,
    loss_mode: str = "exact",
    data_sampling: str = "iid",
    resolution: int = 1,
) -> tuple[OpeReport, ModelSelection]:
    """Fit a simulator by the chosen loss and evaluate the target in it.

    ``models`` is either an explicit grid or ``"count-model"`` for the
    closed-form empirical-frequency fit (which needs empirical data and
    every state-action observed).
    """
    support_ok = _check_support(mdp, target, behavior)
    context = _make_context(mdp, behavior, loss_mode, n_transitions, seed, data_sampling)
    if isinstance(models, str):
        if models != "count-model":
            raise ValueError(f"unknown model class {models!r}")
        if context.data is None:
            raise ValueError("the count model needs empirical data")
        grid: list[TransitionModel] = [
            solve_tabular(context.data, mdp.n_states, mdp.n_actions)
        ]
    else:
        grid = list(models)
    selection = minimize_finite(context, grid, adversaries, loss_kind, resolution)
    j_true = evaluate_policy(mdp, target)
    j_model = evaluate_policy(mdp, target, selection.chosen_model)
    j_behavior = evaluate_policy(mdp, behavior)
    denom = (j_behavior - j_true) ** 2
    if denom == 0:
        log_rel = None  # on-policy baseline: metric undefined
    else:
        with np.errstate(divide="ignore"):
            log_rel = float(np.log((j_model - j_true) ** 2 / denom))
    report = OpeReport(
        j_true=j_true,
        j_model=j_model,
        abs_error=abs(j_model - j_true),
        bound=mdp.gamma * selection.inner_max,
        log_relative_mse=log_rel,
        loss_kind=loss_kind,
        chosen_index=selection.chosen_index,
        n_transitions=n_transitions,
        seed=seed,
        support_ok=support_ok,
    )
    return report, selection


def plan_optimal(
    transition: np.ndarray,
    reward: np.ndarray,
    gamma: float,
    tol: float = 1e-10,
) -> Policy:
    """Value iteration to sup-norm residual <= tol, then greedy extraction
    polished by policy iteration so the returned policy is exactly greedy
    for its own value.  Ties break to the lowest action index."""
    transition = np.asarray(transition, dtype=np.float64)
    reward = np.asarray(reward, dtype=np.float64)
    n_states, n_actions = reward.shape
    rows = np.arange(n_states)
    v = np.zeros(n_states)
    while True:
        q = reward + gamma * transition @ v
        v_new = q.max(axis=1)
        if np.abs(v_new - v).max() <= tol:
            break
        v = v_new
    actions = q.argmax(axis=1)
    # policy-iteration polish: exact evaluation then greedy until no strict
    # improvement remains, then re-extract so ties land on the lowest index
    for _ in range(500):
        p_pi = transition[rows, actions]
        r_pi = reward[rows, actions]
        v = np.linalg.solve(np.eye(n_states) - gamma * p_pi, r_pi)
        q = reward + gamma * transition @ v
        greedy = q.argmax(axis=1)
        strict = q[rows, greedy] > q[rows, actions]
        if not strict.any():
            actions = greedy
            break
        actions = np.where(strict, greedy, actions)
    return Policy.deterministic(actions, n_actions)


def run_opo(
    mdp: TabularMdp,
    behavior: Policy,
    models: Sequence[TransitionModel],
    adversaries: FunctionClassHandle,
    loss_kind: LossKind,
    n_transitions: int,
    seed: int,
    loss_mode: str = "exact",
    data_sampling: str = "iid",
    resolution: int = 1,
    plan_tol: float = 1e-10,
) -> tuple[OpoReport, ModelSelection]:
    """Fit a simulator, plan in it, and score the plan in the truth."""
    context = _make_context(mdp, behavior, loss_mode, n_transitions, seed, data_sampling)
    selection = minimize_finite(context, list(models), adversaries, loss_kind, resolution)
    pi_star = plan_optimal(mdp.transition, mdp.reward_mean, mdp.gamma, plan_tol)
    pi_model = plan_optimal(
        selection.chosen_model.probs, mdp.reward_mean, mdp.gamma, plan_tol
    )
    j_optimal = evaluate_policy(mdp, pi_star)
    j_achieved = evaluate_policy(mdp, pi_model)
    report = OpoReport(
        j_optimal=j_optimal,
        j_achieved=j_achieved,
        suboptimality=abs(j_optimal - j_achieved),
        bound=2.0 * mdp.gamma * selection.inner_max,
        loss_kind=loss_kind,
        chosen_index=selection.chosen_index,
        n_transitions=n_transitions,
        seed=seed,
    )
    return report, selection


def build_pessimistic_mdp(
    ensemble: Sequence[TransitionModel],
    data: Dataset,
    penalty: float,
    mdp: TabularMdp,
    alpha: float | None = None,
) -> PessimisticMdp:
    """Ensemble-mean dynamics with disagreement-flagged pairs absorbed.

    alpha defaults to the median, over dataset records and ensemble members,
    of the total-variation distance between the member's predicted law and
    the point mass at the observed next state.  A pair is flagged when some
    member is at least alpha away (in TV) from the ensemble mean; flagged
    pairs transition to a fresh absorbing state and earn the penalty.
    """
    if not ensemble:
        raise ValueError("ensemble must be non-empty")
    members = np.stack([m.probs for m in ensemble])
    mean = members.mean(axis=0)
    if alpha is None:
        # TV(member row, point mass at s') = 1 - member[s,a,s']
        residuals = 1.0 - members[:, data.s, data.a, data.s_next]
        alpha = float(np.median(residuals))
    disagreement = 0.5 * np.abs(members - mean[None]).sum(axis=3).max(axis=0)
    usad = disagreement >= alpha
    s, halt = mdp.n_states, mdp.n_states
    transition = np.zeros((s + 1, mdp.n_actions, s + 1))
    transition[:s, :, :s] = mean
    transition[s, :, halt] = 1.0
    reward = np.zeros((s + 1, mdp.n_actions))
    reward[:s] = mdp.reward_mean
    for si, ai in np.argwhere(usad):
        transition[si, ai, :] = 0.0
        transition[si, ai, halt] = 1.0
        reward[si, ai] = penalty
    d0 = np.concatenate([mdp.d0, [0.0]])
    assembled = TabularMdp(
        transition=transition,
        reward_mean=reward,
        r_max=max(mdp.r_max, abs(penalty)) if penalty != 0 else mdp.r_max,
        gamma=mdp.gamma,
        d0=d0,
    )
    return PessimisticMdp(
        mdp=assembled,
        base=TransitionModel(mean),
        usad=usad,
        halt_penalty=penalty,
        alpha=alpha,
        absorbing_state=halt,
    )


def bootstrap_resample(data: Dataset, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(data), size=len(data))
    return Dataset(
        s=data.s[idx],
        a=data.a[idx],
        s_next=data.s_next[idx],
        r=data.r[idx],
        episode=data.episode[idx],
        n_states=data.n_states,
        n_actions=data.n_actions,
    )


def run_opo_morel(
    mdp: TabularMdp,
    behavior: Policy,
    models: Sequence[TransitionModel],
    adversaries: FunctionClassHandle,
    loss_kind: LossKind,
    n_transitions: int,
    seed: int,
    ensemble_size: int = 4,
    penalty: float = -100.0,
    alpha: float | None = None,
    resolution: int = 1,
    plan_tol: float = 1e-10,
    data_sampling: str = "episodic",
    episode_length: int = 8,
) -> MorelReport:
    """Pessimistic offline optimization with an ensemble fitted by one loss.

    Ensemble diversity comes from bootstrap resamples with distinct seeds;
    each member is the minimax (or likelihood) argmin over the model grid on
    its resample.  Value iteration substitutes for the policy optimizer.
    """
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    if data_sampling == "episodic":
        data = generate_dataset(mdp, behavior, n_transitions, episode_length, seed)
    else:
        data = sample_transitions(
            mdp, behavior_data_distribution(mdp, behavior), n_transitions, seed
        )
    member_seeds = np.random.SeedSequence(seed).generate_state(ensemble_size + 1)[1:]
    members: list[TransitionModel] = []
    for j in range(ensemble_size):
        resample = bootstrap_resample(data, seed=int(member_seeds[j]))
        context = LossContext.empirical(resample)
        selection = minimize_finite(context, list(models), adversaries, loss_kind, resolution)
        members.append(selection.chosen_model)
    pessimistic = build_pessimistic_mdp(members, data, penalty, mdp, alpha)
    pi_hat_ext = plan_optimal(
        pessimistic.mdp.transition, pessimistic.mdp.reward_mean, mdp.gamma, plan_tol
    )
    pi_hat = Policy(pi_hat_ext.probs[: mdp.n_states])
    pi_star = plan_optimal(mdp.transition, mdp.reward_mean, mdp.gamma, plan_tol)
    return MorelReport(
        j_policy=evaluate_policy(mdp, pi_hat),
        j_behavior=evaluate_policy(mdp, behavior),
        j_optimal=evaluate_policy(mdp, pi_star),
        alpha=pessimistic.alpha,
        n_flagged=int(pessimistic.usad.sum()),
        loss_kind=loss_kind,
        seed=seed,
    )
