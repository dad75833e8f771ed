"""Exact tabular-MDP machinery.

Value functions and discounted occupancies are solved as dense linear
systems, so every downstream quantity (policy values, density ratios, the
loss identities) is exact up to floating rounding.  Stochastic rollouts and
dataset generation go through the kernel backend and are deterministic
given a seed.

Conventions
-----------
* ``transition[s, a, s']`` is a probability; rows sum to 1.
* Occupancies are the unnormalized discounted sums, total mass 1/(1-gamma).
* Rewards are emitted deterministically as ``reward_mean[s, a]``; nothing
  downstream depends on more than the conditional mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _backend

ROW_TOL = 1e-12


class SupportViolation(ValueError):
    """Occupancy puts mass on a state-action the data never visits."""


def _freeze(obj, **arrays):
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(obj, name, arr)


def _check_rows(name: str, rows: np.ndarray) -> None:
    if rows.min() < -ROW_TOL or rows.max() > 1.0 + ROW_TOL:
        raise ValueError(f"{name}: entries outside [0, 1]")
    sums = rows.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        idx = tuple(bad[0])
        raise ValueError(f"{name}: row {idx} sums to {sums[idx]!r}, expected 1")


@dataclass(frozen=True)
class TabularMdp:
    """Ground-truth environment: dynamics, mean rewards, discount, start law."""

    transition: np.ndarray  # (S, A, S)
    reward_mean: np.ndarray  # (S, A)
    r_max: float
    gamma: float
    d0: np.ndarray  # (S,)

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=np.float64)
        reward = np.asarray(self.reward_mean, dtype=np.float64)
        d0 = np.asarray(self.d0, dtype=np.float64)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ValueError("transition must have shape (S, A, S)")
        if reward.shape != transition.shape[:2]:
            raise ValueError("reward_mean must have shape (S, A)")
        if d0.shape != (transition.shape[0],):
            raise ValueError("d0 must have shape (S,)")
        _check_rows("transition", transition)
        if abs(d0.sum() - 1.0) > ROW_TOL or d0.min() < -ROW_TOL:
            raise ValueError("d0 must be a probability vector")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")
        if np.abs(reward).max() > self.r_max + ROW_TOL:
            raise ValueError("|reward_mean| exceeds r_max")
        _freeze(self, transition=transition, reward_mean=reward, d0=d0)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def true_model(self) -> "TransitionModel":
        return TransitionModel(self.transition)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_states": self.n_states,
                "n_actions": self.n_actions,
                "transition": self.transition.tolist(),
                "reward_mean": self.reward_mean.tolist(),
                "r_max": self.r_max,
                "gamma": self.gamma,
                "d0": self.d0.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TabularMdp":
        doc = json.loads(text)
        mdp = cls(
            transition=np.array(doc["transition"], dtype=np.float64),
            reward_mean=np.array(doc["reward_mean"], dtype=np.float64),
            r_max=float(doc["r_max"]),
            gamma=float(doc["gamma"]),
            d0=np.array(doc["d0"], dtype=np.float64),
        )
        if (mdp.n_states, mdp.n_actions) != (doc["n_states"], doc["n_actions"]):
            raise ValueError("declared sizes disagree with array shapes")
        return mdp


@dataclass(frozen=True)
class Policy:
    """Stochastic policy; ``probs[s, a]`` is the action law per state."""

    probs: np.ndarray  # (S, A)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ValueError("policy must have shape (S, A)")
        _check_rows("policy", probs)
        _freeze(self, probs=probs)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions: np.ndarray, n_actions: int) -> "Policy":
        probs = np.zeros((len(actions), n_actions))
        probs[np.arange(len(actions)), actions] = 1.0
        return cls(probs)


@dataclass(frozen=True)
class TransitionModel:
    """Candidate dynamics; same shape and row constraints as the truth."""

    probs: np.ndarray  # (S, A, S)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 3 or probs.shape[0] != probs.shape[2]:
            raise ValueError("model must have shape (S, A, S)")
        _check_rows("model", probs)
        _freeze(self, probs=probs)


@dataclass(frozen=True)
class ValueFunction:
    values: np.ndarray  # (S,)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("values must be a vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        _freeze(self, values=values)


@dataclass(frozen=True)
class OccupancyMeasure:
    mass: np.ndarray  # (S, A), unnormalized, total 1/(1-gamma)

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 2:
            raise ValueError("mass must have shape (S, A)")
        if mass.min() < -1e-9:
            raise ValueError("occupancy mass must be nonnegative")
        _freeze(self, mass=np.maximum(mass, 0.0))

    def normalized(self, gamma: float) -> np.ndarray:
        return self.mass * (1.0 - gamma)


@dataclass(frozen=True)
class WeightFunction:
    values: np.ndarray  # (S, A)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("weights must have shape (S, A)")
        if not np.all(np.isfinite(values)):
            raise ValueError("weights must be finite")
        _freeze(self, values=values)

    @classmethod
    def ones(cls, n_states: int, n_actions: int) -> "WeightFunction":
        return cls(np.ones((n_states, n_actions)))


@dataclass(frozen=True)
class Dataset:
    """Batch of logged transitions plus the empirical (s, a) frequencies."""

    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    r: np.ndarray
    episode: np.ndarray
    n_states: int
    n_actions: int
    empirical_sa: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("s", "a", "s_next", "episode"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        r = np.ascontiguousarray(self.r, dtype=np.float64)
        r.flags.writeable = False
        object.__setattr__(self, "r", r)
        n = len(self.s)
        if n == 0:
            raise ValueError("dataset must contain at least one transition")
        if not (len(self.a) == len(self.s_next) == len(self.r) == len(self.episode) == n):
            raise ValueError("record arrays must have equal length")
        if self.s.max() >= self.n_states or self.s_next.max() >= self.n_states:
            raise ValueError("state index out of range")
        if self.a.max() >= self.n_actions:
            raise ValueError("action index out of range")
        counts = np.zeros((self.n_states, self.n_actions))
        np.add.at(counts, (self.s, self.a), 1.0)
        sa = counts / n
        sa.flags.writeable = False
        object.__setattr__(self, "empirical_sa", sa)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def records(self) -> Iterator[tuple[int, int, int, float, int]]:
        for i in range(len(self)):
            yield (
                int(self.s[i]),
                int(self.a[i]),
                int(self.s_next[i]),
                float(self.r[i]),
                int(self.episode[i]),
            )

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"s": s, "a": a, "s_next": sn, "r": r, "episode": ep})
            for s, a, sn, r, ep in self.records
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, n_states: int, n_actions: int) -> "Dataset":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(
            s=np.array([r["s"] for r in rows]),
            a=np.array([r["a"] for r in rows]),
            s_next=np.array([r["s_next"] for r in rows]),
            r=np.array([r["r"] for r in rows]),
            episode=np.array([r["episode"] for r in rows]),
            n_states=n_states,
            n_actions=n_actions,
        )


def _model_probs(mdp: TabularMdp, model: TransitionModel | None) -> np.ndarray:
    if model is None:
        return mdp.transition
    if model.probs.shape != mdp.transition.shape:
        raise ValueError("model shape disagrees with the environment")
    return model.probs


def solve_value_function(
    mdp: TabularMdp, policy: Policy, model: TransitionModel | None = None
) -> ValueFunction:
    """Solve V = r_pi + gamma P_pi V by dense LU.

    ``r_pi(s) = sum_a pi(a|s) reward_mean[s,a]`` and
    ``P_pi(s, s') = sum_a pi(a|s) model[s,a,s']``.
    """
    probs = _model_probs(mdp, model)
    if policy.probs.shape != mdp.reward_mean.shape:
        raise ValueError("policy shape disagrees with the environment")
    r_pi = (policy.probs * mdp.reward_mean).sum(axis=1)
    p_pi = np.einsum("sa,sax->sx", policy.probs, probs)
    n = mdp.n_states
    v = np.linalg.solve(np.eye(n) - mdp.gamma * p_pi, r_pi)
    residual = np.abs(v - (r_pi + mdp.gamma * p_pi @ v)).max()
    if residual > 1e-10:
        raise ArithmeticError(f"Bellman residual {residual:g} exceeds 1e-10")
    return ValueFunction(v)


def solve_occupancy(
    mdp: TabularMdp, policy: Policy, model: TransitionModel | None = None
) -> OccupancyMeasure:
    """Solve the discounted occupancy fixed point exactly.

    The state marginal satisfies ``m = d0 + gamma P_pi^T m``; the state-action
    occupancy is then ``d(s, a) = m(s) pi(a|s)``.
    """
    probs = _model_probs(mdp, model)
    p_pi = np.einsum("sa,sax->sx", policy.probs, probs)
    n = mdp.n_states
    marginal = np.linalg.solve(np.eye(n) - mdp.gamma * p_pi.T, mdp.d0)
    mass = marginal[:, None] * policy.probs
    # fixed-point residual of the (s, a) recursion
    flow = np.einsum("ta,tax->x", mass, probs)
    rhs = mdp.d0[:, None] * policy.probs + mdp.gamma * flow[:, None] * policy.probs
    residual = np.abs(mass - rhs).max()
    if residual > 1e-10:
        raise ArithmeticError(f"occupancy residual {residual:g} exceeds 1e-10")
    return OccupancyMeasure(mass)


def evaluate_policy(
    mdp: TabularMdp, policy: Policy, model: TransitionModel | None = None
) -> float:
    """Policy value J = E_{d0}[V]; cross-checked against the occupancy form."""
    v = solve_value_function(mdp, policy, model)
    j = float(mdp.d0 @ v.values)
    if __debug__:
        occ = solve_occupancy(mdp, policy, model)
        j_occ = float((occ.mass * mdp.reward_mean).sum())
        assert abs(j - j_occ) <= 1e-9 * max(1.0, abs(j)), (j, j_occ)
    return j


def monte_carlo_return(
    mdp: TabularMdp,
    policy: Policy,
    model: TransitionModel | None = None,
    *,
    horizon: int,
    n_rollouts: int,
    seed: int,
) -> float:
    """Truncated Monte Carlo value: mean over rollouts of sum_{t<=T} gamma^t r_t."""
    if horizon < 1 or n_rollouts < 1:
        raise ValueError("horizon and n_rollouts must be >= 1")
    probs = _model_probs(mdp, model)
    rng = np.random.default_rng(seed)
    u_init = rng.random(n_rollouts)
    u_act = rng.random((n_rollouts, horizon + 1))
    u_next = rng.random((n_rollouts, horizon + 1))
    returns = _backend.rollout_returns(
        probs, policy.probs, mdp.d0, mdp.reward_mean, mdp.gamma, horizon,
        u_init, u_act, u_next,
    )
    return float(np.asarray(returns).mean())


def generate_dataset(
    mdp: TabularMdp,
    behavior: Policy,
    n_transitions: int,
    episode_length: int,
    seed: int,
) -> Dataset:
    """Simulate behavior episodes until ``n_transitions`` are collected.

    Episodes restart from d0 and truncate at ``episode_length`` with no
    bootstrapping; rewards are the conditional means.
    """
    if n_transitions < 1 or episode_length < 1:
        raise ValueError("n_transitions and episode_length must be >= 1")
    n_episodes = -(-n_transitions // episode_length)
    rng = np.random.default_rng(seed)
    u_init = rng.random(n_episodes)
    u_act = rng.random((n_episodes, episode_length))
    u_next = rng.random((n_episodes, episode_length))
    s, a, s_next, episode = _backend.simulate_episodes(
        mdp.transition, behavior.probs, mdp.d0, u_init, u_act, u_next,
        episode_length, n_transitions,
    )
    s = np.asarray(s)
    a = np.asarray(a)
    return Dataset(
        s=s,
        a=a,
        s_next=np.asarray(s_next),
        r=mdp.reward_mean[s, a],
        episode=np.asarray(episode),
        n_states=mdp.n_states,
        n_actions=mdp.n_actions,
    )


def sample_transitions(
    mdp: TabularMdp, dist_sa: np.ndarray, n: int, seed: int
) -> Dataset:
    """Draw (s, a) i.i.d. from ``dist_sa`` and s' from the true dynamics.

    Used when a dataset must match a prescribed data distribution exactly
    (e.g. the normalized behavior occupancy that the exact losses integrate
    against), rather than the episodic law of generate_dataset.
    """
    dist = np.asarray(dist_sa, dtype=np.float64)
    if dist.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("dist_sa must have shape (S, A)")
    if abs(dist.sum() - 1.0) > 1e-9 or dist.min() < -1e-12:
        raise ValueError("dist_sa must be a probability table")
    rng = np.random.default_rng(seed)
    flat = rng.choice(dist.size, size=n, p=(dist / dist.sum()).ravel())
    s, a = np.divmod(flat, mdp.n_actions)
    u = rng.random(n)
    cum = np.cumsum(mdp.transition[s, a], axis=1)
    s_next = np.minimum((cum <= u[:, None]).sum(axis=1), mdp.n_states - 1)
    return Dataset(
        s=s,
        a=a,
        s_next=s_next,
        r=mdp.reward_mean[s, a],
        episode=np.zeros(n, dtype=np.int64),
        n_states=mdp.n_states,
        n_actions=mdp.n_actions,
    )


def density_ratio(occupancy: OccupancyMeasure, data_sa: np.ndarray) -> WeightFunction:
    """w(s, a) = occupancy / data_sa on the data support, 0 elsewhere."""
    data = np.asarray(data_sa, dtype=np.float64)
    if data.shape != occupancy.mass.shape:
        raise ValueError("data_sa shape disagrees with the occupancy")
    uncovered = (occupancy.mass > 0) & (data <= 0)
    if uncovered.any():
        s, a = np.argwhere(uncovered)[0]
        raise SupportViolation(
            f"occupancy mass {occupancy.mass[s, a]:g} at (s={s}, a={a}) "
            "but the data distribution is zero there"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(data > 0, occupancy.mass / np.where(data > 0, data, 1.0), 0.0)
    return WeightFunction(w)


def behavior_data_distribution(mdp: TabularMdp, behavior: Policy) -> np.ndarray:
    """Data distribution of the logging process: the behavior occupancy
    under the true dynamics, normalized to total mass one."""
    occ = solve_occupancy(mdp, behavior)
    return occ.normalized(mdp.gamma)


def random_mdp(
    n_states: int,
    n_actions: int,
    gamma: float,
    seed: int,
    *,
    r_max: float = 1.0,
    min_prob: float = 0.0,
) -> TabularMdp:
    """Random dense instance; ``min_prob`` floors every transition entry."""
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    if min_prob > 0:
        transition = transition + min_prob
        transition /= transition.sum(axis=2, keepdims=True)
    reward = rng.uniform(-r_max, r_max, size=(n_states, n_actions))
    d0 = rng.dirichlet(np.ones(n_states))
    return TabularMdp(
        transition=transition,
        reward_mean=reward,
        r_max=r_max,
        gamma=gamma,
        d0=d0,
    )


def random_policy(n_states: int, n_actions: int, seed: int) -> Policy:
    rng = np.random.default_rng(seed)
    return Policy(rng.dirichlet(np.ones(n_actions), size=n_states))


def random_model(n_states: int, n_actions: int, seed: int) -> TransitionModel:
    rng = np.random.default_rng(seed)
    return TransitionModel(rng.dirichlet(np.ones(n_states), size=(n_states, n_actions)))
