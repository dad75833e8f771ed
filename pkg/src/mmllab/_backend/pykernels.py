"""Pure-numpy implementations of the hot kernels.

The simulation kernels consume pre-drawn uniforms and use a left-to-right
inverse-CDF scan, bit-identical to the compiled twin: per-row `cumsum` adds
probabilities in the same order as the compiled scalar scan, so the sampled
index sequences match exactly.  The Gram reduction uses matrix products and
therefore agrees with the compiled loop only to floating tolerance.
"""

from __future__ import annotations

import numpy as np


def _pick(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    # first index k with u < cum[k]; clamp guards against cum[-1] < 1 roundoff
    idx = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cum.shape[1] - 1)


def simulate_episodes(transition, policy, d0, u_init, u_act, u_next,
                      episode_length, n_transitions):
    """Roll behavior episodes; returns (s, a, s_next, episode) index arrays."""
    n_episodes = u_init.shape[0]
    cum_d0 = np.cumsum(d0)
    cum_pi = np.cumsum(policy, axis=1)
    s = _pick(np.broadcast_to(cum_d0, (n_episodes, cum_d0.shape[0])), u_init)

    s_out = np.empty((n_episodes, episode_length), dtype=np.int64)
    a_out = np.empty_like(s_out)
    sn_out = np.empty_like(s_out)
    for t in range(episode_length):
        a = _pick(cum_pi[s], u_act[:, t])
        cum_rows = np.cumsum(transition[s, a], axis=1)
        sn = _pick(cum_rows, u_next[:, t])
        s_out[:, t] = s
        a_out[:, t] = a
        sn_out[:, t] = sn
        s = sn
    episode = np.repeat(np.arange(n_episodes, dtype=np.int64), episode_length)
    flat = (s_out.reshape(-1), a_out.reshape(-1), sn_out.reshape(-1), episode)
    return tuple(x[:n_transitions].copy() for x in flat)


def rollout_returns(transition, policy, d0, reward_mean, gamma, horizon,
                    u_init, u_act, u_next):
    """Discounted truncated returns of each rollout, rewards = reward_mean."""
    m = u_init.shape[0]
    cum_d0 = np.cumsum(d0)
    cum_pi = np.cumsum(policy, axis=1)
    s = _pick(np.broadcast_to(cum_d0, (m, cum_d0.shape[0])), u_init)
    returns = np.zeros(m)
    disc = 1.0
    for t in range(horizon + 1):
        a = _pick(cum_pi[s], u_act[:, t])
        returns += disc * reward_mean[s, a]
        cum_rows = np.cumsum(transition[s, a], axis=1)
        s = _pick(cum_rows, u_next[:, t])
        disc *= gamma
    return returns


def gram_accumulate(gsa, mrows, rows, k3, snext):
    """Mean over ordered record pairs (i, j) of

        gsa[i,j] * (mrows[i] . rows[j] - 2 mrows[i][snext[j]] + k3[snext[i], snext[j]])

    where mrows = rows @ k3 is precomputed by the caller.
    """
    term1 = mrows @ rows.T
    term2 = mrows[:, snext]
    term3 = k3[np.ix_(snext, snext)]
    return float((gsa * (term1 - 2.0 * term2 + term3)).mean())
