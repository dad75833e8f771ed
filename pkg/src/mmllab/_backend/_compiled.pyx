# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in pykernels.py.

The simulation kernels must stay bit-identical to the numpy fallback: the
inverse-CDF scan accumulates probabilities left to right exactly like a
per-row cumsum, and comparisons use the same `u < cum` convention.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _pick(const double[:] p, double u) nogil:
    cdef Py_ssize_t k
    cdef double c = 0.0
    for k in range(p.shape[0]):
        c += p[k]
        if u < c:
            return k
    return p.shape[0] - 1


def simulate_episodes(const double[:, :, ::1] transition,
                      const double[:, ::1] policy,
                      const double[:] d0,
                      const double[:] u_init,
                      const double[:, ::1] u_act,
                      const double[:, ::1] u_next,
                      Py_ssize_t episode_length,
                      Py_ssize_t n_transitions):
    cdef Py_ssize_t n_episodes = u_init.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] s_out = np.empty(n_transitions, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] a_out = np.empty(n_transitions, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sn_out = np.empty(n_transitions, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ep_out = np.empty(n_transitions, dtype=np.int64)
    cdef Py_ssize_t i = 0, ep, t, s, a, sn
    for ep in range(n_episodes):
        s = _pick(d0, u_init[ep])
        for t in range(episode_length):
            if i >= n_transitions:
                break
            a = _pick(policy[s], u_act[ep, t])
            sn = _pick(transition[s, a], u_next[ep, t])
            s_out[i] = s
            a_out[i] = a
            sn_out[i] = sn
            ep_out[i] = ep
            s = sn
            i += 1
        if i >= n_transitions:
            break
    return s_out, a_out, sn_out, ep_out


def rollout_returns(const double[:, :, ::1] transition,
                    const double[:, ::1] policy,
                    const double[:] d0,
                    const double[:, ::1] reward_mean,
                    double gamma,
                    Py_ssize_t horizon,
                    const double[:] u_init,
                    const double[:, ::1] u_act,
                    const double[:, ::1] u_next):
    cdef Py_ssize_t m = u_init.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] returns = np.zeros(m)
    cdef double[:] ret = returns
    cdef Py_ssize_t j, t, s, a
    cdef double disc
    for j in range(m):
        s = _pick(d0, u_init[j])
        disc = 1.0
        for t in range(horizon + 1):
            a = _pick(policy[s], u_act[j, t])
            ret[j] += disc * reward_mean[s, a]
            s = _pick(transition[s, a], u_next[j, t])
            disc *= gamma
    return returns


def gram_accumulate(const double[:, ::1] gsa,
                    const double[:, ::1] mrows,
                    const double[:, ::1] rows,
                    const double[:, ::1] k3,
                    const long long[:] snext):
    cdef Py_ssize_t n = gsa.shape[0]
    cdef Py_ssize_t ns = rows.shape[1]
    cdef Py_ssize_t i, j, x
    cdef double total = 0.0, pair, dot
    for i in range(n):
        for j in range(n):
            dot = 0.0
            for x in range(ns):
                dot += mrows[i, x] * rows[j, x]
            pair = dot - 2.0 * mrows[i, snext[j]] + k3[snext[i], snext[j]]
            total += gsa[i, j] * pair
    return total / (<double> n * <double> n)
