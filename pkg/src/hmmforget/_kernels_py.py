"""Pure-numpy kernels: reference implementations of the hot recursions.

Signature-compatible with the compiled extension `hmmforget._kernels`.
All inputs are expected as C-contiguous float64 / int64 arrays; callers
(see `hmmforget.kernels`) are responsible for that.
"""

import numpy as np

_NEG_INF = float("-inf")


def backward_pass(transition, emission, obs):
    """Scaled backward recursion over one observation window.

    Returns (vectors, log_scales) where for window position t the raw
    backward variable equals ``vectors[t] * exp(log_scales[t])``; each
    stored vector has max-norm 1, or is identically zero with log-scale
    -inf once the raw recursion hits zero.
    """
    L = obs.shape[0]
    K = transition.shape[0]
    vectors = np.empty((L, K), dtype=np.float64)
    log_scales = np.empty(L, dtype=np.float64)
    vectors[L - 1] = 1.0
    log_scales[L - 1] = 0.0
    for t in range(L - 2, -1, -1):
        raw = transition @ (emission[:, obs[t + 1]] * vectors[t + 1])
        m = raw.max()
        if m > 0.0:
            vectors[t] = raw / m
            log_scales[t] = log_scales[t + 1] + np.log(m)
        else:
            vectors[t] = 0.0
            log_scales[t] = _NEG_INF
    return vectors, log_scales


def forward_pass(transition, emission, stationary, obs):
    """Scaled forward recursion; same scaling convention as backward_pass."""
    L = obs.shape[0]
    K = transition.shape[0]
    vectors = np.empty((L, K), dtype=np.float64)
    log_scales = np.empty(L, dtype=np.float64)
    raw = stationary * emission[:, obs[0]]
    m = raw.max()
    if m > 0.0:
        vectors[0] = raw / m
        log_scales[0] = np.log(m)
    else:
        vectors[0] = 0.0
        log_scales[0] = _NEG_INF
    for t in range(1, L):
        raw = (vectors[t - 1] @ transition) * emission[:, obs[t]]
        m = raw.max()
        if m > 0.0:
            vectors[t] = raw / m
            log_scales[t] = log_scales[t - 1] + np.log(m)
        else:
            vectors[t] = 0.0
            log_scales[t] = _NEG_INF
    return vectors, log_scales


def viterbi_path(log_transition, log_emission, log_stationary, obs):
    """Max-product decoding in log domain.

    Ties are broken toward the lowest state index at every argmax and at
    the final backtrack start. Returns (path, best_log_prob).
    """
    L = obs.shape[0]
    K = log_transition.shape[0]
    back = np.zeros((L, K), dtype=np.int64)
    score = log_stationary + log_emission[:, obs[0]]
    for t in range(1, L):
        cand = score[:, None] + log_transition
        best_prev = np.argmax(cand, axis=0)
        score = cand[best_prev, np.arange(K)] + log_emission[:, obs[t]]
        back[t] = best_prev
    end = int(np.argmax(score))
    path = np.empty(L, dtype=np.int64)
    path[L - 1] = end
    for t in range(L - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(score[end])


def simulate_path(cum_transition, cum_emission, cum_stationary, u_state, u_obs):
    """Inverse-CDF sampling of a state path and its emissions.

    Consumes pre-drawn uniforms so that compiled and pure backends produce
    bit-identical paths from the same stream.
    """
    n = u_state.shape[0]
    K = cum_transition.shape[0]
    M = cum_emission.shape[1]
    states = np.empty(n, dtype=np.int64)
    s = min(int(np.searchsorted(cum_stationary, u_state[0], side="right")), K - 1)
    states[0] = s
    for t in range(1, n):
        s = min(int(np.searchsorted(cum_transition[s], u_state[t], side="right")), K - 1)
        states[t] = s
    obs = np.empty(n, dtype=np.int64)
    for s in range(K):
        mask = states == s
        if mask.any():
            idx = np.searchsorted(cum_emission[s], u_obs[mask], side="right")
            obs[mask] = np.minimum(idx, M - 1)
    return states, obs
