# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot recursions (backward/forward passes,
Viterbi decoding, path simulation). Mirrors hmmforget._kernels_py."""

from libc.math cimport log, INFINITY
from libc.stdint cimport int64_t

import numpy as np


def backward_pass(const double[:, ::1] transition, const double[:, ::1] emission,
                  const int64_t[::1] obs):
    cdef Py_ssize_t L = obs.shape[0]
    cdef Py_ssize_t K = transition.shape[0]
    vectors_arr = np.empty((L, K), dtype=np.float64)
    scales_arr = np.empty(L, dtype=np.float64)
    cdef double[:, ::1] vectors = vectors_arr
    cdef double[::1] log_scales = scales_arr
    cdef Py_ssize_t t, s, i
    cdef double acc, m
    cdef int64_t x
    for s in range(K):
        vectors[L - 1, s] = 1.0
    log_scales[L - 1] = 0.0
    for t in range(L - 2, -1, -1):
        x = obs[t + 1]
        m = 0.0
        for s in range(K):
            acc = 0.0
            for i in range(K):
                acc += transition[s, i] * emission[i, x] * vectors[t + 1, i]
            vectors[t, s] = acc
            if acc > m:
                m = acc
        if m > 0.0:
            for s in range(K):
                vectors[t, s] /= m
            log_scales[t] = log_scales[t + 1] + log(m)
        else:
            for s in range(K):
                vectors[t, s] = 0.0
            log_scales[t] = -INFINITY
    return vectors_arr, scales_arr


def forward_pass(const double[:, ::1] transition, const double[:, ::1] emission,
                 const double[::1] stationary, const int64_t[::1] obs):
    cdef Py_ssize_t L = obs.shape[0]
    cdef Py_ssize_t K = transition.shape[0]
    vectors_arr = np.empty((L, K), dtype=np.float64)
    scales_arr = np.empty(L, dtype=np.float64)
    cdef double[:, ::1] vectors = vectors_arr
    cdef double[::1] log_scales = scales_arr
    cdef Py_ssize_t t, s, i
    cdef double acc, m
    cdef int64_t x
    x = obs[0]
    m = 0.0
    for s in range(K):
        acc = stationary[s] * emission[s, x]
        vectors[0, s] = acc
        if acc > m:
            m = acc
    if m > 0.0:
        for s in range(K):
            vectors[0, s] /= m
        log_scales[0] = log(m)
    else:
        for s in range(K):
            vectors[0, s] = 0.0
        log_scales[0] = -INFINITY
    for t in range(1, L):
        x = obs[t]
        m = 0.0
        for s in range(K):
            acc = 0.0
            for i in range(K):
                acc += vectors[t - 1, i] * transition[i, s]
            acc *= emission[s, x]
            vectors[t, s] = acc
            if acc > m:
                m = acc
        if m > 0.0:
            for s in range(K):
                vectors[t, s] /= m
            log_scales[t] = log_scales[t - 1] + log(m)
        else:
            for s in range(K):
                vectors[t, s] = 0.0
            log_scales[t] = -INFINITY
    return vectors_arr, scales_arr


def viterbi_path(const double[:, ::1] log_transition, const double[:, ::1] log_emission,
                 const double[::1] log_stationary, const int64_t[::1] obs):
    cdef Py_ssize_t L = obs.shape[0]
    cdef Py_ssize_t K = log_transition.shape[0]
    back_arr = np.zeros((L, K), dtype=np.int64)
    path_arr = np.empty(L, dtype=np.int64)
    score_arr = np.empty(K, dtype=np.float64)
    prev_arr = np.empty(K, dtype=np.float64)
    cdef int64_t[:, ::1] back = back_arr
    cdef int64_t[::1] path = path_arr
    cdef double[::1] score = score_arr
    cdef double[::1] prev = prev_arr
    cdef Py_ssize_t t, s, i, best_i, end
    cdef double best, v
    cdef int64_t x
    x = obs[0]
    for s in range(K):
        score[s] = log_stationary[s] + log_emission[s, x]
    for t in range(1, L):
        x = obs[t]
        for s in range(K):
            prev[s] = score[s]
        for s in range(K):
            best = -INFINITY
            best_i = 0
            for i in range(K):
                v = prev[i] + log_transition[i, s]
                if v > best:
                    best = v
                    best_i = i
            score[s] = best + log_emission[s, x]
            back[t, s] = best_i
    best = -INFINITY
    end = 0
    for s in range(K):
        if score[s] > best:
            best = score[s]
            end = s
    path[L - 1] = end
    for t in range(L - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path_arr, best


def simulate_path(const double[:, ::1] cum_transition, const double[:, ::1] cum_emission,
                  const double[::1] cum_stationary, const double[::1] u_state,
                  const double[::1] u_obs):
    cdef Py_ssize_t n = u_state.shape[0]
    cdef Py_ssize_t K = cum_transition.shape[0]
    cdef Py_ssize_t M = cum_emission.shape[1]
    states_arr = np.empty(n, dtype=np.int64)
    obs_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] states = states_arr
    cdef int64_t[::1] obs = obs_arr
    cdef Py_ssize_t t, j
    cdef Py_ssize_t s
    cdef double u
    u = u_state[0]
    s = 0
    while s < K - 1 and u >= cum_stationary[s]:
        s += 1
    states[0] = s
    for t in range(1, n):
        u = u_state[t]
        j = 0
        while j < K - 1 and u >= cum_transition[s, j]:
            j += 1
        s = j
        states[t] = s
    for t in range(n):
        s = states[t]
        u = u_obs[t]
        j = 0
        while j < M - 1 and u >= cum_emission[s, j]:
            j += 1
        obs[t] = j
    return states_arr, obs_arr
