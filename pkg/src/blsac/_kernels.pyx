# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def ou_paths(const double[::1] x0, double theta, double sigma, double dt,
             const double[:, ::1] normals):
    """Euler-Maruyama OU recursion; ``normals`` is (n_paths, n_steps)."""
    cdef Py_ssize_t n_paths = normals.shape[0]
    cdef Py_ssize_t n_steps = normals.shape[1]
    out_arr = np.empty((n_paths, n_steps), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double decay = theta * dt
    cdef double scale = sigma * sqrt(dt)
    cdef double x
    cdef Py_ssize_t i, t
    for i in range(n_paths):
        x = x0[i]
        for t in range(n_steps):
            x = x + decay * (0.0 - x) + scale * normals[i, t]
            out[i, t] = x
    return out_arr


def circular_stencil(const double[:, ::1] slices, const long[::1] offsets,
                     const double[::1] weights):
    """out[s, j] = sum_k weights[k] * slices[s, (j + offsets[k]) mod M]."""
    cdef Py_ssize_t n = slices.shape[0]
    cdef Py_ssize_t m = slices.shape[1]
    cdef Py_ssize_t n_taps = offsets.shape[0]
    out_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t s, j, k, shift, split
    cdef double w
    # taps outermost so each output accumulates in tap order, as the fallback does
    for s in range(n):
        for k in range(n_taps):
            w = weights[k]
            shift = offsets[k] % m
            if shift < 0:
                shift += m
            split = m - shift
            for j in range(split):
                out[s, j] = out[s, j] + w * slices[s, j + shift]
            for j in range(split, m):
                out[s, j] = out[s, j] + w * slices[s, j - split]
    return out_arr


def simulate_chain(const double[:, ::1] cum_probs, long start,
                   const double[::1] uniforms):
    """Visit counts of a finite Markov chain driven by pre-drawn uniforms.

    ``cum_probs`` holds row-wise cumulative transition probabilities; the
    next state is the first column whose cumulative mass exceeds the draw.
    """
    cdef Py_ssize_t n = cum_probs.shape[0]
    cdef Py_ssize_t steps = uniforms.shape[0]
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef long state = start
    cdef Py_ssize_t t, j
    cdef double u
    for t in range(steps):
        u = uniforms[t]
        j = 0
        while j < n - 1 and cum_probs[state, j] <= u:
            j += 1
        state = j
        counts[state] += 1
    return counts_arr
