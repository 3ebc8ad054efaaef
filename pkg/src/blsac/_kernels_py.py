"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def ou_paths(x0, theta, sigma, dt, normals):
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    out = np.empty_like(normals)
    x = np.array(x0, dtype=np.float64, copy=True)
    decay = theta * dt
    scale = sigma * np.sqrt(dt)
    # vectorized across paths, sequential in time
    for t in range(normals.shape[1]):
        x = x + decay * (0.0 - x) + scale * normals[:, t]
        out[:, t] = x
    return out


def circular_stencil(slices, offsets, weights):
    slices = np.asarray(slices, dtype=np.float64)
    out = np.zeros_like(slices)
    for off, w in zip(offsets, weights):
        out = out + w * np.roll(slices, -int(off), axis=1)
    return out


def simulate_chain(cum_probs, start, uniforms):
    cum_probs = np.asarray(cum_probs, dtype=np.float64)
    n = cum_probs.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    state = int(start)
    for u in uniforms:
        j = int(np.searchsorted(cum_probs[state, : n - 1], u, side="right"))
        state = j
        counts[state] += 1
    return counts
