"""Expected critic value under a Gaussian policy, as sampling and as convolution.

The action domain is periodic with period 2 ([-1, 1) wraps), and the policy
kernel is the wrapped Gaussian, so the Fourier component of frequency ``w``
is scaled by exactly ``exp(-w^2 sigma^2 / 2)``.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .mdp import periodic_grid
from .policy import _wrapped_gaussian

__all__ = [
    "McEstimate",
    "mc_expected_q",
    "conv_expected_q",
    "gaussian_kernel_gain",
    "cutoff_gain",
    "trig_polynomial",
    "high_band_bound",
]


class McEstimate(NamedTuple):
    mean: float
    stderr: float


def _wrap(a):
    return np.mod(a + 1.0, 2.0) - 1.0


def mc_expected_q(q_fn: Callable, mean: float, std: float, n: int = 10_000, seed=None) -> McEstimate:
    """Monte Carlo estimate of E[q(mu + sigma * eps)], eps standard normal.

    ``q_fn`` must accept an array of actions in [-1, 1).
    """
    if n < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    actions = _wrap(mean + std * rng.standard_normal(n))
    values = np.asarray(q_fn(actions), dtype=float)
    # shifting by the first sample keeps constants exact
    centered = values - values[0]
    est = values[0] + centered.mean()
    stderr = centered.std(ddof=1) / np.sqrt(n)
    return McEstimate(float(est), float(stderr))


def conv_expected_q(q, mean: float, std: float) -> float:
    """(q * f_N)(mean) by periodic quadrature of grid samples ``q``."""
    q = np.asarray(q, dtype=float)
    M = q.size
    spacing = 2.0 / M
    if std <= 0:
        raise ValueError("std must be positive")
    if spacing > std / 4.0:
        raise ValueError(
            f"grid of {M} points under-resolves std={std}: need at least 4 points per std"
        )
    kernel = _wrapped_gaussian(periodic_grid(M) - mean, std)
    return float(spacing * np.dot(kernel, q))


def gaussian_kernel_gain(std, w):
    """Fourier gain ``exp(-w^2 sigma^2 / 2)`` of the Gaussian policy kernel."""
    std = np.asarray(std, dtype=float)
    if np.any(std <= 0):
        raise ValueError("std must be positive")
    return np.exp(-0.5 * (np.asarray(w, dtype=float) * std) ** 2)


def cutoff_gain() -> float:
    """Gain at ``w = pi / (2 sigma)``; the same for every sigma."""
    return float(np.exp(-np.pi**2 / 8.0))


def trig_polynomial(coef_cos, coef_sin, constant=0.0):
    """Band-limited periodic function ``c + sum_f a_f cos(pi f x) + b_f sin(pi f x)``.

    Frequencies start at 1. Returns a vectorized callable.
    """
    coef_cos = np.asarray(coef_cos, dtype=float)
    coef_sin = np.asarray(coef_sin, dtype=float)
    freqs = np.arange(1, coef_cos.size + 1)

    def q(x):
        x = np.asarray(x, dtype=float)
        arg = np.pi * np.multiply.outer(x, freqs)
        return constant + np.cos(arg) @ coef_cos + np.sin(arg) @ coef_sin

    return q


def high_band_bound(q, features_basis, k_low: int, std: float) -> float:
    """Bound on |E_conv[q] - E_conv[q_low]| from the high-band coefficients.

    Each orthonormal column of frequency ``f`` has peak magnitude at most
    ``sqrt(2/M)`` and is attenuated by ``exp(-(pi f)^2 sigma^2 / 2)``.
    """
    from .fourier import basis_frequencies

    M, K = features_basis.shape
    coefs = features_basis.T @ np.asarray(q, dtype=float)
    freqs = basis_frequencies(M, K)
    peak = np.abs(features_basis).max(axis=0)
    gains = gaussian_kernel_gain(std, np.pi * freqs)
    return float(np.sum((np.abs(coefs) * peak * gains)[k_low:]))
