"""Discrete soft policies over the action grid."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .errors import ShapeError

__all__ = [
    "SoftPolicy",
    "GaussianGridPolicy",
    "AliasingWarning",
    "uniform_policy",
    "boltzmann_policy",
    "policy_entropy",
    "gaussian_grid_policy",
    "temperature_ladder",
]


class AliasingWarning(UserWarning):
    """Kernel narrower than the grid spacing."""


@dataclass(frozen=True, eq=False)
class SoftPolicy:
    """Row-stochastic ``probs`` of shape (n_states, n_actions) plus temperature.

    ``entropy_terms`` holds alpha * sum_a pi log pi per state, i.e. the
    temperature-scaled negative entropy that is subtracted inside the soft
    Bellman backup.
    """

    probs: np.ndarray
    temperature: float = 0.0
    deterministic_limit: bool = False
    entropy_terms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2:
            raise ShapeError("probs must be a (n_states, n_actions) matrix")
        if np.any(probs < 0) or np.max(np.abs(probs.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("policy rows must be probability distributions")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "temperature", float(self.temperature))
        terms = self.temperature * xlogy(probs, probs).sum(axis=1)
        terms.setflags(write=False)
        object.__setattr__(self, "entropy_terms", terms)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    def omega_vector(self) -> np.ndarray:
        """Per-state entropy terms repeated over actions (state-major)."""
        return np.repeat(self.entropy_terms, self.n_actions)

    def with_temperature(self, temperature: float) -> "SoftPolicy":
        return SoftPolicy(self.probs, temperature, self.deterministic_limit)

    def to_dict(self) -> dict:
        return {
            "probs": self.probs.tolist(),
            "temperature": self.temperature,
            "deterministic_limit": self.deterministic_limit,
        }


@dataclass(frozen=True, eq=False)
class GaussianGridPolicy:
    mean: np.ndarray
    std: np.ndarray
    policy: SoftPolicy


def uniform_policy(n_states, n_actions, temperature=0.0) -> SoftPolicy:
    return SoftPolicy(np.full((n_states, n_actions), 1.0 / n_actions), temperature)


def _q_matrix(q, mdp):
    q = np.asarray(q, dtype=float)
    if q.size != mdp.size:
        raise ShapeError(f"q has length {q.size}, expected {mdp.size}")
    return q.reshape(mdp.n_states, mdp.n_actions)


def boltzmann_policy(q, temperature, mdp) -> SoftPolicy:
    """pi(a|s) proportional to exp(q(s,a) / temperature).

    ``temperature == 0`` returns the greedy policy with ties split uniformly
    and ``deterministic_limit`` set.
    """
    Q = _q_matrix(q, mdp)
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        top = Q.max(axis=1, keepdims=True)
        ties = np.isclose(Q, top, rtol=0.0, atol=1e-12).astype(float)
        return SoftPolicy(ties / ties.sum(axis=1, keepdims=True), 0.0, deterministic_limit=True)
    z = (Q - Q.max(axis=1, keepdims=True)) / temperature
    w = np.exp(z)
    return SoftPolicy(w / w.sum(axis=1, keepdims=True), temperature)


def policy_entropy(policy: SoftPolicy) -> np.ndarray:
    """Shannon entropy per state, with 0 log 0 = 0."""
    return -xlogy(policy.probs, policy.probs).sum(axis=1)


def _wrapped_gaussian(x, std, period=2.0):
    """Wrapped normal density (unnormalized on the grid) at offsets ``x``."""
    n_img = int(np.ceil(8.0 * std / period)) + 1
    shifts = period * np.arange(-n_img, n_img + 1)
    z = (np.asarray(x)[..., None] + shifts) / std
    return np.exp(-0.5 * z**2).sum(axis=-1) / (std * np.sqrt(2.0 * np.pi))


def gaussian_grid_policy(mean, std, mdp, temperature=0.0) -> GaussianGridPolicy:
    """Wrapped Gaussian evaluated on the periodic action grid and renormalized."""
    n = mdp.n_states
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (n,)).copy()
    std = np.broadcast_to(np.asarray(std, dtype=float), (n,)).copy()
    if np.any(std <= 0):
        raise ValueError("std must be positive")
    if np.any(std < mdp.grid_spacing):
        warnings.warn(
            f"policy std {std.min():.3g} below grid spacing {mdp.grid_spacing:.3g}",
            AliasingWarning,
            stacklevel=2,
        )
    rows = np.empty((n, mdp.n_actions))
    for s in range(n):
        dens = _wrapped_gaussian(mdp.action_grid - mean[s], std[s])
        rows[s] = dens / dens.sum()
    return GaussianGridPolicy(mean, std, SoftPolicy(rows, temperature))


def temperature_ladder(high, low, n):
    """Geometric sequence of temperatures from ``high`` down to ``low``."""
    return np.geomspace(high, low, n)
