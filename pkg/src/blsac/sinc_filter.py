"""Adaptive separable sinc filter for the target critic.

The stencil has taps ``k = -K..K`` at positions ``x_k = k / K`` with weights
``sin(pi x_k) / (pi x_k)`` (1 at the center) and action shifts
``delta_k = x_k * pi / w_cutoff`` where ``w_cutoff = pi / (2 sigma)``. Along
each action axis the filter samples the critic at the shifted actions; the
per-axis stencils are summed (separable filter).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import ShapeError

__all__ = [
    "SincFilter",
    "RoundingCollisionWarning",
    "FrequencyResponse",
    "cutoff_frequency",
    "design_filter",
    "apply_sampled",
    "grid_offsets",
    "apply_grid",
    "stencil_matrix",
    "frequency_response",
    "filter_length",
]

BOUNDARY_MODES = ("periodic", "inverse_logistic")
NORMALIZATIONS = ("normalized", "literal")


class RoundingCollisionWarning(UserWarning):
    """Two filter taps rounded to the same grid offset."""


def cutoff_frequency(sigma):
    """Cutoff ``pi / (2 sigma)`` in radians per action unit."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    return np.pi / (2.0 * sigma)


def filter_length(half_width: int) -> int:
    return 2 * half_width + 1


@dataclass(frozen=True, eq=False)
class SincFilter:
    half_width: int
    sigma: tuple
    boundary_mode: str = "periodic"
    normalization: str = "normalized"
    w_cutoff: np.ndarray = field(init=False)
    positions: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    shifts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K = int(self.half_width)
        if K < 1:
            raise ValueError("half_width must be >= 1")
        sigma = tuple(float(s) for s in np.atleast_1d(self.sigma))
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        w_cut = np.atleast_1d(cutoff_frequency(sigma))
        x = np.arange(-K, K + 1) / K
        weights = np.sinc(x)  # sin(pi x)/(pi x), 1 at x=0
        weights[0] = weights[-1] = 0.0  # sin(pi) is exactly zero
        shifts = x[None, :] * (np.pi / w_cut[:, None])
        object.__setattr__(self, "half_width", K)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "w_cutoff", w_cut)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "shifts", shifts)

    @property
    def n_dims(self) -> int:
        return len(self.sigma)

    @property
    def length(self) -> int:
        return filter_length(self.half_width)

    def normalization_constant(self, n_dims: int = 1) -> float:
        """Scale that gives the full separable stencil unit DC gain."""
        if self.normalization == "literal":
            return 1.0
        return 1.0 / (n_dims * self.weights.sum())

    def to_dict(self) -> dict:
        sigma = self.sigma[0] if self.n_dims == 1 else list(self.sigma)
        return {"K": self.half_width, "sigma": sigma, "boundary_mode": self.boundary_mode}

    @classmethod
    def from_dict(cls, doc: dict) -> "SincFilter":
        return cls(int(doc["K"]), doc["sigma"], doc.get("boundary_mode", "periodic"),
                   doc.get("normalization", "normalized"))


def design_filter(sigma, half_width: int, boundary_mode="periodic", normalization="normalized"):
    """Filter matched to a policy standard deviation ``sigma`` (scalar or per axis)."""
    return SincFilter(half_width, sigma, boundary_mode, normalization)


def _wrap(a):
    return np.mod(a + 1.0, 2.0) - 1.0


def _probe_actions(action, shift, mode):
    if mode == "periodic":
        return _wrap(action + shift)
    logit = np.log1p(action) - np.log1p(-action)
    return np.tanh(0.5 * (logit + shift))


def apply_sampled(q_eval: Callable, state, action, filt: SincFilter) -> float:
    """Filtered critic value at ``action`` from point evaluations of ``q_eval(state, action)``."""
    action = np.atleast_1d(np.asarray(action, dtype=float))
    n_dims = action.size
    if filt.n_dims == 1:
        shifts = np.repeat(filt.shifts, n_dims, axis=0)
    elif filt.n_dims == n_dims:
        shifts = filt.shifts
    else:
        raise ShapeError(f"filter has {filt.n_dims} axes, action has {n_dims}")
    if filt.boundary_mode == "inverse_logistic" and np.any(np.abs(action) >= 1.0):
        raise ValueError("inverse_logistic mode needs actions strictly inside (-1, 1)")

    def at(a):
        return float(q_eval(state, a if n_dims > 1 else a[0]))

    center = at(action)
    # deviations from the centre value, so constants pass through bit-exact
    total = 0.0
    for i in range(n_dims):
        for k, w in enumerate(filt.weights):
            if w == 0.0:
                continue
            probe = action.copy()
            probe[i] = _probe_actions(action[i], shifts[i, k], filt.boundary_mode)
            total += w * (at(probe) - center)
    c = filt.normalization_constant(n_dims)
    if filt.normalization == "literal":
        return c * (total + n_dims * filt.weights.sum() * center)
    return center + c * total


def grid_offsets(filt: SincFilter, n_actions: int):
    """Integer grid offsets of each tap and the largest rounding error (action units)."""
    if filt.n_dims != 1:
        raise ShapeError("grid application is one-dimensional")
    spacing = 2.0 / n_actions
    exact = filt.shifts[0] / spacing
    offsets = np.rint(exact).astype(np.int64)
    rounding_error = float(np.max(np.abs(exact - offsets)) * spacing)
    active = filt.weights != 0.0
    if np.any(np.abs(offsets[active]) > n_actions // 2):
        raise ValueError(
            f"stencil spans {2 * np.abs(offsets[active]).max() + 1} cells, wider than the grid of {n_actions}"
        )
    wrapped = np.mod(offsets[active], n_actions)
    if np.unique(wrapped).size < wrapped.size:
        warnings.warn(
            "filter taps collide after rounding to the grid; grid spacing exceeds the tap spacing",
            RoundingCollisionWarning,
            stacklevel=2,
        )
    return offsets, rounding_error


def apply_grid(q, filt: SincFilter, mdp_or_n_actions) -> np.ndarray:
    """Circular convolution of the stencil with each state's action slice."""
    n_actions = getattr(mdp_or_n_actions, "n_actions", mdp_or_n_actions)
    q = np.asarray(q, dtype=float)
    if q.size % n_actions:
        raise ShapeError(f"q of length {q.size} is not a whole number of action slices")
    offsets, _ = grid_offsets(filt, n_actions)
    weights = np.ascontiguousarray(filt.normalization_constant(1) * filt.weights)
    slices = np.ascontiguousarray(q.reshape(-1, n_actions))
    return kernels.circular_stencil(slices, np.ascontiguousarray(offsets), weights).reshape(-1)


def stencil_matrix(filt: SincFilter, n_actions: int) -> np.ndarray:
    """The grid filter as an M x M circulant matrix acting on one action slice."""
    return apply_grid(np.eye(n_actions).T.reshape(-1), filt, n_actions).reshape(n_actions, n_actions).T


class FrequencyResponse(NamedTuple):
    w: np.ndarray  # radians per action unit, numpy FFT order
    response: np.ndarray  # complex transfer function (real for symmetric stencils)
    gain: np.ndarray


def frequency_response(filt: SincFilter, n_actions: int) -> FrequencyResponse:
    """Transfer function of the grid stencil at the grid frequencies."""
    offsets, _ = grid_offsets(filt, n_actions)
    h = np.zeros(n_actions)
    np.add.at(h, np.mod(offsets, n_actions), filt.normalization_constant(1) * filt.weights)
    # out[j] = sum_k h_k q[j + m_k]  =>  OUT_f = conj(FFT(h))_f * Q_f
    response = np.conj(np.fft.fft(h))
    w = np.pi * np.fft.fftfreq(n_actions, d=1.0 / n_actions)
    return FrequencyResponse(w, response, np.abs(response))
