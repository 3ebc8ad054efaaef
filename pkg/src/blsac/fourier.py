"""Real orthonormal Fourier basis on the periodic action grid.

Columns are ordered by frequency: constant, cos 1, sin 1, cos 2, sin 2, ...
On the grid ``a_j = -1 + 2 j / M`` the column of integer frequency ``f`` is
``cos(pi f a)`` or ``sin(pi f a)``, so ``f`` maps to ``w = pi f`` radians per
action unit. For even M the Nyquist frequency has only a cosine column.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .mdp import periodic_grid

__all__ = [
    "FourierFeatures",
    "fourier_basis",
    "basis_frequencies",
    "assemble_features",
    "project_low",
    "project_high",
    "split_for_cutoff",
]


def basis_frequencies(M: int, K: int) -> np.ndarray:
    """Integer frequency of each of the first K columns."""
    freqs = [0]
    f = 1
    while len(freqs) < M:
        freqs.append(f)
        if 2 * f != M:
            freqs.append(f)
        f += 1
    return np.array(freqs[:K], dtype=int)


def fourier_basis(M: int, K: int | None = None) -> np.ndarray:
    """M x K matrix of orthonormal real DFT columns in frequency order."""
    K = M if K is None else K
    if not 1 <= K <= M:
        raise ValueError(f"need 1 <= K <= M, got K={K}, M={M}")
    a = periodic_grid(M)
    cols = [np.full(M, 1.0 / np.sqrt(M))]
    f = 1
    while len(cols) < K:
        if 2 * f == M:
            cols.append(np.cos(np.pi * f * a) / np.sqrt(M))
        else:
            cols.append(np.sqrt(2.0 / M) * np.cos(np.pi * f * a))
            if len(cols) < K:
                cols.append(np.sqrt(2.0 / M) * np.sin(np.pi * f * a))
        f += 1
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class FourierFeatures:
    """Block-diagonal features ``Phi = [Phi_L  Phi_H]`` over ``n_states`` blocks.

    ``Phi_L = kron(I, basis[:, :k_low])`` and ``Phi_H`` likewise for the
    remaining columns, so all low coefficients (state-major) precede all high.
    """

    basis: np.ndarray
    n_states: int
    k_low: int
    frequencies: np.ndarray = field(init=False)
    phi_low: np.ndarray = field(init=False, repr=False)
    phi_high: np.ndarray = field(init=False, repr=False)
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        M, K = basis.shape
        freqs = basis_frequencies(M, K)
        if not 1 <= self.k_low <= K:
            raise ValueError(f"k_low must lie in [1, {K}], got {self.k_low}")
        if self.k_low < K and freqs[self.k_low - 1] == freqs[self.k_low]:
            raise ValueError(
                f"k_low={self.k_low} splits the cos/sin pair of frequency {freqs[self.k_low]}"
            )
        eye = np.eye(self.n_states)
        phi_low = np.kron(eye, basis[:, : self.k_low])
        phi_high = np.kron(eye, basis[:, self.k_low :])
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "phi_low", phi_low)
        object.__setattr__(self, "phi_high", phi_high)
        object.__setattr__(self, "matrix", np.hstack([phi_low, phi_high]))

    @property
    def n_actions(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def k_high(self) -> int:
        return self.k - self.k_low

    @property
    def n_low(self) -> int:
        """Number of low coefficients over all states."""
        return self.k_low * self.n_states

    @property
    def n_high(self) -> int:
        return self.k_high * self.n_states

    def split(self, omega):
        omega = np.asarray(omega, dtype=float)
        return omega[: self.n_low], omega[self.n_low :]

    def truncated(self) -> "FourierFeatures":
        """Features restricted to the low band (no high columns)."""
        return FourierFeatures(self.basis[:, : self.k_low], self.n_states, self.k_low)


def assemble_features(basis, n_states: int, k_low: int) -> FourierFeatures:
    return FourierFeatures(basis, n_states, k_low)


def _check_q(q, features):
    q = np.asarray(q, dtype=float)
    if q.shape != (features.matrix.shape[0],):
        raise ShapeError(f"q has shape {q.shape}, features expect {(features.matrix.shape[0],)}")
    return q


def project_low(q, features: FourierFeatures) -> np.ndarray:
    """Orthogonal projection of q onto span(Phi_L)."""
    q = _check_q(q, features)
    return features.phi_low @ (features.phi_low.T @ q)


def project_high(q, features: FourierFeatures) -> np.ndarray:
    q = _check_q(q, features)
    return features.phi_high @ (features.phi_high.T @ q)


def split_for_cutoff(w_cutoff: float, M: int) -> int:
    """Largest frequency-class-aligned ``k_low`` whose frequencies lie below ``w_cutoff``.

    Frequencies are ``pi * f`` radians per action unit. The constant column
    is always kept.
    """
    freqs = basis_frequencies(M, M)
    keep = np.pi * freqs < w_cutoff
    keep[0] = True
    return int(np.count_nonzero(keep))
