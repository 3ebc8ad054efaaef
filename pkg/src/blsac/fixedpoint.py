"""Closed-form fixed points of the projected soft Bellman equation.

With features ``Phi = [Phi_L Phi_H]``, visitation density ``N`` and the
state-action transition matrix ``P``:

    U = gamma Phi^T N P Phi,   V = Phi^T N Phi,   Delta = V - U,
    r_soft = Phi^T N r - gamma Phi^T N P Omega.

The classic fixed point solves ``Delta w = r_soft``. The bandlimited one uses
only ``Phi_L w_L`` as the bootstrap target, which replaces the ``Delta_LH`` and
``Delta_HH`` blocks by ``V_LH`` and ``V_HH``. The low-resolution fixed point
uses ``Phi_L`` alone: ``w_L = Delta_LL^{-1} r_soft_L``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, SingularSystemError
from .fourier import FourierFeatures
from .mdp import DiscreteMdp, build_transition_matrix, visitation_density

__all__ = [
    "CouplingMatrices",
    "FixedPointSolution",
    "DecompositionReport",
    "NoiseShift",
    "SoftRewards",
    "build_coupling",
    "soft_reward_coefficients",
    "projected_bellman_residual",
    "solve_classic",
    "solve_bandlimited",
    "solve_lowres",
    "solve_all",
    "decomposition_check",
    "noise_shift",
    "attenuation_report",
    "Instance",
    "make_instance",
]

MAX_COND = 1e12


def _solve(A, b, what):
    cond = np.linalg.cond(A) if A.size else 1.0
    if not np.isfinite(cond) or cond > MAX_COND:
        raise SingularSystemError(f"{what} is numerically singular", cond)
    x = np.linalg.solve(A, b)
    # one step of iterative refinement
    return x + np.linalg.solve(A, b - A @ x)


def _density_vector(N):
    N = np.asarray(N, dtype=float)
    return np.diag(N).copy() if N.ndim == 2 else N


@dataclass(frozen=True, eq=False)
class CouplingMatrices:
    U: np.ndarray
    V: np.ndarray
    n_low: int
    gamma: float
    delta_ll_cond: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "delta_ll_cond", float(np.linalg.cond(self.delta_ll)))

    @property
    def delta(self):
        return self.V - self.U

    def _blocks(self, A):
        n = self.n_low
        return A[:n, :n], A[:n, n:], A[n:, :n], A[n:, n:]

    @property
    def U_blocks(self):
        return self._blocks(self.U)

    @property
    def V_blocks(self):
        return self._blocks(self.V)

    @property
    def delta_blocks(self):
        return self._blocks(self.delta)

    @property
    def delta_ll(self):
        return self.delta[: self.n_low, : self.n_low]

    @property
    def v_lh(self):
        return self.V[: self.n_low, self.n_low :]

    @property
    def delta_lh(self):
        return self.delta[: self.n_low, self.n_low :]

    @property
    def gamma_lh(self):
        """Coupling (Delta_LL)^{-1} (N^1/2 Phi_L)^T (N^1/2 Phi_H) = Delta_LL^{-1} V_LH."""
        return _solve(self.delta_ll, self.v_lh, "Delta_LL")

    @property
    def gamma_lh_classic(self):
        """Classic counterpart Delta_LL^{-1} Delta_LH."""
        return _solve(self.delta_ll, self.delta_lh, "Delta_LL")

    def delta_min_eig(self) -> float:
        """Smallest eigenvalue of the symmetric part of Delta."""
        D = self.delta
        return float(np.linalg.eigvalsh(0.5 * (D + D.T)).min())

    def is_positive_definite(self) -> bool:
        return self.delta_min_eig() > 0.0


def build_coupling(features: FourierFeatures, N, P_pi, gamma) -> CouplingMatrices:
    Phi = features.matrix
    d = _density_vector(N)
    P_pi = np.asarray(P_pi, dtype=float)
    if d.size != Phi.shape[0] or P_pi.shape != (Phi.shape[0], Phi.shape[0]):
        raise ShapeError("features, density and transition matrix disagree in size")
    NPhi = d[:, None] * Phi
    V = Phi.T @ NPhi
    U = gamma * (NPhi.T @ (P_pi @ Phi))
    coupling = CouplingMatrices(U, V, features.n_low, float(gamma))
    if not np.isfinite(coupling.delta_ll_cond) or coupling.delta_ll_cond > MAX_COND:
        raise SingularSystemError("Delta_LL is numerically singular", coupling.delta_ll_cond)
    return coupling


@dataclass(frozen=True, eq=False)
class SoftRewards:
    low: np.ndarray
    high: np.ndarray

    @property
    def full(self):
        return np.concatenate([self.low, self.high])


def soft_reward_coefficients(features, N, P_pi, rewards, omega, gamma) -> SoftRewards:
    """Fourier coefficients Phi^T N r - gamma Phi^T N P Omega, split low/high."""
    Phi = features.matrix
    d = _density_vector(N)
    coeffs = Phi.T @ (d * np.asarray(rewards, dtype=float)) - gamma * (
        Phi.T @ (d * (np.asarray(P_pi) @ np.asarray(omega, dtype=float)))
    )
    return SoftRewards(coeffs[: features.n_low], coeffs[features.n_low :])


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    variant: str
    omega_low: np.ndarray
    omega_high: np.ndarray
    q: np.ndarray
    residual: float
    soft_rewards: SoftRewards
    block_agreement: float = 0.0

    @property
    def omega(self):
        return np.concatenate([self.omega_low, self.omega_high])

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "omega_low": self.omega_low.tolist(),
            "omega_high": self.omega_high.tolist(),
            "residual": self.residual,
            "block_agreement": self.block_agreement,
        }


@dataclass(frozen=True, eq=False)
class Instance:
    """Everything the closed forms need for one MDP/policy/feature triple."""

    mdp: DiscreteMdp
    policy: object
    features: FourierFeatures
    P: np.ndarray
    density: np.ndarray
    coupling: CouplingMatrices
    soft_rewards: SoftRewards

    def with_rewards(self, rewards) -> "Instance":
        mdp = self.mdp.with_rewards(rewards)
        sr = soft_reward_coefficients(
            self.features, self.density, self.P, mdp.rewards, self.policy.omega_vector(), mdp.gamma
        )
        return Instance(mdp, self.policy, self.features, self.P, self.density, self.coupling, sr)


def make_instance(mdp, policy, features, mixing=1e-3, density=None) -> Instance:
    if features.n_states != mdp.n_states or features.n_actions != mdp.n_actions:
        raise ShapeError("features do not match the mdp grid")
    P = build_transition_matrix(mdp, policy)
    d = visitation_density(P, mixing) if density is None else _density_vector(density)
    coupling = build_coupling(features, d, P, mdp.gamma)
    sr = soft_reward_coefficients(features, d, P, mdp.rewards, policy.omega_vector(), mdp.gamma)
    return Instance(mdp, policy, features, P, d, coupling, sr)


def projected_bellman_residual(inst: Instance, omega_low, omega_high, variant) -> np.ndarray:
    """Projected soft Bellman error evaluated directly in state-action space.

    ``classic`` bootstraps from Phi w, ``bandlimited`` from Phi_L w_L only,
    ``lowres`` uses the truncated features Phi_L for both fit and target.
    """
    f, mdp = inst.features, inst.mdp
    d = inst.density
    omega_vec = inst.policy.omega_vector()
    if variant == "lowres":
        Phi = f.phi_low
        q = Phi @ omega_low
        target = q
    else:
        Phi = f.matrix
        q = Phi @ np.concatenate([omega_low, omega_high])
        target = q if variant == "classic" else f.phi_low @ omega_low
    err = mdp.rewards + mdp.gamma * (inst.P @ (target - omega_vec)) - q
    return Phi.T @ (d * err)


def _solution(inst, variant, w_low, w_high, block_agreement=0.0):
    f = inst.features
    if variant == "lowres":
        q = f.phi_low @ w_low
    else:
        q = f.matrix @ np.concatenate([w_low, w_high])
    res = projected_bellman_residual(inst, w_low, w_high, variant)
    return FixedPointSolution(
        variant, w_low, w_high, q, float(np.linalg.norm(res)), inst.soft_rewards, block_agreement
    )


def _classic_blocks(coupling: CouplingMatrices, sr: SoftRewards):
    D_ll, D_lh, D_hl, D_hh = coupling.delta_blocks
    if sr.high.size == 0:
        return _solve(D_ll, sr.low, "Delta_LL"), sr.high.copy()
    A = D_hl @ _solve(D_ll, np.column_stack([D_lh, sr.low]), "Delta_LL")
    schur = D_hh - A[:, :-1]
    w_h = _solve(schur, sr.high - A[:, -1], "classic Schur complement")
    w_l = _solve(D_ll, sr.low - D_lh @ w_h, "Delta_LL")
    return w_l, w_h


def solve_classic(inst: Instance) -> FixedPointSolution:
    """w* = Delta^{-1} r_soft, cross-checked against the block elimination."""
    n = inst.coupling.n_low
    w = _solve(inst.coupling.delta, inst.soft_rewards.full, "Delta")
    w_l, w_h = _classic_blocks(inst.coupling, inst.soft_rewards)
    agreement = float(np.linalg.norm(np.concatenate([w_l, w_h]) - w))
    return _solution(inst, "classic", w[:n], w[n:], agreement)


def solve_bandlimited(inst: Instance) -> FixedPointSolution:
    """Fixed point with the low-band bootstrap target, by block elimination.

    w_H = (V_HH - Delta_HL Delta_LL^{-1} V_LH)^{-1} (r_H - Delta_HL Delta_LL^{-1} r_L)
    w_L = Delta_LL^{-1} (r_L - V_LH w_H)
    """
    c, sr = inst.coupling, inst.soft_rewards
    D_ll, _, D_hl, _ = c.delta_blocks
    _, V_lh, _, V_hh = c.V_blocks
    if sr.high.size == 0:
        w_l, w_h = _solve(D_ll, sr.low, "Delta_LL"), sr.high.copy()
        return _solution(inst, "bandlimited", w_l, w_h)
    A = D_hl @ _solve(D_ll, np.column_stack([V_lh, sr.low]), "Delta_LL")
    schur = V_hh - A[:, :-1]
    w_h = _solve(schur, sr.high - A[:, -1], "bandlimited Schur block")
    w_l = _solve(D_ll, sr.low - V_lh @ w_h, "Delta_LL")
    # monolithic system [[D_ll, V_lh], [D_hl, V_hh]] as a consistency check
    B = np.block([[D_ll, V_lh], [D_hl, V_hh]])
    w_mono = _solve(B, sr.full, "bandlimited system")
    agreement = float(np.linalg.norm(np.concatenate([w_l, w_h]) - w_mono))
    return _solution(inst, "bandlimited", w_l, w_h, agreement)


def solve_lowres(inst: Instance) -> FixedPointSolution:
    """Fixed point using only the low-band features: Delta_LL^{-1} r_L."""
    w_l = _solve(inst.coupling.delta_ll, inst.soft_rewards.low, "Delta_LL")
    return _solution(inst, "lowres", w_l, np.zeros(inst.features.n_high))


def solve_all(inst: Instance) -> dict:
    return {
        "classic": solve_classic(inst),
        "bandlimited": solve_bandlimited(inst),
        "lowres": solve_lowres(inst),
    }


@dataclass(frozen=True)
class DecompositionReport:
    error: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.error <= self.tolerance


def decomposition_check(bandlimited: FixedPointSolution, lowres: FixedPointSolution,
                        coupling: CouplingMatrices, tolerance=1e-9) -> DecompositionReport:
    """Check w_L(bandlimited) = w_L(lowres) - Gamma_LH w_H(bandlimited)."""
    predicted = lowres.omega_low - coupling.gamma_lh @ bandlimited.omega_high
    return DecompositionReport(float(np.linalg.norm(bandlimited.omega_low - predicted)), tolerance)


@dataclass(frozen=True, eq=False)
class NoiseShift:
    variant: str
    low: np.ndarray
    high: np.ndarray
    closed_form_low: np.ndarray
    eps_low: np.ndarray
    eps_high: np.ndarray

    @property
    def closed_form_error(self) -> float:
        return float(np.linalg.norm(self.low - self.closed_form_low))

    @property
    def low_norm(self) -> float:
        return float(np.linalg.norm(self.low))


_SOLVERS = {"classic": solve_classic, "bandlimited": solve_bandlimited, "lowres": solve_lowres}


def noise_shift(inst: Instance, eps_r, variant="bandlimited") -> NoiseShift:
    """Shift of the fixed-point coefficients caused by a reward perturbation.

    Computed by re-solving with ``r + eps_r`` (policy, density and transition
    matrix held fixed) and differencing. The low-band closed form
    Delta_LL^{-1}(eps_L - C w_H) with C = V_LH (bandlimited) or Delta_LH
    (classic) is evaluated from the re-solved high shift for comparison.
    """
    if variant not in ("classic", "bandlimited"):
        raise ValueError("variant must be 'classic' or 'bandlimited'")
    eps_r = np.asarray(eps_r, dtype=float)
    solver = _SOLVERS[variant]
    base = solver(inst)
    noisy = solver(inst.with_rewards(inst.mdp.rewards + eps_r))
    d_low = noisy.omega_low - base.omega_low
    d_high = noisy.omega_high - base.omega_high
    f = inst.features
    eps = f.matrix.T @ (inst.density * eps_r)
    eps_l, eps_h = eps[: f.n_low], eps[f.n_low :]
    c = inst.coupling
    C = c.v_lh if variant == "bandlimited" else c.delta_lh
    closed = _solve(c.delta_ll, eps_l - C @ d_high, "Delta_LL")
    return NoiseShift(variant, d_low, d_high, closed, eps_l, eps_h)


def attenuation_report(coupling: CouplingMatrices) -> dict:
    """Norms of V_LH, Delta_LH and Gamma_LH and the |V_LH| < |Delta_LH| test.

    The inequality is reported per norm; it is not expected to hold for
    every instance.
    """
    mats = {
        "V_LH": coupling.v_lh,
        "Delta_LH": coupling.delta_lh,
        "Gamma_LH": coupling.gamma_lh,
        "Gamma_LH_classic": coupling.gamma_lh_classic,
    }
    out = {}
    for name, A in mats.items():
        empty = A.size == 0
        out[f"{name}_spectral"] = 0.0 if empty else float(np.linalg.norm(A, 2))
        out[f"{name}_fro"] = 0.0 if empty else float(np.linalg.norm(A, "fro"))
    out["inequality_spectral"] = out["V_LH_spectral"] < out["Delta_LH_spectral"]
    out["inequality_fro"] = out["V_LH_fro"] < out["Delta_LH_fro"]
    return out
