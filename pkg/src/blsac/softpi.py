"""Tabular soft policy evaluation/iteration with classic and bandlimited targets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ShapeError, SingularSystemError
from .fixedpoint import Instance, make_instance, solve_lowres
from .fourier import FourierFeatures, project_low
from .mdp import DiscreteMdp, build_transition_matrix
from .policy import SoftPolicy, boltzmann_policy, uniform_policy
from .sinc_filter import SincFilter, apply_grid, stencil_matrix

__all__ = [
    "soft_bellman_target",
    "TdTrace",
    "projected_td_iteration",
    "default_step_size",
    "SpiResult",
    "soft_policy_iteration",
    "expected_return",
    "rollout_returns",
    "VARIANTS",
]

VARIANTS = ("classic", "bandlimited", "sinc", "lowres")


def _apply_target_filter(q, filt, mdp):
    if filt is None:
        return q
    if isinstance(filt, FourierFeatures):
        return project_low(q, filt)
    if isinstance(filt, SincFilter):
        return apply_grid(q, filt, mdp)
    raise TypeError("filter must be None, FourierFeatures (ideal low-pass) or SincFilter")


def soft_bellman_target(q, mdp: DiscreteMdp, policy: SoftPolicy, filt=None, P_pi=None) -> np.ndarray:
    """r + gamma P_pi (h * q - Omega_pi).

    ``filt`` selects ``h``: ``None`` (identity), a :class:`FourierFeatures`
    (ideal projector onto the low band) or a :class:`SincFilter` (grid stencil).
    """
    q = np.asarray(q, dtype=float)
    if q.size != mdp.size:
        raise ShapeError(f"q has length {q.size}, expected {mdp.size}")
    if P_pi is None:
        P_pi = build_transition_matrix(mdp, policy)
    hq = _apply_target_filter(q, filt, mdp)
    return mdp.rewards + mdp.gamma * (P_pi @ (hq - policy.omega_vector()))


def default_step_size(inst: Instance) -> float:
    """0.1 / lambda_max(Phi^T N Phi)."""
    return 0.1 / float(np.linalg.eigvalsh(inst.coupling.V).max())


@dataclass
class TdTrace:
    variant: str
    omega: np.ndarray  # (iterations + 1, n_features)
    residual: np.ndarray
    step_size: float
    converged: bool

    @property
    def final(self) -> np.ndarray:
        return self.omega[-1]


def _td_system(inst: Instance, variant):
    """(A, b) with the expected TD update w <- w + eta (b - A w)."""
    c = inst.coupling
    b = inst.soft_rewards.full
    if variant == "classic":
        return c.delta, b
    if variant == "bandlimited":
        D_ll, _, D_hl, _ = c.delta_blocks
        _, V_lh, _, V_hh = c.V_blocks
        return np.block([[D_ll, V_lh], [D_hl, V_hh]]), b
    raise ValueError("TD iteration supports the 'classic' and 'bandlimited' variants")


def projected_td_iteration(inst: Instance, variant="classic", step_size=None, iterations=10_000,
                           tol=0.0, divergence_bound=1e8, max_backoffs=20, record_every=1) -> TdTrace:
    """Expected (full-batch) semi-gradient TD on the projected Bellman error.

    The update is ``w += eta * Phi^T N (r + gamma P (target - Omega) - Phi w)``
    where the target is ``Phi w`` (classic) or ``Phi_L w_L`` (bandlimited).
    Starts from zero. On divergence the step size is halved and the run
    restarted, up to ``max_backoffs`` times.
    """
    A, b = _td_system(inst, variant)
    eta = default_step_size(inst) if step_size is None else float(step_size)
    for _ in range(max_backoffs + 1):
        w = np.zeros(b.size)
        trace = [w.copy()]
        residuals = [float(np.linalg.norm(b))]
        converged = False
        diverged = False
        for it in range(1, iterations + 1):
            g = b - A @ w
            w = w + eta * g
            res = float(np.linalg.norm(b - A @ w))
            if not np.isfinite(res) or np.linalg.norm(w) > divergence_bound:
                diverged = True
                break
            if it % record_every == 0 or it == iterations:
                trace.append(w.copy())
                residuals.append(res)
            if res <= tol:
                converged = True
                if it % record_every:
                    trace.append(w.copy())
                    residuals.append(res)
                break
        if not diverged:
            return TdTrace(variant, np.array(trace), np.array(residuals), eta, converged or tol == 0.0)
        eta *= 0.5
    raise DivergenceError(
        f"TD iteration diverged (|w| > {divergence_bound:g}) even with step size {eta * 2:.3e}"
    )


def _evaluation_matrix(mdp, variant, features, filt):
    """Linear map h applied to the next-state critic for tabular evaluation."""
    n = mdp.size
    if variant == "classic":
        return np.eye(n)
    if variant == "bandlimited":
        return features.phi_low @ features.phi_low.T
    if variant == "sinc":
        return np.kron(np.eye(mdp.n_states), stencil_matrix(filt, mdp.n_actions))
    raise ValueError(variant)


def _evaluate(mdp, policy, variant, features, filt, budget, q0):
    P = build_transition_matrix(mdp, policy)
    if variant == "lowres":
        inst = make_instance(mdp, policy, features)
        return solve_lowres(inst).q, 0.0
    H = _evaluation_matrix(mdp, variant, features, filt)
    rhs = mdp.rewards - mdp.gamma * (P @ policy.omega_vector())
    G = mdp.gamma * (P @ H)
    if budget is None:
        A = np.eye(mdp.size) - G
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularSystemError(f"{variant} evaluation system is singular", cond)
        q = np.linalg.solve(A, rhs)
    else:
        q = np.zeros(mdp.size) if q0 is None else q0.copy()
        for _ in range(budget):
            q = rhs + G @ q
            if not np.all(np.isfinite(q)):
                raise DivergenceError(f"{variant} evaluation diverged")
    residual = float(np.max(np.abs(rhs + G @ q - q)))
    return q, residual


def _actor_view(q, variant, features, filt, mdp):
    """Critic values the actor improves against.

    Bandlimited variants improve against the filtered critic, which is what
    sampling from the Gaussian policy effectively sees.
    """
    if variant == "bandlimited":
        return project_low(q, features)
    if variant == "sinc":
        return apply_grid(q, filt, mdp)
    return q


@dataclass
class SpiResult:
    policy: SoftPolicy
    q: np.ndarray
    returns: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def greedy_actions(self, mdp) -> np.ndarray:
        return mdp.action_grid[np.argmax(self.policy.probs, axis=1)]


def soft_policy_iteration(mdp: DiscreteMdp, temperature: float, variant="classic", *, features=None,
                          filt=None, evaluation_budget=None, outer_iterations=50, start=None,
                          initial_policy=None) -> SpiResult:
    """Alternate soft evaluation with Boltzmann improvement at fixed temperature.

    ``evaluation_budget=None`` evaluates exactly (linear solve); an integer
    runs that many warm-started target sweeps instead. Returns the final
    policy, its critic and the per-iteration expected return.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if variant in ("bandlimited", "lowres") and features is None:
        raise ValueError(f"variant {variant!r} needs features")
    if variant == "sinc" and filt is None:
        raise ValueError("variant 'sinc' needs a SincFilter")
    policy = initial_policy if initial_policy is not None else uniform_policy(
        mdp.n_states, mdp.n_actions, temperature)
    policy = policy.with_temperature(temperature)
    start = np.full(mdp.n_states, 1.0 / mdp.n_states) if start is None else np.asarray(start, float)
    result = SpiResult(policy, np.zeros(mdp.size))
    q = None
    for _ in range(outer_iterations):
        q, residual = _evaluate(mdp, policy, variant, features, filt, evaluation_budget, q)
        policy = boltzmann_policy(_actor_view(q, variant, features, filt, mdp), temperature, mdp)
        result.returns.append(expected_return(mdp, policy, start))
        result.residuals.append(residual)
    result.policy, result.q = policy, q
    return result


def _state_chain(mdp, policy):
    """State-to-state transition matrix and expected reward under the policy."""
    pi = policy.probs
    P_s = np.einsum("sa,sat->st", pi, mdp.transitions)
    r_s = np.sum(pi * mdp.rewards.reshape(mdp.n_states, mdp.n_actions), axis=1)
    return P_s, r_s


def expected_return(mdp: DiscreteMdp, policy: SoftPolicy, start) -> float:
    """Expected discounted sum of rewards (no entropy bonus) from ``start``."""
    start = np.asarray(start, dtype=float)
    if start.shape != (mdp.n_states,):
        raise ShapeError("start distribution must have one entry per state")
    P_s, r_s = _state_chain(mdp, policy)
    v = np.linalg.solve(np.eye(mdp.n_states) - mdp.gamma * P_s, r_s)
    return float(start @ v)


def rollout_returns(mdp: DiscreteMdp, policy: SoftPolicy, start, n_episodes, horizon=None, rng=None):
    """Discounted returns of ``n_episodes`` simulated episodes (vectorized over episodes)."""
    rng = np.random.default_rng(rng)
    if horizon is None:
        horizon = int(np.ceil(np.log(1e-12) / np.log(max(mdp.gamma, 1e-12)))) if mdp.gamma > 0 else 1
    S, M = mdp.n_states, mdp.n_actions
    cum_pi = np.cumsum(policy.probs, axis=1)
    cum_T = np.cumsum(mdp.transitions, axis=2)
    R = mdp.rewards.reshape(S, M)
    s = rng.choice(S, size=n_episodes, p=np.asarray(start, float))
    total = np.zeros(n_episodes)
    disc = 1.0
    for _ in range(horizon):
        a = np.minimum((rng.random(n_episodes)[:, None] > cum_pi[s]).sum(axis=1), M - 1)
        total += disc * R[s, a]
        disc *= mdp.gamma
        s = np.minimum((rng.random(n_episodes)[:, None] > cum_T[s, a]).sum(axis=1), S - 1)
    return total
