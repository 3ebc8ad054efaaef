"""Finite soft MDPs on a gridded action space.

All state-action vectors use state-major ordering: every action of state 0,
then every action of state 1, and so on. Matrices indexed by state-action
pairs follow the same ordering.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, ShapeError, SingularSystemError
from . import kernels

__all__ = [
    "DiscreteMdp",
    "periodic_grid",
    "random_mdp",
    "build_transition_matrix",
    "visitation_density",
    "exact_soft_q",
    "soft_bellman_operator",
    "simulate_visitation",
]


def periodic_grid(n_actions: int) -> np.ndarray:
    """Uniform periodic grid on [-1, 1): spacing 2/M, the point 1 wraps to -1."""
    if n_actions < 1:
        raise ValueError("n_actions must be positive")
    return -1.0 + 2.0 * np.arange(n_actions) / n_actions


@dataclass(frozen=True, eq=False)
class DiscreteMdp:
    n_states: int
    action_grid: np.ndarray
    rewards: np.ndarray
    transitions: np.ndarray
    gamma: float

    def __post_init__(self):
        grid = np.asarray(self.action_grid, dtype=float)
        rewards = np.asarray(self.rewards, dtype=float).reshape(-1)
        trans = np.asarray(self.transitions, dtype=float)
        for arr in (grid, rewards, trans):
            arr.setflags(write=False)
        object.__setattr__(self, "action_grid", grid)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "gamma", float(self.gamma))

        n, m = self.n_states, grid.size
        if n < 1:
            raise ValueError("n_states must be positive")
        if grid.ndim != 1 or m < 1:
            raise ShapeError("action_grid must be a non-empty vector")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("action_grid must be strictly increasing")
        if grid[0] < -1.0 or grid[-1] > 1.0:
            raise ValueError("action_grid endpoints must lie in [-1, 1]")
        if rewards.size != n * m:
            raise ShapeError(f"rewards has length {rewards.size}, expected {n * m}")
        if not np.all(np.isfinite(rewards)):
            raise ValueError("rewards must be finite")
        if trans.shape != (n, m, n):
            raise ShapeError(f"transitions has shape {trans.shape}, expected {(n, m, n)}")
        if np.any(trans < 0) or np.max(np.abs(trans.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("each transition slice p(.|s,a) must be a distribution")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")

    @property
    def n_actions(self) -> int:
        return self.action_grid.size

    @property
    def size(self) -> int:
        """Number of state-action pairs."""
        return self.n_states * self.n_actions

    @property
    def grid_spacing(self) -> float:
        return 2.0 / self.n_actions

    def with_rewards(self, rewards) -> "DiscreteMdp":
        return DiscreteMdp(self.n_states, self.action_grid, rewards, self.transitions, self.gamma)

    def with_gamma(self, gamma: float) -> "DiscreteMdp":
        return DiscreteMdp(self.n_states, self.action_grid, self.rewards, self.transitions, gamma)

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "action_grid": self.action_grid.tolist(),
            "rewards": self.rewards.tolist(),
            "transitions": self.transitions.tolist(),
            "gamma": self.gamma,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscreteMdp":
        return cls(
            n_states=int(doc["n_states"]),
            action_grid=np.asarray(doc["action_grid"], dtype=float),
            rewards=np.asarray(doc["rewards"], dtype=float),
            transitions=np.asarray(doc["transitions"], dtype=float),
            gamma=float(doc["gamma"]),
        )

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "DiscreteMdp":
        """Load from a JSON string or a path to a JSON file."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))


def random_mdp(n_states, n_actions, gamma=0.99, rng=None, reward_scale=1.0, concentration=1.0):
    """Random MDP with Dirichlet transitions and uniform rewards in [0, reward_scale)."""
    rng = np.random.default_rng(rng)
    trans = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    trans /= trans.sum(axis=2, keepdims=True)
    rewards = reward_scale * rng.random(n_states * n_actions)
    return DiscreteMdp(n_states, periodic_grid(n_actions), rewards, trans, gamma)


def _check_policy(mdp, policy):
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeError(
            f"policy has shape {policy.probs.shape}, mdp expects {(mdp.n_states, mdp.n_actions)}"
        )


def build_transition_matrix(mdp: DiscreteMdp, policy) -> np.ndarray:
    """State-action transition matrix with entries p(s_k|s_i,a_j) * pi(a_l|s_k)."""
    _check_policy(mdp, policy)
    n, m = mdp.n_states, mdp.n_actions
    p_next = mdp.transitions.reshape(n * m, n)
    return (p_next[:, :, None] * policy.probs[None, :, :]).reshape(n * m, n * m)


def visitation_density(P_pi, mixing=1e-3, *, max_cond=1e12):
    """Stationary state-action density of ``(1 - mixing) P + mixing * uniform``.

    Solved directly as the left null vector (with the normalization row
    substituted). Returns the density vector; use ``np.diag`` for the matrix
    form. Raises :class:`ConvergenceError` when the chain has no unique
    stationary distribution (reducible chain with ``mixing=0``).
    """
    P = np.asarray(P_pi, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise ShapeError("P_pi must be square")
    if not 0.0 <= mixing <= 1.0:
        raise ValueError("mixing must lie in [0, 1]")
    P_mix = (1.0 - mixing) * P + mixing / n
    A = np.eye(n) - P_mix.T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > max_cond:
        raise ConvergenceError(
            f"stationary distribution is not unique (condition number {cond:.3e}); "
            "use mixing > 0"
        )
    d = np.linalg.solve(A, b)
    # one refinement step on the residual tightens the fixed-point error
    d += np.linalg.solve(A, b - A @ d)
    if np.any(d < -1e-12):
        raise ConvergenceError("stationary solve produced negative densities")
    d = np.clip(d, 0.0, None)
    return d / d.sum()


def soft_bellman_operator(q, mdp: DiscreteMdp, policy, P_pi=None) -> np.ndarray:
    """One application of r + gamma P_pi (q - Omega_pi)."""
    if P_pi is None:
        P_pi = build_transition_matrix(mdp, policy)
    return mdp.rewards + mdp.gamma * (P_pi @ (np.asarray(q, dtype=float) - policy.omega_vector()))


def exact_soft_q(mdp: DiscreteMdp, policy, P_pi=None) -> np.ndarray:
    """Soft state-action values by a direct solve of q = r + gamma P (q - Omega)."""
    if P_pi is None:
        P_pi = build_transition_matrix(mdp, policy)
    A = np.eye(mdp.size) - mdp.gamma * P_pi
    rhs = mdp.rewards - mdp.gamma * (P_pi @ policy.omega_vector())
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystemError("I - gamma P_pi is singular", cond)
    q = np.linalg.solve(A, rhs)
    q += np.linalg.solve(A, rhs - A @ q)
    return q


def simulate_visitation(P_pi, n_steps, rng=None, start=0):
    """Empirical state-action visit frequencies from one simulated chain."""
    rng = np.random.default_rng(rng)
    P = np.ascontiguousarray(P_pi, dtype=np.float64)
    cum = np.cumsum(P, axis=1)
    cum = np.ascontiguousarray(cum)
    uniforms = rng.random(int(n_steps))
    counts = kernels.simulate_chain(cum, int(start), uniforms)
    return counts / counts.sum()
