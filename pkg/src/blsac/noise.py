"""Correlated reward noise: Ornstein-Uhlenbeck processes on an action grid,
and the linearized inverted pendulum used to show how correlated action
disturbances become correlated rewards.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels

__all__ = [
    "OuProcess",
    "ou_step",
    "ou_paths",
    "ou_stationary_variance",
    "GridNoiseField",
    "PendulumModel",
    "pendulum_step",
    "pendulum_reward",
    "integrate_pendulum",
    "CovarianceStudy",
    "reward_covariance_study",
    "covariance_scaling",
    "covariance_ladder",
    "batch_means_stderr",
]


class OuProcess:
    """Zero-mean OU process advanced by Euler-Maruyama steps.

    Each process owns its random stream, so two processes built with the
    same seed produce identical paths.
    """

    def __init__(self, theta=0.15, sigma=0.2, dt=0.01, x0=0.0, seed=None):
        if theta <= 0 or dt <= 0:
            raise ValueError("theta and dt must be positive")
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        self.theta = float(theta)
        self.sigma = float(sigma)
        self.dt = float(dt)
        self.x = float(x0)
        self.rng = np.random.default_rng(seed)

    def step(self) -> "OuProcess":
        xi = self.rng.standard_normal()
        self.x = self.x + self.theta * (0.0 - self.x) * self.dt + self.sigma * np.sqrt(self.dt) * xi
        return self

    def path(self, n_steps) -> np.ndarray:
        """Advance ``n_steps`` and return the visited values (compiled kernel)."""
        normals = self.rng.standard_normal((1, int(n_steps)))
        out = kernels.ou_paths(np.array([self.x]), self.theta, self.sigma, self.dt, normals)[0]
        if out.size:
            self.x = float(out[-1])
        return out

    @property
    def stationary_variance(self) -> float:
        return ou_stationary_variance(self.theta, self.sigma)


def ou_step(process: OuProcess) -> OuProcess:
    return process.step()


def ou_stationary_variance(theta, sigma) -> float:
    """Continuous-time stationary variance sigma^2 / (2 theta)."""
    return sigma**2 / (2.0 * theta)


def ou_paths(n_paths, n_steps, theta=0.15, sigma=0.2, dt=0.01, x0=None, seed=None) -> np.ndarray:
    """Independent OU paths, shape (n_paths, n_steps).

    ``x0=None`` draws the start from the stationary distribution.
    """
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = rng.normal(0.0, np.sqrt(ou_stationary_variance(theta, sigma)), n_paths)
    x0 = np.ascontiguousarray(np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,)))
    normals = rng.standard_normal((n_paths, n_steps))
    return kernels.ou_paths(x0, theta, sigma, dt, normals)


class GridNoiseField:
    """One OU process per point of a hyperrectangular grid over [-1, 1]^d.

    ``begin_episode`` advances every process by one OU step; ``sample``
    returns the current value of the grid point nearest to an action.
    ``spatial_correlation`` couples the innovations of neighbouring points
    with correlation ``rho ** distance`` (grid units, Chebyshev); 0 gives
    independent processes.
    """

    def __init__(self, points_per_dim=9, n_dims=1, theta=1.0, sigma=1.0, dt=0.5,
                 spatial_correlation=0.0, seed=None, stationary_start=True):
        if points_per_dim < 2:
            raise ValueError("need at least two grid points per dimension")
        if theta <= 0 or dt <= 0:
            raise ValueError("theta and dt must be positive")
        if not 0.0 <= spatial_correlation < 1.0:
            raise ValueError("spatial_correlation must lie in [0, 1)")
        self.points_per_dim = int(points_per_dim)
        self.n_dims = int(n_dims)
        self.theta, self.sigma, self.dt = float(theta), float(sigma), float(dt)
        self.spatial_correlation = float(spatial_correlation)
        self.axis = np.linspace(-1.0, 1.0, self.points_per_dim)
        self.rng = np.random.default_rng(seed)
        self.episode = 0
        idx = np.array(list(itertools.product(range(self.points_per_dim), repeat=self.n_dims)))
        self._index = idx
        self._chol = None
        if self.spatial_correlation > 0:
            dist = np.abs(idx[:, None, :] - idx[None, :, :]).max(axis=2)
            corr = self.spatial_correlation ** dist
            self._chol = np.linalg.cholesky(corr)
        n = self.n_points
        self.state = np.zeros(n)
        if stationary_start:
            self.state = self._innovations() * np.sqrt(self.stationary_variance)

    @property
    def n_points(self) -> int:
        return self.points_per_dim ** self.n_dims

    @property
    def stationary_variance(self) -> float:
        """Exact stationary variance of the discrete recursion."""
        a = 1.0 - self.theta * self.dt
        return self.sigma**2 * self.dt / (1.0 - a * a)

    def cell_correlation(self, i, j) -> float:
        """Stationary correlation between the processes at flat indices i and j."""
        if i == j:
            return 1.0
        dist = np.abs(self._index[i] - self._index[j]).max()
        return self.spatial_correlation ** dist

    def _innovations(self):
        z = self.rng.standard_normal(self.n_points)
        return z if self._chol is None else self._chol @ z

    def begin_episode(self) -> None:
        xi = self._innovations()
        self.state = self.state + self.theta * (0.0 - self.state) * self.dt + self.sigma * np.sqrt(self.dt) * xi
        self.episode += 1

    def cell_index(self, action) -> int:
        action = np.atleast_1d(np.asarray(action, dtype=float))
        if action.size != self.n_dims:
            raise ValueError(f"action has {action.size} components, field has {self.n_dims}")
        if np.any(np.abs(action) > 1.0):
            raise ValueError("action outside [-1, 1]^d")
        step = 2.0 / (self.points_per_dim - 1)
        per_axis = np.rint((action + 1.0) / step).astype(int)
        return int(np.ravel_multi_index(per_axis, (self.points_per_dim,) * self.n_dims))

    def sample(self, action) -> float:
        return float(self.state[self.cell_index(action)])


@dataclass(frozen=True)
class PendulumModel:
    """Linearized cart-pole: theta'' = Z1 theta + Z2 u + Z3 eps, x'' = Z4 theta + Z5 u.

    Defaults correspond to a 1 kg cart, 0.1 kg point mass and 0.5 m pole.
    Reward coefficients are negative so the quadratic acts as a cost.
    """

    Z1: float = 21.58
    Z2: float = -2.0
    Z3: float = 1.0
    Z4: float = -0.981
    Z5: float = 1.0
    alpha_r: float = -1.0
    beta_r: float = -1.0
    dt: float = 0.01

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")


def pendulum_step(state, u, eps, model: PendulumModel, dt=None):
    """One explicit Euler step of (theta, theta_dot, x, x_dot).

    Vectorized: ``state`` may be (4,) or (4, n) and ``eps`` broadcast to n.
    """
    dt = model.dt if dt is None else dt
    th, thd, x, xd = np.asarray(state, dtype=float)
    thdd = model.Z1 * th + model.Z2 * u + model.Z3 * eps
    xdd = model.Z4 * th + model.Z5 * u
    return np.array([th + dt * thd, thd + dt * thdd, x + dt * xd, xd + dt * xdd])


def integrate_pendulum(state, u, eps, model: PendulumModel, duration, n_substeps=None):
    """Euler-integrate over ``duration`` with disturbance held constant."""
    if n_substeps is None:
        n_substeps = max(1, int(np.ceil(duration / model.dt - 1e-9)))
    h = duration / n_substeps
    s = np.asarray(state, dtype=float)
    for _ in range(n_substeps):
        s = pendulum_step(s, u, eps, model, dt=h)
    return s


def pendulum_reward(state, model: PendulumModel):
    th, _, x, _ = np.asarray(state, dtype=float)
    return model.alpha_r * th**2 + model.beta_r * x**2


def batch_means_stderr(values, n_batches=50) -> float:
    """Standard error of the mean robust to serial correlation (batch means)."""
    values = np.asarray(values, dtype=float)
    n_batches = min(n_batches, values.size)
    usable = values.size - values.size % n_batches
    means = values[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


@dataclass(frozen=True)
class CovarianceStudy:
    delta_t: float
    delta_u: float
    mc_cov: float
    predicted_cov: float
    predicted_cov_linearized: float
    stderr: float
    noise_cov: float
    same_cell: bool

    @property
    def ratio(self) -> float:
        return self.mc_cov / self.predicted_cov if self.predicted_cov else float("nan")

    def as_row(self) -> dict:
        return {
            "delta_t": self.delta_t,
            "delta_u": self.delta_u,
            "mc_cov": self.mc_cov,
            "predicted_cov": self.predicted_cov,
            "stderr": self.stderr,
        }


def _disturbance_samples(field_kwargs, u, delta_u, n_episodes, seed):
    field = GridNoiseField(seed=seed, **field_kwargs)
    i, j = field.cell_index(u), field.cell_index(u + delta_u)
    eps = np.empty((2, n_episodes))
    for e in range(n_episodes):
        field.begin_episode()
        eps[0, e] = field.state[i]
        eps[1, e] = field.state[j]
    return field, i, j, eps


def reward_covariance_study(model: PendulumModel, u, delta_u, field_kwargs=None, n_episodes=10_000,
                            delta_t=0.01, start_state=(0.1, 0.0, 0.0, 0.0), n_substeps=100, seed=0,
                            _eps=None):
    """Monte Carlo covariance of the noisy rewards at actions u and u + delta_u.

    Each episode draws the field disturbances at both actions, integrates the
    pendulum from ``start_state`` over ``delta_t`` with each action, and
    records the rewards. The prediction ``(alpha Z3 dt^2)^2 cov(eps, eps')``
    uses the field's exact stationary covariance; the linearized variant
    restores the ``theta`` factor of the first-order expansion.
    """
    if n_episodes < 10_000:
        raise ValueError("need at least 10^4 episodes")
    field_kwargs = dict(field_kwargs or {})
    if _eps is None:
        field, i, j, eps = _disturbance_samples(field_kwargs, u, delta_u, n_episodes, seed)
    else:
        field, i, j, eps = _eps
    if np.var(eps[0]) == 0 or np.var(eps[1]) == 0:
        raise ValueError("degenerate noise field: zero-variance disturbances")
    noise_cov = field.stationary_variance * field.cell_correlation(i, j)

    s0 = np.repeat(np.asarray(start_state, dtype=float)[:, None], n_episodes, axis=1)
    r1 = pendulum_reward(integrate_pendulum(s0, u, eps[0], model, delta_t, n_substeps), model)
    r2 = pendulum_reward(integrate_pendulum(s0, u + delta_u, eps[1], model, delta_t, n_substeps), model)
    prod = (r1 - r1.mean()) * (r2 - r2.mean())
    mc_cov = float(prod.sum() / (n_episodes - 1))
    stderr = batch_means_stderr(prod)

    scale = 2.0 * model.alpha_r * model.Z3 * delta_t**2 / 2.0
    theta_det = integrate_pendulum(np.asarray(start_state, float), u, 0.0, model, delta_t, n_substeps)[0]
    theta_det2 = integrate_pendulum(np.asarray(start_state, float), u + delta_u, 0.0, model, delta_t,
                                    n_substeps)[0]
    return CovarianceStudy(
        delta_t=float(delta_t),
        delta_u=float(delta_u),
        mc_cov=mc_cov,
        predicted_cov=float(scale**2 * noise_cov),
        predicted_cov_linearized=float(scale**2 * theta_det * theta_det2 * noise_cov),
        stderr=stderr,
        noise_cov=float(noise_cov),
        same_cell=i == j,
    )


def covariance_scaling(model: PendulumModel, u, delta_u, delta_ts, field_kwargs=None,
                       n_episodes=10_000, seed=0, **kwargs):
    """Study at each delta_t with common disturbances; returns (studies, log-log slope)."""
    field_kwargs = dict(field_kwargs or {})
    eps = _disturbance_samples(field_kwargs, u, delta_u, n_episodes, seed)
    studies = [
        reward_covariance_study(model, u, delta_u, field_kwargs, n_episodes, dt, seed=seed, _eps=eps, **kwargs)
        for dt in delta_ts
    ]
    covs = np.array([s.mc_cov for s in studies])
    slope = float(np.polyfit(np.log(delta_ts), np.log(np.abs(covs)), 1)[0])
    return studies, slope


def covariance_ladder(model: PendulumModel, u, delta_u, correlations, field_kwargs=None,
                      n_episodes=10_000, delta_t=0.05, seed=0, **kwargs):
    """MC covariance across spatial-correlation settings; returns (studies, Spearman rho)."""
    field_kwargs = dict(field_kwargs or {})
    studies = []
    for rho in correlations:
        kw = dict(field_kwargs, spatial_correlation=rho)
        studies.append(reward_covariance_study(model, u, delta_u, kw, n_episodes, delta_t, seed=seed, **kwargs))
    rank = stats.spearmanr([s.noise_cov for s in studies], [s.mc_cov for s in studies])
    return studies, float(rank.statistic)
