"""Bandlimited soft actor-critic laboratory.

Small discrete-state, gridded-action MDPs on which the sinc-filtered target
critic, the Fourier-basis fixed points and the noise analyses can be
computed exactly and cross-checked.
"""
__version__ = "0.1.0"

from .errors import ConvergenceError, DivergenceError, NumericalError, ShapeError, SingularSystemError
from .mdp import (
    DiscreteMdp,
    build_transition_matrix,
    exact_soft_q,
    periodic_grid,
    random_mdp,
    visitation_density,
)
from .policy import SoftPolicy, boltzmann_policy, gaussian_grid_policy, policy_entropy, uniform_policy
from .fourier import FourierFeatures, assemble_features, fourier_basis, project_low
from .sinc_filter import SincFilter, apply_grid, apply_sampled, design_filter, frequency_response
from .fixedpoint import (
    attenuation_report,
    build_coupling,
    decomposition_check,
    make_instance,
    noise_shift,
    solve_bandlimited,
    solve_classic,
    solve_lowres,
)
from .softpi import expected_return, projected_td_iteration, soft_bellman_target, soft_policy_iteration
from .gaussconv import conv_expected_q, gaussian_kernel_gain, mc_expected_q
from .noise import GridNoiseField, OuProcess, PendulumModel, reward_covariance_study

__all__ = [
    "ConvergenceError", "DivergenceError", "NumericalError", "ShapeError", "SingularSystemError",
    "DiscreteMdp", "build_transition_matrix", "exact_soft_q", "periodic_grid", "random_mdp",
    "visitation_density",
    "SoftPolicy", "boltzmann_policy", "gaussian_grid_policy", "policy_entropy", "uniform_policy",
    "FourierFeatures", "assemble_features", "fourier_basis", "project_low",
    "SincFilter", "apply_grid", "apply_sampled", "design_filter", "frequency_response",
    "attenuation_report", "build_coupling", "decomposition_check", "make_instance", "noise_shift",
    "solve_bandlimited", "solve_classic", "solve_lowres",
    "expected_return", "projected_td_iteration", "soft_bellman_target", "soft_policy_iteration",
    "conv_expected_q", "gaussian_kernel_gain", "mc_expected_q",
    "GridNoiseField", "OuProcess", "PendulumModel", "reward_covariance_study",
]
