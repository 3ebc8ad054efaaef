import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import root

from blsac.errors import SingularSystemError
from blsac.fixedpoint import (
    attenuation_report,
    build_coupling,
    decomposition_check,
    make_instance,
    noise_shift,
    projected_bellman_residual,
    soft_reward_coefficients,
    solve_all,
    solve_bandlimited,
    solve_classic,
    solve_lowres,
)
from blsac.fourier import assemble_features, fourier_basis
from blsac.mdp import exact_soft_q, random_mdp
from blsac.policy import SoftPolicy, boltzmann_policy, uniform_policy

from conftest import build_instance


def dense_parts(inst):
    f = inst.features
    return f.matrix, np.diag(inst.density), inst.P, inst.policy.omega_vector()


def test_uniform_policy_decouples():
    inst = build_instance(0, n_states=3, policy="uniform")
    assert np.max(np.abs(inst.coupling.v_lh)) <= 1e-12


def test_gamma_zero_u_vanishes():
    inst = build_instance(1, gamma=0.0)
    assert np.all(inst.coupling.U == 0.0)
    assert np.array_equal(inst.coupling.delta, inst.coupling.V)


@pytest.mark.parametrize("seed", range(5))
def test_v_symmetric_psd_and_delta_pd(seed):
    inst = build_instance(seed, n_states=3, gamma=0.99)
    V = inst.coupling.V
    assert np.allclose(V, V.T, atol=1e-15)
    assert np.linalg.eigvalsh(V).min() >= -1e-14
    assert inst.coupling.is_positive_definite()


def test_blocks_shapes():
    inst = build_instance(2, n_states=2, k_low=5)
    ll, lh, hl, hh = inst.coupling.delta_blocks
    assert ll.shape == (10, 10) and lh.shape == (10, 6) and hl.shape == (6, 10) and hh.shape == (6, 6)


def test_singular_delta_reported():
    inst = build_instance(3)
    f = inst.features
    with pytest.raises(SingularSystemError) as info:
        build_coupling(f, np.zeros(f.matrix.shape[0]), inst.P, 0.9)
    assert info.value.condition_number > 1e12 or not np.isfinite(info.value.condition_number)


def test_soft_rewards_zero_cases():
    rng = np.random.default_rng(0)
    mdp = random_mdp(2, 8, 0.9, rng).with_rewards(np.zeros(16))
    greedy = SoftPolicy(np.eye(8)[[2, 5]], temperature=1.0)
    inst = make_instance(mdp, greedy, assemble_features(fourier_basis(8), 2, 3))
    assert np.all(inst.soft_rewards.full == 0.0)
    hot = build_instance(4, temperature=0.0)
    Phi, N, P, _ = dense_parts(hot)
    assert np.allclose(hot.soft_rewards.full, Phi.T @ N @ hot.mdp.rewards, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_soft_rewards_dense_oracle(seed):
    inst = build_instance(seed, temperature=0.5)
    Phi, N, P, Om = dense_parts(inst)
    oracle = Phi.T @ N @ inst.mdp.rewards - inst.mdp.gamma * Phi.T @ N @ P @ Om
    sr = soft_reward_coefficients(inst.features, N, P, inst.mdp.rewards, Om, inst.mdp.gamma)
    assert np.max(np.abs(sr.full - oracle)) <= 1e-12
    assert sr.low.size == inst.features.n_low


@pytest.mark.parametrize("seed", range(5))
def test_classic_complete_basis_matches_exact(seed):
    inst = build_instance(seed, n_states=3, gamma=0.99)
    sol = solve_classic(inst)
    q = exact_soft_q(inst.mdp, inst.policy)
    assert np.max(np.abs(sol.q - q)) <= 1e-8 * np.max(np.abs(q))
    assert sol.block_agreement <= 1e-9
    assert sol.residual <= 1e-9


def test_classic_low_band_rewards_uniform_policy():
    rng = np.random.default_rng(9)
    f = assemble_features(fourier_basis(8), 2, 3)
    mdp = random_mdp(2, 8, 0.9, rng)
    mdp = mdp.with_rewards(f.phi_low @ rng.normal(size=f.n_low))
    inst = make_instance(mdp, uniform_policy(2, 8, 1.0), f)
    Phi, N, P, Om = dense_parts(inst)
    A = Phi.T @ N @ (Phi - mdp.gamma * P @ Phi)
    b = Phi.T @ N @ (mdp.rewards - mdp.gamma * P @ Om)
    oracle = np.linalg.solve(A, b)
    sol = solve_classic(inst)
    assert np.max(np.abs(sol.omega - oracle)) <= 1e-10
    # P annihilates the high columns under a uniform policy: the target carries no high content
    assert np.max(np.abs(inst.P @ f.phi_high)) <= 1e-14


def test_classic_gamma_zero_is_projection():
    f = assemble_features(fourier_basis(8, 5), 2, 3)
    mdp = random_mdp(2, 8, 0.0, rng=3)
    inst = make_instance(mdp, uniform_policy(2, 8), f, density=np.full(16, 1 / 16))
    sol = solve_classic(inst)
    Phi = f.matrix
    assert np.allclose(sol.q, Phi @ (Phi.T @ mdp.rewards), atol=1e-12)


def eq_c9_oracle(inst):
    """Solve the bandlimited projected equation with a generic root finder."""
    Phi, N, P, Om = dense_parts(inst)
    PhiL = inst.features.phi_low
    nl = inst.features.n_low
    r, g = inst.mdp.rewards, inst.mdp.gamma

    def residual(w):
        return Phi.T @ N @ (r + g * P @ (PhiL @ w[:nl] - Om) - Phi @ w)

    # success flags are unreliable at tight tolerances; callers check the residual
    sol = root(residual, np.zeros(Phi.shape[1]), method="hybr", tol=1e-13)
    return sol.x, residual


@pytest.mark.parametrize("seed", range(4))
def test_bandlimited_matches_root_finder(seed):
    inst = build_instance(seed, n_states=2, k_low=5)
    sol = solve_bandlimited(inst)
    oracle, residual = eq_c9_oracle(inst)
    assert np.linalg.norm(residual(sol.omega)) <= 1e-9
    assert np.linalg.norm(residual(oracle)) <= 1e-9
    assert np.max(np.abs(sol.omega - oracle)) <= 1e-8
    assert sol.block_agreement <= 1e-9


def test_bandlimited_uniform_equals_lowres():
    inst = build_instance(5, n_states=3, policy="uniform")
    bl, lr = solve_bandlimited(inst), solve_lowres(inst)
    assert np.max(np.abs(bl.omega_low - lr.omega_low)) <= 1e-9


@pytest.mark.parametrize("solver", [solve_classic, solve_bandlimited, solve_lowres])
def test_zero_problem_zero_solution(solver):
    rng = np.random.default_rng(0)
    mdp = random_mdp(2, 8, 0.9, rng).with_rewards(np.zeros(16))
    pol = SoftPolicy(np.eye(8)[[1, 6]])
    inst = make_instance(mdp, pol, assemble_features(fourier_basis(8), 2, 3))
    sol = solver(inst)
    assert np.all(sol.omega == 0.0)


@pytest.mark.parametrize("seed", range(4))
def test_lowres_equals_truncated_classic(seed):
    inst = build_instance(seed, n_states=3)
    trunc = make_instance(inst.mdp, inst.policy, inst.features.truncated(), density=inst.density)
    assert np.max(np.abs(solve_lowres(inst).omega_low - solve_classic(trunc).omega)) <= 1e-10
    assert solve_lowres(inst).residual <= 1e-9


@pytest.mark.parametrize("temperature,policy", [(1.0, "uniform"), (1.0, "random"), (0.05, "random")])
def test_decomposition_identity(temperature, policy):
    inst = build_instance(11, n_states=3, temperature=temperature, policy=policy)
    sols = solve_all(inst)
    report = decomposition_check(sols["bandlimited"], sols["lowres"], inst.coupling)
    assert report.holds and report.error <= 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), pair=st.integers(0, 3), alpha=st.floats(0.05, 5.0))
def test_solution_residuals_vanish(seed, pair, alpha):
    inst = build_instance(seed, n_states=2, k_low=1 + 2 * pair, temperature=alpha)
    for name, sol in solve_all(inst).items():
        assert sol.residual <= 1e-9, name
        direct = projected_bellman_residual(inst, sol.omega_low, sol.omega_high, name)
        assert np.linalg.norm(direct) <= 1e-9


def test_noise_shift_zero():
    inst = build_instance(6)
    for variant in ("classic", "bandlimited"):
        shift = noise_shift(inst, np.zeros(inst.mdp.size), variant)
        assert np.all(shift.low == 0) and np.all(shift.high == 0)
    with pytest.raises(ValueError):
        noise_shift(inst, np.zeros(inst.mdp.size), "lowres")


def test_noise_shift_low_band_uniform():
    inst = build_instance(7, n_states=2, policy="uniform")
    f = inst.features
    eps_r = f.phi_low @ np.random.default_rng(0).normal(size=f.n_low)
    shift = noise_shift(inst, eps_r, "bandlimited")
    eps_l = f.phi_low.T @ (inst.density * eps_r)
    assert np.max(np.abs(shift.low - np.linalg.solve(inst.coupling.delta_ll, eps_l))) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_noise_shift_closed_forms(seed):
    inst = build_instance(seed, n_states=3, temperature=0.3)
    eps_r = np.random.default_rng(seed).normal(scale=0.1, size=inst.mdp.size)
    for variant in ("classic", "bandlimited"):
        assert noise_shift(inst, eps_r, variant).closed_form_error <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_noise_shift_high_band_near_uniform(seed):
    inst = build_instance(seed, n_states=2, temperature=20.0)
    f = inst.features
    eps_r = f.phi_high @ np.random.default_rng(100 + seed).normal(scale=0.1, size=f.n_high)
    bl = noise_shift(inst, eps_r, "bandlimited")
    cl = noise_shift(inst, eps_r, "classic")
    assert bl.low_norm <= cl.low_norm


def test_attenuation_uniform_policy():
    inst = build_instance(8, n_states=3, policy="uniform")
    rep = attenuation_report(inst.coupling)
    assert rep["V_LH_fro"] <= 1e-12
    # an exactly uniform policy also annihilates U_LH, so Delta_LH vanishes too
    assert rep["Delta_LH_fro"] <= 1e-12


def test_attenuation_gamma_zero_boundary():
    rep = attenuation_report(build_instance(9, gamma=0.0).coupling)
    assert rep["V_LH_fro"] == rep["Delta_LH_fro"]
    assert not rep["inequality_fro"] and not rep["inequality_spectral"]


def test_attenuation_temperature_sweep_reported():
    rng = np.random.default_rng(4)
    mdp = random_mdp(2, 8, 0.9, rng)
    f = assemble_features(fourier_basis(8), 2, 3)
    logits = rng.normal(size=16)
    norms = []
    for alpha in (1e3, 10.0, 1.0, 0.1):
        inst = make_instance(mdp, boltzmann_policy(logits, alpha, mdp), f)
        rep = attenuation_report(inst.coupling)
        assert set(rep) >= {"V_LH_spectral", "Delta_LH_spectral", "Gamma_LH_fro", "inequality_fro"}
        assert rep["Gamma_LH_fro"] == pytest.approx(
            np.linalg.norm(np.linalg.solve(inst.coupling.delta_ll, inst.coupling.v_lh)), rel=1e-10)
        norms.append(rep["V_LH_fro"])
    # for a fixed logit vector the coupling grows as the policy sharpens from uniform
    assert norms[0] < norms[1]


@pytest.mark.parametrize("seed", range(3))
def test_high_band_noise_lands_in_high_coefficients(seed):
    # eps_r = Phi_H e gives eps_L = V_LH e and eps_H = V_HH e, so
    # (dw_L, dw_H) = (0, e) solves the bandlimited shift equations exactly
    inst = build_instance(seed, n_states=2, temperature=0.5)
    f = inst.features
    e = np.random.default_rng(seed).normal(size=f.n_high)
    shift = noise_shift(inst, f.phi_high @ e, "bandlimited")
    assert np.max(np.abs(shift.low)) <= 1e-10
    assert np.max(np.abs(shift.high - e)) <= 1e-10
    assert noise_shift(inst, f.phi_high @ e, "classic").low_norm > 1e-6
