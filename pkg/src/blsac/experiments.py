"""Experiment drivers used by the command line runner.

Each driver takes a resolved parameter dict and returns either a list of
row dicts (tabular output) or a nested dict (summary output). Drivers are
deterministic functions of their parameters, including the seed.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .fixedpoint import (
    attenuation_report,
    decomposition_check,
    make_instance,
    noise_shift,
    solve_all,
)
from .fourier import assemble_features, fourier_basis
from .gaussconv import conv_expected_q, gaussian_kernel_gain, mc_expected_q
from .mdp import DiscreteMdp, exact_soft_q, periodic_grid, random_mdp
from .noise import PendulumModel, reward_covariance_study
from .policy import boltzmann_policy, uniform_policy
from .sinc_filter import design_filter, frequency_response
from .softpi import soft_policy_iteration

__all__ = [
    "EXPERIMENTS",
    "pmap",
    "soft_optimal_policy",
    "instance_policy",
    "bandit_mdp",
    "spike_rewards",
    "noise_family",
]


def pmap(func, items, workers=1):
    """Map in input order, optionally over a bounded process pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def soft_optimal_policy(mdp, temperature, iterations=500, tol=1e-13):
    """Fixed point of soft policy iteration at the given temperature."""
    pol = uniform_policy(mdp.n_states, mdp.n_actions, temperature)
    for _ in range(iterations):
        new = boltzmann_policy(exact_soft_q(mdp, pol), temperature, mdp)
        done = np.max(np.abs(new.probs - pol.probs)) < tol
        pol = new
        if done:
            break
    return pol


def instance_policy(kind, mdp, temperature, rng):
    if kind == "uniform":
        return uniform_policy(mdp.n_states, mdp.n_actions, temperature)
    if kind == "random":
        return boltzmann_policy(rng.standard_normal(mdp.size), temperature, mdp)
    if kind == "soft-optimal":
        return soft_optimal_policy(mdp, temperature)
    raise ValueError(f"unknown policy kind {kind!r}")


def _features(p):
    basis = fourier_basis(p["n_actions"], p["k"] or p["n_actions"])
    return assemble_features(basis, p["n_states"], p["k_low"])


def solve_fixedpoint(p):
    rng = np.random.default_rng(p["seed"])
    mdp = random_mdp(p["n_states"], p["n_actions"], p["gamma"], rng)
    pol = instance_policy(p["policy"], mdp, p["alpha"], rng)
    feats = _features(p)
    inst = make_instance(mdp, pol, feats, mixing=p["mixing"])
    sols = solve_all(inst)
    dec = decomposition_check(sols["bandlimited"], sols["lowres"], inst.coupling)
    out = {
        "seed": p["seed"],
        "alpha": p["alpha"],
        "gamma": p["gamma"],
        "k_low": p["k_low"],
        "norms": attenuation_report(inst.coupling),
        "delta_positive_definite": inst.coupling.is_positive_definite(),
        "delta_ll_condition": inst.coupling.delta_ll_cond,
        "decomposition_error": dec.error,
        "solutions": {k: s.to_dict() for k, s in sols.items()},
    }
    if feats.k == mdp.n_actions:
        q = exact_soft_q(mdp, pol)
        out["classic_vs_exact_relative_error"] = float(
            np.linalg.norm(sols["classic"].q - q) / np.linalg.norm(q)
        )
    return out


def _sweep_item(args):
    p, alpha = args
    mdp = random_mdp(p["n_states"], p["n_actions"], p["gamma"], np.random.default_rng(p["seed"]))
    pol = soft_optimal_policy(mdp, alpha)
    inst = make_instance(mdp, pol, _features(p), mixing=p["mixing"])
    rep = attenuation_report(inst.coupling)
    return {
        "alpha": alpha,
        "V_LH_fro": rep["V_LH_fro"],
        "Delta_LH_fro": rep["Delta_LH_fro"],
        "Gamma_LH_fro": rep["Gamma_LH_fro"],
        "V_LH_spectral": rep["V_LH_spectral"],
        "Delta_LH_spectral": rep["Delta_LH_spectral"],
        "Gamma_LH_spectral": rep["Gamma_LH_spectral"],
        "inequality_fro": rep["inequality_fro"],
        "inequality_spectral": rep["inequality_spectral"],
    }


def decoupling_sweep(p):
    return pmap(_sweep_item, [(p, a) for a in p["alphas"]], p["workers"])


def filter_response(p):
    filt = design_filter(p["sigma"], p["k"])
    resp = frequency_response(filt, p["n_actions"])
    order = np.argsort(resp.w, kind="stable")
    keep = [i for i in order if resp.w[i] >= 0]
    return [{"w": float(resp.w[i]), "gain": float(resp.gain[i])} for i in keep]


def bandit_mdp(rewards, gamma=0.9):
    rewards = np.asarray(rewards, dtype=float)
    M = rewards.size
    return DiscreteMdp(1, periodic_grid(M), rewards, np.ones((1, M, 1)), gamma)


def spike_rewards(n_actions, hill_center=-0.4, hill_width=0.35, spike_at=0.5, spike_height=1.5):
    """Broad Gaussian hill plus a one-cell spike taller than the hill."""
    a = periodic_grid(n_actions)
    r = np.exp(-0.5 * ((a - hill_center) / hill_width) ** 2)
    r[int(np.argmin(np.abs(a - spike_at)))] += spike_height
    return r


def tabular_sac(p):
    M = p["n_actions"]
    if p["env"] == "bandit-cos":
        mdp = bandit_mdp(np.cos(np.pi * periodic_grid(M)), p["gamma"])
    elif p["env"] == "bandit-spike":
        mdp = bandit_mdp(spike_rewards(M), p["gamma"])
    else:
        mdp = random_mdp(p["n_states"], M, p["gamma"], np.random.default_rng(p["seed"]))
    feats = assemble_features(fourier_basis(M), mdp.n_states, p["k_low"])
    filt = design_filter(p["sigma"], p["k"]) if p["variant"] == "sinc" else None
    res = soft_policy_iteration(mdp, p["alpha"], p["variant"], features=feats, filt=filt,
                                evaluation_budget=p["evaluation_budget"] or None,
                                outer_iterations=p["outer_iterations"])
    greedy = res.greedy_actions(mdp)
    return [
        {"iteration": i, "residual": r, "return": g, "greedy_action_state0": float(greedy[0])}
        for i, (r, g) in enumerate(zip(res.residuals, res.returns))
    ]


def gauss_conv(p):
    sigma, M = p["sigma"], p["n_actions"]
    grid = periodic_grid(M)
    rows = []
    for f in range(0, p["max_freq"] + 1):
        w = np.pi * f
        quad = conv_expected_q(np.cos(w * grid), 0.0, sigma)
        mc = mc_expected_q(lambda a, w=w: np.cos(w * a), 0.0, sigma, p["mc_samples"], seed=p["seed"] + f)
        rows.append({
            "w": w,
            "w_over_cutoff": w * 2.0 * sigma / np.pi,
            "analytic_gain": float(gaussian_kernel_gain(sigma, w)),
            "measured_quadrature": quad,
            "measured_mc": mc.mean,
            "mc_stderr": mc.stderr,
        })
    return rows


def noise_family(n_instances, seed, n_states=2, n_actions=16, k_low=5, temperature=20.0,
                 gamma=0.9, mixing=1e-3):
    """Fixed family of instances with near-uniform (high-temperature) policies."""
    children = np.random.SeedSequence(seed).spawn(n_instances)
    insts = []
    for child in children:
        rng = np.random.default_rng(child)
        mdp = random_mdp(n_states, n_actions, gamma, rng)
        pol = boltzmann_policy(rng.standard_normal(mdp.size), temperature, mdp)
        feats = assemble_features(fourier_basis(n_actions), n_states, k_low)
        insts.append(make_instance(mdp, pol, feats, mixing=mixing))
    return insts


def _noise_item(args):
    p, noise_seed = args
    insts = noise_family(p["instances"], p["seed"], p["n_states"], p["n_actions"], p["k_low"],
                         p["temperature"], p["gamma"], p["mixing"])
    rng = np.random.default_rng(noise_seed)
    variants = ["classic", "bandlimited"] if p["variant"] == "both" else [p["variant"]]
    out = {v: [] for v in variants}
    for inst in insts:
        e = rng.normal(0.0, p["noise_scale"], inst.features.n_high)
        eps_r = inst.features.phi_high @ e
        for v in variants:
            out[v].append(noise_shift(inst, eps_r, v).low_norm)
    return out


def noise_study(p):
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(p["seed"] + 1).spawn(p["seeds"])]
    per_seed = pmap(_noise_item, [(p, s) for s in seeds], p["workers"])
    variants = list(per_seed[0])
    summary = {"per_seed": [{"noise_seed": s, **r} for s, r in zip(seeds, per_seed)], "median": {}}
    for v in variants:
        summary["median"][v] = float(np.median(np.concatenate([r[v] for r in per_seed])))
    if len(variants) == 2:
        summary["ratio_bandlimited_over_classic"] = summary["median"]["bandlimited"] / summary["median"]["classic"]
    return summary


def _pendulum_item(args):
    p, dt, du = args
    model = PendulumModel()
    field = {"points_per_dim": p["grid_points"], "theta": p["field_theta"], "sigma": p["field_sigma"],
             "dt": p["field_dt"], "spatial_correlation": p["spatial_correlation"]}
    return reward_covariance_study(model, p["u"], du, field, p["episodes"], dt, seed=p["seed"]).as_row()


def pendulum_cov(p):
    items = [(p, dt, du) for dt in p["delta_ts"] for du in p["delta_us"]]
    return pmap(_pendulum_item, items, p["workers"])


EXPERIMENTS = {
    "solve-fixedpoint": solve_fixedpoint,
    "decoupling-sweep": decoupling_sweep,
    "filter-response": filter_response,
    "tabular-sac": tabular_sac,
    "gauss-conv": gauss_conv,
    "noise-study": noise_study,
    "pendulum-cov": pendulum_cov,
}
