import numpy as np
import pytest

from blsac.fixedpoint import make_instance
from blsac.fourier import assemble_features, fourier_basis
from blsac.mdp import random_mdp
from blsac.policy import boltzmann_policy, uniform_policy

ACCEPTANCE_LINES = []


def record(criterion, passed, detail=""):
    """Register one acceptance line; printed in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def build_instance(seed, n_states=2, n_actions=8, k=None, k_low=3, gamma=0.9, temperature=1.0,
                   policy="random", mixing=1e-3):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(n_states, n_actions, gamma, rng)
    if policy == "uniform":
        pol = uniform_policy(n_states, n_actions, temperature)
    else:
        pol = boltzmann_policy(rng.standard_normal(mdp.size), temperature, mdp)
    feats = assemble_features(fourier_basis(n_actions, k), n_states, k_low)
    return make_instance(mdp, pol, feats, mixing=mixing)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_instance():
    return build_instance(3)
