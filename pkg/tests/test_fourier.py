import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blsac.errors import ShapeError
from blsac.fourier import (
    assemble_features,
    basis_frequencies,
    fourier_basis,
    project_high,
    project_low,
    split_for_cutoff,
)
from blsac.mdp import periodic_grid


def test_constant_column():
    phi = fourier_basis(8, 1)
    assert phi.shape == (8, 1)
    assert np.allclose(phi, 1 / np.sqrt(8), atol=1e-15)


@pytest.mark.parametrize("M", [1, 2, 3, 7, 8, 16])
def test_complete_basis(M):
    phi = fourier_basis(M)
    assert np.allclose(phi.T @ phi, np.eye(M), atol=1e-12)
    assert np.allclose(phi @ phi.T, np.eye(M), atol=1e-12)


def test_cos1_column_orthogonal_to_others():
    phi = fourier_basis(8)
    gram = phi.T @ phi
    off = np.delete(gram[1], 1)
    assert np.max(np.abs(off)) <= 1e-12
    a = periodic_grid(8)
    assert np.allclose(phi[:, 1], np.cos(np.pi * a) / 2, atol=1e-15)


def test_frequency_order():
    assert list(basis_frequencies(8, 8)) == [0, 1, 1, 2, 2, 3, 3, 4]
    assert list(basis_frequencies(7, 7)) == [0, 1, 1, 2, 2, 3, 3]
    for M in range(1, 20):
        assert np.all(np.diff(basis_frequencies(M, M)) >= 0)


def test_basis_rejects_oversize():
    with pytest.raises(ValueError):
        fourier_basis(4, 5)
    with pytest.raises(ValueError):
        fourier_basis(4, 0)


def test_single_state_features_equal_basis():
    phi = fourier_basis(8, 5)
    f = assemble_features(phi, 1, 3)
    assert np.array_equal(f.matrix, phi)


def test_two_state_block_structure():
    M = 8
    f = assemble_features(fourier_basis(M, 4), 2, 1)
    assert f.matrix.shape == (2 * M, 8)
    assert np.all(f.phi_low[:M, 1:] == 0) and np.all(f.phi_low[M:, :1] == 0)
    assert np.all(f.phi_high[:M, 3:] == 0) and np.all(f.phi_high[M:, :3] == 0)


@pytest.mark.parametrize("n_states,k,k_low", [(1, 8, 3), (3, 5, 1), (4, 7, 5), (2, 8, 8)])
def test_features_orthonormal(n_states, k, k_low):
    f = assemble_features(fourier_basis(8, k), n_states, k_low)
    assert np.allclose(f.matrix.T @ f.matrix, np.eye(n_states * k), atol=1e-12)
    if f.n_high:
        assert np.max(np.abs(f.phi_low.T @ f.phi_high)) <= 1e-12


def test_split_must_respect_pairs():
    with pytest.raises(ValueError):
        assemble_features(fourier_basis(8), 2, 2)
    with pytest.raises(ValueError):
        assemble_features(fourier_basis(8), 2, 0)
    assert assemble_features(fourier_basis(8), 2, 8).k_high == 0


def test_projector_examples():
    f = assemble_features(fourier_basis(8), 2, 3)
    rng = np.random.default_rng(0)
    inside = f.phi_low @ rng.normal(size=f.n_low)
    assert np.max(np.abs(project_low(inside, f) - inside)) <= 1e-12
    high_col = f.phi_high[:, 2]
    assert np.max(np.abs(project_low(high_col, f))) <= 1e-12
    q = rng.normal(size=16)
    p = project_low(q, f)
    assert np.linalg.norm(project_low(p, f) - p) <= 1e-12
    with pytest.raises(ShapeError):
        project_low(np.zeros(5), f)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 4), pair=st.integers(0, 3))
def test_parseval_reconstruction(seed, n, pair):
    f = assemble_features(fourier_basis(8), n, 1 + 2 * pair)
    q = np.random.default_rng(seed).normal(size=8 * n)
    assert np.max(np.abs(project_low(q, f) + project_high(q, f) - q)) <= 1e-10


def test_split_for_cutoff():
    # frequency f sits at pi*f rad/unit
    assert split_for_cutoff(np.pi, 16) == 1
    assert split_for_cutoff(np.pi * 1.5, 16) == 3
    assert split_for_cutoff(np.pi * 3.01, 16) == 7
    assert split_for_cutoff(100.0, 8) == 8
    assert split_for_cutoff(0.1, 8) == 1


def test_truncated_features():
    f = assemble_features(fourier_basis(8), 2, 3).truncated()
    assert f.k == 3 and f.k_high == 0
