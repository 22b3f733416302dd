import numpy as np
import pytest
import scipy.linalg

from bhbath.errors import BasisMismatchError
from bhbath.evolution import (
    EnsembleState,
    TimeGrid,
    evolve,
    evolve_ensemble,
    product_ensemble,
    product_state,
)
from bhbath.fock_basis import enumerate_basis
from bhbath.operators import ModelParams, build_total_hamiltonian
from bhbath.spectra import diagonalize

SPIN = np.array([np.sqrt(0.7), np.sqrt(0.3)])


def test_time_grid():
    g = TimeGrid(0.0, 1.0, 200)
    assert len(g) == 201
    assert g.times[-1] == 200.0
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.0, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)


def test_product_state(small_system):
    basis, h, es, hb, bes = small_system
    psi_b = bes.vectors[:, 3]
    up = product_state([1, 0], psi_b)
    assert np.all(up[basis.dim:] == 0)
    np.testing.assert_allclose(up[:basis.dim], psi_b)
    assert np.linalg.norm(product_state(SPIN, psi_b)) == pytest.approx(1.0, abs=1e-12)
    flat = np.full(basis.dim, 1 / np.sqrt(basis.dim))
    down = product_state([0, 1], flat)
    assert np.all(down[:basis.dim] == 0)
    np.testing.assert_allclose(down[basis.dim:], flat)
    with pytest.raises(BasisMismatchError):
        product_state([1, 0, 0], psi_b)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        EnsembleState(np.array([0.5, 0.4]), np.eye(2))
    with pytest.raises(ValueError):
        EnsembleState(np.array([1.0, 0.0]), np.eye(2))
    e = EnsembleState.uniform(np.eye(3))
    np.testing.assert_allclose(e.density_matrix(), np.eye(3) / 3)


def test_evolve_t0_exact(small_system):
    basis, h, es, hb, bes = small_system
    psi0 = product_state(SPIN, bes.vectors[:, 2])
    out = evolve(es, psi0, TimeGrid(0.0, 0.5, 4))
    assert np.array_equal(out[0], psi0)


def test_evolve_matches_expm_oracle(mid_system):
    """Scaling-and-squaring matrix exponential at composite dim 40."""
    p, basis, h, es, hb, bes = mid_system
    psi0 = product_state(SPIN, bes.vectors[:, 7])
    hd = h.to_dense()
    grid = TimeGrid(0.0, 1.0, 3)
    out = evolve(es, psi0, grid)
    for t, psi in zip(grid.times, out):
        ref = scipy.linalg.expm(-1j * hd * t) @ psi0
        assert np.abs(psi - ref).max() < 1e-9


def test_stationary_without_coupling():
    p = ModelParams(L=3, N=2, epsilon=0.0)
    basis = enumerate_basis(2, 3)
    es = diagonalize(build_total_hamiltonian(p, basis))
    from bhbath.operators import build_bath_hamiltonian

    bath = diagonalize(build_bath_hamiltonian(p, basis)).vectors[:, 4]
    psi0 = product_state([1, 0], bath)
    out = evolve(es, psi0, TimeGrid(0.0, 7.3, 10))
    np.testing.assert_allclose(np.abs(out.conj() @ psi0), 1.0, atol=1e-12)


def test_unitarity_energy_and_group_law(mid_system):
    p, basis, h, es, hb, bes = mid_system
    psi0 = product_state(SPIN, bes.vectors[:, 11])
    grid = TimeGrid(0.0, 2.5, 40)
    out = evolve(es, psi0, grid)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-10)
    hd = h.to_dense()
    energy = np.einsum("ti,ij,tj->t", out.conj(), hd, out).real
    assert np.abs(energy - energy[0]).max() <= 1e-8 * abs(energy[0])
    t1, t2 = 13.0, 29.5
    mid = evolve(es, psi0, TimeGrid(0.0, t1, 1))[1]
    two_step = evolve(es, mid, TimeGrid(0.0, t2, 1))[1]
    direct = evolve(es, psi0, TimeGrid(0.0, t1 + t2, 1))[1]
    assert np.abs(two_step - direct).max() < 1e-8


def test_ensemble_single_member_equals_evolve(mid_system):
    p, basis, h, es, hb, bes = mid_system
    psi0 = product_state(SPIN, bes.vectors[:, 5])
    grid = TimeGrid(0.0, 1.5, 6)
    traj = evolve_ensemble(es, EnsembleState.pure(psi0), grid)
    ref = evolve(es, psi0, grid)
    assert len(traj) == len(grid)
    for k, st in enumerate(traj):
        np.testing.assert_allclose(st.states[:, 0], ref[k], atol=1e-13)
        assert st.weights.tolist() == [1.0]


def test_ensemble_t0_and_purity(mid_system):
    p, basis, h, es, hb, bes = mid_system
    rho0 = product_ensemble(SPIN, bes.vectors[:, [3, 9]])
    traj = evolve_ensemble(es, rho0, TimeGrid(0.0, 3.0, 5))
    np.testing.assert_array_equal(traj[0].states, rho0.states)
    for st in traj:
        # purity oracle from explicit outer products
        rho = sum(w * np.outer(v, v.conj()) for w, v in zip(st.weights, st.states.T))
        assert np.trace(rho @ rho).real == pytest.approx(0.5, abs=1e-12)
    assert len(traj[1:3]) == 2
