import numpy as np
import pytest

from bhbath.errors import BasisMismatchError
from bhbath.evolution import EnsembleState, TimeGrid, evolve_ensemble, product_ensemble
from bhbath.fock_basis import enumerate_basis
from bhbath.markov_test import bath_invariance_test, contract_bath, factorization_test
from bhbath.operators import ModelParams, build_bath_hamiltonian, build_bath_observable, build_total_hamiltonian
from bhbath.reduced import trace_out_bath
from bhbath.spectra import diagonalize

SPIN = np.array([np.sqrt(0.7), np.sqrt(0.3)])


def setup(eps):
    p = ModelParams(L=4, N=3, epsilon=eps)
    basis = enumerate_basis(3, 4)
    bes = diagonalize(build_bath_hamiltonian(p, basis))
    es = diagonalize(build_total_hamiltonian(p, basis))
    lam = build_bath_observable("a1+a2*a2+a1", basis)
    rho0 = product_ensemble(SPIN, bes.vectors[:, 8:11])
    return es, lam, rho0


def test_contract_bath_oracle(rng):
    basis = enumerate_basis(3, 4)
    lam = build_bath_observable("a1+a2*a2+a1", basis)
    psi = rng.normal(size=40) + 1j * rng.normal(size=40)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj()).reshape(2, 20, 2, 20)
    ref = np.einsum("cb,sbtc->st", lam.to_dense(), rho)
    np.testing.assert_allclose(contract_bath(psi, lam), ref, atol=1e-13)
    with pytest.raises(BasisMismatchError):
        contract_bath(np.ones(12) / np.sqrt(12), lam)


def test_zero_at_t0_and_zero_coupling():
    es, lam, rho0 = setup(0.0)
    rep = factorization_test(evolve_ensemble(es, rho0, TimeGrid(0.0, 5.0, 20)), lam)
    scale = np.abs(rep.lhs).sum(axis=(1, 2)).max()
    assert rep.residual.max() <= 1e-13 * scale
    es, lam, rho0 = setup(0.3)
    rep = factorization_test(evolve_ensemble(es, rho0, TimeGrid(0.0, 5.0, 20)), lam)
    assert rep.residual[0] <= 1e-13 * scale
    assert rep.residual[1:].max() > 1e-6
    assert rep.times[-1] == 100.0


def test_rhs_uses_bath_expectation():
    es, lam, rho0 = setup(0.3)
    st = evolve_ensemble(es, rho0, TimeGrid(0.0, 3.0, 2))[2]
    rep = factorization_test([st], lam)
    np.testing.assert_allclose(rep.rhs[0], np.trace(rep.lhs[0]) * trace_out_bath(st), atol=1e-14)
    assert len(list(rep.rows())) == 1


def test_bath_invariance_zero_coupling():
    es, lam, rho0 = setup(0.0)
    inv = bath_invariance_test(evolve_ensemble(es, rho0, TimeGrid(0.0, 4.0, 10)), lam)
    assert not inv.absolute
    assert inv.deviation.max() < 1e-12


def test_bath_invariance_absolute_mode():
    basis = enumerate_basis(1, 2)
    lam = build_bath_observable("a1+a2*a2+a1", basis)
    st = EnsembleState.pure(np.array([0, 1, 0, 0.0]))
    inv = bath_invariance_test([st, st], lam)
    assert inv.absolute
