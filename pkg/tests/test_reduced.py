import numpy as np
import pytest

from bhbath.errors import DimensionCapError
from bhbath.evolution import EnsembleState, TimeGrid, evolve, product_ensemble, product_state
from bhbath.reduced import (
    bath_eigenstate_expansion,
    entanglement_G,
    entropy,
    schmidt_decomposition,
    spectral_decomposition,
    trace_out_bath,
    trace_out_system,
)

SPIN = np.array([np.sqrt(0.7), np.sqrt(0.3)])


def full_rho(ens):
    return sum(w * np.outer(v, v.conj()) for w, v in zip(ens.weights, ens.states.T))


def traces_oracle(rho, db):
    r = rho.reshape(2, db, 2, db)
    return np.einsum("sbtb->st", r), np.einsum("sbsc->bc", r)


def g_oracle(rho, db):
    rs, rb = traces_oracle(rho, db)
    return np.abs(rho - np.kron(rs, rb)).sum() / np.abs(rho).sum()


def random_ensemble(rng, dim, members):
    s = rng.normal(size=(dim, members)) + 1j * rng.normal(size=(dim, members))
    s /= np.linalg.norm(s, axis=0)
    w = rng.random(members) + 0.1
    return EnsembleState(w / w.sum(), s)


def test_partial_traces_match_dense_oracle(rng):
    ens = random_ensemble(rng, 24, 3)
    rs, rb = traces_oracle(full_rho(ens), 12)
    np.testing.assert_allclose(trace_out_bath(ens), rs, atol=1e-14)
    np.testing.assert_allclose(trace_out_system(ens), rb, atol=1e-14)
    assert np.trace(trace_out_bath(ens)).real == pytest.approx(1.0, abs=1e-12)
    assert np.trace(trace_out_system(ens)).real == pytest.approx(1.0, abs=1e-12)


def test_G_matches_dense_oracle(rng):
    ens = random_ensemble(rng, 16, 2)
    assert entanglement_G(ens) == pytest.approx(g_oracle(full_rho(ens), 8), rel=1e-12)


def test_G_zero_for_product_states(small_system):
    basis, h, es, hb, bes = small_system
    assert entanglement_G(product_state(SPIN, bes.vectors[:, 1])) < 1e-15
    mixed = product_ensemble(SPIN, bes.vectors[:, :3])
    assert entanglement_G(mixed) < 1e-15


def test_G_bell_like():
    # (|up,b0> + |down,b1>)/sqrt2 with orthogonal bath states b0, b1
    psi = np.zeros(4)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    assert entanglement_G(psi) == pytest.approx(g_oracle(np.outer(psi, psi), 2))
    assert entanglement_G(psi) > 0.5


def test_G_cap():
    with pytest.raises(DimensionCapError):
        entanglement_G(np.ones(10) / np.sqrt(10), cap=8)


def test_schmidt_spectra_and_entropy(mid_system):
    p, basis, h, es, hb, bes = mid_system
    psi0 = product_state(SPIN, bes.vectors[:, 6])
    for k, psi in enumerate(evolve(es, psi0, TimeGrid(0.0, 5.0, 8))):
        sys_sd, bath_sd = schmidt_decomposition(psi)
        ws = spectral_decomposition(trace_out_bath(psi)).weights
        wb = spectral_decomposition(trace_out_system(psi)).weights
        np.testing.assert_allclose(wb[:2], ws, atol=1e-9)
        assert np.all(np.abs(wb[2:]) < 1e-9)
        np.testing.assert_allclose(sys_sd.weights, ws, atol=1e-12)
        assert abs(entropy(ws) - entropy(wb)) < 1e-9
        if k == 0:
            assert entropy(ws) < 1e-12
    # Schmidt vectors reproduce the state
    recon = sys_sd.states @ np.diag(np.sqrt(sys_sd.weights)) @ bath_sd.states.T
    rho_b = trace_out_system(psi)
    np.testing.assert_allclose(rho_b @ bath_sd.states, bath_sd.states * bath_sd.weights, atol=1e-12)
    np.testing.assert_allclose(recon.ravel(), psi, atol=1e-12)


def test_entropy_values():
    assert entropy([1.0, 0.0]) == 0.0
    assert entropy([0.5, 0.5]) == pytest.approx(np.log(2))
    with pytest.raises(ValueError):
        entropy([1.1, -0.1])
    assert entropy([1.0 + 1e-12, -1e-12]) == pytest.approx(0.0, abs=1e-10)


def test_spectral_decomposition_order():
    sd = spectral_decomposition(np.diag([0.2, 0.5, 0.3]), rank=2)
    np.testing.assert_allclose(sd.weights, [0.5, 0.3])
    assert sd.states.shape == (3, 2)


def test_bath_eigenstate_expansion(mid_system):
    p, basis, h, es, hb, bes = mid_system
    rho_b = 0.6 * np.outer(bes.vectors[:, 3], bes.vectors[:, 3]) + 0.4 * np.outer(bes.vectors[:, 8], bes.vectors[:, 8])
    sd = bath_eigenstate_expansion(rho_b, bes)
    np.testing.assert_allclose(sd.weights, [0.6, 0.4], atol=1e-12)
    np.testing.assert_allclose((np.abs(sd.coefficients) ** 2).sum(axis=0), 1.0, atol=1e-12)
    assert abs(sd.coefficients[3, 0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(sd.coefficients[8, 1]) == pytest.approx(1.0, abs=1e-12)
