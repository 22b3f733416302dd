import numpy as np
import pytest

from bhbath.cache import EigenCache, cache_key, spot_check
from bhbath.errors import DimensionCapError
from bhbath.fock_basis import enumerate_basis
from bhbath.operators import ModelParams, SparseOperator, build_bath_hamiltonian, build_total_hamiltonian
from bhbath.spectra import (
    EigenSystem,
    density_of_states,
    diagonalize,
    eigenvalues,
    select_by_energy,
    select_window,
)


def _es(energies):
    e = np.asarray(energies, float)
    return EigenSystem(e, np.eye(e.size))


def test_diagonal_operator():
    es = diagonalize(SparseOperator(2, [0, 1], [0, 1], [0.5, -0.5], "system"))
    np.testing.assert_allclose(es.energies, [-0.5, 0.5])


def test_two_site_closed_form():
    p = ModelParams(L=2, N=1)
    es = diagonalize(build_bath_hamiltonian(p, enumerate_basis(1, 2)))
    np.testing.assert_allclose(es.energies, [-0.5, 0.5], atol=1e-15)


def test_cap():
    op = SparseOperator(10, np.arange(10), np.arange(10), np.ones(10))
    with pytest.raises(DimensionCapError, match="iterative"):
        diagonalize(op, cap=5)
    with pytest.raises(DimensionCapError):
        eigenvalues(op, cap=5)


def test_invariants_mid_system(mid_system):
    p, basis, h, es, hb, bes = mid_system
    hd = h.to_dense().real
    scale = np.abs(hd).max()
    v = es.vectors
    assert np.abs(v.T @ v - np.eye(h.dim)).max() < 1e-10
    assert np.abs(hd @ v - v * es.energies).max() < 1e-8 * scale
    assert np.abs(v @ np.diag(es.energies) @ v.T - hd).max() < 1e-8 * scale
    assert es.energies.sum() == pytest.approx(np.trace(hd), rel=1e-8, abs=1e-10)
    assert np.all(np.diff(es.energies) >= 0)
    np.testing.assert_allclose(eigenvalues(h), es.energies, atol=1e-12)


def test_direct_sum_spectrum_at_zero_coupling():
    p = ModelParams(L=4, N=3, epsilon=0.0, delta=0.5)
    basis = enumerate_basis(3, 4)
    eb = diagonalize(build_bath_hamiltonian(p, basis)).energies
    e = diagonalize(build_total_hamiltonian(p, basis)).energies
    expected = np.sort(np.concatenate([eb + p.delta, eb - p.delta]))
    assert np.abs(e - expected).max() < 1e-10


def test_select_by_energy():
    es = _es([-1, 0, 1])
    assert select_by_energy(es, 0.1).index == 1
    assert select_by_energy(_es([0, 0]), 0.0).index == 0


def test_select_window():
    es = _es([-1, 0, 1])
    assert select_window(es, 10, 11) == []
    assert [p.index for p in select_window(es, -2, 2)] == [0, 1, 2]
    with pytest.raises(ValueError):
        select_window(es, 1, 0)


def test_density_of_states():
    w, _ = density_of_states(np.array([3.0]), 1)
    assert w.tolist() == [1.0]
    w, _ = density_of_states(np.linspace(0, 1, 10000, endpoint=False), 10)
    np.testing.assert_allclose(w, 0.1, atol=1e-3)
    with pytest.raises(ValueError):
        density_of_states(np.zeros(3), 0)


def test_cache_roundtrip_and_corruption(tmp_path, small_system, caplog):
    basis, h, es, hb, bes = small_system
    cache = EigenCache(tmp_path)
    params = {"N": 2, "L": 3}
    first = cache.get_or_compute("total", params, h)
    assert (cache.hits, cache.misses) == (0, 1)
    again = cache.get_or_compute("total", params, h)
    assert (cache.hits, cache.misses) == (1, 1)
    np.testing.assert_array_equal(first.energies, again.energies)
    assert cache_key("total", params) != cache_key("total", {"N": 2, "L": 3, "U": 0.0})

    path = cache.path(cache_key("total", params))
    path.write_bytes(b"garbage")
    with caplog.at_level("WARNING"):
        redo = cache.get_or_compute("total", params, h)
    assert "corrupt" in caplog.text
    assert cache.misses == 2
    np.testing.assert_allclose(redo.energies, first.energies)
    assert cache.clear() == 1


def test_spot_check_detects_wrong_eigensystem(small_system):
    basis, h, es, hb, bes = small_system
    assert spot_check(es, h)
    bad = EigenSystem(es.energies + 0.1, es.vectors)
    assert not spot_check(bad, h)
