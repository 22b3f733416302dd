import numpy as np
import pytest

from bhbath.fock_basis import enumerate_basis
from bhbath.operators import ModelParams, build_bath_hamiltonian, build_total_hamiltonian
from bhbath.spectra import diagonalize


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_params():
    return ModelParams(J=1.0, U=0.8, L=3, N=2, delta=0.5, epsilon=0.2)


@pytest.fixture(scope="session")
def small_system(small_params):
    """(N, L) = (2, 3): composite dim 12, small enough for dense oracles."""
    basis = enumerate_basis(small_params.N, small_params.L)
    h = build_total_hamiltonian(small_params, basis)
    hb = build_bath_hamiltonian(small_params, basis)
    return basis, h, diagonalize(h), hb, diagonalize(hb)


@pytest.fixture(scope="session")
def mid_system():
    """(N, L) = (3, 4): bath dim 20, composite dim 40."""
    p = ModelParams(J=1.0, U=0.8, L=4, N=3, delta=0.5, epsilon=0.3)
    basis = enumerate_basis(p.N, p.L)
    h = build_total_hamiltonian(p, basis)
    hb = build_bath_hamiltonian(p, basis)
    return p, basis, h, diagonalize(h), hb, diagonalize(hb)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def report(request):
    """Record one acceptance line: report(n, ok, detail)."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(n: int, ok: bool, detail: str) -> bool:
        store[n] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
