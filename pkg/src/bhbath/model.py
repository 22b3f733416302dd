"""Assembled spin + bath model with lazily computed eigensystems."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .cache import EigenCache
from .evolution import EnsembleState, TimeGrid, evolve_ensemble, product_ensemble
from .fock_basis import enumerate_basis
from .operators import (
    ModelParams,
    build_bath_hamiltonian,
    build_bath_observable,
    build_total_hamiltonian,
)
from .reduced import trace_out_bath
from .spectra import EigenSystem, diagonalize, select_by_energy, window_indices

DEFAULT_SPIN_STATE = np.array([np.sqrt(0.7), np.sqrt(0.3)])
DEFAULT_ENERGY = 2.8361
DEFAULT_WINDOW = (2.45, 3.21)


class SpinBathModel:
    def __init__(self, params: ModelParams = ModelParams(), cache: EigenCache | None = None):
        self.params = params
        self.cache = cache
        self.basis = enumerate_basis(params.N, params.L)

    @property
    def dim_bath(self) -> int:
        return self.basis.dim

    @cached_property
    def bath_hamiltonian(self):
        return build_bath_hamiltonian(self.params, self.basis)

    @cached_property
    def total_hamiltonian(self):
        return build_total_hamiltonian(self.params, self.basis)

    def _solve(self, kind, keys, op) -> EigenSystem:
        if self.cache is None:
            return diagonalize(op)
        p = self.params.as_dict()
        return self.cache.get_or_compute(kind, {k: p[k] for k in keys}, op)

    @cached_property
    def bath_es(self) -> EigenSystem:
        return self._solve("bath", ("J", "U", "L", "N"), self.bath_hamiltonian)

    @cached_property
    def total_es(self) -> EigenSystem:
        return self._solve("total", ("J", "U", "L", "N", "delta", "epsilon"), self.total_hamiltonian)

    def observable(self, kind: str):
        return build_bath_observable(kind, self.basis)

    def pure_initial(self, energy: float = DEFAULT_ENERGY, spin=DEFAULT_SPIN_STATE) -> EnsembleState:
        pair = select_by_energy(self.bath_es, energy)
        return product_ensemble(spin, pair.vector)

    def window_initial(self, window=DEFAULT_WINDOW, spin=DEFAULT_SPIN_STATE) -> EnsembleState:
        idx = window_indices(self.bath_es, *window)
        if idx.size == 0:
            raise ValueError(f"no bath eigenstates in window {window}")
        return product_ensemble(spin, self.bath_es.vectors[:, idx])

    def trajectory(self, rho0: EnsembleState, grid: TimeGrid):
        return evolve_ensemble(self.total_es, rho0, grid)


def reduced_series(trajectory) -> np.ndarray:
    """rho_S(t) along a trajectory, shape (nt, 2, 2)."""
    return np.array([trace_out_bath(st) for st in trajectory])
