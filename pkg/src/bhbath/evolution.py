"""Exact unitary evolution through the spectral decomposition of H.

psi(t) = sum_k exp(-i E_k t) <k|psi0> |k>. Mixed states are carried as
ensembles of pure states and never as a composite density matrix.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import BasisMismatchError
from .spectra import EigenSystem


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 1.0
    steps: int = 200

    def __post_init__(self):
        if self.dt <= 0 or self.steps < 1:
            raise ValueError("TimeGrid needs dt > 0 and steps >= 1")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def __len__(self):
        return self.steps + 1


@dataclass(frozen=True)
class EnsembleState:
    """rho = sum_j weights[j] |states[:, j]><states[:, j]|."""

    weights: np.ndarray
    states: np.ndarray  # (dim, members)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.states)
        if s.ndim == 1:
            s = s[:, None]
        if w.shape != (s.shape[1],):
            raise ValueError("one weight per member required")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @classmethod
    def pure(cls, psi) -> "EnsembleState":
        return cls(np.ones(1), np.asarray(psi)[:, None])

    @classmethod
    def uniform(cls, states) -> "EnsembleState":
        states = np.asarray(states)
        return cls(np.full(states.shape[1], 1.0 / states.shape[1]), states)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self):
        return self.weights.size

    def density_matrix(self) -> np.ndarray:
        s = self.states * np.sqrt(self.weights)
        return s @ s.conj().T


def as_ensemble(state) -> EnsembleState:
    return state if isinstance(state, EnsembleState) else EnsembleState.pure(state)


def product_state(sys, bath) -> np.ndarray:
    """Spin-major product amplitudes c[s * dim_B + b] = sys[s] * bath[b]."""
    sys = np.asarray(sys, dtype=complex)
    bath = np.asarray(bath, dtype=complex)
    if sys.shape != (2,):
        raise BasisMismatchError("system state must have two amplitudes")
    return np.kron(sys, bath)


def product_ensemble(sys, bath_states, weights=None) -> EnsembleState:
    bath_states = np.asarray(bath_states)
    if bath_states.ndim == 1:
        bath_states = bath_states[:, None]
    cols = np.stack([product_state(sys, b) for b in bath_states.T], axis=1)
    if weights is None:
        return EnsembleState.uniform(cols)
    return EnsembleState(np.asarray(weights, dtype=float), cols)


class Propagator:
    """Evolution of a fixed set of initial vectors under a diagonalized H."""

    def __init__(self, es: EigenSystem, psi0):
        psi0 = np.asarray(psi0)
        if psi0.shape[0] != es.dim:
            raise BasisMismatchError(f"state dim {psi0.shape[0]} != eigensystem dim {es.dim}")
        self.es = es
        self.psi0 = psi0
        self.coeffs = es.vectors.conj().T @ psi0

    def at(self, t: float) -> np.ndarray:
        if t == 0:
            return self.psi0.astype(complex, copy=True)
        phased = np.exp(-1j * self.es.energies * t)
        phased = phased.reshape((-1,) + (1,) * (self.coeffs.ndim - 1)) * self.coeffs
        v = self.es.vectors
        if np.isrealobj(v):
            # .real/.imag views are strided; BLAS needs contiguous operands
            out = (v @ np.ascontiguousarray(phased.real)).astype(complex)
            out.imag = v @ np.ascontiguousarray(phased.imag)
            return out
        return v @ phased


def evolve(es: EigenSystem, psi0, grid: TimeGrid) -> np.ndarray:
    """States at every grid time, shape (len(grid), dim)."""
    prop = Propagator(es, psi0)
    return np.stack([prop.at(t) for t in grid.times])


class EnsembleTrajectory(Sequence):
    """Lazily evolved ensemble; indexing by grid position returns an EnsembleState.

    Members are propagated independently with fixed weights. States are
    recomputed on access so memory stays at one time slice.
    """

    def __init__(self, es: EigenSystem, rho0: EnsembleState, grid: TimeGrid):
        self.grid = grid
        self.times = grid.times
        self.weights = rho0.weights
        self._prop = Propagator(es, rho0.states)

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return EnsembleState(self.weights, self._prop.at(self.times[i]))

    def at(self, t: float) -> EnsembleState:
        return EnsembleState(self.weights, self._prop.at(t))


def evolve_ensemble(es: EigenSystem, rho0: EnsembleState, grid: TimeGrid) -> EnsembleTrajectory:
    return EnsembleTrajectory(es, rho0, grid)
