"""Dense eigendecomposition and eigenstate selection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionCapError
from .operators import SparseOperator

DEFAULT_DIM_CAP = 8192


@dataclass(frozen=True)
class EigenSystem:
    energies: np.ndarray  # ascending
    vectors: np.ndarray  # columns are eigenvectors
    operator_tag: str = ""

    def __len__(self):
        return self.energies.size

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def to_eigenbasis(self, op) -> np.ndarray:
        """Matrix elements <k|op|m> in the eigenbasis."""
        if isinstance(op, SparseOperator):
            op = op.to_csr()
        v = self.vectors
        return v.conj().T @ (op @ v)


class Eigenpair(NamedTuple):
    index: int
    energy: float
    vector: np.ndarray


def diagonalize(op: SparseOperator, cap: int = DEFAULT_DIM_CAP) -> EigenSystem:
    """Full spectrum of a Hermitian operator, densified once.

    Dense storage is ``dim**2`` doubles (about 360 MB at dim 6864), which is
    what ``cap`` guards.
    """
    if op.dim > cap:
        raise DimensionCapError(
            f"dimension {op.dim} exceeds the dense cap {cap}; iterative eigensolvers are not supported"
        )
    h = op.to_dense()
    if op.is_real:
        h = h.real
    e, v = scipy.linalg.eigh(h, overwrite_a=True, check_finite=False)
    return EigenSystem(e, v, op.basis_tag)


def eigenvalues(op: SparseOperator, cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Ascending eigenvalues only (no eigenvectors)."""
    if op.dim > cap:
        raise DimensionCapError(f"dimension {op.dim} exceeds the dense cap {cap}")
    h = op.to_dense()
    return scipy.linalg.eigvalsh(h.real if op.is_real else h, overwrite_a=True, check_finite=False)


def select_by_energy(es: EigenSystem, target: float) -> Eigenpair:
    # argmin returns the first minimizer, i.e. ties go to the lower index
    k = int(np.argmin(np.abs(es.energies - target)))
    return Eigenpair(k, float(es.energies[k]), es.vectors[:, k])


def window_indices(es: EigenSystem, emin: float, emax: float) -> np.ndarray:
    if emin > emax:
        raise ValueError("emin must not exceed emax")
    return np.nonzero((es.energies >= emin) & (es.energies <= emax))[0]


def select_window(es: EigenSystem, emin: float, emax: float) -> list[Eigenpair]:
    return [Eigenpair(int(k), float(es.energies[k]), es.vectors[:, k]) for k in window_indices(es, emin, emax)]


def density_of_states(energies, bins: int, range=None):
    """Histogram of levels normalized to unit total weight. Returns (weights, edges)."""
    energies = np.asarray(getattr(energies, "energies", energies))
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if range is None:
        lo, hi = energies.min(), energies.max()
        range = (lo, hi) if hi > lo else (lo - 0.5, lo + 0.5)
    counts, edges = np.histogram(energies, bins=bins, range=range)
    return counts / energies.size, edges
