"""Sparse Hamiltonians and bath observables for the spin + Bose-Hubbard model.

Conventions
-----------
* Spin basis order is (up, down); sigma_z = diag(+1, -1), sigma_+ |down> = |up>.
* Composite index = spin_index * dim_B + bath_index (spin-major), so the bath
  partial trace is a contraction over contiguous blocks.
* The chain has open boundaries: hopping runs over bonds (l, l+1), l < L.
"""
from __future__ import annotations

import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import BasisMismatchError
from .fock_basis import FockBasis

UP, DOWN = 0, 1


@dataclass(frozen=True)
class ModelParams:
    J: float = 1.0
    U: float = 0.8
    L: int = 7
    N: int = 6
    delta: float = 0.5
    epsilon: float = 0.2

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**asdict(self), **changes})

    def as_dict(self) -> dict:
        return asdict(self)


class SparseOperator:
    """Operator in a fixed basis, stored as (row, col, value) triplets.

    Triplets are kept with duplicates summed, explicit zeros dropped, and
    sorted by (row, col) so dumps are byte-stable.
    """

    def __init__(self, dim, rows, cols, vals, basis_tag="bath"):
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=complex), (np.asarray(rows), np.asarray(cols))),
            shape=(dim, dim),
        )
        m.sum_duplicates()
        m.eliminate_zeros()
        order = np.lexsort((m.col, m.row))
        self.dim = int(dim)
        self.rows = m.row[order].astype(np.int64)
        self.cols = m.col[order].astype(np.int64)
        self.vals = m.data[order]
        self.basis_tag = basis_tag

    @classmethod
    def from_matrix(cls, m, basis_tag="bath") -> "SparseOperator":
        coo = sp.coo_matrix(m)
        return cls(coo.shape[0], coo.row, coo.col, coo.data, basis_tag)

    def __repr__(self):
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz}, basis_tag={self.basis_tag!r})"

    @property
    def nnz(self) -> int:
        return self.vals.size

    @property
    def is_real(self) -> bool:
        return not np.any(self.vals.imag)

    def to_csr(self) -> sp.csr_matrix:
        vals = self.vals.real if self.is_real else self.vals
        return sp.csr_matrix((vals, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            if other.dim != self.dim:
                raise BasisMismatchError("operator dimensions differ")
            return SparseOperator.from_matrix(self.to_csr() @ other.to_csr(), self.basis_tag)
        return self.to_csr() @ other

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if other.dim != self.dim or other.basis_tag != self.basis_tag:
            raise BasisMismatchError(
                f"cannot add {self.basis_tag}[{self.dim}] and {other.basis_tag}[{other.dim}]"
            )
        return SparseOperator(
            self.dim,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals]),
            self.basis_tag,
        )

    def __mul__(self, c: complex) -> "SparseOperator":
        return SparseOperator(self.dim, self.rows, self.cols, self.vals * c, self.basis_tag)

    __rmul__ = __mul__

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.dim, self.cols, self.rows, self.vals.conj(), self.basis_tag)

    def hermiticity_error(self) -> float:
        diff = self.to_csr() - self.to_csr().conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return self.hermiticity_error() <= atol

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"# dim {self.dim} basis_tag {self.basis_tag} nnz {self.nnz}\n")
        for r, c, v in zip(self.rows, self.cols, self.vals):
            buf.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
        return buf.getvalue()

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "SparseOperator":
        lines = Path(path).read_text().splitlines()
        head = lines[0].lstrip("# ").split()
        meta = dict(zip(head[::2], head[1::2]))
        data = np.loadtxt(lines[1:], ndmin=2) if len(lines) > 1 else np.zeros((0, 4))
        return cls(
            int(meta["dim"]),
            data[:, 0].astype(np.int64),
            data[:, 1].astype(np.int64),
            data[:, 2] + 1j * data[:, 3],
            meta["basis_tag"],
        )


def _check_basis(params: ModelParams, basis: FockBasis) -> None:
    if params.N != basis.N or params.L != basis.L:
        raise BasisMismatchError(
            f"params (N={params.N}, L={params.L}) do not match basis (N={basis.N}, L={basis.L})"
        )


def hopping(basis: FockBasis, src: int, dst: int) -> SparseOperator:
    """Matrix of a_dst^dagger a_src (sites are 0-based)."""
    st = basis.states
    occ = st[:, src] > 0
    cols = np.nonzero(occ)[0]
    moved = st[cols].copy()
    amp = np.sqrt(moved[:, src] * (moved[:, dst] + 1.0))
    moved[:, src] -= 1
    moved[:, dst] += 1
    rows = np.array([basis.index[tuple(int(n) for n in s)] for s in moved], dtype=np.int64)
    return SparseOperator(basis.dim, rows, cols, amp, "bath")


def build_bath_hamiltonian(params: ModelParams, basis: FockBasis) -> SparseOperator:
    _check_basis(params, basis)
    n = basis.states.astype(float)
    diag = 0.5 * params.U * (n * (n - 1)).sum(axis=1)
    k = np.arange(basis.dim)
    h = SparseOperator(basis.dim, k, k, diag, "bath")
    for l in range(basis.L - 1):
        hop = hopping(basis, l, l + 1)
        h = h + (-0.5 * params.J) * (hop + hop.adjoint())
    return h


def build_system_hamiltonian(delta: float) -> SparseOperator:
    return SparseOperator(2, [0, 1], [0, 1], [delta, -delta], "system")


def embed(op_bath: SparseOperator, spin_op) -> SparseOperator:
    """Tensor product spin_op (2x2) with a bath operator on the spin-major composite space."""
    spin_op = np.asarray(spin_op, dtype=complex)
    m = sp.kron(sp.coo_matrix(spin_op), op_bath.to_csr(), format="coo")
    return SparseOperator(m.shape[0], m.row, m.col, m.data, "composite")


SIGMA_PLUS = np.array([[0, 1], [0, 0]])  # |up><down|
SIGMA_MINUS = SIGMA_PLUS.T


def build_interaction(params: ModelParams, basis: FockBasis) -> SparseOperator:
    """epsilon (a1^dag a2 sigma_+ + a2^dag a1 sigma_-) on the composite space."""
    _check_basis(params, basis)
    if basis.L < 2:
        raise ValueError("coupling needs at least two sites")
    a12 = hopping(basis, 1, 0)  # a_1^dag a_2 in 1-based site labels
    return params.epsilon * (embed(a12, SIGMA_PLUS) + embed(a12.adjoint(), SIGMA_MINUS))


def build_total_hamiltonian(params: ModelParams, basis: FockBasis) -> SparseOperator:
    hb = build_bath_hamiltonian(params, basis)
    hs = build_system_hamiltonian(params.delta)
    eye_b = SparseOperator(basis.dim, np.arange(basis.dim), np.arange(basis.dim), np.ones(basis.dim))
    h = embed(eye_b, hs.to_dense()) + embed(hb, np.eye(2))
    if params.epsilon != 0:
        h = h + build_interaction(params, basis)
    return h


def total_number_operator(basis: FockBasis) -> SparseOperator:
    k = np.arange(2 * basis.dim)
    return SparseOperator(2 * basis.dim, k, k, np.tile(basis.number_operator_diag(), 2), "composite")


BATH_OBSERVABLES = ("a1+a2", "a2+a1", "a1+a2*a2+a1")


def build_bath_observable(kind: str, basis: FockBasis) -> SparseOperator:
    """Bath operators entering the correlation function and the factorization test.

    ``kind`` is one of ``"a1+a2"`` (a_1^dag a_2), ``"a2+a1"`` and the product
    ``"a1+a2*a2+a1"``.
    """
    if basis.L < 2:
        raise ValueError("bath observables need at least two sites")
    a12 = hopping(basis, 1, 0)
    if kind == "a1+a2":
        return a12
    if kind == "a2+a1":
        return a12.adjoint()
    if kind == "a1+a2*a2+a1":
        return a12 @ a12.adjoint()
    raise ValueError(f"unknown observable {kind!r}; choose from {BATH_OBSERVABLES}")
