"""Occupation-number basis for N bosons on an open chain of L sites."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import BasisMismatchError

INT64_MAX = np.iinfo(np.int64).max


def dimension(N: int, L: int) -> int:
    """Number of ways to put N bosons on L sites, C(N+L-1, N)."""
    if N < 0 or L < 1:
        raise ValueError(f"need N >= 0 and L >= 1, got N={N}, L={L}")
    d = comb(N + L - 1, N)
    if d > INT64_MAX:
        raise OverflowError(f"dimension C({N + L - 1}, {N}) does not fit in int64")
    return d


def _descending(N: int, L: int) -> Iterator[tuple[int, ...]]:
    if L == 1:
        yield (N,)
        return
    for n in range(N, -1, -1):
        for rest in _descending(N - n, L - 1):
            yield (n,) + rest


@dataclass(frozen=True)
class FockBasis:
    N: int
    L: int
    states: np.ndarray  # (dim, L) int, descending lexicographic
    index: dict = field(repr=False)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def state_of(self, k: int) -> tuple[int, ...]:
        return tuple(int(n) for n in self.states[k])

    def index_of(self, s: Sequence[int]) -> int:
        return index_of(self, s)

    def number_operator_diag(self) -> np.ndarray:
        return self.states.sum(axis=1).astype(float)


def enumerate_basis(N: int, L: int) -> FockBasis:
    """Enumerate all Fock states in strictly descending lexicographic order.

    >>> enumerate_basis(2, 2).states.tolist()
    [[2, 0], [1, 1], [0, 2]]
    """
    d = dimension(N, L)
    states = np.fromiter(
        (n for s in _descending(N, L) for n in s), dtype=np.int64, count=d * L
    ).reshape(d, L)
    index = {tuple(int(n) for n in row): k for k, row in enumerate(states)}
    states.setflags(write=False)
    return FockBasis(N=N, L=L, states=states, index=index)


def index_of(basis: FockBasis, s: Sequence[int]) -> int:
    key = tuple(int(n) for n in s)
    if len(key) != basis.L or sum(key) != basis.N or min(key) < 0:
        raise BasisMismatchError(
            f"state {key} is not in the N={basis.N}, L={basis.L} basis"
        )
    return basis.index[key]
