"""Spectral unfolding, nearest-neighbour spacing statistics and the critical coupling.

The reference curve for two superposed GOE spectra is tabulated in
``data/two_goe_reference.csv``. Regenerate it with::

    python -m bhbath.levelstats data/two_goe_reference.csv
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import UnfoldingError

REFERENCE_SEED = 20191217
REFERENCE_SAMPLES = 10**6
REFERENCE_GRID = np.round(np.arange(0, 6.0 + 1e-9, 0.005), 6)
REFERENCES = ("GOE", "Poisson", "2xGOE")


@dataclass(frozen=True)
class UnfoldedSpectrum:
    unfolded_levels: np.ndarray
    fit_degree: int
    discarded_edges: int

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.unfolded_levels)


@dataclass(frozen=True)
class SpacingDistribution:
    s: np.ndarray
    empirical: np.ndarray
    goe: np.ndarray
    poisson: np.ndarray
    two_goe: np.ndarray

    def reference(self, name: str) -> np.ndarray:
        try:
            return {"GOE": self.goe, "Poisson": self.poisson, "2xGOE": self.two_goe}[name]
        except KeyError:
            raise ValueError(f"unknown reference {name!r}; choose from {REFERENCES}") from None


def unfold(energies, fit_degree: int = 7, edge_discard: int | None = None,
           edge_fraction: float = 0.02) -> UnfoldedSpectrum:
    """Map levels through a polynomial fit of the cumulative counting function.

    ``edge_discard`` levels are dropped at each end after mapping (default
    ``edge_fraction`` of the spectrum). The map must be increasing on the
    retained range; sparse spectral tails that are discarded anyway may wiggle.
    """
    e = np.sort(np.asarray(energies, dtype=float))
    n = e.size
    if n < 50:
        raise UnfoldingError(f"need at least 50 levels to unfold, got {n}")
    if fit_degree < 3:
        raise UnfoldingError("fit_degree must be >= 3")
    if edge_discard is None:
        edge_discard = int(edge_fraction * n)
    counting = np.arange(1, n + 1) - 0.5
    poly = np.polynomial.Polynomial.fit(e, counting, fit_degree)
    kept = e[edge_discard:n - edge_discard]
    xs = np.linspace(kept[0], kept[-1], 20 * kept.size)
    if np.any(poly.deriv()(xs) <= 0):
        raise UnfoldingError(f"degree-{fit_degree} fit is not monotone on the data range; try another degree")
    u = poly(kept)
    return UnfoldedSpectrum(u, fit_degree, edge_discard)


def goe_surmise_cdf(s):
    return 1.0 - np.exp(-np.pi * np.asarray(s) ** 2 / 4)


def poisson_cdf(s):
    return 1.0 - np.exp(-np.asarray(s))


def empirical_cdf(spacings, s):
    """Fraction of spacings <= s (right-continuous)."""
    return np.searchsorted(np.sort(spacings), s, side="right") / spacings.size


def wigner_spacings(rng, n: int) -> np.ndarray:
    # inverse of the surmise CDF
    return np.sqrt(-4.0 / np.pi * np.log1p(-rng.random(n)))


def superposition_reference(k: int = 2, n_samples: int = REFERENCE_SAMPLES, seed: int = REFERENCE_SEED,
                            s=REFERENCE_GRID) -> np.ndarray:
    """Integrated spacing distribution of k merged, independent Wigner-surmise sequences.

    Each sequence has equal density; the merged spacings are rescaled to unit mean.
    """
    rng = np.random.default_rng(seed)
    m = n_samples // k
    seqs = [np.cumsum(wigner_spacings(rng, m)) for _ in range(k)]
    top = min(q[-1] for q in seqs)
    merged = np.sort(np.concatenate([q[q <= top] for q in seqs]))
    sp = np.diff(merged)
    return empirical_cdf(sp / sp.mean(), s)


def write_reference_table(path) -> None:
    table = superposition_reference(2)
    lines = ["s,I_2GOE"] + [f"{s:.3f},{v:.8f}" for s, v in zip(REFERENCE_GRID, table)]
    Path(path).write_text("\n".join(lines) + "\n")


@lru_cache(maxsize=1)
def _two_goe_table() -> tuple[np.ndarray, np.ndarray]:
    text = resources.files("bhbath").joinpath("data/two_goe_reference.csv").read_text()
    data = np.loadtxt(text.splitlines()[1:], delimiter=",")
    return data[:, 0], data[:, 1]


def two_goe_cdf(s):
    grid, table = _two_goe_table()
    return np.interp(s, grid, table, right=1.0)


def default_s_grid() -> np.ndarray:
    return np.linspace(0.0, 4.0, 401)


def integrated_spacing(us: UnfoldedSpectrum, s_grid=None) -> SpacingDistribution:
    s = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    sp = us.spacings
    sp = sp / sp.mean()
    return SpacingDistribution(s, empirical_cdf(sp, s), goe_surmise_cdf(s), poisson_cdf(s), two_goe_cdf(s))


def goe_distance(sd: SpacingDistribution, reference: str = "GOE") -> float:
    return float(np.abs(sd.empirical - sd.reference(reference)).max())


def spacing_distribution(energies, fit_degree: int = 7, s_grid=None) -> SpacingDistribution:
    return integrated_spacing(unfold(energies, fit_degree), s_grid)


@dataclass(frozen=True)
class CriticalCoupling:
    epsilons: np.ndarray
    distances: np.ndarray
    threshold: float
    epsilon_cr: float | None

    @property
    def converged(self) -> bool:
        return self.epsilon_cr is not None


def critical_epsilon(params, eps_grid, threshold: float = 0.05, fit_degree: int = 7) -> CriticalCoupling:
    """Smallest epsilon in ``eps_grid`` whose composite spectrum is within ``threshold`` of GOE.

    The full distance curve is always returned; ``epsilon_cr`` is None when the
    sweep never converges.
    """
    from .fock_basis import enumerate_basis
    from .operators import build_total_hamiltonian
    from .spectra import eigenvalues

    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps_grid) <= 0):
        raise ValueError("epsilon grid must be strictly increasing")
    basis = enumerate_basis(params.N, params.L)
    dists = []
    for eps in eps_grid:
        h = build_total_hamiltonian(params.replace(epsilon=float(eps)), basis)
        energies = eigenvalues(h)
        dists.append(goe_distance(spacing_distribution(energies, fit_degree), "GOE"))
    dists = np.array(dists)
    below = np.nonzero(dists < threshold)[0]
    eps_cr = float(eps_grid[below[0]]) if below.size else None
    return CriticalCoupling(eps_grid, dists, threshold, eps_cr)


if __name__ == "__main__":
    write_reference_table(sys.argv[1] if len(sys.argv) > 1 else "two_goe_reference.csv")
