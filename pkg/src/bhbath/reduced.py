"""Partial traces, the entanglement measure G, entropies and Schmidt analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisMismatchError, DimensionCapError
from .evolution import EnsembleState, as_ensemble
from .spectra import EigenSystem

DEFAULT_G_CAP = 4096
CLIP_TOL = 1e-10


def _blocks(state) -> tuple[np.ndarray, np.ndarray]:
    """Weighted amplitudes reshaped to (2, dim_B, members)."""
    ens = as_ensemble(state)
    if ens.dim % 2:
        raise BasisMismatchError("composite dimension must be even (spin-major layout)")
    amp = ens.states * np.sqrt(ens.weights)
    return amp.reshape(2, ens.dim // 2, -1), ens.weights


def trace_out_bath(state) -> np.ndarray:
    m, _ = _blocks(state)
    return np.einsum("sbj,tbj->st", m, m.conj())


def trace_out_system(state) -> np.ndarray:
    m, _ = _blocks(state)
    flat = m.transpose(1, 0, 2).reshape(m.shape[1], -1)
    return flat @ flat.conj().T


def entanglement_G(state, cap: int = DEFAULT_G_CAP) -> float:
    """|R - rho_S x rho_B| / |R| with |M| the sum of absolute matrix elements.

    R is only materialized block by block (four dim_B x dim_B spin blocks).
    """
    ens = as_ensemble(state)
    if ens.dim > cap:
        raise DimensionCapError(f"G(t) needs the composite density matrix; dim {ens.dim} exceeds cap {cap}")
    m, _ = _blocks(ens)
    rho_s = np.einsum("sbj,tbj->st", m, m.conj())
    rho_b = sum(m[s] @ m[s].conj().T for s in range(2))
    num = den = 0.0
    for s in range(2):
        for t in range(2):
            r = m[s] @ m[t].conj().T
            den += np.abs(r).sum()
            r -= rho_s[s, t] * rho_b
            num += np.abs(r).sum()
    return float(num / den)


@dataclass(frozen=True)
class SpectralDecomposition:
    weights: np.ndarray  # descending
    states: np.ndarray  # columns
    coefficients: np.ndarray | None = None  # expansion in a reference basis, one column per state

    @property
    def entropy(self) -> float:
        return entropy(self)


def _clip(w: np.ndarray) -> np.ndarray:
    if w.min(initial=0.0) < -CLIP_TOL:
        raise ValueError(f"density matrix eigenvalue {w.min():.3e} is negative beyond tolerance")
    return np.clip(w, 0.0, None)


def spectral_decomposition(rho: np.ndarray, rank: int | None = None) -> SpectralDecomposition:
    w, v = np.linalg.eigh(rho)
    order = np.argsort(w)[::-1]
    w, v = _clip(w[order]), v[:, order]
    if rank is not None:
        w, v = w[:rank], v[:, :rank]
    return SpectralDecomposition(w, v)


def schmidt_decomposition(psi) -> tuple[SpectralDecomposition, SpectralDecomposition]:
    """Eigen-decompositions of rho_S and rho_B for a pure composite state via one SVD.

    psi = sum_k sqrt(w_k) u_k (x) v_k with u_k, v_k the returned state columns.
    """
    psi = np.asarray(psi)
    m = psi.reshape(2, -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    w = s**2
    return SpectralDecomposition(w, u), SpectralDecomposition(w, vh.T)


def entropy(sd) -> float:
    """Von Neumann entropy (natural log) from weights or a SpectralDecomposition."""
    w = np.asarray(getattr(sd, "weights", sd), dtype=float)
    w = _clip(w)
    w = w[w > 0]
    return float(-(w * np.log(w)).sum())


def bath_eigenstate_expansion(rho_b: np.ndarray, bath_es: EigenSystem, rank: int | None = 2) -> SpectralDecomposition:
    """Diagonalize rho_B and expand its leading eigenvectors in the bath energy basis.

    ``coefficients[j, n]`` is c_j^(n) = <Psi_j|Phi_n>, with j following the
    ascending bath energies.
    """
    if rho_b.shape[0] != bath_es.dim:
        raise BasisMismatchError("rho_B and bath eigensystem dimensions differ")
    sd = spectral_decomposition(rho_b, rank)
    c = bath_es.vectors.conj().T @ sd.states
    return SpectralDecomposition(sd.weights, sd.states, c)
