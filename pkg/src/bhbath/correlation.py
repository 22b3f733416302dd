"""Bath correlation function, transition-matrix-element statistics and correlation time.

The correlation function is

    alpha(tau) = Tr[ exp(-i H_B tau) A exp(i H_B tau) A^dag rho_B ],  A = a_1^dag a_2,

which for an eigenstate rho_B = |Psi_j><Psi_j| reduces to the single sum
sum_k |<Psi_k|A^dag|Psi_j>|^2 exp(i (E_k - E_j) tau).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisMismatchError, FitError, RegularBathError
from .evolution import EnsembleState
from .operators import SparseOperator
from .spectra import EigenSystem


@dataclass(frozen=True)
class CorrelationSeries:
    taus: np.ndarray
    values: np.ndarray
    t_anchor: float = 0.0

    @property
    def normalized_modulus(self) -> np.ndarray:
        return np.abs(self.values) / abs(self.values[0])


@dataclass(frozen=True)
class GaussianEnvelope:
    amplitude: float
    center: float
    sigma: float

    def __call__(self, x):
        return self.amplitude * np.exp(-((np.asarray(x) - self.center) ** 2) / (2 * self.sigma**2))


@dataclass(frozen=True)
class MatrixElementStats:
    bin_centers: np.ndarray
    V: np.ndarray  # mean |<k|A|j>|^2 per Delta E bin
    counts: np.ndarray
    strength: np.ndarray  # summed |<k|A|j>|^2 per unit Delta E, averaged over j
    fit: GaussianEnvelope
    tau_star: float


def _taus(taus) -> np.ndarray:
    return np.asarray(getattr(taus, "times", taus), dtype=float)


def _bath_density(bath_es: EigenSystem, rho_b) -> np.ndarray:
    d = bath_es.dim
    if isinstance(rho_b, EnsembleState):
        if rho_b.dim == 2 * d:
            from .reduced import trace_out_system

            return trace_out_system(rho_b)
        if rho_b.dim != d:
            raise BasisMismatchError("ensemble dimension matches neither bath nor composite space")
        return rho_b.density_matrix()
    rho_b = np.asarray(rho_b)
    if rho_b.shape != (d, d):
        raise BasisMismatchError(f"rho_B shape {rho_b.shape} does not match bath dim {d}")
    return rho_b


def correlation_time_domain(bath_es: EigenSystem, rho_b, taus, A: SparseOperator, t_anchor: float = 0.0,
                            chunk: int = 256) -> CorrelationSeries:
    """alpha(tau) for an arbitrary bath density matrix.

    With A~ and rho~ in the energy basis and X = A~ * (A~^dag rho~)^T
    (element-wise), alpha(tau) = sum_jk exp(-i E_j tau) X_jk exp(i E_k tau).
    """
    taus = _taus(taus)
    if A.dim != bath_es.dim:
        raise BasisMismatchError("observable and bath eigensystem dimensions differ")
    rho = _bath_density(bath_es, rho_b)
    v = bath_es.vectors
    a = bath_es.to_eigenbasis(A)
    r = v.conj().T @ rho @ v
    x = a * (a.conj().T @ r).T
    e = bath_es.energies
    out = np.empty(taus.size, dtype=complex)
    for s in range(0, taus.size, chunk):
        tt = taus[s:s + chunk, None]
        out[s:s + chunk] = np.einsum("tj,tj->t", np.exp(-1j * tt * e) @ x, np.exp(1j * tt * e))
    return CorrelationSeries(taus, out, t_anchor)


def transition_weights(bath_es: EigenSystem, A: SparseOperator, j) -> np.ndarray:
    """|<Psi_k|A|Psi_j>|^2 for all k (columns follow ``j``)."""
    j = np.atleast_1d(j)
    col = A.to_csr() @ bath_es.vectors[:, j]
    return np.abs(bath_es.vectors.conj().T @ col) ** 2


def correlation_spectral(bath_es: EigenSystem, j: int, taus, A: SparseOperator) -> CorrelationSeries:
    """Direct sum over final states k for the initial eigenstate j.

    The operator that acts first on |Psi_j> in alpha is A^dag = a_2^dag a_1,
    so the weights are |<Psi_k|A^dag|Psi_j>|^2.
    """
    if not 0 <= j < len(bath_es):
        raise IndexError(f"eigenstate index {j} out of range")
    taus = _taus(taus)
    w = transition_weights(bath_es, A.adjoint(), j)[:, 0]
    de = bath_es.energies - bath_es.energies[j]
    return CorrelationSeries(taus, np.exp(1j * np.outer(taus, de)) @ w, 0.0)


def fit_gaussian_envelope(x, y, group: int = 1, min_points: int = 5) -> GaussianEnvelope:
    """Least-squares Gaussian through the log of group maxima of a positive profile.

    ``group`` consecutive samples are merged and only their maximum is kept, so
    fine structure riding on the envelope does not pull the width down.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if group > 1:
        n = x.size // group * group
        xs = x[:n].reshape(-1, group)
        ys = y[:n].reshape(-1, group)
        k = ys.argmax(axis=1)
        x, y = xs[np.arange(k.size), k], ys[np.arange(k.size), k]
    keep = y > 0
    if keep.sum() < min_points:
        raise FitError(f"only {keep.sum()} populated bins, need {min_points} for an envelope fit")
    c2, c1, c0 = np.polyfit(x[keep], np.log(y[keep]), 2)
    if c2 >= 0:
        raise FitError("profile is not Gaussian-shaped (non-negative curvature of log)")
    sigma = np.sqrt(-1.0 / (2 * c2))
    center = -c1 / (2 * c2)
    amp = np.exp(c0 - c1**2 / (4 * c2))
    return GaussianEnvelope(float(amp), float(center), float(sigma))


def binned_profile(de, w, bin_width: float, span=None):
    """Mean and count of weights ``w`` in Delta E bins of width ``bin_width``."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    de = np.asarray(de).ravel()
    w = np.asarray(w).ravel()
    lo, hi = span if span is not None else (de.min(), de.max())
    nb = max(int(np.ceil((hi - lo) / bin_width)), 1)
    edges = lo + bin_width * np.arange(nb + 1)
    idx = np.clip(((de - lo) / bin_width).astype(int), 0, nb - 1)
    sums = np.bincount(idx, weights=w, minlength=nb)
    counts = np.bincount(idx, minlength=nb)
    mean = np.divide(sums, counts, out=np.zeros(nb), where=counts > 0)
    return 0.5 * (edges[:-1] + edges[1:]), mean, counts, sums


def matrix_element_statistics(bath_es: EigenSystem, j_set, A: SparseOperator, bin_width: float | None = None,
                              group: int = 5) -> MatrixElementStats:
    """V(Delta E): |<Psi_k|A|Psi_j>|^2 averaged in Delta E bins and over ``j_set``.

    The Gaussian envelope is fitted to maxima over ``group`` consecutive bins
    of V; tau* = sqrt(2)/sigma is where the corresponding Gaussian decay of
    alpha(tau) falls to 1/e.
    """
    j_set = np.atleast_1d(np.asarray(j_set, dtype=int))
    if j_set.size == 0:
        raise ValueError("j_set must not be empty")
    e = bath_es.energies
    if bin_width is None:
        bin_width = (e.max() - e.min()) / 200
    w = transition_weights(bath_es, A, j_set)
    de = e[:, None] - e[j_set][None, :]
    span = (de.min(), de.max())
    centers, mean, counts, sums = binned_profile(de, w, bin_width, span)
    strength = sums / (bin_width * j_set.size)
    fit = fit_gaussian_envelope(centers, mean, group=group)
    return MatrixElementStats(centers, mean, counts, strength, fit, float(np.sqrt(2) / fit.sigma))


@dataclass(frozen=True)
class CorrelationTime:
    tau_star: float
    noise_floor: float
    fit_taus: np.ndarray
    fit_maxima: np.ndarray

    def envelope(self, tau):
        return np.exp(-((np.asarray(tau) / self.tau_star) ** 2))


def correlation_time(series: CorrelationSeries, bin_width: float = 0.5, noise_factor: float = 3.0,
                     revival_threshold: float = 0.3) -> CorrelationTime:
    """tau* from a Gaussian envelope exp[-(tau/tau*)^2] of |alpha|/|alpha(0)|.

    The envelope passes through 1 at tau = 0 and is fitted by least squares on
    the log of per-bin maxima, using bins from the origin up to the first one
    whose maximum sinks below the finite-size noise floor (``noise_factor``
    times the median of the second half of the series). tau* is then the 1/e
    crossing of the envelope.

    A series that never reaches the floor, or whose second half still revives
    above ``revival_threshold``, raises RegularBathError.
    """
    taus = series.taus
    r = series.normalized_modulus
    late = taus >= taus[0] + 0.5 * (taus[-1] - taus[0])
    if r[late].max() >= revival_threshold:
        raise RegularBathError(
            f"|alpha| revives to {r[late].max():.2f} of alpha(0) at late tau; no decay detected"
        )
    floor = noise_factor * float(np.median(r[late]))
    nb = int(np.floor((taus[-1] - taus[0]) / bin_width))
    idx = ((taus - taus[0]) / bin_width).astype(int)
    cen, mx = [], []
    for b in range(nb):
        m = np.nonzero(idx == b)[0]
        if m.size == 0:
            continue
        k = m[np.argmax(r[m])]
        if r[k] < floor:
            break
        cen.append(taus[k] - taus[0])
        mx.append(r[k])
    else:
        raise RegularBathError("correlation function never falls below its noise floor")
    cen, mx = np.array(cen), np.array(mx)
    x = cen**2
    y = np.log(mx)
    if x.size < 2 or not np.any(x > 0):
        raise FitError("decay faster than one bin; refine the tau grid")
    b = -(x @ y) / (x @ x)
    if b <= 0:
        raise RegularBathError("fitted envelope does not decay")
    return CorrelationTime(float(1 / np.sqrt(b)), floor, cen, mx)
