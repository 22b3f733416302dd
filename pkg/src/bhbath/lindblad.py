"""Two-level Lindblad master equation and exponential-decay analysis of the exact dynamics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoExponentialRegime, PositivityError
from .evolution import TimeGrid

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |down><up| in (up, down) order
SIGMA_PLUS = SIGMA_MINUS.T.copy()


@dataclass
class LindbladModel:
    hamiltonian: np.ndarray
    channels: list = field(default_factory=list)  # [(gamma, V), ...]

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        for g, _ in self.channels:
            if g < 0:
                raise ValueError("Lindblad rates must be non-negative")

    @classmethod
    def high_temperature(cls, delta: float, gamma: float) -> "LindbladModel":
        """H_S = delta sigma_z with equal-rate sigma_- and sigma_+ channels."""
        return cls(np.diag([delta, -delta]), [(gamma, SIGMA_MINUS), (gamma, SIGMA_PLUS)])

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for g, v in self.channels:
            vd = v.conj().T
            vdv = vd @ v
            out -= 0.5 * g * (rho @ vdv - 2 * v @ rho @ vd + vdv @ rho)
        return out


def _rk4(model: LindbladModel, rho: np.ndarray, h: float, n: int) -> np.ndarray:
    for _ in range(n):
        k1 = model.rhs(rho)
        k2 = model.rhs(rho + 0.5 * h * k1)
        k3 = model.rhs(rho + 0.5 * h * k2)
        k4 = model.rhs(rho + h * k3)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def integrate_lindblad(model: LindbladModel, rho0, grid: TimeGrid, substeps: int | None = None,
                       tol: float = 1e-8) -> np.ndarray:
    """Fixed-step RK4 solution sampled on ``grid``; returns shape (len(grid), 2, 2).

    Without explicit ``substeps`` the step is refined until halving it changes
    the state after one grid interval by less than ``tol``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if substeps is None:
        substeps = 1
        while True:
            a = _rk4(model, rho0, grid.dt / substeps, substeps)
            b = _rk4(model, rho0, grid.dt / (2 * substeps), 2 * substeps)
            if np.abs(a - b).max() < tol or substeps > 2**16:
                break
            substeps *= 2
        substeps *= 2
    out = np.empty((len(grid), 2, 2), dtype=complex)
    rho = rho0
    out[0] = rho
    h = grid.dt / substeps
    for i in range(1, len(grid)):
        rho = _rk4(model, rho, h, substeps)
        rho = 0.5 * (rho + rho.conj().T)
        w = np.linalg.eigvalsh(rho)
        if w.min() < -1e-8:
            raise PositivityError(f"eigenvalue {w.min():.3e} at t={grid.times[i]}: generator or step size is broken")
        out[i] = rho
    return out


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    goodness: float  # RMS residual of the log-linear fit
    window: tuple

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t))


def fit_decay(times, values, window=None, floor_fraction: float = 0.1) -> DecayFit:
    """Exponential fit by least squares on log(values).

    The default window runs from the first sample until the series first falls
    below ``floor_fraction`` of its initial value (one decade by default),
    which keeps the finite-bath noise floor out of the fit.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is None:
        below = np.nonzero(y < floor_fraction * y[0])[0]
        stop = below[0] if below.size else t.size
        window = (t[0], t[stop - 1])
    m = (t >= window[0]) & (t <= window[1])
    if m.sum() < 3 or np.any(y[m] <= 0):
        raise NoExponentialRegime("need at least three positive samples in the fit window")
    slope, icept = np.polyfit(t[m], np.log(y[m]), 1)
    resid = np.log(y[m]) - (slope * t[m] + icept)
    span = np.log(y[m].max() / y[m].min())
    if slope >= 0 or span < 0.5:
        raise NoExponentialRegime(f"series does not decay (slope {slope:.3g}, log span {span:.3g})")
    return DecayFit(float(-slope), float(np.exp(icept)), float(np.sqrt(np.mean(resid**2))),
                    (float(window[0]), float(window[1])))


@dataclass(frozen=True)
class ScalingRow:
    epsilon: float
    rate: float
    rate_over_eps2: float
    goodness: float
    flag: str = ""


@dataclass(frozen=True)
class ScalingTable:
    rows: list
    spread: float  # (max - min) / mean of rate / eps^2 over the decaying runs
    tolerance: float

    @property
    def consistent(self) -> bool:
        return self.spread <= self.tolerance and not any(r.flag == "fit failed" for r in self.rows)

    def rate(self, eps: float) -> float:
        return next(r.rate for r in self.rows if np.isclose(r.epsilon, eps))


def coherence_decay(model, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """|rho_ud(t)| of the exact dynamics for the model's bath-window ensemble."""
    from .model import reduced_series

    rho = reduced_series(model.trajectory(model.window_initial(), grid))
    return grid.times, np.abs(rho[:, 0, 1])


def epsilon_scaling_check(params, eps_list, grid: TimeGrid = TimeGrid(0.0, 1.0, 200), cache=None,
                          tolerance: float = 0.25) -> ScalingTable:
    """Fit the coherence decay rate of the exact dynamics for each coupling.

    Rates divided by eps^2 should be constant if the Born-Markov picture
    holds; their relative spread is compared with ``tolerance``.
    """
    from .model import SpinBathModel

    rows = []
    for eps in eps_list:
        model = SpinBathModel(params.replace(epsilon=float(eps)), cache)
        t, c = coherence_decay(model, grid)
        try:
            fit = fit_decay(t, c)
        except NoExponentialRegime:
            flag = "no decay" if eps == 0 else "fit failed"
            rows.append(ScalingRow(float(eps), 0.0, float("nan"), float("nan"), flag))
            continue
        ratio = fit.rate / eps**2 if eps else float("nan")
        rows.append(ScalingRow(float(eps), fit.rate, ratio, fit.goodness))
    ratios = np.array([r.rate_over_eps2 for r in rows if r.epsilon > 0 and not r.flag])
    spread = float((ratios.max() - ratios.min()) / ratios.mean()) if ratios.size else float("nan")
    if ratios.size and spread > tolerance:
        rows = [ScalingRow(r.epsilon, r.rate, r.rate_over_eps2, r.goodness, r.flag or "spread")
                for r in rows]
    return ScalingTable(rows, spread, tolerance)
