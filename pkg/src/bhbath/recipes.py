"""Figure recipes: each turns an ExperimentConfig into CSV files, SVG plots and a manifest."""
from __future__ import annotations

import json
import platform
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import correlation as corr
from . import levelstats
from .cache import EigenCache
from .config import SCHEMA_VERSION, ExperimentConfig
from .errors import DimensionCapError, RegularBathError
from .evolution import EnsembleState, TimeGrid
from .lindblad import LindbladModel, epsilon_scaling_check, fit_decay, integrate_lindblad
from .markov_test import FACTORIZATION_COLUMNS, bath_invariance_test, factorization_test
from .model import SpinBathModel
from .operators import ModelParams
from .plotting import line_chart
from .reduced import (
    bath_eigenstate_expansion,
    entanglement_G,
    entropy,
    schmidt_decomposition,
    spectral_decomposition,
    trace_out_bath,
    trace_out_system,
)
from .spectra import density_of_states, window_indices


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10e")


def package_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


class Run:
    """Single writer for one recipe invocation; collects the manifest."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cache = EigenCache(config.cache_dir) if config.cache_dir is not None else None
        self.files: list[str] = []
        self.summary: dict = {}
        self.stage = "setup"

    def model(self, params: ModelParams | None = None) -> SpinBathModel:
        return SpinBathModel(params or self.config.model, self.cache)

    def csv(self, name: str, header, rows, meta: dict | None = None) -> None:
        lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
        lines.append(",".join(header))
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        (self.out / name).write_bytes(("\n".join(lines) + "\n").encode())
        self.files.append(name)

    def plot(self, name: str, series, **kw) -> None:
        line_chart(self.out / name, series, **kw)
        self.files.append(name)

    def initial_state(self, m: SpinBathModel) -> EnsembleState:
        ini = self.config.initial
        spin = np.array([np.sqrt(ini["p_up"]), np.sqrt(1 - ini["p_up"])])
        if ini["bath"] == "window":
            return m.window_initial(tuple(ini["window"]), spin)
        return m.pure_initial(ini["energy"], spin)

    def manifest(self, wall: float) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "recipe": self.config.recipe,
            "config": self.config.resolved(),
            "code_version": package_version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "wall_time_s": round(wall, 3),
            "cache": None if self.cache is None else {"hits": self.cache.hits, "misses": self.cache.misses},
            "outputs": sorted(self.files),
            "summary": self.summary,
        }


def _rho_rows(times, rho):
    for t, r in zip(times, rho):
        yield t, r[0, 0].real, r[1, 1].real, r[0, 1].real, r[0, 1].imag, abs(r[0, 1])


RHO_HEADER = ("t", "rho_uu", "rho_dd", "re_rho_ud", "im_rho_ud", "abs_rho_ud")


def _dynamics(run: Run, g_stride: int, tag: str):
    m = run.model()
    grid = run.config.grid
    run.stage = "diagonalize"
    traj = m.trajectory(run.initial_state(m), grid)
    run.stage = "evolve"
    rho, gs = [], []
    for i, st in enumerate(traj):
        rho.append(trace_out_bath(st))
        if g_stride and i % g_stride == 0:
            run.stage = "entanglement_G"
            gs.append((grid.times[i], entanglement_G(st)))
    rho = np.array(rho)
    run.csv("rho_s_elements.csv", RHO_HEADER, _rho_rows(grid.times, rho))
    run.plot("rho_s_elements.svg", [("|rho_uu|", grid.times, np.abs(rho[:, 0, 0]), False),
                                    ("|rho_dd|", grid.times, np.abs(rho[:, 1, 1]), False),
                                    ("|rho_ud|", grid.times, np.abs(rho[:, 0, 1]), False)],
             title=f"{tag}: reduced density matrix", xlabel="t", ylabel="|rho_S|")
    if gs:
        gs = np.array(gs)
        run.csv("g_of_t.csv", ("t", "G"), gs)
        run.plot("g_of_t.svg", [("G(t)", gs[:, 0], gs[:, 1], False)], title=f"{tag}: entanglement G(t)",
                 xlabel="t", ylabel="G")
        run.summary["G_final"] = float(gs[-1, 1])
    return m, traj, rho


def fig1a(run: Run):
    _dynamics(run, int(run.config.options["g_stride"]), "fig1a")


def fig1b(run: Run):
    m, traj, rho = _dynamics(run, int(run.config.options["g_stride"]), "fig1b")
    t = run.config.grid.times
    ud = np.abs(rho[:, 0, 1])
    fit = fit_decay(t, ud)
    run.summary["decay"] = {"rate": fit.rate, "amplitude": fit.amplitude, "goodness": fit.goodness,
                            "window": list(fit.window), "rate_over_eps2": fit.rate / m.params.epsilon**2
                            if m.params.epsilon else None}
    if run.config.options["lindblad"]:
        run.stage = "lindblad"
        lm = LindbladModel.high_temperature(m.params.delta, fit.rate)
        lr = integrate_lindblad(lm, rho[0], run.config.grid)
        run.csv("lindblad_rho_s.csv", RHO_HEADER, _rho_rows(t, lr))
        run.csv("coherence_comparison.csv", ("t", "exact_abs_ud", "lindblad_abs_ud", "fit"),
                zip(t, ud, np.abs(lr[:, 0, 1]), fit(t)))
        run.plot("coherence_comparison.svg", [("exact", t, ud, False), ("Lindblad", t, np.abs(lr[:, 0, 1]), True)],
                 title="fig1b: |rho_ud| exact vs Lindblad", xlabel="t", ylabel="|rho_ud|", logy=True)


def fig2(run: Run):
    m = run.model()
    traj = m.trajectory(run.initial_state(m), run.config.grid)
    lam = m.observable(run.config.options["observable"])
    run.stage = "factorization"
    rep = factorization_test(traj, lam)
    run.csv("factorization.csv", FACTORIZATION_COLUMNS, rep.rows())
    inv = bath_invariance_test(traj, lam)
    run.csv("bath_invariance.csv", ("t", "re_expectation", "im_expectation", "deviation"),
            zip(inv.times, inv.expectation.real, inv.expectation.imag, inv.deviation))
    run.summary["relative_residual"] = rep.relative_residual
    run.summary["max_bath_deviation"] = float(inv.deviation.max())
    t = rep.times
    series = []
    for name, (a, b) in {"uu": (0, 0), "dd": (1, 1)}.items():
        series += [(f"lhs_{name}", t, rep.lhs[:, a, b].real, False), (f"rhs_{name}", t, rep.rhs[:, a, b].real, True)]
    series += [("Re lhs_ud", t, rep.lhs[:, 0, 1].real, False), ("Re rhs_ud", t, rep.rhs[:, 0, 1].real, True),
               ("Im lhs_ud", t, rep.lhs[:, 0, 1].imag, False), ("Im rhs_ud", t, rep.rhs[:, 0, 1].imag, True)]
    run.plot("factorization.svg", series, title="fig2: Tr_B[Lambda R] vs Tr_B[Lambda rho_B] rho_S", xlabel="t")


def fig3(run: Run):
    opts = run.config.options
    dists = {}
    for eps in opts["epsilons"]:
        run.stage = f"diagonalize eps={eps}"
        m = run.model(run.config.model.replace(epsilon=float(eps)))
        energies = m.total_es.energies
        sd = levelstats.spacing_distribution(energies, int(opts["fit_degree"]))
        tag = f"{float(eps):.3f}"
        run.csv(f"spacing_eps{tag}.csv", ("s", "I_emp", "I_GOE", "I_Poisson", "I_2GOE"),
                zip(sd.s, sd.empirical, sd.goe, sd.poisson, sd.two_goe))
        run.plot(f"spacing_eps{tag}.svg", [("empirical", sd.s, sd.empirical, False), ("GOE", sd.s, sd.goe, True),
                                           ("2xGOE", sd.s, sd.two_goe, True), ("Poisson", sd.s, sd.poisson, True)],
                 title=f"fig3: integrated spacing, eps={eps}", xlabel="s", ylabel="I(s)")
        dists[tag] = {ref: levelstats.goe_distance(sd, ref) for ref in levelstats.REFERENCES}
        rng = (energies.min(), energies.max())
        w, edges = density_of_states(energies, int(opts["dos_bins"]), range=rng)
        run.csv(f"dos_eps{tag}.csv", ("e_center", "weight"), zip(0.5 * (edges[1:] + edges[:-1]), w))
    run.summary["distances"] = dists


def fig4(run: Run):
    opts = run.config.options
    m = run.model()
    taus = TimeGrid(0.0, float(opts["tau_dt"]), int(opts["tau_steps"]))
    a = m.observable("a1+a2")
    rho0 = run.initial_state(m)
    t_anchor = float(opts["t_anchor"])
    st = m.trajectory(rho0, run.config.grid).at(t_anchor)
    run.stage = "correlation"
    s_t = corr.correlation_time_domain(m.bath_es, st, taus, a, t_anchor=t_anchor)
    s_0 = corr.correlation_time_domain(m.bath_es, rho0, taus, a, t_anchor=0.0)
    meta = {"t_anchor": t_anchor, "model": json.dumps(m.params.as_dict(), sort_keys=True)}
    run.csv("alpha_anchor.csv", ("tau", "re_alpha", "im_alpha"), zip(taus.times, s_t.values.real, s_t.values.imag), meta)
    run.csv("alpha_t0.csv", ("tau", "re_alpha", "im_alpha"), zip(taus.times, s_0.values.real, s_0.values.imag),
            {**meta, "t_anchor": 0.0})
    ct = corr.correlation_time(s_t, bin_width=float(opts["bin_width"]))
    run.summary["tau_star"] = ct.tau_star
    run.summary["stationarity_deviation"] = float(np.abs(s_t.values - s_0.values).max() / abs(s_0.values[0]))
    reg = run.model(m.params.replace(U=float(opts["regular_U"])))
    s_r = corr.correlation_time_domain(reg.bath_es, run.initial_state(reg), taus, a)
    run.csv("alpha_regular.csv", ("tau", "re_alpha", "im_alpha"), zip(taus.times, s_r.values.real, s_r.values.imag),
            {**meta, "U": opts["regular_U"], "t_anchor": 0.0})
    try:
        run.summary["regular_tau_star"] = corr.correlation_time(s_r, bin_width=float(opts["bin_width"])).tau_star
    except RegularBathError as exc:
        run.summary["regular_bath"] = str(exc)
    t = taus.times
    run.plot("alpha.svg", [("Re alpha", t, s_t.values.real, False), ("Im alpha", t, s_t.values.imag, True),
                           ("envelope", t, abs(s_t.values[0]) * ct.envelope(t), True)],
             title=f"fig4: bath correlation at t={t_anchor:g}", xlabel="tau")
    run.plot("alpha_regular.svg", [("Re alpha", t, s_r.values.real, False), ("Im alpha", t, s_r.values.imag, True)],
             title=f"fig4 inset: U={opts['regular_U']}", xlabel="tau")


def fig5(run: Run):
    m = run.model()
    grid = run.config.grid
    rows = []
    for t, st in zip(grid.times, m.trajectory(run.initial_state(m), grid)):
        if len(st) == 1:
            sd, _ = schmidt_decomposition(st.states[:, 0])
        else:
            sd = spectral_decomposition(trace_out_bath(st))
        rows.append((t, entropy(sd), sd.weights[0], sd.weights[1]))
    rows = np.array(rows)
    run.csv("entropy.csv", ("t", "S", "w1", "w2"), rows)
    run.plot("entropy.svg", [("S(t)", rows[:, 0], rows[:, 1], False), ("w1", rows[:, 0], rows[:, 2], True),
                             ("w2", rows[:, 0], rows[:, 3], True)], title="fig5: von Neumann entropy", xlabel="t")
    run.summary["S_final"] = float(rows[-1, 1])


def fig6(run: Run):
    m = run.model()
    t = float(run.config.options["t"])
    st = m.trajectory(run.initial_state(m), run.config.grid).at(t)
    sd = bath_eigenstate_expansion(trace_out_system(st), m.bath_es, rank=2)
    e = m.bath_es.energies
    c = sd.coefficients
    run.csv("bath_expansion.csv", ("j", "E_j", "re_c1", "im_c1", "re_c2", "im_c2", "abs2_c1", "abs2_c2"),
            ((j, e[j], c[j, 0].real, c[j, 0].imag, c[j, 1].real, c[j, 1].imag, abs(c[j, 0]) ** 2, abs(c[j, 1]) ** 2)
             for j in range(e.size)), {"t": t, "w1": sd.weights[0], "w2": sd.weights[1]})
    run.plot("bath_expansion.svg", [("|c^(1)|^2", e, abs(c[:, 0]) ** 2, False), ("|c^(2)|^2", e, abs(c[:, 1]) ** 2, True)],
             title=f"fig6: Schmidt states of rho_B at t={t:g}", xlabel="E_j")
    run.summary["schmidt_weights"] = [float(w) for w in sd.weights]


def fig7(run: Run):
    opts = run.config.options
    m = run.model()
    es = m.bath_es
    a = m.observable("a1+a2")
    taus = TimeGrid(0.0, float(opts["tau_dt"]), int(opts["tau_steps"]))
    j = int(np.argmin(np.abs(es.energies - run.config.initial["energy"])))
    s = corr.correlation_spectral(es, j, taus, a)
    run.csv("alpha_spectral.csv", ("tau", "re_alpha", "im_alpha"), zip(taus.times, s.values.real, s.values.imag),
            {"j": j, "E_j": es.energies[j]})
    js = window_indices(es, *run.config.initial["window"])
    if js.size == 0:
        js = np.array([j])
    bw = opts["bin_width"]
    stats = corr.matrix_element_statistics(es, js, a, None if bw is None else float(bw), int(opts["group"]))
    run.csv("v_of_de.csv", ("dE", "V", "count", "strength", "envelope"),
            zip(stats.bin_centers, stats.V, stats.counts, stats.strength, stats.fit(stats.bin_centers)),
            {"n_initial": js.size, "sigma": stats.fit.sigma, "tau_star": stats.tau_star})
    run.plot("v_of_de.svg", [("V(dE)", stats.bin_centers, stats.V, False),
                             ("Gaussian envelope", stats.bin_centers, stats.fit(stats.bin_centers), True)],
             title="fig7 inset: transition matrix elements", xlabel="dE")
    run.plot("alpha_spectral.svg", [("Re alpha", taus.times, s.values.real, False),
                                    ("Im alpha", taus.times, s.values.imag, True)],
             title="fig7: spectral correlation function", xlabel="tau")
    run.summary["sigma"] = stats.fit.sigma
    run.summary["tau_star_from_V"] = stats.tau_star


def eps_scan(run: Run):
    opts = run.config.options
    crit = {}
    for n, l in opts["sizes"]:
        run.stage = f"eps sweep N={n} L={l}"
        res = levelstats.critical_epsilon(run.config.model.replace(N=int(n), L=int(l)), opts["eps_grid"],
                                          float(opts["threshold"]))
        run.csv(f"critical_N{n}_L{l}.csv", ("epsilon", "goe_distance"), zip(res.epsilons, res.distances),
                {"threshold": res.threshold, "epsilon_cr": res.epsilon_cr})
        crit[f"{n},{l}"] = res.epsilon_cr
    run.summary["epsilon_cr"] = crit
    run.stage = "decay scaling"
    table = epsilon_scaling_check(run.config.model, opts["decay_epsilons"], run.config.grid, run.cache)
    run.csv("decay_scaling.csv", ("epsilon", "rate", "rate_over_eps2", "goodness"),
            ((r.epsilon, r.rate, r.rate_over_eps2, r.goodness) for r in table.rows), {"spread": table.spread})
    run.summary["rate_spread"] = table.spread


def custom(run: Run):
    opts = run.config.options
    outputs = set(opts["outputs"])
    m, traj, rho = _dynamics(run, int(opts["g_stride"]), "custom")
    if "entropy" in outputs:
        rows = []
        for t, r in zip(run.config.grid.times, rho):
            sd = spectral_decomposition(r)
            rows.append((t, entropy(sd), sd.weights[0], sd.weights[1]))
        run.csv("entropy.csv", ("t", "S", "w1", "w2"), rows)


RECIPE_FUNCS = {f.__name__: f for f in (fig1a, fig1b, fig2, fig3, fig4, fig5, fig6, fig7, eps_scan, custom)}

RECIPE_HELP = {
    "fig1a": "G(t) and rho_S(t) for a single bath eigenstate",
    "fig1b": "same for the energy-window ensemble, decay fit and Lindblad comparison",
    "fig2": "factorization test Tr_B[Lambda R] vs Tr_B[Lambda rho_B] rho_S",
    "fig3": "integrated level-spacing distributions and density of states",
    "fig4": "bath correlation function, tau*, regular (U=0) comparison",
    "fig5": "von Neumann entropy and rho_S eigenvalues",
    "fig6": "bath Schmidt states expanded in the H_B eigenbasis",
    "fig7": "spectral correlation function and V(dE) statistics",
    "eps_scan": "critical coupling sweep and decay-rate eps^2 scaling",
    "custom": "rho_S, entropy and optionally G(t) for arbitrary settings",
}


def run(config: ExperimentConfig) -> dict:
    start = time.perf_counter()
    r = Run(config)
    try:
        RECIPE_FUNCS[config.recipe](r)
    except DimensionCapError as exc:
        raise DimensionCapError(f"stage '{r.stage}': {exc}") from exc
    manifest = r.manifest(time.perf_counter() - start)
    (r.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=float) + "\n")
    return manifest
