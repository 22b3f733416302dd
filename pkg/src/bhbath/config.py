"""Experiment configuration: YAML file with flat keys plus a recipe-specific ``options`` table.

Schema::

    recipe: fig1a            # required, see `lab recipes`
    output_dir: out/fig1a    # default out/<recipe>
    cache_dir: .lab_cache    # eigensystem cache; null disables caching
    model:   {J, U, L, N, delta, epsilon}
    grid:    {t0, dt, steps}
    initial: {p_up, energy, window: [emin, emax], bath: pure | window}
    options: {...}           # per recipe, see RECIPE_OPTIONS
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .evolution import TimeGrid
from .operators import ModelParams

SCHEMA_VERSION = 1

RECIPES = ("fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "eps_scan", "custom")

RECIPE_OPTIONS = {
    "fig1a": {"g_stride": 1},
    "fig1b": {"g_stride": 10, "lindblad": True},
    "fig2": {"observable": "a1+a2*a2+a1"},
    "fig3": {"epsilons": [0.0, 0.2], "fit_degree": 7, "dos_bins": 40},
    "fig4": {"tau_dt": 0.05, "tau_steps": 400, "t_anchor": 100.0, "regular_U": 0.0, "bin_width": 0.5},
    "fig5": {},
    "fig6": {"t": 200.0},
    "fig7": {"tau_dt": 0.05, "tau_steps": 400, "bin_width": None, "group": 5},
    "eps_scan": {"sizes": [[5, 6], [6, 7]], "eps_grid": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
                 "threshold": 0.05, "decay_epsilons": [0.1, 0.15, 0.2]},
    "custom": {"outputs": ["rho_s", "entropy"], "g_stride": 0},
}

RECIPE_MODEL_OVERRIDES = {"fig7": {"N": 7, "L": 8}}
RECIPE_INITIAL_OVERRIDES = {"fig1b": {"bath": "window"}, "fig2": {"bath": "window"}, "fig4": {"bath": "window"}}

DEFAULT_INITIAL = {"p_up": 0.7, "energy": 2.8361, "window": [2.45, 3.21], "bath": "pure"}
TOP_KEYS = {"recipe", "output_dir", "cache_dir", "model", "grid", "initial", "options", "seed"}


@dataclass
class ExperimentConfig:
    recipe: str
    model: ModelParams = field(default_factory=ModelParams)
    grid: TimeGrid = field(default_factory=TimeGrid)
    initial: dict = field(default_factory=lambda: dict(DEFAULT_INITIAL))
    options: dict = field(default_factory=dict)
    output_dir: Path = Path("out")
    cache_dir: Path | None = Path(".lab_cache")
    seed: int = 0

    def resolved(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "recipe": self.recipe,
            "model": self.model.as_dict(),
            "grid": {"t0": self.grid.t0, "dt": self.grid.dt, "steps": self.grid.steps},
            "initial": self.initial,
            "options": self.options,
            "output_dir": str(self.output_dir),
            "cache_dir": None if self.cache_dir is None else str(self.cache_dir),
            "seed": self.seed,
        }


def _sub(raw: dict, key: str, allowed, where: str) -> dict:
    sub = raw.get(key) or {}
    if not isinstance(sub, dict):
        raise ConfigError(f"{where}: '{key}' must be a mapping")
    unknown = set(sub) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)} in '{key}'; allowed: {sorted(allowed)}")
    return sub


def from_dict(raw: dict, where: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: top level must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown top-level key(s) {sorted(unknown)}; allowed: {sorted(TOP_KEYS)}")
    recipe = raw.get("recipe")
    if recipe not in RECIPES:
        raise ConfigError(f"{where}: 'recipe' must be one of {list(RECIPES)}, got {recipe!r}")
    model_fields = ModelParams().as_dict()
    model = {**model_fields, **RECIPE_MODEL_OVERRIDES.get(recipe, {}), **_sub(raw, "model", model_fields, where)}
    try:
        params = ModelParams(J=float(model["J"]), U=float(model["U"]), L=int(model["L"]), N=int(model["N"]),
                             delta=float(model["delta"]), epsilon=float(model["epsilon"]))
        g = {"t0": 0.0, "dt": 1.0, "steps": 200, **_sub(raw, "grid", ("t0", "dt", "steps"), where)}
        grid = TimeGrid(float(g["t0"]), float(g["dt"]), int(g["steps"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    if params.L < 2 or params.N < 0:
        raise ConfigError(f"{where}: model needs L >= 2 and N >= 0")
    initial = {**DEFAULT_INITIAL, **RECIPE_INITIAL_OVERRIDES.get(recipe, {}),
               **_sub(raw, "initial", DEFAULT_INITIAL, where)}
    if initial["bath"] not in ("pure", "window"):
        raise ConfigError(f"{where}: initial.bath must be 'pure' or 'window'")
    if not 0 <= float(initial["p_up"]) <= 1:
        raise ConfigError(f"{where}: initial.p_up must lie in [0, 1]")
    options = {**RECIPE_OPTIONS[recipe], **_sub(raw, "options", RECIPE_OPTIONS[recipe], where)}
    cache_dir = raw.get("cache_dir", ".lab_cache")
    return ExperimentConfig(
        recipe=recipe,
        model=params,
        grid=grid,
        initial=initial,
        options=options,
        output_dir=Path(raw.get("output_dir") or f"out/{recipe}"),
        cache_dir=None if cache_dir is None else Path(cache_dir),
        seed=int(raw.get("seed", 0)),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    return from_dict(raw or {}, str(path))
