"""Command line entry point: ``lab run|recipes|validate|cache``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .cache import EigenCache
from .config import RECIPES, load_config
from .errors import ConfigError, DimensionCapError


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    from .recipes import run

    manifest = run(cfg)
    print(f"{cfg.recipe}: wrote {len(manifest['outputs'])} files to {cfg.output_dir} "
          f"in {manifest['wall_time_s']:.1f}s")
    if manifest["summary"]:
        print(json.dumps(manifest["summary"], indent=2, sort_keys=True, default=float))
    return 0


def _cmd_recipes(args) -> int:
    from .recipes import RECIPE_HELP

    for name in RECIPES:
        print(f"{name:9s} {RECIPE_HELP[name]}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    return 0


def _cmd_cache(args) -> int:
    cache = EigenCache(args.cache_dir)
    if args.action == "ls":
        for p in cache.entries():
            print(f"{p.name}\t{p.stat().st_size}")
    else:
        print(f"removed {cache.clear()} entries")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Spin + Bose-Hubbard bath numerical experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a recipe from a YAML config")
    r.add_argument("config")
    r.add_argument("-o", "--output-dir")
    r.set_defaults(func=_cmd_run)
    sub.add_parser("recipes", help="list recipes").set_defaults(func=_cmd_recipes)
    v = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    c = sub.add_parser("cache", help="inspect or clear the eigensystem cache")
    c.add_argument("action", choices=("ls", "clear"))
    c.add_argument("--cache-dir", default=".lab_cache")
    c.set_defaults(func=_cmd_cache)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
