"""Command-line front end.

    nlspin simulate <config-path> [--jobs N] [--output DIR] [--seed S]
    nlspin catalog list
    nlspin catalog run <name> [--jobs N] [--output DIR] [--seed S]

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import load_config
from .errors import ConfigError, IntegrationDivergedError
from .scenarios import run_scenario

CATALOG = ("fig1a", "fig1b", "fig2", "fig3-1", "fig3-2", "fig4")

CATALOG_NOTES = {
    "fig1a": "one spin, weak drive (rate/|omega| = 0.25), spiral to the analytic fixed point",
    "fig1b": "one spin, strong drive (rate/|omega| = 25), relaxation near -target_axis",
    "fig2": "one-spin thermalization ensemble under a correlated fluctuating field",
    "fig3-1": "two spins, perturbed maximally entangled start (butterfly run)",
    "fig3-2": "two spins, weakly entangled start disentangling to a product state",
    "fig4": "driven two-spin model at matched resonance, limit-cycle detection",
}


def catalog_path(name: str) -> Path:
    if name not in CATALOG:
        raise ConfigError(
            f"unknown catalog entry {name!r} (known: {', '.join(CATALOG)})"
        )
    return Path(str(resources.files("nlspin").joinpath(f"catalog/{name}.yaml")))


def _add_run_options(parser):
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent ensemble members (default 1)")
    parser.add_argument("--output", type=Path, default=None,
                        help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed override")


def _execute(config_path, args) -> int:
    config = load_config(config_path, seed_override=args.seed)
    result = run_scenario(config, output=args.output, jobs=args.jobs)
    print(f"wrote {len(result.files)} data file(s) to {result.output_dir}"
          f" (manifest: {result.manifest_path.name})")
    for summary in result.summaries:
        lc = summary.get("limit_cycle")
        if lc is not None:
            if lc.get("detected"):
                print(f"limit cycle detected: period {lc['period']:.6g},"
                      f" peak-to-peak amplitude {lc['amplitude']:.6g}")
            else:
                print("limit cycle not detected")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlspin",
        description="Scenario-driven simulations of nonlinear spin dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario config file")
    p_sim.add_argument("config", type=Path)
    _add_run_options(p_sim)

    p_cat = sub.add_parser("catalog", help="bundled experiment configs")
    cat_sub = p_cat.add_subparsers(dest="catalog_command", required=True)
    cat_sub.add_parser("list", help="list bundled configs")
    p_run = cat_sub.add_parser("run", help="run a bundled config by name")
    p_run.add_argument("name")
    _add_run_options(p_run)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _execute(args.config, args)
        if args.command == "catalog":
            if args.catalog_command == "list":
                for name in CATALOG:
                    print(f"{name}: {CATALOG_NOTES[name]}")
                return 0
            return _execute(catalog_path(args.name), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationDivergedError as exc:
        print(f"integration diverged: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
