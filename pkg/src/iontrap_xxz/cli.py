"""Command-line front end: ``iontrap-xxz <subcommand> [options]``.

Exit status: 0 success, 1 failure, 2 configuration error, 3 partial failure
(some sweep points failed but products were written). Errors are printed to
stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import pipelines
from .config import ConfigError, RunConfig, describe_defaults, load_config, serialize
from .plotting import emit_svg
from .products import write_product

OUTPUT_ENV = "IONTRAP_XXZ_OUTPUT"
EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3


def _common(p):
    p.add_argument("--config", type=Path, help="run configuration file")
    p.add_argument("--out", type=Path, help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    p.add_argument("--no-plots", action="store_true", help="write CSV only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iontrap-xxz", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--show-defaults", action="store_true", help="list every config key and exit")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("trap-modes", help="equilibrium positions and axial mode frequencies")
    _common(p)
    p.add_argument("--n", type=int, help="number of ions")

    p = sub.add_parser("couplings", help="spin-spin coupling matrix at one detuning")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--detuning", type=float, help="beatnote detuning in units of omega_z")

    p = sub.add_parser("sigma-sweep", help="decay exponent sigma across detunings")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--chain-mode", choices=("real", "equidistant", "both"))
    p.add_argument("--no-prefactor", action="store_true", help="skip the (slow) D evaluation")

    p = sub.add_parser("exponents", help="critical exponents table")
    _common(p)
    p.add_argument("--sigma", type=float, nargs="*")
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=float)

    p = sub.add_parser("phase-diagram", help="critical field against dressing angle")
    _common(p)
    p.add_argument("--points", type=int)

    p = sub.add_parser("rg-flow", help="RG flow field and trajectories")
    _common(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--d", type=int)

    p = sub.add_parser("ed-scan", help="exact-diagonalization magnetization curve")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--lam", type=float)

    p = sub.add_parser("quench", help="defect density against ramp rate")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--p", type=float)

    p = sub.add_parser("reproduce", help="all products behind one figure")
    _common(p)
    p.add_argument("figure", choices=sorted(pipelines.FIGURES))
    return ap


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    def put(section, key, value):
        nonlocal cfg
        if value is not None:
            cfg = cfg.with_(section, **{key: value})

    put("trap", "ion_count", getattr(args, "n", None))
    if args.command in ("ed-scan", "quench"):
        put("model", "n_sites", getattr(args, "n", None))
    put("beam", "detuning", getattr(args, "detuning", None))
    put("sweep", "detuning_points", getattr(args, "points", None) if args.command == "sigma-sweep" else None)
    put("sweep", "theta_points", getattr(args, "points", None) if args.command == "phase-diagram" else None)
    put("sweep", "chain_mode", getattr(args, "chain_mode", None))
    if getattr(args, "no_prefactor", False):
        put("sweep", "with_prefactor", False)
    sigma = getattr(args, "sigma", None)
    if not isinstance(sigma, list):
        put("model", "sigma", sigma)
    put("model", "d", getattr(args, "d", None))
    put("model", "p", getattr(args, "p", None))
    put("model", "lam", getattr(args, "lam", None))
    return cfg


def _run(cfg: RunConfig, args):
    cmd = args.command
    if cmd == "trap-modes":
        return pipelines.trap_modes(cfg)
    if cmd == "couplings":
        return pipelines.coupling_matrix(cfg)
    if cmd == "sigma-sweep":
        return pipelines.sigma_sweep(cfg)
    if cmd == "exponents":
        return pipelines.exponent_table(cfg, args.sigma or None)
    if cmd == "phase-diagram":
        return pipelines.phase_diagram(cfg)
    if cmd == "rg-flow":
        return pipelines.rg_flow(cfg, "fig3a" if cfg.model.sigma - cfg.model.d > cfg.model.d else "fig3b")
    if cmd == "ed-scan":
        return pipelines.ed_scan(cfg)
    if cmd == "quench":
        return pipelines.quench_sweep(cfg)
    if cmd == "reproduce":
        return pipelines.reproduce(cfg, args.figure)
    raise ValueError(f"unknown command {cmd!r}")


def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True), file=sys.stderr)


def _summary(product, paths) -> str:
    sizes = ", ".join(f"{name}={len(t)} rows" for name, t in product.tables.items())
    meta = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in sorted(product.metadata.items()) if isinstance(v, (int, float)))
    return f"{product.kind}: {sizes} -> {', '.join(str(p) for p in paths)}" + (f" [{meta}]" if meta else "")


def _print_exponents(product):
    t = product.tables["main"]
    names = t.names
    print("  ".join(f"{n:>10}" for n in names))
    for row in t.rows:
        print("  ".join(f"{v:>10.6g}" for v in row))


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.show_defaults:
        print(describe_defaults())
        return EXIT_OK
    if not args.command:
        ap.print_help()
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        _error("config", exc.detail, line=exc.line, path=exc.path)
        return EXIT_CONFIG
    except OSError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    out = args.out or Path(os.environ.get(OUTPUT_ENV) or cfg.output.directory)
    try:
        products, failures = _run(cfg, args)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_FAILURE
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.txt").write_text(serialize(cfg), encoding="utf-8")
    for product in products:
        paths = write_product(product, out)
        if cfg.output.plots and not args.no_plots:
            paths.append(emit_svg(product, out))
        if args.command == "exponents":
            _print_exponents(product)
        print(_summary(product, paths))
    if failures:
        for f in failures:
            logging.getLogger("iontrap_xxz").warning("%s", f)
        _error("partial", f"{len(failures)} sweep point(s) failed", failures=failures[:20])
        return EXIT_PARTIAL if any(not p.empty for p in products) else EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
