"""Command-line entry point.

Settings are merged as defaults < ``--config`` JSON file < flags.  Exit
status is 0 on success, 2 for configuration errors, 3 for numeric refusals
(overflow guard, Fermi-level ties) and 4 for solver failures.  Errors are
also written to stderr as a one-line JSON record.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import OUTPUT_DIR_ENV, TASKS, RunConfig, load_config_file
from .errors import NegentError
from .output import emit, resolve_output_path
from .tasks import oracle_failed, run

# argparse dest -> configuration key
_FLAG_KEYS = {
    "model": "model", "t": "t", "a0": "a0", "b0": "b0", "B": "B", "M": "M", "delta": "delta",
    "alpha": "alpha", "lam": "lambda", "Z": "Z", "k0": "k0", "L": "L", "Ly": "Ly", "bc": "bc",
    "ef": "ef", "renyi": "renyi", "task": "task", "L_list": "L_list", "Ly_list": "Ly_list",
    "saturation_L": "saturation_L", "subregion_fraction": "subregion_fraction",
    "branch": "branch", "out": "out", "format": "format", "threads": "threads", "plot": "plot",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="negent", description="Entanglement entropy of non-Hermitian free-fermion ribbons.",
        epilog=f"Output goes to --out, else ${OUTPUT_DIR_ENV}/<task>.<format>, else stdout.")
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--model", choices=("two-band", "four-band"))
    g2 = p.add_argument_group("two-band parameters")
    g2.add_argument("--t", type=float)
    g2.add_argument("--a0", type=float)
    g2.add_argument("--b0", type=float)
    g2.add_argument("--B", type=int)
    g4 = p.add_argument_group("four-band parameters")
    g4.add_argument("--M", type=float)
    g4.add_argument("--delta", type=float)
    g4.add_argument("--alpha", type=float)
    g4.add_argument("--lambda", dest="lam", type=float)
    g4.add_argument("--Z", type=float)
    g4.add_argument("--k0", type=float, help="default arcsin(Z)")
    geo = p.add_argument_group("geometry")
    geo.add_argument("--L", type=int, help="cells around the cylinder (even)")
    geo.add_argument("--Ly", type=int, help="cells across the ribbon")
    geo.add_argument("--bc", choices=("open", "periodic"), help="y boundary")
    geo.add_argument("--subregion-fraction", type=float)
    run_ = p.add_argument_group("run")
    run_.add_argument("--ef", type=float, help="Fermi energy")
    run_.add_argument("--renyi", help="Renyi orders, e.g. 2,3")
    run_.add_argument("--L-list", help="e.g. 100,200,400 or logspace:100:600:9 or range:60:140:2")
    run_.add_argument("--Ly-list", help="same syntax as --L-list")
    run_.add_argument("--saturation-L", type=int, help="gapped-scaling: L for the S_min scan")
    run_.add_argument("--branch", choices=("symmetric", "principal"),
                      help="log branch for real occupations outside [0, 1]")
    run_.add_argument("--threads", type=int, help="0 = all cores")
    out = p.add_argument_group("output")
    out.add_argument("--out", help="output file, '-' for stdout")
    out.add_argument("--format", choices=("csv", "json"))
    out.add_argument("--plot", action="store_true", default=None,
                     help="also render a PNG next to the output (needs matplotlib)")
    return p


def merged_settings(args: argparse.Namespace) -> dict:
    settings = load_config_file(args.config) if args.config else {}
    for dest, key in _FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            settings[key] = v
    return settings


def _error_record(exc: NegentError) -> str:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    for attr in ("log_magnitude", "k", "exponent", "size"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = v
    if getattr(exc, "energy", None) is not None:
        rec["energy"] = [exc.energy.real, exc.energy.imag]
    return json.dumps(rec)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_mapping(merged_settings(args))
        env = run(cfg)
        written = emit(env, cfg.output_format, cfg.output_path)
        for w in env.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if cfg.plot:
            from .plots import render
            base = written or resolve_output_path(None, cfg.task, cfg.output_format) \
                or os.path.join(os.getcwd(), f"{cfg.task}.{cfg.output_format}")
            fig = render(env, os.path.splitext(base)[0] + ".png")
            if fig:
                print(f"figure: {fig}", file=sys.stderr)
    except NegentError as exc:
        print(_error_record(exc), file=sys.stderr)
        return exc.exit_code
    if oracle_failed(env):
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
