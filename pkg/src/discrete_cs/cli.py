"""Command line entry point: ``discrete-cs {run,curves,tune-ist,genie,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, verify
from .estimators import soft_feedback
from .signal import SignalPrior, quantize_elementwise


def _config_from_args(args, **preset) -> harness.ExperimentConfig:
    config = harness.load_config(args.config) if args.config else harness.ExperimentConfig(**preset)
    overrides = {}
    for key in ("L", "K", "s", "trials", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.algorithms:
        overrides["algorithms"] = args.algorithms.split(",")
    if args.noise_db:
        overrides["noise_levels_db"] = [float(v) for v in args.noise_db.split(",")]
    return replace(config, **overrides)


def _out_dir(args, config) -> Path:
    if args.out:
        return Path(args.out)
    if config.output_dir:
        return Path(config.output_dir)
    return harness.default_output_dir()


def _run_and_write(config, out: Path, title: str) -> harness.SerCurve:
    curve = harness.run_curve(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(harness.format_config(config))
    harness.emit_csv(curve, out / "curve.csv")
    harness.emit_svg(curve, out / "curve.svg", title=title)
    harness.write_manifest(config, curve, out / "manifest.json")
    for p in curve.points:
        low, high = p.ci
        print(f"{p.algorithm:16s} {p.noise_db:6.2f} dB  SER {p.ser:.3e}  [{low:.2e}, {high:.2e}]  diverged {p.diverged}")
    print(f"wrote {out}")
    return curve


def cmd_run(args) -> int:
    config = _config_from_args(args)
    _run_and_write(config, _out_dir(args, config), f"L={config.L}, K={config.K}, s={config.s}")
    return 0


def cmd_genie(args) -> int:
    preset = dict(
        algorithms=["ims", "ims_genie_ee", "ims_genie_dd", "ims_genie_both"],
        noise_levels_db=[10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0],
    )
    config = _config_from_args(args, **preset)
    _run_and_write(config, _out_dir(args, config), "IMS/Q with true error variances")
    return 0


def cmd_tune_ist(args) -> int:
    config = _config_from_args(args)
    table = harness.tune_ist_tau(config)
    text = json.dumps({f"{k:g}": v for k, v in table.items()}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_curves(args) -> int:
    prior = SignalPrior(args.L, args.s)
    x = np.linspace(-args.range, args.range, args.points)
    variances = [float(v) for v in args.variances.split(",")]
    columns = {"x_tilde": x, "hard": quantize_elementwise(x)}
    for var in variances:
        columns[f"soft_var_{var:g}"] = soft_feedback(x, var, prior)[0]
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in zip(*columns.values()):
            writer.writerow(f"{v:.10g}" for v in row)
    finally:
        if args.out:
            stream.close()
    return 0


def cmd_verify(args) -> int:
    failed = 0
    for result in verify.run_all():
        print(result.line())
        failed += not result.passed
    return 1 if failed else 0


def _experiment_args(p):
    p.add_argument("--config", help="experiment file (key = value format)")
    p.add_argument("--L", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--algorithms", help="comma separated, e.g. ims,tsr,iht,ist,omp")
    p.add_argument("--noise-db", help="comma separated noise levels 1/sigma_n^2 in dB")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help=f"output directory (default ${harness.OUTPUT_ENV} or ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discrete-cs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="SER curves for a set of algorithms")
    _experiment_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("genie", help="IMS/Q against its genie-aided variants")
    _experiment_args(p)
    p.set_defaults(func=cmd_genie)

    p = sub.add_parser("tune-ist", help="grid search of the IST threshold per noise level")
    _experiment_args(p)
    p.set_defaults(func=cmd_tune_ist)

    p = sub.add_parser("curves", help="soft-feedback characteristic curves as CSV")
    p.add_argument("--L", type=int, default=200)
    p.add_argument("--s", type=int, default=20)
    p.add_argument("--variances", default="0.01,0.05,0.5")
    p.add_argument("--range", type=float, default=2.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("verify", help="run the reference equivalence checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
