"""Command-line entry point: ``rmtlab <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .bounds import BoundConstants, theorem42_certificate
from .errors import NumericError, RmtLabError
from .harness import (
    ExperimentConfig,
    default_workers,
    emit_records,
    format_records,
    format_summary,
    run_experiment,
)
from .spectral import esd, write_esd_csv
from .matrix import sample_matrix

SUBCOMMANDS = {
    "converge": "converge",
    "heavy-tail": "heavy-tail",
    "mp-check": "mp-check",
    "truncate": "truncate-pipeline",
    "probe": "probe",
}


def _experiment_parser(sub, name: str, help_text: str) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--config", help="TOML file with ExperimentConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="record file (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--workers", type=int, help="process count (fallback: $RMTLAB_WORKERS, then 1)")
    p.add_argument("--dist")
    p.add_argument("--z", type=float)
    p.add_argument("--m", type=int, nargs="+", dest="m_list", metavar="M")
    p.add_argument("--trials", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--timing", action="store_true", default=None, help="fill wall_ms")
    if name == "probe":
        p.add_argument("--kind", dest="probe_kind", choices=("trim-bound", "iy-card", "vertex"))
    if name == "mp-check":
        p.add_argument("--esd-out", help="also write lambda,F_emp,F_mp for trial 0 of the largest m")
    if name == "truncate":
        p.add_argument("--gap-threshold", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtlab", description="Smallest singular value lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _experiment_parser(sub, "converge", "s_m / sqrt(N) against 1 - sqrt(z)")
    _experiment_parser(sub, "heavy-tail", "norm blow-up vs stable s_m and trimmed sup")
    _experiment_parser(sub, "mp-check", "KS distance of the ESD to Marchenko-Pastur")
    _experiment_parser(sub, "truncate", "coupled truncation gap")
    _experiment_parser(sub, "probe", "Monte Carlo probes of single-vector estimates")

    c = sub.add_parser("certify", help="threshold certificate for the coupled truncation")
    c.add_argument("--eta", type=float, required=True)
    c.add_argument("--M", type=float, required=True)
    c.add_argument("--c-bernstein", type=float, default=1.0)
    c.add_argument("--C-cubicnet", type=float, default=1.0)
    c.add_argument("--c-31", type=float, default=1.0)
    c.add_argument("--C-31", type=float, default=1.0)
    c.add_argument("--delta", type=float, help="flat-vector radius (distribution-dependent)")
    c.add_argument("--n35", type=int, help="cube-vertex size threshold (distribution-dependent)")
    c.add_argument("--json-only", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    experiment = SUBCOMMANDS[args.command]
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "seed", "format", "dist", "z", "m_list", "trials", "eps", "eta",
            "restarts", "timing", "probe_kind", "gap_threshold",
        )
    }  # fmt: skip
    overrides["output"] = args.out
    if args.config:
        cfg = ExperimentConfig.from_toml(args.config, **overrides)
        if cfg.experiment != experiment:
            from .errors import ConfigError

            raise ConfigError(f"config experiment {cfg.experiment!r} does not match subcommand {args.command!r}")
        return cfg
    return ExperimentConfig.from_dict({"experiment": experiment, **{k: v for k, v in overrides.items() if v is not None}})


def _run_experiment(args) -> int:
    cfg = _config(args)
    workers = args.workers if args.workers is not None else default_workers()
    records, summary = run_experiment(cfg, workers)
    if cfg.output:
        emit_records(records, cfg.output, cfg.format)
        print(format_summary(summary))
    else:
        sys.stdout.write(format_records(records, cfg.format))
        if summary:
            print(format_summary(summary), file=sys.stderr)
    if getattr(args, "esd_out", None):
        m = cfg.m_list[-1]
        rec = next(r for r in records if r.m == m and r.trial == 0)
        write_esd_csv(esd(sample_matrix(cfg.dist, rec.N, m, rec.seed)), cfg.z, args.esd_out)
    return 0


def _certify(args) -> int:
    consts = BoundConstants(
        c_bernstein=args.c_bernstein, C_cubicnet=args.C_cubicnet, c_31=args.c_31, C_31=args.C_31
    )
    cert = theorem42_certificate(args.eta, args.M, consts, delta_34=args.delta, n_35=args.n35)
    if not args.json_only:
        print(cert.to_text())
        print()
    print(json.dumps(cert.to_json(), indent=2))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "certify":
            return _certify(args)
        return _run_experiment(args)
    except NumericError as exc:
        print(f"rmtlab: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (RmtLabError, ValueError, OSError) as exc:
        print(f"rmtlab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
