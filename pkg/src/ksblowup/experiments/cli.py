"""Command line entry point: simulate, certify, sweep, verify, plot."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ConfigError, KSBlowupError, RegimeError
from . import io

EXIT_OK = 0
EXIT_CHECKS = 1
EXIT_USAGE = 2


def _section(title: str) -> None:
    print(f"----- {title} -----")


def _kv(key, value) -> None:
    if isinstance(value, float):
        value = repr(value)
    print(f"{key}: {value}")


def _print_checks(rows) -> None:
    by_name = {}
    for r in rows:
        name = r["name"] if isinstance(r, dict) else r.name
        passed = r["passed"] if isinstance(r, dict) else r.passed
        tot, ok = by_name.get(name, (0, 0))
        by_name[name] = (tot + 1, ok + bool(passed))
    _section("checks")
    for name in sorted(by_name):
        tot, ok = by_name[name]
        print(f"{name}\t{ok}/{tot}\t{'PASS' if ok == tot else 'FAIL'}")


def cmd_simulate(args) -> int:
    from .config import load_config
    from .runner import run

    cfg = load_config(args.config)
    if args.output:
        from dataclasses import replace
        cfg = replace(cfg, output=args.output)
    art = run(cfg, plots=not args.no_plots)
    _section("run")
    _kv("directory", str(art.directory))
    _kv("regime", cfg.params.regime.value)
    for note in art.notes:
        _kv("note", note)
    for solver, rep in sorted(art.reports.items()):
        _section(f"blowup {solver}")
        for k, v in rep.summary().items():
            _kv(k, v)
    if art.crosscheck:
        _section("crosscheck")
        worst = max(art.crosscheck, key=lambda r: r["rel_dev"])
        _kv("max_rel_dev", worst["rel_dev"])
        _kv("at_t", worst["t"])
    if art.certificate is not None:
        _section("certificate")
        _kv("certified_bound", art.certificate.certified_bound)
        _kv("s0", art.certificate.s0)
        _kv("r1", art.certificate.r1)
    _print_checks(art.checks)
    if art.plots:
        _section("plots")
        for p in art.plots:
            print(p)
    return art.exit_code


def cmd_certify(args) -> int:
    from .config import load_config
    from ..certificate import certify

    cfg = load_config(args.config)
    gamma = args.gamma if args.gamma is not None else cfg.cert_gamma
    cert = certify(cfg.params, gamma)
    _section("certificate")
    print(json.dumps(io._json_safe(cert.to_dict()), indent=2, sort_keys=True))
    if args.output:
        io.write_json(args.output, cert.to_dict())
        _kv("written", args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .config import load_config
    from .runner import parse_axis, sweep

    cfg = load_config(args.config)
    if args.output:
        cfg = replace(cfg, output=args.output)
    axes = [parse_axis(a) for a in args.axis or []]
    rows = sweep(cfg, axes, workers=args.workers)
    _section("sweep")
    _kv("cells", len(rows))
    _kv("summary", str(Path(cfg.output) / io.SUMMARY))
    names = [a for a, _ in axes]
    cols = ["cell"] + names + ["regime", "detected", "T_hat", "min_rel_margin", "checks_passed", "error"]
    print("\t".join(cols))
    for r in rows:
        print("\t".join(io._cell(r.get(c, "")) for c in cols))
    failed = any(r["error"] or not r["checks_passed"] for r in rows)
    return EXIT_CHECKS if failed else EXIT_OK


def cmd_verify(args) -> int:
    from .runner import verify

    run_dir = Path(args.run_dir)
    if not (run_dir / io.CONFIG).exists():
        raise ConfigError(f"{run_dir} is not a run directory (no {io.CONFIG})")
    report = verify(run_dir)
    _print_checks(report.records)
    _section("verify")
    _kv("records", len(report.records))
    _kv("failures", len(report.failures()))
    return EXIT_OK if report.passed else EXIT_CHECKS


def cmd_plot(args) -> int:
    from .plotting import render_run

    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"{run_dir} is not a directory")
    _section("plots")
    for p in render_run(run_dir):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--deterministic", action="store_true", default=True,
                        help="accepted for clarity; numerics are always deterministic")
    ap = argparse.ArgumentParser(prog="ksblowup", description=__doc__, parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run solver(s) and diagnostics from a config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="override [output] directory")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", parents=[common], help="emit the blow-up certificate for a config")
    p.add_argument("config")
    p.add_argument("--gamma", type=float)
    p.add_argument("-o", "--output", help="write the certificate document here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="one run per point of the axis product")
    p.add_argument("config")
    p.add_argument("--axis", action="append", metavar="NAME=V1,V2,...")
    p.add_argument("-o", "--output")
    p.add_argument("--workers", type=int, help="default: $KSBLOWUP_WORKERS or 1")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="re-evaluate checks from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", parents=[common], help="render figures for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KSBlowupError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
