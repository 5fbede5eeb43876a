"""Command-line front end: ``run``, ``analytic``, ``summarize``, ``trace-gen``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .analytics import CURVE_COLUMNS, DEFAULT_CONFIGS, DomainError, analytic_curves
from .engine import ConfigurationError
from .experiment import (DEFAULTS, rows_to_csv, run_experiment, summarize_rows, summary_columns,
                         validate_config, write_outputs)
from .workloads.synthetic import TraceError, gen_synthetic_trace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
OUT_ENV = "RACETRACK_ECC_OUT"


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: config error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _overrides(tokens: list[str]) -> dict:
    """``--key value`` pairs; values parse as JSON when they can."""
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigurationError(f"expected --key, got {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise ConfigurationError(f"{key}: missing value")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def load_config(path, overrides: dict) -> dict:
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigurationError("config file must hold a JSON object")
    raw.update(overrides)
    return validate_config(raw)


def _out_dir(cfg_dir, flag):
    return flag or cfg_dir or os.environ.get(OUT_ENV) or "results"


def cmd_run(args, extra):
    cfg = load_config(args.config, _overrides(extra))
    rows = run_experiment(cfg)
    if args.stdout:
        sys.stdout.write(rows_to_csv(rows))
        return
    csv_path, json_path = write_outputs(cfg, rows, _out_dir(cfg["out_dir"], args.out))
    print(f"wrote {len(rows)} rows to {csv_path} and {json_path}", file=sys.stderr)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"not a list of numbers: {text!r}") from None


def cmd_analytic(args, extra):
    if extra:
        raise ConfigurationError(f"unexpected arguments {extra}")
    configs = tuple(args.configs.split(",")) if args.configs else DEFAULT_CONFIGS
    bad = [c for c in configs if c not in DEFAULT_CONFIGS]
    if bad:
        raise ConfigurationError(f"configs: unknown {bad}; choose from {','.join(DEFAULT_CONFIGS)}")
    try:
        rows = analytic_curves(_floats(args.fault_rates), args.n, args.words, configs, args.q_mode)
    except (DomainError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
    text = rows_to_csv(rows, CURVE_COLUMNS)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_summarize(args, extra):
    if extra:
        raise ConfigurationError(f"unexpected arguments {extra}")
    try:
        with open(args.csv, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {args.csv}: {exc.strerror}") from None
    text = rows_to_csv(summarize_rows(rows), summary_columns())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_trace_gen(args, extra):
    if extra:
        raise ConfigurationError(f"unexpected arguments {extra}")
    try:
        trace = gen_synthetic_trace(args.n_ops, args.n_operands, args.seed, args.distribution)
    except TraceError as exc:
        raise ConfigurationError(str(exc)) from None
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        trace.write(args.out)
    else:
        trace.dump(sys.stdout)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="racetrack-ecc", description="Racetrack CIM error-correction simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate a workload x protection x fault-rate x seed grid",
                       epilog="Any config key can be overridden as --key value, e.g. "
                              "--fault_rate 1e-3,1e-2 --protection none,ecc --ecc_t 1,2,3. "
                              f"Keys: {', '.join(sorted(DEFAULTS))}.")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--out", help=f"output directory (default: out_dir key, ${OUT_ENV}, ./results)")
    r.add_argument("--stdout", action="store_true", help="print the CSV instead of writing files")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analytic", help="closed-form row fault-rate curves as CSV")
    a.add_argument("--fault-rates", default="1e-4,1e-3,1e-2")
    a.add_argument("--n", type=int, default=3, help="TR operand count")
    a.add_argument("--words", type=int, default=8, help="words per row")
    a.add_argument("--configs", help="comma list from none,ecc1,ecc2,ecc3,mr3,mr5,mr7")
    a.add_argument("--q-mode", choices=("eq1", "raw"), default="eq1",
                   help="MR per-copy bit error: p/n (eq1) or p (raw)")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analytic)

    s = sub.add_parser("summarize", help="aggregate a run CSV over seeds")
    s.add_argument("csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)

    t = sub.add_parser("trace-gen", help="write a synthetic AND/OR trace file")
    t.add_argument("--n-ops", type=int, default=1000)
    t.add_argument("--n-operands", type=int, default=3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--distribution", default="uniform", help="uniform or bernoulli:<density>")
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != "run":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        args.func(args, extra)
    except ConfigurationError as exc:
        print(f"racetrack-ecc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"racetrack-ecc: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
