"""Command-line entry point: run, sweep, validate, oracle.

Scenarios come from an INI-style config file (section ``[scenario]``,
plus ``[sweep]`` listing grid values per field); command-line flags
override file values.  Results land in the output directory as
``results.csv`` plus one frame-length PMF file per run.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import fields, replace
from pathlib import Path

from .harness import (
    ConfigError,
    ScenarioConfig,
    frame_pmf_csv,
    results_csv,
    run_scenario,
    run_sweep,
    validate,
)
from .oracles import allocation_suite, channel_law_suite, decision_rule_suite

_INT_KEYS = {
    "n_nodes",
    "total_slots",
    "warmup_slots",
    "seed",
    "replications",
    "reset_patience",
    "stability_window",
    "fsa_frame_len",
    "ta_threshold",
    "initial_y_value",
}
_FLOAT_KEYS = {"lam", "ta_tx_prob", "stability_eps"}
_BOOL_KEYS = {"complexity_shortcut", "check_invariants"}
_ALIASES = {"nodes": "n_nodes", "lambda": "lam"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "w_min":
        return raw if raw == "sweep" else int(raw)
    if key == "initial_y":
        if raw in ("ramp", "uniform"):
            return raw
        return tuple(int(part) for part in raw.split(","))
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean {key}={raw!r}")
    return raw


def _load_config(path: str | None) -> tuple[ScenarioConfig, dict[str, list]]:
    cfg = ScenarioConfig()
    grid: dict[str, list] = {}
    if path is None:
        return cfg, grid
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError([f"cannot read config file {path!r}"])
    known = {f.name for f in fields(ScenarioConfig)}
    if parser.has_section("scenario"):
        overrides = {}
        for raw_key, raw in parser.items("scenario"):
            key = _ALIASES.get(raw_key, raw_key)
            if key not in known:
                raise ConfigError([f"unknown scenario key {raw_key!r}"])
            overrides[key] = _parse_value(key, raw)
        cfg = replace(cfg, **overrides)
    if parser.has_section("sweep"):
        for raw_key, raw in parser.items("sweep"):
            key = _ALIASES.get(raw_key, raw_key)
            if key not in known:
                raise ConfigError([f"unknown sweep key {raw_key!r}"])
            grid[key] = [_parse_value(key, part) for part in raw.split(",")]
    return cfg, grid


def _apply_flag_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    overrides = {}
    for key in (
        "protocol",
        "n_nodes",
        "lam",
        "w_min",
        "total_slots",
        "warmup_slots",
        "seed",
        "replications",
        "fsa_frame_len",
        "ta_threshold",
        "ta_tx_prob",
        "initial_y",
        "reset_patience",
    ):
        value = getattr(args, key, None)
        if value is not None:
            if key in ("w_min", "initial_y") and isinstance(value, str):
                value = _parse_value(key, value)
            overrides[key] = value
    if getattr(args, "complexity_shortcut", False):
        overrides["complexity_shortcut"] = True
    if getattr(args, "check_invariants", False):
        overrides["check_invariants"] = True
    return replace(cfg, **overrides) if overrides else cfg


def _add_scenario_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file with a [scenario] section")
    sub.add_argument("--protocol", choices=("tdfsa", "fixed_fsa", "ideal_dfsa", "threshold_aloha"))
    sub.add_argument("--nodes", dest="n_nodes", type=int)
    sub.add_argument("--lambda", dest="lam", type=float)
    sub.add_argument("--w-min", dest="w_min", help="integer or 'sweep'")
    sub.add_argument("--total-slots", dest="total_slots", type=int)
    sub.add_argument("--warmup-slots", dest="warmup_slots", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--replications", type=int)
    sub.add_argument("--fsa-frame-len", dest="fsa_frame_len", type=int)
    sub.add_argument("--ta-threshold", dest="ta_threshold", type=int)
    sub.add_argument("--ta-tx-prob", dest="ta_tx_prob", type=float)
    sub.add_argument("--initial-y", dest="initial_y", help="ramp, uniform, or comma list")
    sub.add_argument("--reset-patience", dest="reset_patience", type=int)
    sub.add_argument("--complexity-shortcut", dest="complexity_shortcut", action="store_true")
    sub.add_argument("--check-invariants", dest="check_invariants", action="store_true")
    sub.add_argument("--out", default="out", help="output directory (default: out)")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--format", default="csv", choices=("csv",))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdfsa",
        description="Age-aware framed random access simulator (T-DFSA and baselines)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run one scenario")
    _add_scenario_flags(run_cmd)

    sweep_cmd = commands.add_parser("sweep", help="run a config-defined parameter grid")
    _add_scenario_flags(sweep_cmd)

    validate_cmd = commands.add_parser("validate", help="check a config without running")
    _add_scenario_flags(validate_cmd)

    oracle_cmd = commands.add_parser("oracle", help="run the brute-force verification suites")
    oracle_cmd.add_argument("--quick", action="store_true", help="smaller case counts")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg, _ = _load_config(args.config)
    cfg = _apply_flag_overrides(cfg, args)
    result = run_scenario(cfg, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv([result]))
    (out / "frame_pmf.csv").write_text(frame_pmf_csv(result))
    print(
        f"{cfg.protocol} N={cfg.n_nodes} lambda={cfg.lam:g}: "
        f"aag={result.aag:.6g} aaoi={result.aaoi:.6g} n_aaoi={result.n_aaoi:.6g} "
        f"throughput={result.throughput:.6g} stable={str(result.stable).lower()}"
    )
    print(f"wrote {out / 'results.csv'} and {out / 'frame_pmf.csv'}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg, grid = _load_config(args.config)
    cfg = _apply_flag_overrides(cfg, args)
    if not grid:
        print("sweep requires a [sweep] section in the config file", file=sys.stderr)
        return 2
    rows = run_sweep(cfg, grid, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv(rows))
    for row in rows:
        if row.result is not None:
            (out / f"frame_pmf_{row.index:04d}.csv").write_text(frame_pmf_csv(row.result))
        else:
            print(f"point {row.index} failed: {row.error}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {out / 'results.csv'}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        cfg, _ = _load_config(args.config)
        cfg = _apply_flag_overrides(cfg, args)
    except ConfigError as exc:
        for message in exc.diagnostics:
            print(f"error: {message}")
        return 1
    problems = validate(cfg)
    if problems:
        for message in problems:
            print(f"error: {message}")
        return 1
    print("config ok")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    cases = 50 if args.quick else 200
    reports = [
        decision_rule_suite(cases=cases),
        allocation_suite(l_max=8 if args.quick else 12),
        channel_law_suite(),
    ]
    ok = True
    for report in reports:
        print(report.summary())
        for failure in report.failures[:5]:
            print(f"  {failure}")
        ok = ok and report.passed
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
    except ConfigError as exc:
        for message in exc.diagnostics:
            print(f"error: {message}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
