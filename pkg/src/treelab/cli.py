"""Batch driver: deterministic verification runs with machine-readable reports.

Usage::

    treelab <command> [--config FILE] [--seed N] [--out DIR] [--jobs N]
                      [--replay RECORD_ID]
    treelab report FILE [FILE ...]

Commands: verify, commutant, gram, intertwiner, gap, orbits, lift, psi,
report.  Configuration files are flat ``key = value`` text with a mandatory
``version = 1`` first entry; unknown keys are rejected.  Exit codes: 0 all
contracts hold, 1 a contract failed (the failing record id is printed),
2 configuration or file errors.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys

from . import suites
from .errors import ConfigError, TreeLabError
from .reporting import aggregate_report, summary_row, write_outputs

CONFIG_VERSION = 1


def _parse_scalar(raw: str, kind):
    raw = raw.strip()
    if kind is int:
        return int(raw)
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw}")
    if kind is str:
        return raw
    if kind == "int_list":
        return [int(part) for part in raw.split(",") if part.strip()]
    if kind == "str_list":
        return [part.strip() for part in raw.split(",") if part.strip()]
    raise ValueError(f"unsupported config type {kind}")


# command -> {field: (type, default)}
SCHEMAS: dict[str, dict[str, tuple]] = {
    "verify": {
        "q_list": ("int_list", [2, 3, 4, 5]),
        "cases": (int, 1000),
        "certificate_samples": (int, 50),
        "depth": (int, 4),
        "seed": (int, 0),
    },
    "commutant": {
        "q": (int, 3), "depth": (int, 4), "margin": (int, 1),
        "scope": (str, "window"), "generators": (str, "default"), "seed": (int, 0),
    },
    "gram": {
        "q": (int, 3), "depth": (int, 4), "margin": (int, 1),
        "scope": (str, "window"), "generators": (str, "default"), "seed": (int, 0),
    },
    "intertwiner": {
        "q": (int, 3), "depth": (int, 4), "margin": (int, 1),
        "scope": (str, "window"), "generators": (str, "default"), "seed": (int, 0),
    },
    "gap": {
        "q": (int, 3), "depth": (int, 5), "margin": (int, 1),
        "generators": (str, "gap-default"), "seed": (int, 0),
    },
    "orbits": {
        "q": (int, 3), "depth": (int, 2), "depth_bound": (int, -1),
        "generators": (str, "portraits"), "include_swap": (bool, False), "seed": (int, 0),
    },
    "lift": {
        "problems": ("str_list", ["shear_reflection", "orthogonal_split", "pnorm_cyclic"]),
        "seed": (int, 0),
    },
    "psi": {
        "q": (int, 3), "witnesses": (int, 5), "conjugation_cases": (int, 100),
        "seed": (int, 0),
    },
}


def parse_config(text: str, command: str) -> dict:
    """Strict flat config parser; every key must belong to the command schema."""
    schema = SCHEMAS[command]
    values = {key: default for key, (_, default) in schema.items()}
    seen_version = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not seen_version:
            if key != "version":
                raise ConfigError("config must start with a version entry")
            if int(raw.strip()) != CONFIG_VERSION:
                raise ConfigError(f"unsupported config version {raw.strip()}")
            seen_version = True
            continue
        if key == "command":
            if raw.strip() != command:
                raise ConfigError(f"config is for command {raw.strip()!r}, not {command!r}")
            continue
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown field {key!r} for command {command!r}")
        kind, _ = schema[key]
        try:
            values[key] = _parse_scalar(raw, kind)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    if text.strip() and not seen_version:
        raise ConfigError("config must start with a version entry")
    return values


def _run_verify(cfg: dict, jobs: int):
    q_list = tuple(cfg["q_list"])
    seed = cfg["seed"]
    tasks = [
        ("identities", suites.run_identity_suite, dict(q_list=q_list, cases=cfg["cases"], seed=seed)),
        ("closed_form", suites.run_closed_form_suite, dict(q_list=q_list, cases=cfg["cases"], seed=seed)),
        ("certificates", suites.run_certificate_suite,
         dict(q_list=q_list, sample_g=cfg["certificate_samples"], depth=cfg["depth"], seed=seed)),
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, **kwargs) for _, fn, kwargs in tasks]
            return [f.result() for f in futures]
    return [fn(**kwargs) for _, fn, kwargs in tasks]


def run_command(command: str, cfg: dict, jobs: int = 1):
    """Dispatch to the suite runners; returns a list of SuiteResult."""
    if command == "verify":
        return _run_verify(cfg, jobs)
    if command in ("commutant", "gram", "intertwiner"):
        return [suites.run_solver(command, cfg["q"], cfg["depth"], cfg["margin"],
                                  scope=cfg["scope"], generators=cfg["generators"],
                                  seed=cfg["seed"])]
    if command == "gap":
        return [suites.run_gap(cfg["q"], cfg["depth"], cfg["margin"],
                               generators=cfg["generators"], seed=cfg["seed"])]
    if command == "orbits":
        bound = None if cfg["depth_bound"] < 0 else cfg["depth_bound"]
        return [suites.run_orbits(cfg["q"], cfg["depth"], bound,
                                  generators=cfg["generators"],
                                  include_swap=cfg["include_swap"], seed=cfg["seed"])]
    if command == "lift":
        return [suites.run_lift_suite(tuple(cfg["problems"]), seed=cfg["seed"])]
    if command == "psi":
        return [suites.run_psi_suite(cfg["q"], cfg["witnesses"],
                                     cfg["conjugation_cases"], seed=cfg["seed"])]
    raise ConfigError(f"unknown command {command!r}")


def _replay(results, record_id: str) -> int:
    for result in results:
        for rec in result.records:
            if rec.get("record_id") == record_id:
                print("replayed failing record:")
                for key, value in sorted(rec.items()):
                    print(f"  {key}: {value}")
                return 1
    print(f"record {record_id} did not fail in this configuration", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="treelab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=list(SCHEMAS) + ["report"])
    parser.add_argument("paths", nargs="*", help="record files (report command only)")
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="out")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--replay", default=None)
    args = parser.parse_args(argv)

    if args.command == "report":
        try:
            table = aggregate_report(args.paths)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(table, end="")
        return 0

    try:
        if args.config is not None:
            with open(args.config) as fh:
                text = fh.read()
            cfg = parse_config(text, args.command)
        else:
            cfg = parse_config(f"version = {CONFIG_VERSION}\n", args.command)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        cfg["seed"] = args.seed
    print(f"seed = {cfg.get('seed', 0)}")

    try:
        results = run_command(args.command, cfg, jobs=args.jobs)
    except TreeLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.replay is not None:
        return _replay(results, args.replay)

    records = []
    summary_rows = []
    timings = []
    for result in results:
        records.extend(result.records)
        records.append(result.summary_record())
        summary_rows.append(summary_row(result))
        timings.append((result.suite, result.wall_ms))
    write_outputs(args.out, args.command, records, summary_rows, timings)

    failed = [r for r in results if not r.ok]
    if failed:
        first = next(rec for r in failed for rec in r.records if rec.get("record") == "failure")
        print(f"contract violation: {first['record_id']}", file=sys.stderr)
        return 1
    return 0


def console_main():  # pragma: no cover
    raise SystemExit(main())


if __name__ == "__main__":  # pragma: no cover
    console_main()
