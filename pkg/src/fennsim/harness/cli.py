"""``fenn-sim`` command line.

    fenn-sim <experiment> [--seed S] [--repeats R] [--out DIR] [--config FILE] [--set KEY=VALUE ...]

``experiment`` is one of the harness experiments or ``all``.  The config file
is flat ``key = value`` text (``#`` starts a comment); it may set
``experiment``, ``seed``, ``repeats``, ``out`` and any experiment parameter.
Command-line flags override the file.

Exit status: 0 on success, 1 when a self check fails (e.g. simulator and
oracle disagree), 2 on a bad argument, a failed precondition or a machine trap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..core import MachineError
from ..formats import FormatError
from ..kernels.config import ConfigError
from .experiments import (DEFAULT_PARAMS, DEFAULT_SEED, EXPERIMENTS, ExperimentSpec, report, run_experiment,
                          write_tables)

SPEC_KEYS = {"experiment", "seed", "repeats", "out"}


class UsageError(ValueError):
    pass


def parse_config(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"config line {n}: empty key")
        if key in out:
            raise UsageError(f"config line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def coerce(key: str, value: str, default):
    """Convert ``value`` to the type of ``default``."""
    try:
        if isinstance(default, bool):
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value, 0)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {value!r} as {type(default).__name__}") from None
    return value


def build_spec(experiment: str, settings: dict) -> ExperimentSpec:
    defaults = DEFAULT_PARAMS[experiment]
    params = {}
    for key, value in settings.items():
        if key in SPEC_KEYS:
            continue
        if key not in defaults:
            raise UsageError(f"unknown parameter {key!r} for {experiment}")
        params[key] = coerce(key, value, defaults[key])
    seed = coerce("seed", settings.get("seed", str(DEFAULT_SEED)), 0)
    repeats = coerce("repeats", settings.get("repeats", "32"), 0)
    if not 0 <= seed < 1 << 64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if repeats < 1:
        raise UsageError("repeats must be positive")
    return ExperimentSpec(experiment, seed, repeats, params)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fenn-sim", description="Run FeNN simulator experiments.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS + ("all",))
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--repeats", type=int)
    p.add_argument("--out", help="directory for CSV output (default: results)")
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one experiment parameter")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        settings = parse_config(Path(args.config).read_text()) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            settings[k.strip()] = v.strip()
        for key in ("seed", "repeats", "out"):
            if getattr(args, key) is not None:
                settings[key] = str(getattr(args, key))
        experiment = args.experiment or settings.get("experiment")
        if experiment is None:
            raise UsageError("no experiment given")
        if experiment not in EXPERIMENTS + ("all",):
            raise UsageError(f"unknown experiment {experiment!r}")
        out = Path(settings.get("out", "results"))

        if experiment == "all":
            shared = {k: v for k, v in settings.items() if k in SPEC_KEYS}
            results = [run_experiment(build_spec(e, shared)) for e in EXPERIMENTS if e != "alif-compare"]
            for regime in ("pause", "staircase"):
                results.append(run_experiment(build_spec("alif-compare", {**shared, "regime": regime})))
            print(report(results, out), end="")
            return 0 if all(r.ok for r in results) else 1

        result = run_experiment(build_spec(experiment, settings))
        for path in write_tables(result, out):
            print(f"wrote {path}")
        for line in result.summary:
            print(line)
        return 0 if result.ok else 1
    except (UsageError, ConfigError, FormatError, MachineError, OSError, ValueError) as exc:
        print(f"fenn-sim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
