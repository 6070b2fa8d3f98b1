"""Command line entry point."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from .. import metrics
from ..sim import ScenarioError, run
from .io import ResultRow, load_scenario, round6, write_csv
from .presets import PRESETS, TEMPLATES
from .runner import METRICS, run_preset

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # bad flags are a validation failure, not a crash
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _parse_set(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adrsim", description="LoRaWAN ADR convergence simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("--scenario", required=True, type=Path)
    r.add_argument("--seed", type=_u64, default=None, help="overrides the file's seed")
    r.add_argument("--out", required=True, type=Path, help="CSV of run metrics")
    r.add_argument("--trace", type=Path, default=None, help="also save the full trace (.npz)")

    q = sub.add_parser("preset", help="run a named experiment")
    q.add_argument("name", choices=sorted(PRESETS))
    q.add_argument("--reps", type=_positive, default=None)
    q.add_argument("--seed", type=_u64, default=0)
    q.add_argument("--out", required=True, type=Path)
    q.add_argument("--parallel", type=_positive, default=1)
    q.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE", help="override a template field")

    sub.add_parser("list-presets", help="show the available presets")
    return p


def _cmd_run(args: argparse.Namespace) -> None:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.replace(seed=args.seed)
    trace = run(scenario)
    if args.trace is not None:
        trace.save(args.trace)
    summary = metrics.summarize(trace)
    name = args.scenario.stem
    rows = [ResultRow(name, "seed", 0, 0, scenario.seed, m, round6(summary[m])) for m in METRICS]
    write_csv(rows, args.out)
    for m in METRICS:
        print(f"{m:24s} {summary[m]:.6g}")


def _cmd_preset(args: argparse.Namespace) -> None:
    overrides = _parse_set(args.set)
    result = run_preset(args.name, args.seed, args.parallel, args.reps, overrides or None)
    write_csv(result.rows, args.out)
    preset = PRESETS[args.name]
    print(f"{preset.name}: {preset.param}, {len(result.rows)} rows -> {args.out}")
    for v in preset.values:
        conv = result.aggregates[(v, "convergence_min")]
        col = result.aggregates[(v, "collision_pct")]
        energy = result.aggregates[(v, "energy_mj")]
        std = "" if math.isnan(conv.std) else f" +/- {conv.std:.1f}"
        print(f"  {v!s:>8}  convergence {conv.mean:.1f}{std} min  energy {energy.mean:.1f} mJ  collisions {col.mean:.1f}%")


def _cmd_list() -> None:
    for p in PRESETS.values():
        vals = ", ".join(str(v) for v in p.values)
        print(f"{p.name:18s} {p.param}: {vals}  [{p.template}] {p.description}")
    print("templates: " + ", ".join(TEMPLATES))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            _cmd_run(args)
        elif args.command == "preset":
            _cmd_preset(args)
        else:
            _cmd_list()
    except (ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
