"""Scenario files and result CSVs."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ..sim.scenario import Scenario, ScenarioError, scenario_from_dict

CSV_HEADER = ("preset", "param", "value", "rep", "seed", "metric", "metric_value")


@dataclass(frozen=True)
class ResultRow:
    preset: str
    param: str
    value: float | int
    rep: int
    seed: int
    metric: str
    metric_value: float


def format_number(x: float | int) -> str:
    """Integers verbatim, floats with 6 significant digits."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.6g}"


def round6(x: float) -> float:
    return x if math.isnan(x) else float(f"{x:.6g}")


def _parse_number(text: str) -> float | int:
    try:
        return int(text)
    except ValueError:
        return float(text)


def _line_of(text: str, field: str | None) -> int | None:
    if not field:
        return None
    key = field.split("[", 1)[0]
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_scenario(path: str | Path) -> Scenario:
    """Read a JSON scenario; omitted fields keep their defaults."""
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{exc.msg} (column {exc.colno})", line=exc.lineno, source=str(path)) from None
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be an object", line=1, source=str(path))
    try:
        return scenario_from_dict(raw)
    except ScenarioError as exc:
        raise ScenarioError(exc.detail, field=exc.field, line=_line_of(text, exc.field), source=str(path)) from None


def write_csv(rows: Iterable[ResultRow], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow(
                    (r.preset, r.param, format_number(r.value), r.rep, r.seed, r.metric, format_number(r.metric_value))
                )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path: str | Path) -> list[ResultRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            ResultRow(p, param, _parse_number(v), int(rep), int(seed), metric, float(mv))
            for p, param, v, rep, seed, metric, mv in reader
        ]
