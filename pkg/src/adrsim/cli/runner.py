"""Repetition orchestration with stable seeds."""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

from .. import metrics
from ..sim import run
from .io import ResultRow, format_number, round6
from .presets import ExperimentPreset, Value, get_preset

METRICS = (
    "convergence_min",
    "convergence_applied_min",
    "converged",
    "non_converged",
    "energy_mj",
    "received_pct",
    "collision_pct",
    "under_sensitivity_pct",
    "gateway_busy_pct",
    "no_ack_pct",
)


def derive_seed(base_seed: int, preset: str, value: Value, rep: int) -> int:
    """64-bit run seed: the first 8 bytes (little endian) of
    ``blake2b("{base_seed}:{preset}:{value}:{rep}")``, value written as in the CSV."""
    msg = f"{base_seed}:{preset}:{format_number(value)}:{rep}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class PresetResult:
    rows: list[ResultRow]
    aggregates: dict[tuple[Value, str], metrics.Aggregate]


def _one(job: tuple[str, Value, int, int, dict[str, Any] | None]) -> list[ResultRow]:
    name, value, rep, seed, overrides = job
    preset = get_preset(name)
    summary = metrics.summarize(run(preset.scenario(value, seed, overrides)))
    return [ResultRow(name, preset.param, value, rep, seed, m, round6(summary[m])) for m in METRICS]


def run_preset(
    preset: ExperimentPreset | str,
    base_seed: int,
    parallelism: int = 1,
    repetitions: int | None = None,
    overrides: dict[str, Any] | None = None,
    values: tuple[Value, ...] | None = None,
) -> PresetResult:
    """Every value of the preset, ``repetitions`` times each, rows in a fixed order."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    reps = preset.repetitions if repetitions is None else repetitions
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    values = preset.values if values is None else values
    # fail early on a bad override, before spawning workers
    preset.scenario(values[0], 0, overrides)
    jobs = [(preset.name, v, r, derive_seed(base_seed, preset.name, v, r), overrides) for v in values for r in range(reps)]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            chunks = list(pool.map(_one, jobs))
    else:
        chunks = [_one(j) for j in jobs]
    order = {m: k for k, m in enumerate(METRICS)}
    rows = sorted((r for c in chunks for r in c), key=lambda r: (values.index(r.value), r.rep, order[r.metric]))
    aggregates = {
        (v, m): metrics.aggregate(r.metric_value for r in rows if r.value == v and r.metric == m)
        for v in values
        for m in METRICS
    }
    return PresetResult(rows, aggregates)
