"""Evaluation quantities computed from run traces.

Convergence time runs from an anchor (device arrival or link change) to the
reception of the N-th uplink after it, N being the network's ADR window.
Energy counts transmit energy only.  Loss breakdowns classify frames, so a
confirmed frame and all its retransmissions count once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .phy import LossReason
from .sim import kernel as K
from .sim.trace import RunTrace

# transmit current (A) per TX power level 2, 5, 8, 11, 14 dBm
TX_CURRENT_A = (0.024, 0.027, 0.030, 0.035, 0.044)
SUPPLY_VOLTAGE_V = 3.3
NO_ACK = 4
LOSS_NAMES = {
    int(LossReason.NONE): "received",
    int(LossReason.COLLISION): "collision",
    int(LossReason.UNDER_SENSITIVITY): "under_sensitivity",
    int(LossReason.GATEWAY_BUSY): "gateway_busy",
    NO_ACK: "no_ack",
}


@dataclass(frozen=True)
class ConvergenceRecord:
    device: int
    anchor_time: float
    converged_rx_time: float | None
    converged_applied_time: float | None

    @property
    def converged(self) -> bool:
        return self.converged_rx_time is not None

    @property
    def convergence_minutes(self) -> float | None:
        if self.converged_rx_time is None:
            return None
        return (self.converged_rx_time - self.anchor_time) / 60.0

    @property
    def applied_minutes(self) -> float | None:
        if self.converged_applied_time is None:
            return None
        return (self.converged_applied_time - self.anchor_time) / 60.0


@dataclass(frozen=True)
class EnergyRecord:
    device: int
    start: float
    end: float
    joules: float
    transmissions: int


@dataclass(frozen=True)
class LossBreakdown:
    counts: dict[str, int]
    total: int

    def percent(self, name: str) -> float:
        return 100.0 * self.counts.get(name, 0) / self.total if self.total else math.nan

    @property
    def percentages(self) -> dict[str, float]:
        return {name: self.percent(name) for name in LOSS_NAMES.values()}


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    count: int


def anchors(trace: RunTrace, device: int) -> np.ndarray:
    inj = trace.injections
    return inj["t"][inj["dev"] == device]


def default_anchor(trace: RunTrace, device: int) -> float:
    times = anchors(trace, device)
    if len(times) == 0:
        raise KeyError(f"device {device} has no anchor in the trace")
    return float(times[-1])


def convergence_time(trace: RunTrace, device: int, anchor: float | None = None) -> ConvergenceRecord:
    if not 0 <= device < len(trace.devices):
        raise KeyError(f"unknown device {device}")
    if anchor is None:
        anchor = default_anchor(trace, device)
    elif not np.any(anchors(trace, device) == anchor):
        raise KeyError(f"no anchor at t={anchor} for device {device}")
    up = trace.uplinks
    sel = (up["dev"] == device) & (up["reason"] == LossReason.NONE) & (up["t"] >= anchor)
    ends = up["end"][sel]
    return _convergence_from(trace, device, anchor, ends)


def _convergence_from(trace: RunTrace, device: int, anchor: float, rx_ends: np.ndarray) -> ConvergenceRecord:
    n = trace.adr_n
    if len(rx_ends) < n:
        return ConvergenceRecord(device, anchor, None, None)
    rx_time = float(rx_ends[n - 1])
    ev = trace.adr_events
    applied = ev["t"][(ev["dev"] == device) & (ev["kind"] == K.ADR_APPLIED) & (ev["t"] >= rx_time)]
    return ConvergenceRecord(device, anchor, rx_time, float(applied[0]) if len(applied) else None)


def convergence_all(trace: RunTrace, devices: Iterable[int] | None = None) -> list[ConvergenceRecord]:
    """Convergence of every tracked device (or of ``devices``) at its latest anchor."""
    if devices is None:
        devices = np.flatnonzero(trace.devices["tracked"])
    devices = [int(d) for d in devices]
    up = trace.uplinks
    rx = up[up["reason"] == LossReason.NONE]
    order = np.argsort(rx["dev"], kind="stable")
    rx_dev = rx["dev"][order]
    rx_t = rx["t"][order]
    rx_end = rx["end"][order]
    inj = trace.injections
    out = []
    for d in devices:
        times = inj["t"][inj["dev"] == d]
        if len(times) == 0:
            continue
        anchor = float(times[-1])
        lo, hi = np.searchsorted(rx_dev, d, "left"), np.searchsorted(rx_dev, d, "right")
        t, ends = rx_t[lo:hi], rx_end[lo:hi]
        out.append(_convergence_from(trace, d, anchor, ends[t >= anchor]))
    return out


def uplink_energy(trace: RunTrace, rows: np.ndarray, current_a: Sequence[float] = TX_CURRENT_A, voltage: float = SUPPLY_VOLTAGE_V) -> np.ndarray:
    return trace.airtime_up[rows["sf"] - 7] * np.asarray(current_a)[rows["tpi"]] * voltage


def energy(
    trace: RunTrace,
    device: int,
    interval: tuple[float, float] | None = None,
    current_a: Sequence[float] = TX_CURRENT_A,
    voltage: float = SUPPLY_VOLTAGE_V,
) -> EnergyRecord:
    """Transmit energy of every attempt (lost or not) starting inside ``[start, end)``."""
    start, end = interval if interval is not None else (0.0, trace.duration_s)
    if end < start:
        raise ValueError("interval end precedes its start")
    up = trace.uplinks
    rows = up[(up["dev"] == device) & (up["t"] >= start) & (up["t"] < end)]
    joules = float(np.sum(uplink_energy(trace, rows, current_a, voltage))) if len(rows) else 0.0
    return EnergyRecord(device, start, end, joules, len(rows))


def frame_outcomes(trace: RunTrace) -> tuple[np.ndarray, np.ndarray]:
    """``(first_attempt_rows, outcome_code)`` with one entry per generated frame."""
    up = trace.uplinks
    key = up["dev"].astype(np.int64) << 32 | up["fcnt"].astype(np.int64)
    uniq, inverse = np.unique(key, return_inverse=True)
    got = np.bincount(inverse, weights=(up["reason"] == LossReason.NONE), minlength=len(uniq)) > 0
    first = np.flatnonzero(up["attempt"] == 1)
    frame_of_first = inverse[first]
    rows = up[first]
    outcome = rows["reason"].astype(np.int64)
    outcome[got[frame_of_first]] = LossReason.NONE
    outcome[(~got[frame_of_first]) & rows["confirmed"]] = NO_ACK
    return rows, outcome


def loss_breakdown(
    trace: RunTrace, device_set: Iterable[int] | None = None, interval: tuple[float, float] | None = None
) -> LossBreakdown:
    rows, outcome = frame_outcomes(trace)
    mask = np.ones(len(rows), dtype=bool)
    if device_set is not None:
        mask &= np.isin(rows["dev"], np.fromiter(device_set, dtype=np.int64))
    if interval is not None:
        mask &= (rows["t"] >= interval[0]) & (rows["t"] < interval[1])
    codes = np.bincount(outcome[mask], minlength=5)
    return LossBreakdown({LOSS_NAMES[k]: int(codes[k]) for k in LOSS_NAMES}, int(mask.sum()))


def aggregate(values: Iterable[float]) -> Aggregate:
    """Mean and sample standard deviation; NaN entries are skipped."""
    vals = np.asarray([v for v in values], dtype=np.float64)
    if vals.size == 0:
        raise ValueError("aggregate needs at least one value")
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        return Aggregate(math.nan, math.nan, 0)
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return Aggregate(float(np.mean(vals)), std, int(vals.size))


def summarize(trace: RunTrace) -> dict[str, float]:
    """Per-run metrics written to result files."""
    records = convergence_all(trace)
    done = [r for r in records if r.converged]
    minutes = [r.convergence_minutes for r in done]
    applied = [r.applied_minutes for r in done if r.applied_minutes is not None]
    joules = [energy(trace, r.device, (r.anchor_time, r.converged_rx_time)).joules for r in done]
    start = min((r.anchor_time for r in records), default=0.0)
    losses = loss_breakdown(trace, interval=(start, trace.duration_s))
    out = {
        "convergence_min": float(np.mean(minutes)) if minutes else math.nan,
        "convergence_applied_min": float(np.mean(applied)) if applied else math.nan,
        "converged": float(len(done)),
        "non_converged": float(len(records) - len(done)),
        "energy_mj": 1e3 * float(np.mean(joules)) if joules else math.nan,
    }
    for name, pct in losses.percentages.items():
        out[f"{name}_pct"] = pct
    return out
