"""Trace-level regulatory checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import mac
from .trace import RunTrace


@dataclass(frozen=True)
class Violation:
    who: str
    sub_band: int
    start: float
    allowed_from: float


def _scan(who: str, sub_band: int, start: np.ndarray, end: np.ndarray, limit: float, tol: float) -> list[Violation]:
    order = np.argsort(start, kind="stable")
    s, e = start[order], end[order]
    allowed = e[:-1] + (e[:-1] - s[:-1]) * (1.0 / limit - 1.0)
    bad = np.flatnonzero(s[1:] < allowed - tol)
    return [Violation(who, sub_band, float(s[k + 1]), float(allowed[k])) for k in bad]


def duty_cycle_violations(trace: RunTrace, limit: float = mac.DUTY_CYCLE, tol: float = 1e-6) -> list[Violation]:
    """Transmissions that start before the previous one's off-time has elapsed.

    Devices transmit on the g1 sub-band only; the gateway uses g1 for RX1
    and the RX2 sub-band for RX2.  Gateway downlinks must also never overlap.
    """
    out: list[Violation] = []
    up = trace.uplinks
    order = np.argsort(up["dev"], kind="stable")
    devs = up["dev"][order]
    bounds = np.flatnonzero(np.diff(devs)) + 1
    for chunk in np.split(order, bounds):
        if len(chunk) > 1:
            out += _scan(f"device {up['dev'][chunk[0]]}", mac.SUBBAND_G1, up["t"][chunk], up["end"][chunk], limit, tol)
    dl = trace.downlinks[trace.downlinks["window"] != mac.Window.DROPPED]
    for window, band in ((mac.Window.RX1, mac.SUBBAND_G1), (mac.Window.RX2, mac.SUBBAND_RX2)):
        sel = dl[dl["window"] == window]
        if len(sel) > 1:
            out += _scan("gateway", band, sel["t"], sel["end"], limit, tol)
    if len(dl) > 1:
        order = np.argsort(dl["t"], kind="stable")
        s, e = dl["t"][order], dl["end"][order]
        for k in np.flatnonzero(s[1:] < e[:-1] - tol):
            out.append(Violation("gateway overlap", -1, float(s[k + 1]), float(e[k])))
    return out
