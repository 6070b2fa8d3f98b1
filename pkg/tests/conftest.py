from __future__ import annotations

import numpy as np
import pytest

from adrsim.phy import airtime_table
from adrsim.sim import kernel as K
from adrsim.sim.trace import ADR_DTYPE, DEVICE_DTYPE, DOWNLINK_DTYPE, INJECTION_DTYPE, UPLINK_DTYPE, RunTrace


def make_trace(uplinks=(), injections=(), adr_events=(), n_devices=1, duration=86_400.0, adr_n=20, payload=20) -> RunTrace:
    """Hand-built trace.  ``uplinks`` items are dicts over UPLINK_DTYPE fields."""
    up = np.zeros(len(uplinks), dtype=UPLINK_DTYPE)
    air = airtime_table(payload)
    for k, row in enumerate(uplinks):
        row = dict(row)
        row.setdefault("sf", 7)
        row.setdefault("tpi", 4)
        row.setdefault("attempt", 1)
        row.setdefault("fcnt", k)
        row.setdefault("end", row["t"] + air[row["sf"] - 7])
        for name, v in row.items():
            up[k][name] = v
    inj = np.zeros(len(injections), dtype=INJECTION_DTYPE)
    for k, (t, dev) in enumerate(injections):
        inj[k] = (t, dev, K.INJ_LINK, 0.0)
    ev = np.zeros(len(adr_events), dtype=ADR_DTYPE)
    for k, row in enumerate(adr_events):
        ev[k] = row
    devices = np.zeros(n_devices, dtype=DEVICE_DTYPE)
    devices["tracked"] = True
    devices["initial"] = True
    return RunTrace(up, np.zeros(0, dtype=DOWNLINK_DTYPE), ev, inj, devices, air, duration, adr_n, payload)


@pytest.fixture
def trace_factory():
    return make_trace


ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, ok, detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
