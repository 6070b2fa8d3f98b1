"""Run trace: columnar record of everything that happened in one run."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

UPLINK_DTYPE = np.dtype(
    [
        ("t", "f8"),
        ("end", "f8"),
        ("dev", "i4"),
        ("fcnt", "i4"),
        ("attempt", "i1"),
        ("sf", "i1"),
        ("tpi", "i1"),
        ("channel", "i1"),
        ("reason", "i1"),
        ("confirmed", "?"),
        ("adr_ack_req", "?"),
        ("rx_dbm", "f8"),
        ("interferer_dbm", "f8"),
    ]
)
DOWNLINK_DTYPE = np.dtype(
    [
        ("t", "f8"),
        ("end", "f8"),
        ("dev", "i4"),
        ("window", "i1"),
        ("sf", "i1"),
        ("ack", "?"),
        ("cmd_sf", "i1"),
        ("cmd_tpi", "i1"),
        ("ed_received", "?"),
        ("uplink", "i8"),
    ]
)
ADR_DTYPE = np.dtype([("t", "f8"), ("dev", "i4"), ("kind", "i1"), ("sf", "i1"), ("tpi", "i1")])
INJECTION_DTYPE = np.dtype([("t", "f8"), ("dev", "i4"), ("kind", "i1"), ("delta_db", "f8")])
DEVICE_DTYPE = np.dtype(
    [("x", "f8"), ("y", "f8"), ("distance", "f8"), ("initial", "?"), ("tracked", "?")]
)


@dataclass
class RunTrace:
    """Uplinks, downlinks, ADR changes and injections of one run.

    Records in every table are in non-decreasing time order.  Uplink
    ``reason`` uses :class:`adrsim.phy.LossReason` codes; downlink
    ``window`` 0 marks a downlink the gateway had to drop.
    """

    uplinks: np.ndarray
    downlinks: np.ndarray
    adr_events: np.ndarray
    injections: np.ndarray
    devices: np.ndarray
    airtime_up: np.ndarray
    duration_s: float
    adr_n: int
    payload_bytes: int

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.uplinks, self.downlinks, self.adr_events, self.injections, self.devices, self.airtime_up):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(repr((self.duration_s, self.adr_n, self.payload_bytes)).encode())
        return h.hexdigest()

    def __len__(self) -> int:
        return len(self.uplinks)

    def shifted(self, delta: float) -> RunTrace:
        """Copy with every timestamp moved by ``delta`` seconds."""
        tables = []
        for arr in (self.uplinks, self.downlinks, self.adr_events, self.injections):
            arr = arr.copy()
            for name in ("t", "end"):
                if name in arr.dtype.names:
                    arr[name] += delta
            tables.append(arr)
        return RunTrace(*tables, self.devices, self.airtime_up, self.duration_s + delta, self.adr_n, self.payload_bytes)

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            uplinks=self.uplinks,
            downlinks=self.downlinks,
            adr_events=self.adr_events,
            injections=self.injections,
            devices=self.devices,
            airtime_up=self.airtime_up,
            meta=np.array([self.duration_s, self.adr_n, self.payload_bytes], dtype=np.float64),
        )

    @classmethod
    def load(cls, path: str | Path) -> RunTrace:
        with np.load(path) as z:
            meta = z["meta"]
            return cls(
                z["uplinks"],
                z["downlinks"],
                z["adr_events"],
                z["injections"],
                z["devices"],
                z["airtime_up"],
                float(meta[0]),
                int(meta[1]),
                int(meta[2]),
            )
