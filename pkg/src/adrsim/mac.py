"""Class A MAC: receive windows, confirmed-frame retransmission and duty cycle.

EU868 defaults: RX1 opens 1 s after the uplink on the uplink channel and SF,
RX2 opens 2 s after it at 869.525 MHz / SF12.  Uplinks use the three g1
channels, which share one 1% sub-band; gateway RX2 traffic sits in a second
sub-band, also held to 1%.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from ._accel import jit
from .phy import RX2_FREQUENCY_HZ, airtime
from .rng import DeviceRng

RX1_DELAY_S = 1.0
RX2_DELAY_S = 2.0
RX2_SF = 12
DUTY_CYCLE = 0.01
SUBBAND_G1 = 0
SUBBAND_RX2 = 1
# MHDR + FHDR + MIC with no FPort/payload; a LinkADRReq adds 5 bytes of FOpts
DOWNLINK_EMPTY_BYTES = 12
LINK_ADR_REQ_BYTES = 5
GATEWAY_TX_POWER_DBM = 14


class Window(IntEnum):
    DROPPED = 0
    RX1 = 1
    RX2 = 2


@dataclass(frozen=True)
class UplinkFrame:
    dev_id: int
    fcnt: int
    confirmed: bool = False
    adr_enabled: bool = True
    adr_ack_req: bool = False
    payload_bytes: int = 20


@dataclass
class DutyCycleTracker:
    """Earliest next transmission per sub-band."""

    limit: float = DUTY_CYCLE
    earliest_next_tx: dict[int, float] = field(default_factory=dict)

    def record(self, sub_band: int, end_time: float, airtime: float) -> None:
        self.earliest_next_tx[sub_band] = off_time_end(end_time, airtime, self.limit)


@dataclass(frozen=True)
class RetxPolicy:
    max_attempts: int = 8
    ack_timeout_s: float = 4.0
    backoff_min_s: float = 1.0
    backoff_max_s: float = 3.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not 0 <= self.backoff_min_s <= self.backoff_max_s:
            raise ValueError("backoff window must satisfy 0 <= min <= max")


@dataclass(frozen=True)
class RxParams:
    time: float
    sf: int
    frequency_hz: float


@dataclass(frozen=True)
class AckTimeoutAction:
    retransmit: bool
    at: float | None = None


@jit
def off_time_end(end_time, airtime, limit):
    return end_time + airtime * (1.0 / limit - 1.0)


@jit
def intervals_overlap(start, end, starts, ends, n):
    for k in range(n):
        if starts[k] < end and start < ends[k]:
            return True
    return False


@jit
def choose_window_core(rx1_time, rx1_airtime, rx2_time, rx2_airtime, g1_clear, rx2_clear, busy_starts, busy_ends, n_busy):
    """Window code (0 dropped, 1 RX1, 2 RX2) for a downlink."""
    if g1_clear <= rx1_time and not intervals_overlap(rx1_time, rx1_time + rx1_airtime, busy_starts, busy_ends, n_busy):
        return 1
    if rx2_clear <= rx2_time and not intervals_overlap(rx2_time, rx2_time + rx2_airtime, busy_starts, busy_ends, n_busy):
        return 2
    return 0


def next_allowed_tx(tracker: DutyCycleTracker, sub_band: int, now: float) -> float:
    return max(now, tracker.earliest_next_tx.get(sub_band, now))


def rx_window_times(uplink_end: float, uplink_sf: int, uplink_channel_hz: float) -> tuple[RxParams, RxParams]:
    return (
        RxParams(uplink_end + RX1_DELAY_S, uplink_sf, uplink_channel_hz),
        RxParams(uplink_end + RX2_DELAY_S, RX2_SF, RX2_FREQUENCY_HZ),
    )


def handle_ack_timeout(
    frame: UplinkFrame,
    policy: RetxPolicy,
    attempt: int,
    now: float,
    rng: DeviceRng,
    duty_clearance: float | None = None,
) -> AckTimeoutAction:
    """Retransmit after a uniform backoff (and duty-cycle clearance), or give up."""
    if not frame.confirmed:
        raise ValueError("ack timeout only applies to confirmed frames")
    if attempt >= policy.max_attempts:
        return AckTimeoutAction(retransmit=False)
    at = now + policy.backoff_min_s + (policy.backoff_max_s - policy.backoff_min_s) * rng.uniform()
    if duty_clearance is not None:
        at = max(at, duty_clearance)
    return AckTimeoutAction(retransmit=True, at=at)


def downlink_payload_bytes(has_command: bool) -> int:
    return DOWNLINK_EMPTY_BYTES + (LINK_ADR_REQ_BYTES if has_command else 0)


def gateway_schedule_downlink(
    rx1: RxParams,
    rx2: RxParams,
    tracker: DutyCycleTracker,
    gateway_busy_intervals: Sequence[tuple[float, float]] = (),
    has_command: bool = False,
) -> Window:
    """Pick RX1, else RX2, else drop, honouring gateway duty cycle and half duplex."""
    payload = downlink_payload_bytes(has_command)
    busy = np.asarray(gateway_busy_intervals, dtype=np.float64).reshape(-1, 2)
    code = choose_window_core(
        rx1.time,
        airtime(rx1.sf, payload_bytes=payload),
        rx2.time,
        airtime(rx2.sf, payload_bytes=payload),
        tracker.earliest_next_tx.get(SUBBAND_G1, -1.0),
        tracker.earliest_next_tx.get(SUBBAND_RX2, -1.0),
        np.ascontiguousarray(busy[:, 0]),
        np.ascontiguousarray(busy[:, 1]),
        len(busy),
    )
    return Window(code)
