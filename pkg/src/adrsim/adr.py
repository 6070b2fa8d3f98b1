"""Adaptive Data Rate, device side and network side.

The device counts uplinks since the last downlink; past ``adr_ack_limit`` it
asks for a downlink (ADRACKReq), and every ``adr_ack_delay`` uplinks after
that it gives up some efficiency, raising power before spreading factor.
The network keeps the SNR of the last ``N`` receptions per device and turns
the headroom over the required SNR into 3 dB steps of SF and power.

TX power is handled internally as an index into ``TX_POWER_LEVELS_DBM``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from ._accel import jit
from .phy import TX_POWER_LEVELS_DBM, check_sf, check_tx_power, tp_index

MAX_TP_INDEX = len(TX_POWER_LEVELS_DBM) - 1
STEP_DB = 3.0
# SF7..SF12, demodulation floor
REQUIRED_SNR_DB = (-7.5, -10.0, -12.5, -15.0, -17.5, -20.0)
DEFAULT_N = 20
DEFAULT_MARGIN_DB = 10.0
DEFAULT_ACK_LIMIT = 64
DEFAULT_ACK_DELAY = 32


class AdrStepAction(IntEnum):
    NONE = 0
    SET_ADR_ACK_REQ = 1
    STEP_UP_TP = 2
    STEP_UP_SF = 3


@jit
def ed_step_core(cnt, sf, tpi, limit, delay):
    """Counter update before a new uplink.

    Returns ``(cnt, adr_ack_req, action, sf, tpi)`` with ``action`` coded as
    :class:`AdrStepAction`.
    """
    cnt += 1
    ack_req = cnt >= limit
    action = 0
    over = cnt - limit
    if over >= delay and over % delay == 0:
        if tpi < MAX_TP_INDEX:
            tpi += 1
            action = 2
        elif sf < 12:
            sf += 1
            action = 3
    return cnt, ack_req, action, sf, tpi


@jit
def net_step_core(snr_max, sf, tpi, required_snr, margin_db):
    """New ``(sf, tpi)`` from the best recent SNR.  SF is never raised."""
    margin = snr_max - required_snr - margin_db
    n_step = int(math.floor(margin / STEP_DB))
    while n_step > 0 and sf > 7:
        sf -= 1
        n_step -= 1
    while n_step > 0 and tpi > 0:
        tpi -= 1
        n_step -= 1
    while n_step < 0 and tpi < MAX_TP_INDEX:
        tpi += 1
        n_step += 1
    return sf, tpi


@dataclass(frozen=True)
class EdAdrState:
    sf: int = 12
    tp: int = 14
    adr_ack_cnt: int = 0
    adr_ack_limit: int = DEFAULT_ACK_LIMIT
    adr_ack_delay: int = DEFAULT_ACK_DELAY

    def __post_init__(self) -> None:
        check_sf(self.sf)
        check_tx_power(self.tp)
        if self.adr_ack_cnt < 0:
            raise ValueError("adr_ack_cnt must be non-negative")
        if self.adr_ack_limit < 1 or self.adr_ack_delay < 1:
            raise ValueError("adr_ack_limit and adr_ack_delay must be positive")


@dataclass(frozen=True)
class DownlinkFrame:
    dev_id: int
    ack: bool = False
    link_adr_cmd: tuple[int, int] | None = None  # (sf, tx power dBm)


def ed_before_uplink(state: EdAdrState) -> tuple[EdAdrState, bool, AdrStepAction]:
    cnt, ack_req, action, sf, tpi = ed_step_core(
        state.adr_ack_cnt, state.sf, tp_index(state.tp), state.adr_ack_limit, state.adr_ack_delay
    )
    new = replace(state, adr_ack_cnt=cnt, sf=sf, tp=TX_POWER_LEVELS_DBM[tpi])
    return new, bool(ack_req), AdrStepAction(action)


def ed_on_downlink(state: EdAdrState, frame: DownlinkFrame) -> EdAdrState:
    """Any downlink resets the counter; a valid LinkADRReq is applied."""
    new = replace(state, adr_ack_cnt=0)
    if frame.link_adr_cmd is not None:
        sf, tp = frame.link_adr_cmd
        try:
            new = replace(new, sf=check_sf(sf), tp=check_tx_power(tp))
        except ValueError:
            pass
    return new


@dataclass
class NetAdrState:
    """Network-side ADR memory.  Operations mutate the state in place."""

    n_required: int = DEFAULT_N
    margin_db: float = DEFAULT_MARGIN_DB
    required_snr: tuple[float, ...] = REQUIRED_SNR_DB
    windows: dict[int, deque] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_required < 1:
            raise ValueError("n_required must be >= 1")

    def window(self, dev: int) -> deque:
        win = self.windows.get(dev)
        if win is None:
            win = self.windows[dev] = deque(maxlen=self.n_required)
        return win


def net_record(state: NetAdrState, dev: int, snr_db: float) -> NetAdrState:
    state.window(dev).append(float(snr_db))
    return state


def net_compute(state: NetAdrState, dev: int, current_sf: int, current_tp: int) -> tuple[int, int] | None:
    """``(sf, tp)`` to command, or ``None`` when data is short or nothing changes."""
    win = state.window(dev)
    if len(win) < state.n_required:
        return None
    sf, tpi = net_step_core(
        max(win), check_sf(current_sf), tp_index(current_tp), state.required_snr[current_sf - 7], state.margin_db
    )
    if sf == current_sf and tpi == tp_index(current_tp):
        return None
    win.clear()
    return sf, TX_POWER_LEVELS_DBM[tpi]


def required_snr_array(table=REQUIRED_SNR_DB) -> np.ndarray:
    return np.asarray(table, dtype=np.float64)
