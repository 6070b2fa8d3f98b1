"""LoRa uplink/downlink physical layer.

Log-distance path loss with log-normal shadowing, time on air, SNR against a
thermal noise floor, and a same-SF/same-channel capture model.  The scalar
``*_core`` helpers are compiled and shared with the simulation kernel; the
public functions add validation and friendlier types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from ._accel import jit

SPREADING_FACTORS = (7, 8, 9, 10, 11, 12)
TX_POWER_LEVELS_DBM = (2, 5, 8, 11, 14)
MAX_TX_POWER_DBM = 14
G1_CHANNELS_HZ = (868.1e6, 868.3e6, 868.5e6)
RX2_FREQUENCY_HZ = 869.525e6
BANDWIDTH_HZ = 125_000
CODE_RATE_DENOMINATOR = 5  # 4/5

# dBm at 125 kHz, SF7..SF12
SENSITIVITY_DBM = (-123.0, -126.0, -129.0, -132.0, -134.5, -137.0)
CAPTURE_THRESHOLD_DB = 6.0
NOISE_FIGURE_DB = 6.0
PREAMBLE_SYMBOLS = 8
DEFAULT_PAYLOAD_BYTES = 20


def noise_floor_dbm(bandwidth_hz: float = BANDWIDTH_HZ, noise_figure_db: float = NOISE_FIGURE_DB) -> float:
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


NOISE_FLOOR_DBM = noise_floor_dbm()


class LossReason(IntEnum):
    NONE = 0
    COLLISION = 1
    UNDER_SENSITIVITY = 2
    GATEWAY_BUSY = 3


def check_sf(sf: int) -> int:
    if sf not in SPREADING_FACTORS:
        raise ValueError(f"spreading factor must be one of {SPREADING_FACTORS}, got {sf!r}")
    return int(sf)


def check_tx_power(dbm: int) -> int:
    if dbm not in TX_POWER_LEVELS_DBM:
        raise ValueError(f"tx power must be one of {TX_POWER_LEVELS_DBM} dBm, got {dbm!r}")
    return int(dbm)


def tp_index(dbm: int) -> int:
    return TX_POWER_LEVELS_DBM.index(check_tx_power(dbm))


def low_data_rate_optimize(sf: int, bandwidth_hz: float = BANDWIDTH_HZ) -> bool:
    return sf >= 11 and bandwidth_hz <= 125_000


@dataclass(frozen=True)
class LinkModel:
    d0_m: float = 40.0
    gamma: float = 2.08
    lpl_d0_db: float = 127.41
    sigma_db: float = 0.0
    mean_offset_db: float = 0.0

    def __post_init__(self) -> None:
        if self.d0_m <= 0:
            raise ValueError("d0_m must be positive")
        if self.sigma_db < 0:
            raise ValueError("sigma_db must be non-negative")


@dataclass(frozen=True)
class Transmission:
    source: int
    start_time: float
    airtime: float
    channel_hz: float
    sf: int
    tx_power: int
    rx_power_dbm: float
    payload_bytes: int = DEFAULT_PAYLOAD_BYTES
    uplink: bool = True

    @property
    def end_time(self) -> float:
        return self.start_time + self.airtime


@dataclass(frozen=True)
class ReceptionOutcome:
    loss_reason: LossReason = LossReason.NONE

    @property
    def received(self) -> bool:
        return self.loss_reason == LossReason.NONE

    @property
    def status(self) -> str:
        return "received" if self.received else "lost"


@jit
def path_loss_core(distance_m, d0_m, gamma, lpl_d0_db, shadow_db, offset_db):
    return lpl_d0_db + 10.0 * gamma * math.log10(distance_m / d0_m) + shadow_db + offset_db


@jit
def airtime_core(sf, bandwidth_hz, cr_denominator, payload_bytes, preamble_syms, explicit_header, ldro):
    t_sym = (2.0 ** sf) / bandwidth_hz
    ih = 0 if explicit_header else 1
    de = 1 if ldro else 0
    num = 8 * payload_bytes - 4 * sf + 28 + 16 - 20 * ih
    n_payload = 8 + max(math.ceil(num / (4.0 * (sf - 2 * de))) * cr_denominator, 0)
    return (preamble_syms + 4.25) * t_sym + n_payload * t_sym


@jit
def reception_reason_core(rx_dbm, sensitivity_dbm, gateway_busy, strongest_interferer_dbm, capture_db):
    """Loss reason code for one uplink given its strongest overlapping rival."""
    if rx_dbm < sensitivity_dbm:
        return 2
    if gateway_busy:
        return 3
    if rx_dbm - strongest_interferer_dbm < capture_db:
        return 1
    return 0


def path_loss(distance_m: float, link: LinkModel = LinkModel(), shadow_sample_db: float = 0.0) -> float:
    """Total loss in dB; ``shadow_sample_db`` is drawn by the caller per transmission."""
    if distance_m < link.d0_m:
        raise ValueError(f"distance {distance_m} m is below the reference distance {link.d0_m} m")
    return path_loss_core(
        float(distance_m), link.d0_m, link.gamma, link.lpl_d0_db, float(shadow_sample_db), link.mean_offset_db
    )


def airtime(
    sf: int,
    bandwidth_hz: float = BANDWIDTH_HZ,
    code_rate: int = CODE_RATE_DENOMINATOR,
    payload_bytes: int = DEFAULT_PAYLOAD_BYTES,
    preamble_syms: int = PREAMBLE_SYMBOLS,
    explicit_header: bool = True,
    low_data_rate_opt: bool | None = None,
) -> float:
    """Time on air in seconds.  ``code_rate`` is the denominator of 4/x."""
    check_sf(sf)
    if payload_bytes < 1:
        raise ValueError("payload_bytes must be >= 1")
    if low_data_rate_opt is None:
        low_data_rate_opt = low_data_rate_optimize(sf, bandwidth_hz)
    return airtime_core(
        sf, float(bandwidth_hz), code_rate, payload_bytes, preamble_syms, explicit_header, low_data_rate_opt
    )


def airtime_table(payload_bytes: int, bandwidth_hz: float = BANDWIDTH_HZ) -> np.ndarray:
    """Airtimes for SF7..SF12 at the default radio settings."""
    return np.array([airtime(sf, bandwidth_hz, payload_bytes=payload_bytes) for sf in SPREADING_FACTORS])


def received_power(tx_power_dbm: float, loss_db: float) -> float:
    return tx_power_dbm - loss_db


def snr(rx_power_dbm: float, noise_floor: float = NOISE_FLOOR_DBM) -> float:
    return rx_power_dbm - noise_floor


def sensitivity(sf: int, table: Sequence[float] = SENSITIVITY_DBM) -> float:
    return table[check_sf(sf) - 7]


def resolve_receptions(
    overlapping: Sequence[Transmission],
    sensitivity_dbm: Sequence[float] = SENSITIVITY_DBM,
    capture_threshold_db: float = CAPTURE_THRESHOLD_DB,
    gateway_busy: Sequence[bool] | None = None,
) -> list[ReceptionOutcome]:
    """Outcome of each transmission arriving at a common receiver.

    Transmissions on another SF or channel never interfere.  Within a
    SF/channel pair a packet survives only if it beats every time-overlapping
    rival by ``capture_threshold_db``.  Signals below sensitivity still count
    as interferers for others.
    """
    n = len(overlapping)
    busy = [False] * n if gateway_busy is None else list(gateway_busy)
    outcomes = []
    for i, tx in enumerate(overlapping):
        strongest = -math.inf
        for j, other in enumerate(overlapping):
            if j == i or other.sf != tx.sf or other.channel_hz != tx.channel_hz:
                continue
            if other.start_time < tx.end_time and tx.start_time < other.end_time:
                strongest = max(strongest, other.rx_power_dbm)
        code = reception_reason_core(
            tx.rx_power_dbm, sensitivity(tx.sf, sensitivity_dbm), busy[i], strongest, capture_threshold_db
        )
        outcomes.append(ReceptionOutcome(LossReason(code)))
    return outcomes
