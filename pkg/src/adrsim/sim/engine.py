"""Scenario runner: builds kernel inputs, runs the event loop, wraps the trace."""

from __future__ import annotations

import math

import numpy as np

from .. import mac
from ..adr import required_snr_array
from ..phy import NOISE_FLOOR_DBM, TX_POWER_LEVELS_DBM, airtime_table, path_loss_core, tp_index
from ..rng import DeviceRng, device_states
from . import kernel as K
from .scenario import ALL_DEVICES, WARMUP, Injection, Scenario, ScenarioError
from .trace import ADR_DTYPE, DEVICE_DTYPE, DOWNLINK_DTYPE, INJECTION_DTYPE, UPLINK_DTYPE, RunTrace

LINK_D0_M = 40.0
LINK_GAMMA = 2.08
LINK_LPL_D0_DB = 127.41
RETX = mac.RetxPolicy()


def place_devices(n: int, radius: float, seed: int, first_id: int = 0, fixed_distance: float | None = None) -> np.ndarray:
    """``(n, 2)`` positions, area-uniform over the disk, from each device's own stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    state = device_states(seed, first_id + n)
    with np.errstate(over="ignore"):
        return K.place_core(state, first_id, n, float(radius), float(fixed_distance or 0.0))


def next_uplink_time(rng: DeviceRng, mean_interarrival: float, now: float, duty_clearance: float = -math.inf) -> float:
    return max(now + rng.exponential(mean_interarrival), duty_clearance)


def inject_link_change(scenario: Scenario, device: int | str, delta_db: float, at_time: float) -> Scenario:
    """Scenario with a mean path-loss change of ``delta_db`` for ``device`` from ``at_time`` on."""
    if device != ALL_DEVICES and not (isinstance(device, int) and 0 <= device < scenario.n_total):
        raise ScenarioError(f"unknown device id {device!r}", field="devices")
    devices = ALL_DEVICES if device == ALL_DEVICES else (device,)
    inj = Injection(time=float(at_time), delta_db=float(delta_db), devices=devices)
    return scenario.replace(injections=scenario.injections + (inj,))


def inject_new_devices(scenario: Scenario, k: int, at_time: float | str) -> Scenario:
    """Scenario with ``k`` fresh devices arriving at ``at_time`` (or after warm-up)."""
    inj = Injection(time=at_time, add_devices=int(k))
    return scenario.replace(injections=scenario.injections + (inj,))


def effective_sensitivity(scenario: Scenario) -> np.ndarray:
    """Sensitivity table used by the gateway and devices.

    With ``range_calibrated`` the whole table is lowered by the same amount
    so that SF12 at full power just closes the link at ``radius_m``.  The
    table is never raised.
    """
    sens = np.asarray(scenario.sensitivity_dbm, dtype=np.float64)
    if not scenario.range_calibrated:
        return sens
    edge = max(TX_POWER_LEVELS_DBM) - path_loss_core(max(scenario.radius_m, LINK_D0_M), LINK_D0_M, LINK_GAMMA, LINK_LPL_D0_DB, 0.0, 0.0)
    return sens + min(0.0, edge - sens[-1])


def tracked_devices(scenario: Scenario) -> np.ndarray:
    """Devices whose convergence is measured: new arrivals, else link-change targets, else all."""
    mask = np.zeros(scenario.n_total, dtype=bool)
    if scenario.n_added:
        mask[scenario.n_devices :] = True
        return mask
    for inj in scenario.injections:
        if inj.is_link_change:
            if inj.devices == ALL_DEVICES:
                mask[:] = True
            else:
                mask[list(inj.devices)] = True
    if not mask.any():
        mask[:] = True
    return mask


def _injection_arrays(scenario: Scenario):
    times, kinds, deltas, lo, hi, devs = [], [], [], [], [], []
    next_id = scenario.n_devices
    for inj in scenario.injections:
        times.append(-1.0 if inj.time == WARMUP else float(inj.time))
        if inj.is_link_change:
            ids = range(scenario.n_total) if inj.devices == ALL_DEVICES else inj.devices
            kinds.append(K.INJ_LINK)
            deltas.append(float(inj.delta_db))
            lo.append(len(devs))
            devs.extend(ids)
            hi.append(len(devs))
        else:
            kinds.append(K.INJ_ADD)
            deltas.append(0.0)
            lo.append(next_id)
            next_id += inj.add_devices
            hi.append(next_id)
    return (
        np.array(times, dtype=np.float64),
        np.array(kinds, dtype=np.int64),
        np.array(deltas, dtype=np.float64),
        np.array(lo, dtype=np.int64),
        np.array(hi, dtype=np.int64),
        np.array(devs, dtype=np.int64),
    )


def _positions(scenario: Scenario, state: np.ndarray) -> np.ndarray:
    xy = np.empty((scenario.n_total, 2))
    fixed = float(scenario.fixed_distance_m or 0.0)
    xy[: scenario.n_devices] = K.place_core(state, 0, scenario.n_devices, scenario.radius_m, fixed)
    if scenario.n_added:
        xy[scenario.n_devices :] = K.place_core(state, scenario.n_devices, scenario.n_added, scenario.radius_m, fixed)
    return xy


def _float_params(scenario: Scenario) -> np.ndarray:
    pf = np.zeros(K.N_FLOAT_PARAMS)
    pf[K.P_DURATION] = scenario.sim_duration_s
    pf[K.P_MEAN_IA] = scenario.mean_interarrival_s
    pf[K.P_SIGMA] = scenario.sigma_db
    pf[K.P_D0] = LINK_D0_M
    pf[K.P_GAMMA] = LINK_GAMMA
    pf[K.P_LPL0] = LINK_LPL_D0_DB
    pf[K.P_MARGIN] = scenario.margin_db
    pf[K.P_CAPTURE] = scenario.capture_threshold_db
    pf[K.P_NOISE] = NOISE_FLOOR_DBM
    pf[K.P_CONFIRMED] = scenario.confirmed_fraction
    pf[K.P_ACK_TIMEOUT] = RETX.ack_timeout_s
    pf[K.P_BACKOFF_MIN] = RETX.backoff_min_s
    pf[K.P_BACKOFF_MAX] = RETX.backoff_max_s
    pf[K.P_WARMUP_MAX] = scenario.warmup_max_s
    pf[K.P_DUTY] = mac.DUTY_CYCLE
    pf[K.P_GW_POWER] = mac.GATEWAY_TX_POWER_DBM
    pf[K.P_RX1_DELAY] = mac.RX1_DELAY_S
    pf[K.P_RX2_DELAY] = mac.RX2_DELAY_S
    return pf


def _capacities(scenario: Scenario) -> list[int]:
    frames = scenario.n_total * (scenario.sim_duration_s / scenario.mean_interarrival_s) * 1.15 + 256
    up = int(frames * (1.0 + 2.0 * scenario.confirmed_fraction))
    return [up, up // 2 + 256, int(frames) // 4 + 256, 2 * scenario.n_total + 64]


def _table(dtype: np.dtype, columns: dict[str, np.ndarray]) -> np.ndarray:
    n = len(next(iter(columns.values())))
    out = np.empty(n, dtype=dtype)
    for name, col in columns.items():
        out[name] = col
    return out


def run(scenario: Scenario) -> RunTrace:
    """Run ``scenario`` to completion.  Same scenario, same seed, same trace."""
    n_total = scenario.n_total
    base_state = device_states(scenario.seed, n_total)
    with np.errstate(over="ignore"):
        xy = _positions(scenario, base_state)
    dist = np.hypot(xy[:, 0], xy[:, 1])

    air_up = airtime_table(scenario.payload_bytes)
    air_dl_empty = airtime_table(mac.downlink_payload_bytes(False))
    air_dl_cmd = airtime_table(mac.downlink_payload_bytes(True))
    pi = np.zeros(K.N_INT_PARAMS, dtype=np.int64)
    pi[K.Q_N] = scenario.adr_n
    pi[K.Q_LIMIT] = scenario.adr_ack_limit
    pi[K.Q_DELAY] = scenario.adr_ack_delay
    pi[K.Q_MAX_ATTEMPTS] = scenario.max_attempts
    pi[K.Q_N_INITIAL] = scenario.n_devices
    inj = _injection_arrays(scenario)
    caps = _capacities(scenario)

    while True:
        state = base_state.copy()
        with np.errstate(over="ignore"):
            out = K.simulate(
                dist,
                state,
                np.full(n_total, scenario.sf_init, dtype=np.int64),
                np.full(n_total, tp_index(scenario.tp_init), dtype=np.int64),
                _float_params(scenario),
                pi,
                effective_sensitivity(scenario),
                required_snr_array(),
                air_up,
                air_dl_empty,
                air_dl_cmd,
                *inj,
                *caps,
            )
        if out[0] == K.STATUS_OK:
            break
        caps = [2 * c for c in caps]

    (_, ut, uend, udev, ufc, uatt, usf, utpi, uch, ureason, uflags, urx, uint_,
     dt, dend, ddev, dwin, dsf, dack, dcsf, dctpi, drx, dup,
     at, adev, akind, asf, atpi,
     it, idev, ikind, idelta) = out

    uplinks = _table(
        UPLINK_DTYPE,
        dict(
            t=ut, end=uend, dev=udev, fcnt=ufc, attempt=uatt, sf=usf, tpi=utpi, channel=uch, reason=ureason,
            confirmed=(uflags & K.FLAG_CONFIRMED) != 0, adr_ack_req=(uflags & K.FLAG_ACK_REQ) != 0,
            rx_dbm=urx, interferer_dbm=uint_,
        ),
    )
    downlinks = _table(
        DOWNLINK_DTYPE,
        dict(t=dt, end=dend, dev=ddev, window=dwin, sf=dsf, ack=dack, cmd_sf=dcsf, cmd_tpi=dctpi, ed_received=drx, uplink=dup),
    )
    downlinks = downlinks[np.argsort(downlinks["t"], kind="stable")]
    adr_events = _table(ADR_DTYPE, dict(t=at, dev=adev, kind=akind, sf=asf, tpi=atpi))
    injections = _table(INJECTION_DTYPE, dict(t=it, dev=idev, kind=ikind, delta_db=idelta))
    devices = np.empty(n_total, dtype=DEVICE_DTYPE)
    devices["x"] = xy[:, 0]
    devices["y"] = xy[:, 1]
    devices["distance"] = dist
    devices["initial"] = np.arange(n_total) < scenario.n_devices
    devices["tracked"] = tracked_devices(scenario)
    return RunTrace(
        uplinks=uplinks,
        downlinks=downlinks,
        adr_events=adr_events,
        injections=injections,
        devices=devices,
        airtime_up=air_up,
        duration_s=float(scenario.sim_duration_s),
        adr_n=scenario.adr_n,
        payload_bytes=scenario.payload_bytes,
    )
