"""Scenario description and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

from ..adr import DEFAULT_ACK_DELAY, DEFAULT_ACK_LIMIT, DEFAULT_MARGIN_DB, DEFAULT_N
from ..phy import (
    CAPTURE_THRESHOLD_DB,
    DEFAULT_PAYLOAD_BYTES,
    SENSITIVITY_DBM,
    SPREADING_FACTORS,
    TX_POWER_LEVELS_DBM,
)

DAY_S = 86_400.0
WARMUP = "warmup"
ALL_DEVICES = "all"


class ScenarioError(ValueError):
    """Invalid scenario content; ``field`` names the offending entry."""

    def __init__(
        self, message: str, field: str | None = None, line: int | None = None, source: str | None = None
    ) -> None:
        self.field = field
        self.line = line
        self.source = source
        self.detail = message
        where = f"{source}: " if source else ""
        if line is not None:
            where += f"line {line}: "
        if field is not None:
            where += f"{field}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Injection:
    """Either a mean path-loss change (``delta_db``) or ``add_devices`` new EDs.

    ``time`` is seconds from start, or ``"warmup"`` to fire once the
    background network has settled.
    """

    time: Union[float, str]
    delta_db: float | None = None
    devices: Union[Sequence[int], str] = ALL_DEVICES
    add_devices: int | None = None

    @property
    def is_link_change(self) -> bool:
        return self.delta_db is not None


@dataclass(frozen=True)
class Scenario:
    n_devices: int = 100
    radius_m: float = 670.0
    sim_duration_s: float = 12 * DAY_S
    mean_interarrival_s: float = 600.0
    sigma_db: float = 0.0
    adr_n: int = DEFAULT_N
    adr_ack_limit: int = DEFAULT_ACK_LIMIT
    adr_ack_delay: int = DEFAULT_ACK_DELAY
    margin_db: float = DEFAULT_MARGIN_DB
    confirmed_fraction: float = 0.0
    injections: tuple[Injection, ...] = ()
    seed: int = 0
    sf_init: int = 12
    tp_init: int = 14
    payload_bytes: int = DEFAULT_PAYLOAD_BYTES
    fixed_distance_m: float | None = None
    warmup_max_s: float = 2 * DAY_S
    max_attempts: int = 8
    capture_threshold_db: float = CAPTURE_THRESHOLD_DB
    sensitivity_dbm: tuple[float, ...] = SENSITIVITY_DBM
    range_calibrated: bool = True

    def __post_init__(self) -> None:
        validate(self)

    @property
    def n_added(self) -> int:
        return sum(inj.add_devices or 0 for inj in self.injections)

    @property
    def n_total(self) -> int:
        return self.n_devices + self.n_added

    def replace(self, **changes: Any) -> Scenario:
        return dataclasses.replace(self, **changes)


SCENARIO_FIELDS = tuple(f.name for f in dataclasses.fields(Scenario))


def _require(cond: bool, message: str, name: str) -> None:
    if not cond:
        raise ScenarioError(message, field=name)


def validate(s: Scenario) -> None:
    _require(isinstance(s.n_devices, int) and s.n_devices >= 1, "must be an integer >= 1", "n_devices")
    _require(s.radius_m > 0, "must be positive", "radius_m")
    _require(s.sim_duration_s >= 0, "must be non-negative", "sim_duration_s")
    _require(s.mean_interarrival_s > 0, "must be positive", "mean_interarrival_s")
    _require(s.sigma_db >= 0, "must be non-negative", "sigma_db")
    _require(isinstance(s.adr_n, int) and s.adr_n >= 1, "must be an integer >= 1", "adr_n")
    _require(isinstance(s.adr_ack_limit, int) and s.adr_ack_limit >= 1, "must be an integer >= 1", "adr_ack_limit")
    _require(isinstance(s.adr_ack_delay, int) and s.adr_ack_delay >= 1, "must be an integer >= 1", "adr_ack_delay")
    _require(0.0 <= s.confirmed_fraction <= 1.0, "must lie in [0, 1]", "confirmed_fraction")
    _require(s.sf_init in SPREADING_FACTORS, f"must be one of {SPREADING_FACTORS}", "sf_init")
    _require(s.tp_init in TX_POWER_LEVELS_DBM, f"must be one of {TX_POWER_LEVELS_DBM} dBm", "tp_init")
    _require(isinstance(s.payload_bytes, int) and 1 <= s.payload_bytes <= 255, "must be in 1..255", "payload_bytes")
    _require(s.fixed_distance_m is None or s.fixed_distance_m > 0, "must be positive", "fixed_distance_m")
    _require(s.warmup_max_s >= 0, "must be non-negative", "warmup_max_s")
    _require(isinstance(s.max_attempts, int) and s.max_attempts >= 1, "must be an integer >= 1", "max_attempts")
    _require(isinstance(s.seed, int) and 0 <= s.seed < 2**64, "must be an unsigned 64-bit integer", "seed")
    _require(isinstance(s.range_calibrated, bool), "must be true or false", "range_calibrated")
    _require(s.capture_threshold_db >= 0, "must be non-negative", "capture_threshold_db")
    _require(len(s.sensitivity_dbm) == 6, "needs one value per SF7..SF12", "sensitivity_dbm")
    for k, inj in enumerate(s.injections):
        name = f"injections[{k}]"
        _require(isinstance(inj, Injection), "must be an injection entry", name)
        if inj.time == WARMUP:
            _require(inj.add_devices is not None, "only device additions may wait for warm-up", name)
        else:
            _require(
                isinstance(inj.time, (int, float)) and 0 <= inj.time <= s.sim_duration_s,
                "time must be 'warmup' or lie within the simulated duration",
                name,
            )
        _require((inj.delta_db is None) != (inj.add_devices is None), "set exactly one of delta_db, add_devices", name)
        if inj.add_devices is not None:
            _require(isinstance(inj.add_devices, int) and inj.add_devices >= 0, "add_devices must be >= 0", name)
        if inj.is_link_change and inj.devices != ALL_DEVICES:
            for dev in inj.devices:
                _require(
                    isinstance(dev, int) and 0 <= dev < s.n_total,
                    f"unknown device id {dev!r}",
                    name,
                )


def parse_injection(raw: Any, name: str) -> Injection:
    if not isinstance(raw, dict):
        raise ScenarioError("must be an object", field=name)
    unknown = set(raw) - {"time", "delta_db", "devices", "add_devices"}
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", field=name)
    if "time" not in raw:
        raise ScenarioError("missing 'time'", field=name)
    if raw.get("delta_db") is not None and not _is_number(raw["delta_db"]):
        raise ScenarioError("delta_db must be a number", field=name)
    devices = raw.get("devices", ALL_DEVICES)
    if devices != ALL_DEVICES:
        if not isinstance(devices, (list, tuple)):
            raise ScenarioError("devices must be 'all' or a list of ids", field=name)
        devices = tuple(devices)
    return Injection(
        time=raw["time"],
        delta_db=raw.get("delta_db"),
        devices=devices,
        add_devices=raw.get("add_devices"),
    )


_INT_FIELDS = {"n_devices", "adr_n", "adr_ack_limit", "adr_ack_delay", "seed", "sf_init", "tp_init", "payload_bytes", "max_attempts"}
_OPTIONAL_FIELDS = {"fixed_distance_m"}


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_types(values: dict[str, Any]) -> None:
    for name, v in values.items():
        if name in ("injections", "sensitivity_dbm"):
            if not isinstance(v, (list, tuple)):
                raise ScenarioError("must be a list", field=name)
            if name == "sensitivity_dbm" and not all(_is_number(x) for x in v):
                raise ScenarioError("entries must be numbers", field=name)
        elif name == "range_calibrated":
            if not isinstance(v, bool):
                raise ScenarioError("must be true or false", field=name)
        elif name in _OPTIONAL_FIELDS and v is None:
            continue
        elif name in _INT_FIELDS:
            if not (isinstance(v, int) and not isinstance(v, bool)):
                raise ScenarioError(f"must be an integer, got {v!r}", field=name)
        elif not _is_number(v):
            raise ScenarioError(f"must be a number, got {v!r}", field=name)


def scenario_from_dict(raw: dict[str, Any], base: Scenario | None = None) -> Scenario:
    """Build a scenario from plain data, filling omitted fields from ``base``."""
    unknown = sorted(set(raw) - set(SCENARIO_FIELDS))
    if unknown:
        raise ScenarioError(f"unknown field(s) {unknown}", field=unknown[0])
    values = dict(raw)
    _check_types(values)
    if "injections" in values:
        values["injections"] = tuple(
            parse_injection(item, f"injections[{k}]") for k, item in enumerate(values["injections"])
        )
    if "sensitivity_dbm" in values:
        values["sensitivity_dbm"] = tuple(values["sensitivity_dbm"])
    base = base or Scenario()
    try:
        return dataclasses.replace(base, **values)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    out = dataclasses.asdict(s)
    out["injections"] = [
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(inj).items() if v is not None}
        for inj in s.injections
    ]
    out["sensitivity_dbm"] = list(s.sensitivity_dbm)
    return out
