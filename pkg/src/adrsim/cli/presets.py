"""Named experiment presets, one per study."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable

from ..sim.scenario import DAY_S, WARMUP, Injection, Scenario, ScenarioError

Value = float | int


def _set_field(name: str) -> Callable[[Scenario, Value], Scenario]:
    def apply(s: Scenario, value: Value) -> Scenario:
        return s.replace(**{name: value})

    return apply


def _set_delta(s: Scenario, value: Value) -> Scenario:
    injections = tuple(
        dataclasses.replace(inj, delta_db=float(value)) if inj.is_link_change else inj for inj in s.injections
    )
    return s.replace(injections=injections)


# 100 new devices join a settled network of n_devices
NETWORK = Scenario(injections=(Injection(time=WARMUP, add_devices=100),))

# A device at the reference distance settles on SF7, then loses 21 dB at day 2
# and needs three SF steps to get back in range.
DEGRADED_LINK = Scenario(
    n_devices=1,
    fixed_distance_m=40.0,
    injections=(Injection(time=2 * DAY_S, delta_db=21.0, devices=(0,)),),
)

IMPROVING_LINK = Scenario(
    n_devices=1,
    fixed_distance_m=600.0,
    sigma_db=3.57,
    sim_duration_s=4 * DAY_S,
    injections=(Injection(time=DAY_S, delta_db=-5.0, devices=(0,)),),
)

# lossy cell-edge device; confirmed frames get retried when unacknowledged
EDGE_LINK = Scenario(
    n_devices=1,
    fixed_distance_m=670.0,
    sigma_db=3.57,
    sim_duration_s=4 * DAY_S,
    injections=(Injection(time=DAY_S, delta_db=-2.5, devices=(0,)),),
)

TEMPLATES = {
    "network": NETWORK,
    "degraded-link": DEGRADED_LINK,
    "improving-link": IMPROVING_LINK,
    "edge-link": EDGE_LINK,
}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    template: str
    param: str
    values: tuple[Value, ...]
    repetitions: int = 30

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError(f"preset {self.name}: empty value list")
        if self.template not in TEMPLATES:
            raise ValueError(f"preset {self.name}: unknown template {self.template}")

    def base(self, overrides: dict[str, Any] | None = None) -> Scenario:
        from ..sim.scenario import scenario_from_dict

        return scenario_from_dict(overrides or {}, base=TEMPLATES[self.template])

    def scenario(self, value: Value, seed: int, overrides: dict[str, Any] | None = None) -> Scenario:
        apply = _set_delta if self.param == "delta_db" else _set_field(self.param)
        try:
            return apply(self.base(overrides), value).replace(seed=seed)
        except TypeError as exc:
            raise ScenarioError(str(exc), field=self.param) from exc


_PRESETS = (
    ExperimentPreset("network-size", "new devices joining networks of growing size", "network", "n_devices",
                     (100, 500, 1000, 2000, 3000, 4000)),
    ExperimentPreset("channel-variation", "shadowing spread of the channel", "network", "sigma_db", (0.0, 1.785, 3.57)),
    ExperimentPreset("link-increase", "mean path loss rises on a settled device", "degraded-link", "delta_db",
                     (3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0)),
    ExperimentPreset("link-decrease", "mean path loss drops on a device", "improving-link", "delta_db",
                     (-2.5, -5.0, -7.5, -10.0, -15.0)),
    ExperimentPreset("traffic-type", "share of confirmed uplinks", "edge-link", "confirmed_fraction",
                     (0.0, 0.25, 0.5, 0.75, 1.0)),
    ExperimentPreset("n-packets", "uplinks collected before an ADR decision", "degraded-link", "adr_n", (5, 10, 15, 20)),
    ExperimentPreset("ack-limit", "ADR_ACK_LIMIT", "degraded-link", "adr_ack_limit", (16, 32, 64, 128)),
    ExperimentPreset("ack-delay", "ADR_ACK_DELAY", "degraded-link", "adr_ack_delay", (8, 16, 32, 64)),
)

PRESETS: dict[str, ExperimentPreset] = {p.name: p for p in _PRESETS}
assert len(PRESETS) == len(_PRESETS), "preset names must be unique"


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", field="preset") from None
