from .engine import effective_sensitivity, inject_link_change, inject_new_devices, next_uplink_time, place_devices, run, tracked_devices
from .scenario import Injection, Scenario, ScenarioError
from .trace import RunTrace

__all__ = [
    "Injection",
    "RunTrace",
    "Scenario",
    "ScenarioError",
    "effective_sensitivity",
    "inject_link_change",
    "inject_new_devices",
    "next_uplink_time",
    "place_devices",
    "run",
    "tracked_devices",
]
