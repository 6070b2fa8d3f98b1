"""Discrete-event simulator for LoRaWAN Adaptive Data Rate convergence."""

from ._accel import JIT_ENABLED
from .sim import RunTrace, Scenario, run

__version__ = "0.1.0"
__all__ = ["JIT_ENABLED", "RunTrace", "Scenario", "run"]
