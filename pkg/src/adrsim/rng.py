"""Splittable counter-based random streams.

Each device owns one 64-bit splitmix state derived from ``(seed, device id)``,
so adding devices to a scenario never perturbs the draws of existing ones.
The generators operate on a ``uint64`` state array and an index, which keeps
them usable inside compiled kernels.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import jit

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_INV_2_53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_seed(seed: int, device: int) -> int:
    """Initial state of the stream belonging to ``device`` under ``seed``."""
    return _mix_int((_mix_int(seed & _MASK) + 0x9E3779B97F4A7C15 * (device + 1)) & _MASK)


def device_states(seed: int, n: int) -> np.ndarray:
    return np.array([stream_seed(seed, d) for d in range(n)], dtype=np.uint64)


@jit
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@jit
def uniform(state, i):
    """Next draw in [0, 1) from stream ``i``."""
    s = state[i] + _GOLDEN
    state[i] = s
    return float(_mix(s) >> _S11) * _INV_2_53


@jit
def normal(state, i):
    u1 = uniform(state, i)
    u2 = uniform(state, i)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(_TWO_PI * u2)


@jit
def exponential(state, i, mean):
    return -mean * math.log(1.0 - uniform(state, i))


class DeviceRng:
    """Python-side handle on a single stream, mainly for tests and helpers."""

    def __init__(self, seed: int, device: int = 0) -> None:
        self._state = np.array([stream_seed(seed, device)], dtype=np.uint64)

    def uniform(self) -> float:
        with np.errstate(over="ignore"):
            return uniform(self._state, 0)

    def normal(self) -> float:
        with np.errstate(over="ignore"):
            return normal(self._state, 0)

    def exponential(self, mean: float) -> float:
        with np.errstate(over="ignore"):
            return exponential(self._state, 0, mean)
