"""Pseudo-random binary signal from a maximal-length LFSR."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Primitive feedback polynomials x^n + x^m + 1 (Fibonacci taps n, m).
TAPS = {
    10: (10, 7),
    11: (11, 9),
    15: (15, 14),
    17: (17, 14),
    20: (20, 17),
}
DEFAULT_ORDER = 15


@lru_cache(maxsize=32)
def ml_sequence(order: int = DEFAULT_ORDER, state: int = 1) -> np.ndarray:
    """One full period (``2**order - 1`` bits) of the ML sequence as 0/1."""
    if order not in TAPS:
        raise ValueError(f"no taps for LFSR order {order}; have {sorted(TAPS)}")
    n, m = TAPS[order]
    mask = (1 << n) - 1
    state &= mask
    if state == 0:
        raise ValueError("LFSR state must be nonzero")
    period = mask
    bits = np.empty(period, dtype=np.int8)
    for i in range(period):
        bits[i] = state & 1
        fb = ((state >> (n - 1)) ^ (state >> (m - 1))) & 1
        state = ((state << 1) | fb) & mask
    bits.setflags(write=False)
    return bits


def _seed_state(seed: int, order: int) -> int:
    period = (1 << order) - 1
    return (seed * 2654435761) % period + 1


class Prbs:
    """``+-amplitude`` chips held ``switch_period`` samples each.

    Different seeds start the same ML sequence at different phases.
    """

    def __init__(self, amplitude: float = 0.3, switch_period: int = 1, seed: int = 0,
                 order: int = DEFAULT_ORDER):
        if amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if switch_period < 1:
            raise ValueError("switch_period must be >= 1")
        if order < 10:
            raise ValueError("LFSR order must be at least 10")
        self.amplitude = float(amplitude)
        self.switch_period = int(switch_period)
        self._chips = amplitude * (2.0 * ml_sequence(order, _seed_state(seed, order)) - 1.0)

    def __call__(self, t: int) -> float:
        return float(self._chips[(t // self.switch_period) % self._chips.size])

    def samples(self, n: int, start: int = 0) -> np.ndarray:
        idx = (np.arange(start, start + n) // self.switch_period) % self._chips.size
        return self._chips[idx]


def prbs(amplitude: float, switch_period: int, seed: int, t: int) -> float:
    return Prbs(amplitude, switch_period, seed)(t)
