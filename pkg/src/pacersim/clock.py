"""Emulated hardware clock derived from a packet counter.

Time is a linear function of the number of transmitted slots:
``now = cycle_count * cycle_period + offset``. Synchronization only ever
touches the period and the offset; the counter itself is driven solely by
transmissions, so adjusting the clock never disturbs packet scheduling.

The cycle period is kept as an exact rational so that ppm-scale rate
adjustments compose without accumulating rounding error over billions of
ticks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

TimeLike = Union[int, Fraction]


def _round_nearest(x: Fraction) -> int:
    """Round to nearest integer, ties away from zero."""
    if x < 0:
        return -_round_nearest(-x)
    return int(x + Fraction(1, 2))


@dataclass
class EphcClock:
    cycle_period: Fraction  # ns per tick, > 0
    offset: Fraction = Fraction(0)  # signed ns
    cycle_count: int = 0

    def __post_init__(self):
        self.cycle_period = Fraction(self.cycle_period)
        self.offset = Fraction(self.offset)
        if self.cycle_period <= 0:
            raise ValueError("cycle_period must be > 0")

    def now_exact(self) -> Fraction:
        return self.cycle_count * self.cycle_period + self.offset

    def now(self) -> int:
        return _round_nearest(self.now_exact())

    def tick(self, n: int = 1):
        """Advance the packet counter; the only way cycle_count changes."""
        if n < 0:
            raise ValueError("tick count must be >= 0")
        self.cycle_count += n
        return self

    def adjust_offset(self, delta: TimeLike):
        self.offset += Fraction(delta)
        return self

    def set_time(self, t: TimeLike):
        self.offset = Fraction(t) - self.cycle_count * self.cycle_period
        return self

    def adjust_rate(self, ratio):
        """Scale the cycle period; re-anchors the offset so that the reported
        time is continuous at the adjustment instant."""
        ratio = Fraction(ratio)
        if ratio <= 0:
            raise ValueError("rate ratio must be > 0")
        new_period = self.cycle_period * ratio
        self.offset += self.cycle_count * (self.cycle_period - new_period)
        self.cycle_period = new_period
        return self


def time_to_slot(t: TimeLike, delta: TimeLike, num_slots: int) -> int:
    """Ring slot that a transmission starting at time ``t`` occupies."""
    if num_slots < 1:
        raise ValueError("num_slots must be >= 1")
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    return int(Fraction(t) / delta) % num_slots


class MergeAction(Enum):
    NONE = "none"
    SET_TX_TO_RX = "set_tx_to_rx"
    SET_RX_TO_TX = "set_rx_to_tx"


def merge_estimate(t_tx, t_rx, tau):
    """Combined timestamp for two clocks within the 2*tau agreement band.

    Assuming each clock lags true time by at most tau, the midpoint of
    [max(t_tx, t_rx), min(t_tx, t_rx) + tau] is within tau/2 of true time.
    """
    return (max(t_tx, t_rx) + min(t_tx, t_rx) + tau) / 2


@dataclass
class DualClock:
    tx: EphcClock
    rx: EphcClock
    tau: int  # worst-case per-clock lag, ns

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")

    def merge(self) -> tuple[int, MergeAction]:
        """Unified time from the transmit and receive clocks.

        Divergence beyond 2*tau indicates a fault in the lagging clock, which
        is snapped to the leading one. Neither clock's counter changes.
        """
        t_tx = self.tx.now()
        t_rx = self.rx.now()
        if abs(t_tx - t_rx) > 2 * self.tau:
            if t_tx < t_rx:
                self.tx.set_time(t_rx)
                return t_rx, MergeAction.SET_TX_TO_RX
            self.rx.set_time(t_tx)
            return t_tx, MergeAction.SET_RX_TO_TX
        merged = _round_nearest(Fraction(t_tx + t_rx + self.tau, 2))
        return merged, MergeAction.NONE
