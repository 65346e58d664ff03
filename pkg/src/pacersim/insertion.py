"""Scheduled packet insertion into the paced ring.

Maps a desired transmission time to a ring slot and arms the descriptor
after three validation checks: the target must still hold a placeholder,
must lie in the immediate insertion window, and must belong to the packet's
traffic class. Strict mode drops on any failure; relaxed mode falls back to
the earliest usable slot in the window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .clock import EphcClock
from .errors import (
    NoSlotAvailable,
    NotPlaceholder,
    OutOfWindow,
    OwnershipViolation,
    PayloadTooLarge,
)
from .ring import DmaRing, SlotState


@dataclass
class OutboundPacket:
    flow_id: str
    traffic_class: int
    payload_len: int
    scheduled_time: Optional[int] = None  # EPHC ns; None for best-effort
    seq: int = 0

    def __post_init__(self):
        if self.payload_len < 1:
            raise ValueError("payload_len must be >= 1")


class InsertMode(Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


def target_counter(clock: EphcClock, scheduled_time) -> int:
    """Free-running counter whose transmission starts at ``scheduled_time``.

    Counter c's slot goes on the wire at c * cycle_period + offset on the
    clock that the ring's transmissions drive, so the counter is recovered
    from the time by inverting the clock's linear model. Using the absolute
    counter (rather than only the mod-N slot) lets late packets be detected
    instead of silently slipping a full ring revolution.
    """
    rel = Fraction(scheduled_time) - clock.offset
    return int(rel // clock.cycle_period) if rel >= 0 else -1


def _arm(ring: DmaRing, counter: int, pkt: OutboundPacket) -> int:
    d = ring.descriptor_at(counter)
    d.state = SlotState.ARMED
    d.payload_len = pkt.payload_len  # padded to slot_size on the wire
    d.crc_valid = True
    d.scheduled_time = pkt.scheduled_time
    d.flow_id = pkt.flow_id
    d.seq = pkt.seq
    return counter

def _scan_window(ring: DmaRing, traffic_class: int) -> int:
    lo, hi = ring.insertion_window()
    for c in range(lo, hi):
        d = ring.descriptor_at(c)
        if d.state is SlotState.PLACEHOLDER and d.owner_class == traffic_class:
            return c
    raise NoSlotAvailable(f"no placeholder owned by class {traffic_class} in window")


def try_insert(
    ring: DmaRing, pkt: OutboundPacket, clock: EphcClock, mode: InsertMode
) -> int:
    """Arm the slot matching the packet's scheduled time; returns the counter.

    Raises NotPlaceholder / OutOfWindow / OwnershipViolation in strict mode;
    relaxed mode retargets inside the window and raises NoSlotAvailable only
    when the window holds no usable slot for the packet's class.
    """
    if pkt.scheduled_time is None:
        raise ValueError("try_insert requires a scheduled_time")
    if pkt.payload_len > ring.config.slot_size:
        raise PayloadTooLarge(
            f"payload {pkt.payload_len} exceeds slot size {ring.config.slot_size}"
        )
    c = target_counter(clock, pkt.scheduled_time)
    lo, hi = ring.insertion_window()
    try:
        if not lo <= c < hi:
            raise OutOfWindow(
                f"target counter {c} outside insertion window [{lo}, {hi})"
            )
        d = ring.descriptor_at(c)
        if d.state is not SlotState.PLACEHOLDER or d.crc_valid:
            raise NotPlaceholder(f"slot {ring.slot_of(c)} is not a placeholder")
        if d.owner_class != pkt.traffic_class:
            raise OwnershipViolation(
                f"slot {ring.slot_of(c)} owned by class {d.owner_class}, "
                f"packet is class {pkt.traffic_class}"
            )
    except (OutOfWindow, NotPlaceholder, OwnershipViolation):
        if mode is InsertMode.STRICT:
            raise
        return _arm(ring, _scan_window(ring, pkt.traffic_class), pkt)
    return _arm(ring, c, pkt)


def insert_best_effort(ring: DmaRing, pkt: OutboundPacket) -> int:
    """Arm the earliest in-window placeholder owned by the packet's class."""
    if pkt.scheduled_time is not None:
        raise ValueError("best-effort packets carry no scheduled_time")
    if pkt.payload_len > ring.config.slot_size:
        raise PayloadTooLarge(
            f"payload {pkt.payload_len} exceeds slot size {ring.config.slot_size}"
        )
    return _arm(ring, _scan_window(ring, pkt.traffic_class), pkt)
