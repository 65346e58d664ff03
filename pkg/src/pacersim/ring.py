"""DMA ring state machine and the continuous-pacing poll cycle.

The ring keeps a simulated NIC transmitting fixed-size slots back to back.
Slots that carry no application payload hold placeholder frames with a
deliberately invalid CRC; the receiving NIC drops those in hardware, so the
wire stays busy while the host only pays for real packets.

Counters are free-running: the physical slot of counter ``c`` is ``c % N``.
Positions reported by :meth:`DmaRing.nic_consume` are 0-based counter values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Optional

from .errors import InvalidConfig, RingUnderrun

#: Traffic-class id reserved for best-effort traffic. Ring slots not claimed
#: by a real-time application default to this class.
BEST_EFFORT = 0

MIN_SLOT_SIZE = 64
MAX_SLOT_SIZE = 1518


class SlotState(Enum):
    PLACEHOLDER = "placeholder"
    ARMED = "armed"
    IN_FLIGHT = "in_flight"


@dataclass
class RingConfig:
    num_slots: int
    slot_size: int
    batch_size: int
    polling_period: int = 0  # ns between poll cycles
    polling_overhead: int = 0  # ns of processing per poll cycle
    line_rate: int = 1_000_000_000  # bits per second
    wire_overhead: int = 0  # preamble + interframe gap, bytes

    def __post_init__(self):
        if self.num_slots < 1:
            raise InvalidConfig("num_slots must be >= 1")
        if not 1 <= self.batch_size <= self.num_slots:
            raise InvalidConfig("batch_size must satisfy 1 <= batch_size <= num_slots")
        if not MIN_SLOT_SIZE <= self.slot_size <= MAX_SLOT_SIZE:
            raise InvalidConfig(
                f"slot_size must be in [{MIN_SLOT_SIZE}, {MAX_SLOT_SIZE}]"
            )
        if self.line_rate <= 0:
            raise InvalidConfig("line_rate must be > 0")
        if self.polling_period < 0 or self.polling_overhead < 0:
            raise InvalidConfig("polling times must be >= 0")
        if self.wire_overhead < 0:
            raise InvalidConfig("wire_overhead must be >= 0")

    @property
    def wire_time(self) -> Fraction:
        """Time one slot occupies the wire, in ns (exact)."""
        return Fraction((self.slot_size + self.wire_overhead) * 8 * 10**9, self.line_rate)


@dataclass
class Descriptor:
    state: SlotState = SlotState.PLACEHOLDER
    owner_class: int = BEST_EFFORT
    payload_len: int = 0
    crc_valid: bool = False
    scheduled_time: Optional[int] = None
    flow_id: Optional[str] = None
    seq: int = 0

    def reset_to_placeholder(self, slot_size: int):
        # Padding to the full slot happens here, off the insertion path.
        self.state = SlotState.PLACEHOLDER
        self.payload_len = slot_size
        self.crc_valid = False
        self.scheduled_time = None
        self.flow_id = None
        self.seq = 0


class TransmittedRecord(NamedTuple):
    position: int  # free-running counter of the consumed slot
    payload_len: int
    crc_valid: bool
    flow_id: Optional[str]
    owner_class: int
    scheduled_time: Optional[int]
    seq: int


class ReclaimReport(NamedTuple):
    reclaimed: tuple  # counter positions reset to placeholder
    producer_index: int


class DmaRing:
    """Fixed-size descriptor ring with free-running producer/consumer counters.

    Single-writer: all mutation happens from one logical thread (the event
    engine); instances may be handed between threads but never shared mutably.
    """

    def __init__(self, config: RingConfig, ownership: Optional[dict] = None):
        self.config = config
        n = config.num_slots
        ownership = ownership or {}
        for pos in ownership:
            if not 0 <= pos < n:
                raise InvalidConfig(f"ownership position {pos} outside ring of {n}")
        self.descriptors = [
            Descriptor(
                owner_class=ownership.get(pos, BEST_EFFORT),
                payload_len=config.slot_size,
            )
            for pos in range(n)
        ]
        self.consumer_index = 0
        self.producer_index = config.batch_size
        self._reclaim_cursor = 0  # counters below this have been reclaimed

    # -- helpers -----------------------------------------------------------

    def slot_of(self, counter: int) -> int:
        return counter % self.config.num_slots

    def descriptor_at(self, counter: int) -> Descriptor:
        return self.descriptors[counter % self.config.num_slots]

    def owner_of(self, counter: int) -> int:
        return self.descriptor_at(counter).owner_class

    # -- operations --------------------------------------------------------

    def nic_consume(self, k: int) -> list[TransmittedRecord]:
        """Advance the NIC's consumer index by ``k`` completed transmissions."""
        if k < 0:
            raise ValueError("k must be >= 0")
        if self.consumer_index + k > self.producer_index:
            raise RingUnderrun(
                f"consume of {k} would pass producer "
                f"({self.consumer_index} + {k} > {self.producer_index})"
            )
        records = []
        for _ in range(k):
            c = self.consumer_index
            d = self.descriptor_at(c)
            records.append(
                TransmittedRecord(
                    position=c,
                    payload_len=d.payload_len,
                    crc_valid=d.crc_valid,
                    flow_id=d.flow_id,
                    owner_class=d.owner_class,
                    scheduled_time=d.scheduled_time,
                    seq=d.seq,
                )
            )
            d.state = SlotState.IN_FLIGHT
            self.consumer_index = c + 1
        return records

    def poll_cycle(self) -> ReclaimReport:
        """Reclaim completed descriptors and advance the producer by one batch.

        Idempotent when nothing was consumed since the last poll. The producer
        advance clamps at the full-ring bound so producer - consumer <= N.
        """
        reclaimed = []
        while self._reclaim_cursor < self.consumer_index:
            c = self._reclaim_cursor
            self.descriptor_at(c).reset_to_placeholder(self.config.slot_size)
            reclaimed.append(c)
            self._reclaim_cursor = c + 1
        self.producer_index = min(
            self.producer_index + self.config.batch_size,
            self.consumer_index + self.config.num_slots,
        )
        return ReclaimReport(tuple(reclaimed), self.producer_index)

    def insertion_window(self) -> tuple[int, int]:
        """Half-open counter interval [lo, hi) accepting immediate insertion."""
        lo = self.consumer_index + self.config.batch_size
        hi = self.consumer_index + self.config.num_slots
        return lo, hi


def new_ring(config: RingConfig, ownership: Optional[dict] = None) -> DmaRing:
    """Build a freshly initialized ring: all placeholders, producer at batch size."""
    return DmaRing(config, ownership)


def relative_throughput(config: RingConfig) -> float:
    """Predicted fraction of line rate the pacing loop sustains.

    The loop keeps pace when a batch of slots lasts at least one polling
    period plus its processing overhead; otherwise throughput degrades to
    the fraction of wire time the loop manages to feed.
    """
    batch_time = config.batch_size * config.wire_time
    budget = max(batch_time, Fraction(config.polling_period + config.polling_overhead))
    if budget == 0:
        return 1.0
    return float(min(Fraction(1), batch_time / budget))
