"""Host-side protocol handler and per-board consumer ring buffers.

User-space re-creation of the receive driver. Each started board gets a
slot with a circular buffer sized ring_sets * 32 * 1024 bytes, so every
data set occupies a contiguous 32 KiB region and at most two sets (the
expected one and its successor) are ever open for writing. Two 32-bit
bitmaps track which packets of those sets have arrived; head advances
only over the contiguous received prefix, and the window slides one set
forward whenever the expected set completes.

Byte positions (head, tail) are monotonic stream offsets; the ring
offset is position modulo capacity, and available = head - tail. Bytes
in [tail, head) are immutable until the consumer confirms them via
write_ptrs, mirroring the driver's READPTRS / WRITEPTRS / SETWAKEUP /
GETBUFLEN control surface.

The protocol handler and the consumer API may run on two different
threads: every slot operation takes that slot's lock, and slot-table
changes take the core lock. Distinct slots are independent.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import IntEnum

from .wire import (
    Frame,
    FrameKind,
    MacAddr,
    SeqNum,
    N_PKTS,
    PAYLOAD_SIZE,
    set_distance,
)

SET_BYTES = N_PKTS * PAYLOAD_SIZE  # 32 KiB per data set
FULL_SET = (1 << N_PKTS) - 1
DEFAULT_RING_SETS = 4


class ReceiverError(Exception):
    pass


class UnknownFebError(ReceiverError):
    """No slot exists for this MAC address."""


class AlreadyStartedError(ReceiverError):
    pass


class SlotTableFullError(ReceiverError):
    pass


class ConsumeRangeError(ReceiverError):
    """write_ptrs asked to consume more than is available."""


class RxCode(IntEnum):
    """Outcome of handling one DATA frame (trace/metrics plumbing)."""

    STORED = 0        # payload copied, acknowledged
    DUP_ACK = 1       # packet bit already set; ack repeated
    LATE_ACK = 2      # from a recently completed set; ack repeated
    NO_SPACE = 3      # would overwrite unconsumed bytes; dropped, no ack
    STALE_SET = 4     # set number outside the plausible window
    BAD_PKT = 5       # packet index >= 32
    UNREGISTERED = 6  # unknown or stopped source; STOP sent back


@dataclass(frozen=True)
class RxAction:
    """What the protocol handler wants sent back, if anything."""

    code: RxCode
    stored: bool = False
    ack: SeqNum | None = None
    stop_to: MacAddr | None = None


class FebSlot:
    """Receive state for one board."""

    def __init__(self, mac: MacAddr, ring_sets: int, wakeup_threshold: int):
        if ring_sets < 2:
            raise ValueError("ring must hold at least two data sets")
        self.mac = mac
        self.started = True
        self.capacity = ring_sets * SET_BYTES
        self.ring = bytearray(self.capacity)
        self.ring_sets = ring_sets
        self.expected_set = 0
        self.exp_base = 0       # stream offset where expected_set begins
        self.bitmap0 = 0        # received packets of expected_set
        self.bitmap1 = 0        # received packets of expected_set + 1
        self.head = 0           # stream offset: end of contiguous data
        self.tail = 0           # stream offset: consumer progress
        self.wakeup_threshold = wakeup_threshold
        self.lock = threading.Lock()
        self.stored_frames = 0
        self.dup_acked = 0
        self.no_space_drops = 0
        self.stale_set = 0
        self.bad_pkt_index = 0

    @property
    def set_base_offsets(self) -> tuple[int, int]:
        """Ring offsets of the two active sets' regions."""
        return (
            self.exp_base % self.capacity,
            (self.exp_base + SET_BYTES) % self.capacity,
        )

    def metrics(self) -> dict[str, int]:
        with self.lock:
            return {
                "stored_frames": self.stored_frames,
                "dup_acked": self.dup_acked,
                "no_space_drops": self.no_space_drops,
                "stale_set": self.stale_set,
                "bad_pkt_index": self.bad_pkt_index,
                "head": self.head,
                "tail": self.tail,
                "expected_set": self.expected_set,
            }

    def check_invariants(self):
        assert 0 <= self.head - self.tail <= self.capacity
        assert self.exp_base <= self.head <= self.exp_base + SET_BYTES
        assert self.tail <= self.head
        rel = self.head - self.exp_base
        full_pkts = rel // PAYLOAD_SIZE
        assert self.bitmap0 & ((1 << full_pkts) - 1) == (1 << full_pkts) - 1, (
            "head ran past a gap"
        )
        assert self.bitmap0 != FULL_SET or rel == SET_BYTES


class ReceiverCore:
    """Slot table plus the 0xfade protocol handler."""

    def __init__(self, host_mac: MacAddr, max_slaves: int = 8):
        self.host_mac = host_mac
        self.max_slaves = max_slaves
        self.slots: dict[MacAddr, FebSlot] = {}
        self.unregistered_source = 0
        self._table_lock = threading.Lock()

    # ------------------------------------------------------------------
    # control surface (the ioctl set)

    def start_feb(
        self,
        mac: MacAddr,
        ring_sets: int = DEFAULT_RING_SETS,
        wakeup_threshold: int = PAYLOAD_SIZE,
    ) -> Frame:
        """Register a board and return the START frame to transmit.

        Restarting a stopped board reallocates its slot from scratch
        (the board resets its numbering on START).
        """
        with self._table_lock:
            existing = self.slots.get(mac)
            if existing is not None and existing.started:
                raise AlreadyStartedError(f"{mac.hex(':')} already started")
            if existing is None and len(self.slots) >= self.max_slaves:
                raise SlotTableFullError(f"max_slaves={self.max_slaves} reached")
            self.slots[mac] = FebSlot(mac, ring_sets, wakeup_threshold)
        return Frame(dst=mac, src=self.host_mac, kind=FrameKind.START)

    def stop_feb(self, mac: MacAddr) -> Frame:
        """Stop a board; its slot is kept so the consumer can drain it."""
        slot = self._slot(mac)
        with slot.lock:
            slot.started = False
        return Frame(dst=mac, src=self.host_mac, kind=FrameKind.STOP)

    def _slot(self, mac: MacAddr) -> FebSlot:
        slot = self.slots.get(mac)
        if slot is None:
            raise UnknownFebError(mac.hex(":"))
        return slot

    # ------------------------------------------------------------------
    # data path

    def handle_frame(self, frame: Frame) -> RxAction:
        """Apply the protocol handler rules to one received DATA frame."""
        if frame.kind is not FrameKind.DATA:
            raise ValueError("protocol handler only accepts DATA frames")
        slot = self.slots.get(frame.src)
        if slot is None or not slot.started:
            self.unregistered_source += 1
            return RxAction(code=RxCode.UNREGISTERED, stop_to=frame.src)
        seq = frame.seq
        with slot.lock:
            if seq.pkt >= N_PKTS:
                slot.bad_pkt_index += 1
                return RxAction(code=RxCode.BAD_PKT)
            d = set_distance(slot.expected_set, seq.set & 0xFFFF)
            if d in (0, 1):
                return self._store(slot, d, seq, frame.payload)
            if -(slot.ring_sets - 1) <= d < 0:
                # set already completed; the previous ack was likely lost
                slot.dup_acked += 1
                return RxAction(code=RxCode.LATE_ACK, ack=seq)
            slot.stale_set += 1
            return RxAction(code=RxCode.STALE_SET)

    def _store(self, slot: FebSlot, d: int, seq: SeqNum, payload: bytes) -> RxAction:
        bit = 1 << seq.pkt
        bm = slot.bitmap0 if d == 0 else slot.bitmap1
        if bm & bit:
            slot.dup_acked += 1
            return RxAction(code=RxCode.DUP_ACK, ack=seq)
        pos = slot.exp_base + d * SET_BYTES + seq.pkt * PAYLOAD_SIZE
        if pos + PAYLOAD_SIZE > slot.tail + slot.capacity:
            # consumer lag: copying would overwrite unconsumed bytes; no
            # ack, the sender keeps the packet and retransmits later
            slot.no_space_drops += 1
            return RxAction(code=RxCode.NO_SPACE)
        off = pos % slot.capacity
        slot.ring[off : off + PAYLOAD_SIZE] = payload
        if d == 0:
            slot.bitmap0 |= bit
        else:
            slot.bitmap1 |= bit
        # extend the contiguous prefix, sliding the two-set window
        # whenever the expected set completes
        while True:
            rel = slot.head - slot.exp_base
            if rel == SET_BYTES:
                slot.expected_set = (slot.expected_set + 1) & 0xFFFF
                slot.exp_base += SET_BYTES
                slot.bitmap0 = slot.bitmap1
                slot.bitmap1 = 0
                continue
            if (slot.bitmap0 >> (rel // PAYLOAD_SIZE)) & 1:
                slot.head += PAYLOAD_SIZE
            else:
                break
        slot.stored_frames += 1
        return RxAction(code=RxCode.STORED, stored=True, ack=seq)

    # ------------------------------------------------------------------
    # consumer surface

    def read_ptrs(self, mac: MacAddr) -> tuple[int, int, int]:
        """(head, tail, available bytes) as monotonic stream offsets."""
        slot = self._slot(mac)
        with slot.lock:
            return slot.head, slot.tail, slot.head - slot.tail

    def peek_views(self, mac: MacAddr, count: int) -> list[memoryview]:
        """Zero-copy views of the next `count` unconsumed bytes.

        At most two chunks (the range may wrap the ring). The bytes stay
        valid until write_ptrs consumes past them.
        """
        slot = self._slot(mac)
        with slot.lock:
            if count > slot.head - slot.tail:
                raise ConsumeRangeError(f"{count} > available")
            off = slot.tail % slot.capacity
            mv = memoryview(slot.ring)
            if off + count <= slot.capacity:
                return [mv[off : off + count]]
            first = slot.capacity - off
            return [mv[off:], mv[: count - first]]

    def write_ptrs(self, mac: MacAddr, consumed: int):
        """Consumer confirms `consumed` bytes; frees ring space."""
        slot = self._slot(mac)
        with slot.lock:
            if consumed < 0 or consumed > slot.head - slot.tail:
                raise ConsumeRangeError(
                    f"consumed {consumed}, available {slot.head - slot.tail}"
                )
            slot.tail += consumed

    def poll_ready(self, mac: MacAddr) -> bool:
        slot = self._slot(mac)
        with slot.lock:
            return slot.head - slot.tail >= slot.wakeup_threshold

    def set_wakeup(self, mac: MacAddr, threshold: int):
        slot = self._slot(mac)
        with slot.lock:
            slot.wakeup_threshold = threshold

    def get_buf_len(self, mac: MacAddr) -> int:
        return self._slot(mac).capacity

    def metrics(self) -> dict[str, int]:
        out = {"unregistered_source": self.unregistered_source}
        for mac, slot in self.slots.items():
            prefix = mac.hex()
            for key, value in slot.metrics().items():
                out[f"{prefix}.{key}"] = value
        return out
