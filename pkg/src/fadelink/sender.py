"""Transmit-side state machine: packet buffers, descriptors, pointers.

Software emulation of the FPGA transmit core. A 32 KiB packet-buffer
memory is split into 32 buffers of 1024 bytes; buffer i always holds
packet i of whatever data set is currently passing through it. Each
buffer has a descriptor with three flags (valid / sent / confirmed,
kept here as three 32-bit masks) and the 16-bit set number stamped when
the head pointer reached that buffer.

Three pointers walk the ring:

    head   buffer currently being filled from the input stream
    tail   oldest buffer not yet confirmed (frees space as it advances)
    retr   next buffer due for transmission or retransmission

step() executes at most one of the three prioritized tasks per call:
acknowledge processing, head advance, then (re)transmission gated by
the pacing delay. There is no retransmit timer; retr simply keeps
sweeping the unconfirmed interval, so pacing alone sets the resend
cadence. Callers (the simulator) invoke step() repeatedly until it
reports no progress.

A SenderCore instance is not thread-safe; calls must be externally
serialized. Distinct instances are independent.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

from .pacing import DelayController, PacingParams
from .wire import Frame, FrameKind, MacAddr, SeqNum, N_PKTS, PAYLOAD_SIZE

ACK_FIFO_DEPTH = 64
_BUF_MASK = N_PKTS - 1
_WORD = struct.Struct("!I")


@dataclass(frozen=True, slots=True)
class SendAction:
    """Transmission ordered by step(); netsim puts it on the wire."""

    frame: Frame
    not_before: int  # virtual ns; always the step() call time
    resend: bool


class SenderCore:
    """One emulated transmit core (one front-end board)."""

    def __init__(self, mac: MacAddr, host_mac: MacAddr, params: PacingParams):
        self.mac = mac
        self.host_mac = host_mac
        self.pacing = DelayController(params)
        self.buffers = bytearray(N_PKTS * PAYLOAD_SIZE)
        self.ack_fifo: deque[SeqNum] = deque(maxlen=ACK_FIFO_DEPTH)
        # lifetime diagnostics; survive restarts, excluded from snapshot()
        self.frames_sent = 0
        self.frames_resent = 0
        self.acks_accepted = 0
        self.acks_stale = 0
        self.ack_fifo_drops = 0
        self.tasks_executed = 0
        self.tx_time_ns = [0] * N_PKTS
        self.running = False
        self._reset()

    def _reset(self):
        self.head = 0
        self.tail = 0
        self.retr = 0
        self.current_set = 0
        self.fill_offset = 0
        self.valid = 0
        self.sent = 0
        self.confirmed = 0
        self.set_numbers = [0] * N_PKTS
        self.data_ready = True
        self.ack_fifo.clear()
        self.pacing.reset()
        # first transmission goes out without waiting a full delay
        self.last_transmit_ns = -self.pacing.delay_ns

    # ------------------------------------------------------------------
    # input side

    def offer_word(self, word: int) -> bool:
        """Feed one 32-bit word; returns False when backpressured."""
        if not self.running or not self.data_ready:
            return False
        pos = self.head * PAYLOAD_SIZE + self.fill_offset
        _WORD.pack_into(self.buffers, pos, word & 0xFFFFFFFF)
        self.fill_offset += 4
        if self.fill_offset == PAYLOAD_SIZE:
            self.valid |= 1 << self.head
            self.data_ready = False
        return True

    def offer_block(self, block) -> bool:
        """Feed a full 1024-byte buffer at once.

        Equivalent to 256 offer_word calls on an empty head buffer; the
        fast path used by the simulator's traffic sources.
        """
        if not self.running or not self.data_ready or self.fill_offset:
            return False
        pos = self.head * PAYLOAD_SIZE
        self.buffers[pos : pos + PAYLOAD_SIZE] = block
        self.fill_offset = PAYLOAD_SIZE
        self.valid |= 1 << self.head
        self.data_ready = False
        return True

    # ------------------------------------------------------------------
    # control and acknowledge side

    def on_command(self, kind: FrameKind):
        if kind is FrameKind.START:
            self.running = True
            self._reset()
        elif kind is FrameKind.STOP:
            self.running = False
        else:
            raise ValueError(f"not a command frame: {kind.name}")

    def enqueue_ack(self, seq: SeqNum):
        """Queue a received acknowledge; oldest entries drop on overflow."""
        if len(self.ack_fifo) == ACK_FIFO_DEPTH:
            self.ack_fifo_drops += 1
        self.ack_fifo.append(seq)

    def would_accept_ack(self, seq: SeqNum) -> bool:
        """True if processing seq now would newly confirm a buffer."""
        p = seq.pkt
        return (
            p < N_PKTS
            and (self.valid >> p) & 1 == 1
            and (self.confirmed >> p) & 1 == 0
            and self.set_numbers[p] == (seq.set & 0xFFFF)
        )

    def on_ack(self, seq: SeqNum):
        """Process one acknowledge: confirm, then walk tail (and retr).

        Acks whose set number disagrees with the descriptor (stale
        retransmissions of a reused buffer) are discarded.
        """
        p = seq.pkt
        if p >= N_PKTS:
            raise ValueError(f"packet number {p} out of range")
        if (self.valid >> p) & 1 == 0 or self.set_numbers[p] != (seq.set & 0xFFFF):
            self.acks_stale += 1
            return
        if (self.confirmed >> p) & 1:
            return  # duplicate confirm; nothing changes
        self.confirmed |= 1 << p
        self.acks_accepted += 1
        if p == self.tail:
            while self.tail != self.head and (self.confirmed >> self.tail) & 1:
                self.tail = (self.tail + 1) & _BUF_MASK
        if p == self.retr:
            while self.retr != self.head and (self.confirmed >> self.retr) & 1:
                self.retr = (self.retr + 1) & _BUF_MASK

    # ------------------------------------------------------------------
    # the state machine

    def step(self, now: int, tx_ready: bool = True) -> SendAction | None:
        """Run the highest-priority enabled task; at most one per call.

        tx_ready models the transceiver: transmission is attempted only
        when the previous frame has left the MAC. Returns a SendAction
        when a transmission was ordered, else None. tasks_executed
        increments whenever any task ran, letting callers loop until
        the core is quiescent.
        """
        if not self.running:
            return None
        # task 1: consume one pending acknowledge
        if self.ack_fifo:
            self.on_ack(self.ack_fifo.popleft())
            self.tasks_executed += 1
            return None
        # task 2: advance head when the current buffer is full
        if not self.data_ready:
            nh = (self.head + 1) & _BUF_MASK
            if nh != self.tail:
                self.head = nh
                if nh == 0:
                    self.current_set = (self.current_set + 1) & 0xFFFF
                bit = 1 << nh
                self.valid &= ~bit
                self.sent &= ~bit
                self.confirmed &= ~bit
                self.set_numbers[nh] = self.current_set
                self.fill_offset = 0
                self.data_ready = True
                self.tasks_executed += 1
                return None
            # ring full: wait for confirms, but transmission may proceed
        # task 3: transmit or retransmit the buffer under retr
        if not tx_ready or not self.has_transmit_candidate():
            return None
        if now < self.last_transmit_ns + self.pacing.delay_ns:
            return None
        r = self.retr
        seq = SeqNum(self.set_numbers[r], 0, r)
        payload = bytes(self.buffers[r * PAYLOAD_SIZE : (r + 1) * PAYLOAD_SIZE])
        frame = Frame(
            dst=self.host_mac,
            src=self.mac,
            kind=FrameKind.DATA,
            seq=seq,
            delay_us=self.pacing.reported_delay_us(),
            payload=payload,
        )
        is_resend = bool((self.sent >> r) & 1)
        self.sent |= 1 << r
        self.frames_sent += 1
        self.frames_resent += is_resend
        self.pacing.record_transmission(is_resend)
        self.tx_time_ns[r] = now
        self.last_transmit_ns = now
        self._advance_retr()
        self.tasks_executed += 1
        return SendAction(frame=frame, not_before=now, resend=is_resend)

    def _advance_retr(self):
        """Move retr to the next valid unconfirmed buffer, wrapping
        from head back to tail."""
        pending = self.valid & ~self.confirmed
        i = self.retr
        for _ in range(N_PKTS + 1):
            i = (i + 1) & _BUF_MASK
            if i == self.head:
                i = self.tail
                if i == self.head:
                    return
            if (pending >> i) & 1:
                self.retr = i
                return
            if i == self.retr:
                return

    def has_transmit_candidate(self) -> bool:
        if self.head == self.tail or self.retr == self.head:
            return False
        return ((self.valid & ~self.confirmed) >> self.retr) & 1 == 1

    def next_transmit_ns(self) -> int:
        """Earliest time the pacing gate lets the next frame out."""
        return self.last_transmit_ns + self.pacing.delay_ns

    # ------------------------------------------------------------------
    # observability

    def snapshot(self):
        """Protocol-visible state, for bit-identical comparisons.

        Lifetime diagnostics (counters, timestamps) are instrumentation
        and intentionally not part of the snapshot.
        """
        return (
            self.running,
            self.data_ready,
            self.head,
            self.tail,
            self.retr,
            self.current_set,
            self.fill_offset,
            self.valid,
            self.sent,
            self.confirmed,
            tuple(self.set_numbers),
            bytes(self.buffers),
            tuple(self.ack_fifo),
            self.last_transmit_ns,
            self.pacing.snapshot(),
        )

    def check_invariants(self):
        """Raise AssertionError when descriptor discipline is violated."""
        assert self.confirmed & ~self.valid == 0, "confirmed implies valid"
        assert self.sent & ~self.valid == 0, "sent implies valid"
        window = self.valid & ~self.confirmed
        assert bin(window).count("1") <= N_PKTS
        live_sets = {self.set_numbers[i] for i in range(N_PKTS) if (self.valid >> i) & 1}
        if len(live_sets) > 1:
            assert len(live_sets) == 2, f"sets {sorted(live_sets)}"
            a, b = sorted(live_sets)
            assert (b - a) & 0xFFFF in (1, 0xFFFF), f"non-adjacent sets {a}, {b}"
        span = (self.head - self.tail) & _BUF_MASK
        assert (self.retr - self.tail) & _BUF_MASK <= span or self.retr == self.head, (
            "retr outside [tail, head]"
        )
        if self.running:
            assert self.data_ready == (self.fill_offset < PAYLOAD_SIZE)
        if self.tail != self.head:
            assert (self.confirmed >> self.tail) & 1 == 0, "tail on confirmed buffer"
        # every buffer strictly inside [tail, head) is valid
        i = self.tail
        while i != self.head:
            assert (self.valid >> i) & 1, f"hole at buffer {i}"
            i = (i + 1) & _BUF_MASK
