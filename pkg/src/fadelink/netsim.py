"""Deterministic discrete-event simulation of the test network.

Topology: k sender nodes, one store-and-forward switch with drop-tail
output queues, one receiver host. Every sender has a duplex link to the
switch; the switch has a duplex link to the receiver. Data frames flow
sender -> switch -> receiver; acknowledges and START/STOP commands flow
the other way.

Determinism rules (shared verbatim with the compiled engine):

  * all times are integer nanoseconds; events execute in (time,
    insertion sequence) order;
  * every link direction owns a splitmix64 substream; per transmitted
    frame exactly three draws are consumed (loss, duplication, jitter),
    plus one more for the duplicate's jitter when duplication fires;
  * a lost frame still occupies its serialization slot; duplication
    creates a second arrival of a surviving frame;
  * serialization delay is bytes*8e9 // rate_bps, arrival happens at
    serialization end + propagation + jitter, so frames on one link
    reorder only through jitter;
  * switch ports enqueue arrivals first and start transmitting via a
    same-time dequeue event, so simultaneous arrivals contend for the
    drop-tail queue before service begins.

Engines return plain integer counters; all float math (throughput,
means) happens later in shared report code, which keeps the two engines
byte-identical in their outputs.
"""

from __future__ import annotations

import heapq
from collections import deque

from . import rng
from .pacing import PacingParams
from .receiver import ReceiverCore, RxCode
from .sender import SenderCore
from .wire import Frame, FrameKind, SeqNum, PAYLOAD_SIZE

INF = 1 << 62

# event kinds
EV_SENDER_WAKE = 1
EV_SENDER_RX = 2
EV_SWITCH_RX = 3
EV_PORT_TX = 4
EV_RECV_RX = 5
EV_RECV_DONE = 6
EV_CONSUME = 7
EV_START_RETRY = 8

# source modes
SRC_UNLIMITED = 0
SRC_RATE = 1
SRC_BURST = 2

# rng substream tags
TAG_LINK = 1
TAG_STREAM = 2

# trace node codes (senders use their index)
NODE_SWITCH = 1000
NODE_RECEIVER = 2000

# trace directions
DIR_TX = 0
DIR_RX = 1
DIR_FWD = 2
DIR_CONSUME = 3

# trace dispositions
D_SENT = 0
D_RESENT = 1
D_LOST = 2
D_DUP = 3
D_DROP_QUEUE = 4
D_DROP_UNKNOWN = 5
D_FORWARDED = 6
D_STORED = 7
D_DUP_ACK = 8
D_LATE_ACK = 9
D_NO_SPACE = 10
D_STALE = 11
D_BAD_PKT = 12
D_UNREGISTERED = 13
D_OK = 14
D_FIFO_DROP = 15
D_CONSUMED = 16

_RX_DISP = {
    RxCode.STORED: D_STORED,
    RxCode.DUP_ACK: D_DUP_ACK,
    RxCode.LATE_ACK: D_LATE_ACK,
    RxCode.NO_SPACE: D_NO_SPACE,
    RxCode.STALE_SET: D_STALE,
    RxCode.BAD_PKT: D_BAD_PKT,
    RxCode.UNREGISTERED: D_UNREGISTERED,
}


def serialization_ns(nbytes: int, rate_bps: int) -> int:
    return nbytes * 8_000_000_000 // rate_bps


class SchedulingError(Exception):
    """An event was scheduled in the simulated past."""


class OracleCursor:
    """Chunked view of a payload oracle stream (see rng.stream_bytes)."""

    CHUNK = 256 * 1024

    def __init__(self, stream_seed: int):
        self.seed = stream_seed
        self.base = 0
        self.chunk = b""

    def read(self, offset: int, length: int) -> bytes:
        end = offset + length
        if offset < self.base or end > self.base + len(self.chunk):
            self.base = offset - (offset % self.CHUNK)
            need = end - self.base
            size = ((need + self.CHUNK - 1) // self.CHUNK) * self.CHUNK
            self.chunk = rng.stream_bytes(self.seed, self.base, size)
        lo = offset - self.base
        return self.chunk[lo : lo + length]


class Link:
    """One direction of a cable: serialization, loss, duplication, jitter."""

    __slots__ = (
        "rate_bps",
        "prop_ns",
        "loss_thr",
        "dup_thr",
        "jitter_ns",
        "gen",
        "arrival_kind",
        "arrival_arg",
        "owner_node",
        "sent",
        "lost",
        "dup_extra",
        "arrivals",
    )

    def __init__(self, cfg: dict, seed: int, arrival_kind: int, arrival_arg: int, owner_node: int):
        self.rate_bps = cfg["rate_bps"]
        self.prop_ns = cfg["prop_ns"]
        self.loss_thr = cfg["loss_thr"]
        self.dup_thr = cfg["dup_thr"]
        self.jitter_ns = cfg["jitter_ns"]
        self.gen = rng.SplitMix64(seed)
        self.arrival_kind = arrival_kind
        self.arrival_arg = arrival_arg
        self.owner_node = owner_node
        self.sent = 0
        self.lost = 0
        self.dup_extra = 0
        self.arrivals = 0


class Port:
    """Output queue feeding one link; drop-tail when cap is finite."""

    __slots__ = ("queue", "busy", "cap", "link")

    def __init__(self, link: Link, cap: int | None):
        self.queue: deque[Frame] = deque()
        self.busy = False
        self.cap = cap
        self.link = link


class Simulation:
    """One simulation run; single-threaded, integer-time event loop."""

    def __init__(self, ns: dict, trace: bool = False, check_invariants: bool = False):
        self.now = 0
        self.heap: list = []
        self.seq = 0
        self.events = 0
        self.tracing = trace
        self.trace: list[tuple] = []
        self.checking = check_invariants

        self.seed = ns["seed"]
        self.duration_ns = ns["duration_ns"]
        self.warmup_ns = ns["warmup_ns"]
        self.start_retry_ns = ns["start_retry_ns"]
        senders = ns["senders"]
        self.n = len(senders)

        self.host_mac = ns["receiver"]["mac"]
        self.proc_ns = ns["receiver"]["proc_ns"]
        self.consume_latency_ns = ns["consumer"]["latency_ns"]
        self.receiver = ReceiverCore(self.host_mac, max_slaves=max(self.n, 1))

        # links: up_i = 2i, down_i = 2i+1, trunk_up = 2n, trunk_down = 2n+1
        self.up: list[Link] = []
        self.down: list[Link] = []
        for i, s in enumerate(senders):
            self.up.append(
                Link(s["link"], rng.derive(self.seed, TAG_LINK, 2 * i), EV_SWITCH_RX, 0, i)
            )
            self.down.append(
                Link(s["link"], rng.derive(self.seed, TAG_LINK, 2 * i + 1), EV_SENDER_RX, i, NODE_SWITCH)
            )
        rcfg = ns["receiver"]["link"]
        self.trunk_up = Link(
            rcfg, rng.derive(self.seed, TAG_LINK, 2 * self.n), EV_RECV_RX, 0, NODE_SWITCH
        )
        self.trunk_down = Link(
            rcfg, rng.derive(self.seed, TAG_LINK, 2 * self.n + 1), EV_SWITCH_RX, 0, NODE_RECEIVER
        )

        # switch ports 0..n-1 toward senders, port n toward receiver,
        # port n+1 is the receiver host's own reverse-direction NIC
        q = ns["switch"]["queue_frames"]
        self.ports = [Port(self.down[i], q) for i in range(self.n)]
        self.ports.append(Port(self.trunk_up, q))
        self.ports.append(Port(self.trunk_down, None))
        self.recvtx = self.n + 1
        self.port_map = {s["mac"]: i for i, s in enumerate(senders)}
        self.port_map[self.host_mac] = self.n

        self.switch_enqueued = 0
        self.switch_drop_queue = 0
        self.switch_drop_unknown = 0

        # sender nodes
        self.cores: list[SenderCore] = []
        self.src_mode: list[int] = []
        self.src_rate: list[int] = []
        self.src_burst: list[int] = []
        self.src_period: list[int] = []
        self.src_limit: list[int] = []
        self.src_offset = [0] * self.n
        self.src_cursor: list[OracleCursor] = []
        self.up_busy = [0] * self.n
        self.wake_at = [INF] * self.n
        self.acks_enqueued = [0] * self.n
        self.rtt_count = [0] * self.n
        self.rtt_sum = [0] * self.n
        self.rtt_min = [INF] * self.n
        self.rtt_max = [-1] * self.n
        self.starts_received = [0] * self.n
        self.stops_received = [0] * self.n
        for i, s in enumerate(senders):
            params: PacingParams = s["pacing"]
            self.cores.append(SenderCore(s["mac"], self.host_mac, params))
            src = s["source"]
            self.src_mode.append(src["mode"])
            self.src_rate.append(src["rate_bps"])
            self.src_burst.append(src["burst_bytes"])
            self.src_period.append(src["burst_period_ns"])
            limit = src["stream_bytes"]
            self.src_limit.append(limit if limit > 0 else INF)
            self.src_cursor.append(OracleCursor(rng.derive(self.seed, TAG_STREAM, i)))

        # receiver node
        self.ring_sets = ns["receiver"]["ring_sets"]
        self.wakeup_threshold = ns["receiver"]["wakeup_threshold"]
        self.host_busy = False
        self.host_queue: deque[tuple[Frame, int]] = deque()
        self.data_seen = [False] * self.n
        self.consume_pending = [False] * self.n
        self.ack_lat_count = [0] * self.n
        self.ack_lat_sum = [0] * self.n
        self.ack_lat_min = [INF] * self.n
        self.ack_lat_max = [-1] * self.n
        self.stray_control = 0
        self.verified_bytes = [0] * self.n
        self.delivered_measured = [0] * self.n
        self.verify_failed = [0] * self.n
        self.first_mismatch = [-1] * self.n
        self.verify_cursor = [
            OracleCursor(rng.derive(self.seed, TAG_STREAM, i)) for i in range(self.n)
        ]
        self.idx_of_mac = {s["mac"]: i for i, s in enumerate(senders)}

        for i, s in enumerate(senders):
            self.receiver.start_feb(s["mac"], self.ring_sets, self.wakeup_threshold)
            self.schedule(0, EV_START_RETRY, i)

    # ------------------------------------------------------------------
    # event machinery

    def schedule(self, t: int, kind: int, arg: int = 0, obj=None):
        if t < self.now:
            raise SchedulingError(f"event at {t} scheduled at now={self.now}")
        heapq.heappush(self.heap, (t, self.seq, kind, arg, obj))
        self.seq += 1

    def run_until(self, t_end: int):
        heap = self.heap
        while heap and heap[0][0] <= t_end:
            t, _, kind, arg, obj = heapq.heappop(heap)
            self.now = t
            self.events += 1
            if kind == EV_SENDER_WAKE:
                self.ev_sender_wake(arg, t)
            elif kind == EV_SENDER_RX:
                self.ev_sender_rx(arg, obj)
            elif kind == EV_SWITCH_RX:
                self.ev_switch_rx(obj)
            elif kind == EV_PORT_TX:
                self.ev_port_tx(arg)
            elif kind == EV_RECV_RX:
                self.ev_recv_rx(obj)
            elif kind == EV_RECV_DONE:
                self.ev_recv_done(obj)
            elif kind == EV_CONSUME:
                self.ev_consume(arg)
            elif kind == EV_START_RETRY:
                self.ev_start_retry(arg)
        self.now = t_end

    def run(self):
        self.run_until(self.duration_ns)
        for i in range(self.n):
            self._consume(i)  # final drain, ignoring the wakeup threshold

    def _trace(self, node, direction, kind, seq, size, disp):
        if seq is None:
            st, pk = 0, 0
        else:
            st, pk = seq.set, seq.pkt
        self.trace.append((self.now, node, direction, int(kind), st, pk, size, disp))

    # ------------------------------------------------------------------
    # links and ports

    def transmit(self, link: Link, frame: Frame, t_start: int) -> int:
        """Put a frame on a link; returns serialization-done time."""
        done = t_start + serialization_ns(frame.wire_size, link.rate_bps)
        link.sent += 1
        u_loss = link.gen.next_u64()
        u_dup = link.gen.next_u64()
        u_jit = link.gen.next_u64()
        if u_loss < link.loss_thr:
            link.lost += 1
            if self.tracing:
                self._trace(link.owner_node, DIR_TX, frame.kind, frame.seq, frame.wire_size, D_LOST)
            return done
        jit = rng.bounded(u_jit, link.jitter_ns + 1) if link.jitter_ns else 0
        self.schedule(done + link.prop_ns + jit, link.arrival_kind, link.arrival_arg, frame)
        link.arrivals += 1
        if u_dup < link.dup_thr:
            u2 = link.gen.next_u64()
            jit2 = rng.bounded(u2, link.jitter_ns + 1) if link.jitter_ns else 0
            self.schedule(done + link.prop_ns + jit2, link.arrival_kind, link.arrival_arg, frame)
            link.dup_extra += 1
            link.arrivals += 1
            if self.tracing:
                self._trace(link.owner_node, DIR_TX, frame.kind, frame.seq, frame.wire_size, D_DUP)
        return done

    def port_enqueue(self, pid: int, frame: Frame):
        port = self.ports[pid]
        if port.cap is not None and len(port.queue) >= port.cap:
            self.switch_drop_queue += 1
            if self.tracing:
                self._trace(NODE_SWITCH, DIR_FWD, frame.kind, frame.seq, frame.wire_size, D_DROP_QUEUE)
            return
        port.queue.append(frame)
        if not port.busy:
            port.busy = True
            self.schedule(self.now, EV_PORT_TX, pid)

    def ev_port_tx(self, pid: int):
        port = self.ports[pid]
        if not port.queue:
            port.busy = False
            return
        frame = port.queue.popleft()
        done = self.transmit(port.link, frame, self.now)
        self.schedule(done, EV_PORT_TX, pid)

    def ev_switch_rx(self, frame: Frame):
        pid = self.port_map.get(frame.dst)
        if pid is None:
            self.switch_drop_unknown += 1
            if self.tracing:
                self._trace(NODE_SWITCH, DIR_RX, frame.kind, frame.seq, frame.wire_size, D_DROP_UNKNOWN)
            return
        self.switch_enqueued += 1
        if self.tracing:
            self._trace(NODE_SWITCH, DIR_FWD, frame.kind, frame.seq, frame.wire_size, D_FORWARDED)
        self.port_enqueue(pid, frame)

    # ------------------------------------------------------------------
    # sender nodes

    def _source_has(self, i: int, upto: int, t: int) -> bool:
        """True when the source has produced stream bytes [0, upto) by t."""
        if upto > self.src_limit[i]:
            return False
        mode = self.src_mode[i]
        if mode == SRC_UNLIMITED:
            return True
        if mode == SRC_RATE:
            return self.src_rate[i] * t // 8_000_000_000 >= upto
        return (t // self.src_period[i] + 1) * self.src_burst[i] >= upto

    def _source_time(self, i: int, upto: int) -> int:
        """Earliest time the source will have produced [0, upto)."""
        if upto > self.src_limit[i]:
            return INF
        mode = self.src_mode[i]
        if mode == SRC_UNLIMITED:
            return 0
        if mode == SRC_RATE:
            return (upto * 8_000_000_000 + self.src_rate[i] - 1) // self.src_rate[i]
        m = (upto + self.src_burst[i] - 1) // self.src_burst[i] - 1
        return m * self.src_period[i]

    def request_wake(self, i: int, t: int):
        if t < self.wake_at[i]:
            self.wake_at[i] = t
            self.schedule(t, EV_SENDER_WAKE, i)

    def ev_sender_wake(self, i: int, t: int):
        if t != self.wake_at[i]:
            return  # superseded by an earlier wake
        self.wake_at[i] = INF
        self._run_sender(i, self.cores[i], self.up[i])

    def _run_sender(self, i: int, core: SenderCore, up: Link):
        now = self.now
        busy = self.up_busy[i]
        while True:
            progress = False
            while core.running and core.data_ready:
                nxt = self.src_offset[i] + PAYLOAD_SIZE
                if not self._source_has(i, nxt, now):
                    break
                chunk = self.src_cursor[i].read(self.src_offset[i], PAYLOAD_SIZE)
                core.offer_block(chunk)
                self.src_offset[i] = nxt
                progress = True
            before = core.tasks_executed
            action = core.step(now, tx_ready=now >= busy)
            if action is not None:
                frame = action.frame
                done = self.transmit(up, frame, now)
                busy = done
                self.up_busy[i] = done
                if self.tracing:
                    self._trace(
                        i, DIR_TX, frame.kind, frame.seq, frame.wire_size,
                        D_RESENT if action.resend else D_SENT,
                    )
            if core.tasks_executed == before and not progress:
                break
        if self.checking:
            core.check_invariants()
        if not core.running:
            return
        hint = INF
        if core.data_ready:
            t_src = self._source_time(i, self.src_offset[i] + PAYLOAD_SIZE)
            if t_src > now:
                hint = t_src
        if core.has_transmit_candidate():
            t_tx = core.next_transmit_ns()
            if t_tx < busy:
                t_tx = busy
            if t_tx < hint:
                hint = t_tx
        if hint < INF:
            self.request_wake(i, hint if hint > now else now + 1)

    def ev_sender_rx(self, i: int, frame: Frame):
        core = self.cores[i]
        if frame.kind is FrameKind.ACK:
            if core.would_accept_ack(frame.seq):
                rtt = self.now - core.tx_time_ns[frame.seq.pkt]
                self.rtt_count[i] += 1
                self.rtt_sum[i] += rtt
                if rtt < self.rtt_min[i]:
                    self.rtt_min[i] = rtt
                if rtt > self.rtt_max[i]:
                    self.rtt_max[i] = rtt
            dropped = len(core.ack_fifo) == core.ack_fifo.maxlen
            core.enqueue_ack(frame.seq)
            self.acks_enqueued[i] += 1
            if self.tracing:
                self._trace(i, DIR_RX, frame.kind, frame.seq, frame.wire_size,
                            D_FIFO_DROP if dropped else D_OK)
        elif frame.kind is FrameKind.START:
            # a START is a reset only from the stopped state; repeats are
            # ignored so a late retry cannot wreck a running stream
            if not core.running:
                core.on_command(FrameKind.START)
            self.starts_received[i] += 1
            if self.tracing:
                self._trace(i, DIR_RX, frame.kind, None, frame.wire_size, D_OK)
        elif frame.kind is FrameKind.STOP:
            core.on_command(FrameKind.STOP)
            self.stops_received[i] += 1
            if self.tracing:
                self._trace(i, DIR_RX, frame.kind, None, frame.wire_size, D_OK)
        if self.checking:
            core.check_invariants()
        self.request_wake(i, self.now)

    # ------------------------------------------------------------------
    # receiver node

    def ev_recv_rx(self, frame: Frame):
        if frame.kind is FrameKind.DATA:
            i = self.idx_of_mac.get(frame.src)
            if i is not None:
                self.data_seen[i] = True
        if self.host_busy:
            self.host_queue.append((frame, self.now))
        else:
            self.host_busy = True
            self.schedule(self.now + self.proc_ns, EV_RECV_DONE, 0, (frame, self.now))

    def ev_recv_done(self, item: tuple[Frame, int]):
        frame, t_arr = item
        if frame.kind is FrameKind.DATA:
            action = self.receiver.handle_frame(frame)
            if self.tracing:
                self._trace(NODE_RECEIVER, DIR_RX, frame.kind, frame.seq,
                            frame.wire_size, _RX_DISP[action.code])
            if action.ack is not None:
                ack = Frame(dst=frame.src, src=self.host_mac, kind=FrameKind.ACK, seq=action.ack)
                lat = self.now - t_arr
                i = self.idx_of_mac[frame.src]
                self.ack_lat_count[i] += 1
                self.ack_lat_sum[i] += lat
                if lat < self.ack_lat_min[i]:
                    self.ack_lat_min[i] = lat
                if lat > self.ack_lat_max[i]:
                    self.ack_lat_max[i] = lat
                if self.tracing:
                    self._trace(NODE_RECEIVER, DIR_TX, ack.kind, ack.seq, ack.wire_size, D_SENT)
                self.port_enqueue(self.recvtx, ack)
            if action.stop_to is not None:
                stop = Frame(dst=action.stop_to, src=self.host_mac, kind=FrameKind.STOP)
                if self.tracing:
                    self._trace(NODE_RECEIVER, DIR_TX, stop.kind, None, stop.wire_size, D_SENT)
                self.port_enqueue(self.recvtx, stop)
            if action.stored:
                i = self.idx_of_mac[frame.src]
                if not self.consume_pending[i]:
                    _, _, avail = self.receiver.read_ptrs(frame.src)
                    if avail >= self.wakeup_threshold:
                        self.consume_pending[i] = True
                        self.schedule(self.now + self.consume_latency_ns, EV_CONSUME, i)
        else:
            self.stray_control += 1
        if self.host_queue:
            item = self.host_queue.popleft()
            self.schedule(self.now + self.proc_ns, EV_RECV_DONE, 0, item)
        else:
            self.host_busy = False

    def ev_consume(self, i: int):
        self.consume_pending[i] = False
        self._consume(i)
        mac = self.cores[i].mac
        _, _, avail = self.receiver.read_ptrs(mac)
        if avail > 0 and avail >= self.wakeup_threshold:
            self.consume_pending[i] = True
            self.schedule(self.now + self.consume_latency_ns, EV_CONSUME, i)

    def _consume(self, i: int):
        """Drain and verify everything available from slot i."""
        mac = self.cores[i].mac
        _, _, avail = self.receiver.read_ptrs(mac)
        if avail == 0:
            return
        offset = self.verified_bytes[i]
        for view in self.receiver.peek_views(mac, avail):
            expected = self.verify_cursor[i].read(offset, len(view))
            if bytes(view) != expected:
                if self.verify_failed[i] == 0:
                    self.verify_failed[i] = 1
                    got = bytes(view)
                    for j in range(len(view)):
                        if got[j] != expected[j]:
                            self.first_mismatch[i] = offset + j
                            break
            offset += len(view)
        self.receiver.write_ptrs(mac, avail)
        self.verified_bytes[i] = offset
        if self.now >= self.warmup_ns:
            self.delivered_measured[i] += avail
        if self.tracing:
            self._trace(NODE_RECEIVER, DIR_CONSUME, 0, None, avail, D_CONSUMED)
        if self.checking:
            self.receiver.slots[mac].check_invariants()

    def ev_start_retry(self, i: int):
        if self.data_seen[i]:
            return
        start = Frame(dst=self.cores[i].mac, src=self.host_mac, kind=FrameKind.START)
        if self.tracing:
            self._trace(NODE_RECEIVER, DIR_TX, start.kind, None, start.wire_size, D_SENT)
        self.port_enqueue(self.recvtx, start)
        self.schedule(self.now + self.start_retry_ns, EV_START_RETRY, i)

    # ------------------------------------------------------------------
    # raw results (integers only; formatting happens in shared code)

    def result(self) -> dict:
        senders = []
        for i, core in enumerate(self.cores):
            slot = self.receiver.slots[core.mac]
            delay = core.pacing.delay
            senders.append(
                {
                    "frames_sent": core.frames_sent,
                    "frames_resent": core.frames_resent,
                    "acks_enqueued": self.acks_enqueued[i],
                    "ack_fifo_drops": core.ack_fifo_drops,
                    "acks_accepted": core.acks_accepted,
                    "acks_stale": core.acks_stale,
                    "rtt_count": self.rtt_count[i],
                    "rtt_sum_ns": self.rtt_sum[i],
                    "rtt_min_ns": self.rtt_min[i] if self.rtt_count[i] else -1,
                    "rtt_max_ns": self.rtt_max[i] if self.rtt_count[i] else -1,
                    "delivered_bytes": self.verified_bytes[i],
                    "delivered_measured_bytes": self.delivered_measured[i],
                    "verify_failed": self.verify_failed[i],
                    "first_mismatch_at": self.first_mismatch[i],
                    "final_delay_ns": core.pacing.delay_ns,
                    "final_delay_us": core.pacing.delay_us,
                    "final_delay_num": delay.numerator,
                    "final_delay_den": delay.denominator,
                    "window_rsnt": list(core.pacing.window_rsnt),
                    "window_size": core.pacing.params.n_pkt_update,
                    "starts_received": self.starts_received[i],
                    "stops_received": self.stops_received[i],
                    "source_offered_bytes": self.src_offset[i],
                    "unconfirmed_at_end": bin(core.valid & ~core.confirmed).count("1"),
                    "ack_lat_count": self.ack_lat_count[i],
                    "ack_lat_sum_ns": self.ack_lat_sum[i],
                    "ack_lat_min_ns": self.ack_lat_min[i] if self.ack_lat_count[i] else -1,
                    "ack_lat_max_ns": self.ack_lat_max[i] if self.ack_lat_count[i] else -1,
                    "stored_frames": slot.stored_frames,
                    "dup_acked": slot.dup_acked,
                    "no_space_drops": slot.no_space_drops,
                    "stale_set": slot.stale_set,
                    "bad_pkt_index": slot.bad_pkt_index,
                }
            )
        links = []
        for i in range(self.n):
            links.append(self.up[i])
            links.append(self.down[i])
        links.append(self.trunk_up)
        links.append(self.trunk_down)
        return {
            "engine": "pure",
            "t_end_ns": self.now,
            "events": self.events,
            "senders": senders,
            "receiver": {
                "unregistered_source": self.receiver.unregistered_source,
                "stray_control": self.stray_control,
            },
            "links": [
                {
                    "sent": lk.sent,
                    "lost": lk.lost,
                    "dup_extra": lk.dup_extra,
                    "arrivals": lk.arrivals,
                }
                for lk in links
            ],
            "switch": {
                "enqueued": self.switch_enqueued,
                "drop_queue": self.switch_drop_queue,
                "drop_unknown": self.switch_drop_unknown,
            },
            "trace": self.trace if self.tracing else None,
        }


def simulate(norm_scenario: dict, trace: bool = False, check_invariants: bool = False) -> dict:
    """Run one scenario on the pure-Python engine; returns raw counters."""
    sim = Simulation(norm_scenario, trace=trace, check_invariants=check_invariants)
    sim.run()
    return sim.result()
