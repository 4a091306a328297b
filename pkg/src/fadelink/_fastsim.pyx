# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of fadelink.netsim.

Same event semantics, same splitmix64 draw order, same integer
arithmetic, same counters and trace rows; only the implementation
differs (C structs, a manual binary heap, a frame pool). The pure
engine in netsim.py is the readable reference; every handler here
mirrors its counterpart there statement by statement, and the test
suite compares the two engines' full outputs. Keep them in lockstep.

Exact-rational pacing updates are delegated per window to the shared
fadelink.pacing.apply_window, so delay sequences cannot diverge from
the pure engine; between windows only the cached integer nanoseconds
value is used.
"""

from libc.stdlib cimport calloc, free, malloc, realloc
from libc.string cimport memcpy, memset

from fractions import Fraction

from .netsim import SchedulingError
from .pacing import apply_window, round_half_up_us

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t fl_mix64(uint64_t x) {
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }
    static inline uint64_t fl_mulshift(uint64_t u, uint64_t n) {
        return (uint64_t)(((__uint128_t)u * n) >> 64);
    }
    """
    unsigned long long fl_mix64(unsigned long long x) nogil
    unsigned long long fl_mulshift(unsigned long long u, unsigned long long n) nogil

ctypedef long long i64
ctypedef unsigned long long u64
ctypedef unsigned int u32

cdef u64 GOLDEN = <u64>0x9E3779B97F4A7C15
cdef i64 INF = <i64>1 << 62

DEF N_PKTS = 32
DEF PAYLOAD = 1024
DEF BUF_BYTES = 32768
DEF FIFO_DEPTH = 64
DEF DATA_WIRE = 1048
DEF CTRL_WIRE = 64

# frame kinds (wire type words)
DEF K_START = 0x0001
DEF K_ACK = 0x0003
DEF K_STOP = 0x0005
DEF K_DATA = 0xA5A5

# event kinds (netsim values)
DEF EV_SENDER_WAKE = 1
DEF EV_SENDER_RX = 2
DEF EV_SWITCH_RX = 3
DEF EV_PORT_TX = 4
DEF EV_RECV_RX = 5
DEF EV_RECV_DONE = 6
DEF EV_CONSUME = 7
DEF EV_START_RETRY = 8

DEF SRC_UNLIMITED = 0
DEF SRC_RATE = 1
DEF SRC_BURST = 2

# trace codes (netsim values)
DEF NODE_SWITCH = 1000
DEF NODE_RECEIVER = 2000
DEF DIR_TX = 0
DEF DIR_RX = 1
DEF DIR_FWD = 2
DEF DIR_CONSUME = 3
DEF D_SENT = 0
DEF D_RESENT = 1
DEF D_LOST = 2
DEF D_DUP = 3
DEF D_DROP_QUEUE = 4
DEF D_DROP_UNKNOWN = 5
DEF D_FORWARDED = 6
DEF D_STORED = 7
DEF D_DUP_ACK = 8
DEF D_LATE_ACK = 9
DEF D_NO_SPACE = 10
DEF D_STALE = 11
DEF D_BAD_PKT = 12
DEF D_UNREGISTERED = 13
DEF D_OK = 14
DEF D_FIFO_DROP = 15
DEF D_CONSUMED = 16

# destination codes inside frames
DEF DST_RECEIVER = -2


cdef inline u64 derive2(u64 seed, u64 a, u64 b) nogil:
    # mirrors rng.derive(seed, a, b)
    cdef u64 s = fl_mix64(seed)
    s = fl_mix64((s + GOLDEN) ^ a)
    s = fl_mix64((s + GOLDEN) ^ b)
    return s


cdef inline u64 stream_word(u64 seed, i64 index) nogil:
    return fl_mix64(seed + (<u64>(index + 1)) * GOLDEN) & <u64>0xFFFFFFFF


ctypedef struct Event:
    i64 t
    u64 seq
    int kind
    int a
    int fr      # frame pool index, -1 when unused
    i64 b       # auxiliary time (frame arrival timestamp)


ctypedef struct CFrame:
    int kind
    int src       # sender index, -2 when from receiver
    int dst       # sender index or DST_RECEIVER
    u32 set_
    u32 retry
    u32 pkt
    u32 delay_us
    int refcnt
    unsigned char payload[PAYLOAD]


ctypedef struct CLink:
    i64 rate_bps
    i64 prop_ns
    u64 loss_thr_lo   # threshold < 2**64 part
    int loss_always   # probability >= 1
    u64 dup_thr_lo
    int dup_always
    i64 jitter_ns
    u64 rng_state
    int arrival_kind
    int arrival_arg
    int owner_node
    i64 sent
    i64 lost
    i64 dup_extra
    i64 arrivals


ctypedef struct CPort:
    int* q
    int q_cap
    int q_head
    int q_len
    int cap        # -1 unbounded
    int busy
    int link       # link index


ctypedef struct CSender:
    unsigned char buffers[BUF_BYTES]
    u32 valid
    u32 sent_mask
    u32 conf
    u32 set_numbers[N_PKTS]
    int head
    int tail
    int retr
    u32 current_set
    int fill_offset
    int running
    int data_ready
    i64 last_tx_ns
    i64 tx_time_ns[N_PKTS]
    u32 fifo[FIFO_DEPTH]       # packed (set << 16) | pkt
    int fifo_head
    int fifo_len
    # metadata of the latest ordered transmission (for the trace row)
    u32 last_tx_set
    u32 last_tx_pkt
    int last_tx_resend
    # pacing caches (exact fraction lives in Python)
    i64 delay_ns
    u32 delay_us
    i64 c_sent
    i64 c_rsnt
    i64 n_update
    i64 th_num, th_den, tl_num, tl_den
    # counters
    i64 frames_sent
    i64 frames_resent
    i64 acks_accepted
    i64 acks_stale
    i64 fifo_drops
    # source
    int src_mode
    i64 src_rate
    i64 src_burst
    i64 src_period
    i64 src_limit
    i64 src_offset
    u64 stream_seed
    # node state
    i64 up_busy
    i64 wake_at
    i64 acks_enqueued
    i64 rtt_count
    i64 rtt_sum
    i64 rtt_min
    i64 rtt_max
    i64 starts_received
    i64 stops_received
    int data_seen


ctypedef struct CSlot:
    unsigned char* ring
    i64 capacity
    int ring_sets
    u32 bitmap0
    u32 bitmap1
    u32 expected_set
    i64 exp_base
    i64 head
    i64 tail
    i64 stored
    i64 dup_acked
    i64 no_space
    i64 stale
    i64 bad_pkt
    # consumer / verifier
    int consume_pending
    i64 verified
    i64 delivered_measured
    int verify_failed
    i64 first_mismatch
    u64 stream_seed
    i64 ack_lat_count
    i64 ack_lat_sum
    i64 ack_lat_min
    i64 ack_lat_max


ctypedef struct HostItem:
    int fr
    i64 t_arr


cdef class FastSim:
    cdef Event* heap
    cdef int heap_cap
    cdef int heap_len
    cdef u64 seq_counter
    cdef i64 now
    cdef i64 events

    cdef CFrame* pool
    cdef int pool_cap
    cdef int* free_list
    cdef int free_len

    cdef int n
    cdef i64 duration_ns
    cdef i64 warmup_ns
    cdef i64 start_retry_ns
    cdef i64 proc_ns
    cdef i64 consume_latency_ns
    cdef i64 wakeup_threshold

    cdef CLink* links          # 2n+2 entries: up_i=2i, down_i=2i+1, then trunks
    cdef CPort* ports          # n+2 entries
    cdef CSender* senders
    cdef CSlot* slots

    cdef HostItem* host_q
    cdef int host_cap
    cdef int host_head
    cdef int host_len
    cdef int host_busy

    cdef i64 switch_enqueued
    cdef i64 switch_drop_queue
    cdef i64 switch_drop_unknown
    cdef i64 stray_control

    cdef int tracing
    cdef int checking
    cdef list trace
    cdef list py_delay         # Fraction per sender
    cdef list py_params        # PacingParams per sender
    cdef list py_window_rsnt   # list[int] per sender

    def __cinit__(self):
        self.heap = NULL
        self.pool = NULL
        self.free_list = NULL
        self.links = NULL
        self.ports = NULL
        self.senders = NULL
        self.slots = NULL
        self.host_q = NULL

    def __dealloc__(self):
        cdef int i
        if self.ports != NULL:
            for i in range(self.n + 2):
                if self.ports[i].q != NULL:
                    free(self.ports[i].q)
        if self.slots != NULL:
            for i in range(self.n):
                if self.slots[i].ring != NULL:
                    free(self.slots[i].ring)
        free(self.heap)
        free(self.pool)
        free(self.free_list)
        free(self.links)
        free(self.ports)
        free(self.senders)
        free(self.slots)
        free(self.host_q)

    # ------------------------------------------------------------------
    # construction

    def __init__(self, ns: dict, trace: bool = False, check_invariants: bool = False):
        self.now = 0
        self.seq_counter = 0
        self.events = 0
        self.tracing = 1 if trace else 0
        self.checking = 1 if check_invariants else 0
        self.trace = []

        cdef u64 seed = ns["seed"]
        self.duration_ns = ns["duration_ns"]
        self.warmup_ns = ns["warmup_ns"]
        self.start_retry_ns = ns["start_retry_ns"]
        senders = ns["senders"]
        self.n = len(senders)
        self.proc_ns = ns["receiver"]["proc_ns"]
        self.consume_latency_ns = ns["consumer"]["latency_ns"]
        self.wakeup_threshold = ns["receiver"]["wakeup_threshold"]
        cdef int ring_sets = ns["receiver"]["ring_sets"]

        self.heap_cap = 1024
        self.heap = <Event*>malloc(self.heap_cap * sizeof(Event))
        self.heap_len = 0
        self.pool_cap = 256
        self.pool = <CFrame*>calloc(self.pool_cap, sizeof(CFrame))
        self.free_list = <int*>malloc(self.pool_cap * sizeof(int))
        self.free_len = self.pool_cap
        cdef int i
        for i in range(self.pool_cap):
            self.free_list[i] = self.pool_cap - 1 - i

        self.links = <CLink*>calloc(2 * self.n + 2, sizeof(CLink))
        self.ports = <CPort*>calloc(self.n + 2, sizeof(CPort))
        self.senders = <CSender*>calloc(self.n, sizeof(CSender))
        self.slots = <CSlot*>calloc(self.n, sizeof(CSlot))
        if (self.links == NULL or self.ports == NULL or self.senders == NULL
                or self.slots == NULL or self.heap == NULL or self.pool == NULL):
            raise MemoryError

        cdef int q = ns["switch"]["queue_frames"]
        rcfg = ns["receiver"]["link"]
        for i in range(self.n):
            s = senders[i]
            self._init_link(2 * i, s["link"], derive2(seed, 1, 2 * i),
                            EV_SWITCH_RX, 0, i)
            self._init_link(2 * i + 1, s["link"], derive2(seed, 1, 2 * i + 1),
                            EV_SENDER_RX, i, NODE_SWITCH)
            self._init_port(i, 2 * i + 1, q)
            self._init_sender(i, s, derive2(seed, 2, i))
            self._init_slot(i, ring_sets, derive2(seed, 2, i))
        self._init_link(2 * self.n, rcfg, derive2(seed, 1, 2 * self.n),
                        EV_RECV_RX, 0, NODE_SWITCH)
        self._init_link(2 * self.n + 1, rcfg, derive2(seed, 1, 2 * self.n + 1),
                        EV_SWITCH_RX, 0, NODE_RECEIVER)
        self._init_port(self.n, 2 * self.n, q)
        self._init_port(self.n + 1, 2 * self.n + 1, -1)

        self.host_cap = 64
        self.host_q = <HostItem*>malloc(self.host_cap * sizeof(HostItem))
        self.host_head = 0
        self.host_len = 0
        self.host_busy = 0
        self.switch_enqueued = 0
        self.switch_drop_queue = 0
        self.switch_drop_unknown = 0
        self.stray_control = 0

        self.py_delay = []
        self.py_params = []
        self.py_window_rsnt = []
        for i in range(self.n):
            params = senders[i]["pacing"]
            self.py_params.append(params)
            self.py_delay.append(Fraction(params.initial_delay_ns))
            self.py_window_rsnt.append([])
            self._cache_pacing(i)
            # first transmission goes out without waiting a full delay
            self.senders[i].last_tx_ns = -self.senders[i].delay_ns

        for i in range(self.n):
            self.schedule(0, EV_START_RETRY, i, -1, 0)

    cdef void _init_link(self, int idx, cfg, u64 rng_seed,
                         int arrival_kind, int arrival_arg, int owner):
        cdef CLink* lk = &self.links[idx]
        lk.rate_bps = cfg["rate_bps"]
        lk.prop_ns = cfg["prop_ns"]
        thr = cfg["loss_thr"]
        lk.loss_always = 1 if thr >= (1 << 64) else 0
        lk.loss_thr_lo = 0 if lk.loss_always else thr
        thr = cfg["dup_thr"]
        lk.dup_always = 1 if thr >= (1 << 64) else 0
        lk.dup_thr_lo = 0 if lk.dup_always else thr
        lk.jitter_ns = cfg["jitter_ns"]
        lk.rng_state = rng_seed
        lk.arrival_kind = arrival_kind
        lk.arrival_arg = arrival_arg
        lk.owner_node = owner
        lk.sent = 0
        lk.lost = 0
        lk.dup_extra = 0
        lk.arrivals = 0

    cdef void _init_port(self, int idx, int link, int cap):
        cdef CPort* p = &self.ports[idx]
        p.q_cap = 16
        p.q = <int*>malloc(p.q_cap * sizeof(int))
        p.q_head = 0
        p.q_len = 0
        p.cap = cap
        p.busy = 0
        p.link = link

    cdef void _init_sender(self, int i, cfg, u64 stream_seed):
        cdef CSender* s = &self.senders[i]
        src = cfg["source"]
        s.src_mode = src["mode"]
        s.src_rate = src["rate_bps"]
        s.src_burst = src["burst_bytes"]
        s.src_period = src["burst_period_ns"]
        limit = src["stream_bytes"]
        s.src_limit = limit if limit > 0 else INF
        s.src_offset = 0
        s.stream_seed = stream_seed
        s.running = 0
        s.data_ready = 1
        s.head = 0
        s.tail = 0
        s.retr = 0
        s.up_busy = 0
        s.wake_at = INF
        s.rtt_min = INF
        s.rtt_max = -1
        params = cfg["pacing"]
        s.n_update = params.n_pkt_update
        s.th_num = params.t_high.numerator
        s.th_den = params.t_high.denominator
        s.tl_num = params.t_low.numerator
        s.tl_den = params.t_low.denominator

    cdef void _init_slot(self, int i, int ring_sets, u64 stream_seed):
        cdef CSlot* sl = &self.slots[i]
        sl.ring_sets = ring_sets
        sl.capacity = <i64>ring_sets * BUF_BYTES
        sl.ring = <unsigned char*>calloc(sl.capacity, 1)
        if sl.ring == NULL:
            raise MemoryError
        sl.stream_seed = stream_seed
        sl.first_mismatch = -1
        sl.ack_lat_min = INF
        sl.ack_lat_max = -1

    cdef void _cache_pacing(self, int i):
        delay = self.py_delay[i]
        self.senders[i].delay_ns = delay.numerator // delay.denominator
        self.senders[i].delay_us = round_half_up_us(delay)

    # ------------------------------------------------------------------
    # frame pool

    cdef int alloc_frame(self) except -1:
        cdef int idx, old
        cdef i64 k
        if self.free_len == 0:
            old = self.pool_cap
            self.pool_cap *= 2
            self.pool = <CFrame*>realloc(self.pool, self.pool_cap * sizeof(CFrame))
            self.free_list = <int*>realloc(self.free_list, self.pool_cap * sizeof(int))
            if self.pool == NULL or self.free_list == NULL:
                raise MemoryError
            for k in range(old, self.pool_cap):
                self.free_list[self.free_len] = self.pool_cap - 1 - (k - old)
                self.free_len += 1
        self.free_len -= 1
        idx = self.free_list[self.free_len]
        self.pool[idx].refcnt = 1
        return idx

    cdef void drop_frame(self, int fr):
        self.pool[fr].refcnt -= 1
        if self.pool[fr].refcnt == 0:
            self.free_list[self.free_len] = fr
            self.free_len += 1

    # ------------------------------------------------------------------
    # event heap

    cdef void schedule(self, i64 t, int kind, int a, int fr, i64 b):
        if t < self.now:
            raise SchedulingError(f"event at {t} scheduled at now={self.now}")
        cdef int i, parent
        cdef Event ev
        if self.heap_len == self.heap_cap:
            self.heap_cap *= 2
            self.heap = <Event*>realloc(self.heap, self.heap_cap * sizeof(Event))
            if self.heap == NULL:
                raise MemoryError
        ev.t = t
        ev.seq = self.seq_counter
        self.seq_counter += 1
        ev.kind = kind
        ev.a = a
        ev.fr = fr
        ev.b = b
        i = self.heap_len
        self.heap_len += 1
        while i > 0:
            parent = (i - 1) >> 1
            if (self.heap[parent].t < ev.t or
                    (self.heap[parent].t == ev.t and self.heap[parent].seq < ev.seq)):
                break
            self.heap[i] = self.heap[parent]
            i = parent
        self.heap[i] = ev

    cdef Event pop_event(self):
        cdef Event top = self.heap[0]
        cdef Event last
        cdef int i = 0, child
        self.heap_len -= 1
        if self.heap_len > 0:
            last = self.heap[self.heap_len]
            while True:
                child = 2 * i + 1
                if child >= self.heap_len:
                    break
                if child + 1 < self.heap_len:
                    if (self.heap[child + 1].t < self.heap[child].t or
                            (self.heap[child + 1].t == self.heap[child].t and
                             self.heap[child + 1].seq < self.heap[child].seq)):
                        child += 1
                if (last.t < self.heap[child].t or
                        (last.t == self.heap[child].t and last.seq < self.heap[child].seq)):
                    break
                self.heap[i] = self.heap[child]
                i = child
            self.heap[i] = last
        return top

    # ------------------------------------------------------------------
    # tracing

    cdef void _trace_row(self, int node, int direction, int kind, u32 st,
                         u32 pk, int size, int disp):
        self.trace.append((self.now, node, direction, kind, st, pk, size, disp))

    cdef void _trace_frame(self, int node, int direction, int fr, int disp):
        cdef CFrame* f = &self.pool[fr]
        cdef u32 st = 0, pk = 0
        if f.kind == K_DATA or f.kind == K_ACK:
            st = f.set_
            pk = f.pkt
        self._trace_row(node, direction, f.kind,
                        st, pk,
                        DATA_WIRE if f.kind == K_DATA else CTRL_WIRE, disp)

    # ------------------------------------------------------------------
    # links and ports

    cdef inline u64 draw(self, CLink* lk) nogil:
        lk.rng_state += GOLDEN
        return fl_mix64(lk.rng_state)

    cdef i64 transmit(self, int link_idx, int fr, i64 t_start):
        cdef CLink* lk = &self.links[link_idx]
        cdef CFrame* f = &self.pool[fr]
        cdef int wire = DATA_WIRE if f.kind == K_DATA else CTRL_WIRE
        cdef i64 done = t_start + (<i64>wire * 8000000000) // lk.rate_bps
        cdef u64 u_loss, u_dup, u_jit, u2
        cdef i64 jit, jit2
        lk.sent += 1
        u_loss = self.draw(lk)
        u_dup = self.draw(lk)
        u_jit = self.draw(lk)
        if lk.loss_always or u_loss < lk.loss_thr_lo:
            lk.lost += 1
            if self.tracing:
                self._trace_frame(lk.owner_node, DIR_TX, fr, D_LOST)
            self.drop_frame(fr)
            return done
        jit = <i64>fl_mulshift(u_jit, lk.jitter_ns + 1) if lk.jitter_ns else 0
        self.schedule(done + lk.prop_ns + jit, lk.arrival_kind, lk.arrival_arg, fr, 0)
        lk.arrivals += 1
        if lk.dup_always or u_dup < lk.dup_thr_lo:
            u2 = self.draw(lk)
            jit2 = <i64>fl_mulshift(u2, lk.jitter_ns + 1) if lk.jitter_ns else 0
            f.refcnt += 1
            self.schedule(done + lk.prop_ns + jit2, lk.arrival_kind, lk.arrival_arg, fr, 0)
            lk.dup_extra += 1
            lk.arrivals += 1
            if self.tracing:
                self._trace_frame(lk.owner_node, DIR_TX, fr, D_DUP)
        return done

    cdef void port_enqueue(self, int pid, int fr):
        cdef CPort* p = &self.ports[pid]
        cdef int* nq
        cdef int k
        if p.cap >= 0 and p.q_len >= p.cap:
            self.switch_drop_queue += 1
            if self.tracing:
                self._trace_frame(NODE_SWITCH, DIR_FWD, fr, D_DROP_QUEUE)
            self.drop_frame(fr)
            return
        if p.q_len == p.q_cap:
            nq = <int*>malloc(p.q_cap * 2 * sizeof(int))
            for k in range(p.q_len):
                nq[k] = p.q[(p.q_head + k) % p.q_cap]
            free(p.q)
            p.q = nq
            p.q_head = 0
            p.q_cap *= 2
        p.q[(p.q_head + p.q_len) % p.q_cap] = fr
        p.q_len += 1
        if not p.busy:
            p.busy = 1
            self.schedule(self.now, EV_PORT_TX, pid, -1, 0)

    cdef void ev_port_tx(self, int pid):
        cdef CPort* p = &self.ports[pid]
        cdef int fr
        cdef i64 done
        if p.q_len == 0:
            p.busy = 0
            return
        fr = p.q[p.q_head]
        p.q_head = (p.q_head + 1) % p.q_cap
        p.q_len -= 1
        done = self.transmit(p.link, fr, self.now)
        self.schedule(done, EV_PORT_TX, pid, -1, 0)

    cdef void ev_switch_rx(self, int fr):
        cdef CFrame* f = &self.pool[fr]
        cdef int pid
        if f.dst == DST_RECEIVER:
            pid = self.n
        elif 0 <= f.dst < self.n:
            pid = f.dst
        else:
            self.switch_drop_unknown += 1
            if self.tracing:
                self._trace_frame(NODE_SWITCH, DIR_RX, fr, D_DROP_UNKNOWN)
            self.drop_frame(fr)
            return
        self.switch_enqueued += 1
        if self.tracing:
            self._trace_frame(NODE_SWITCH, DIR_FWD, fr, D_FORWARDED)
        self.port_enqueue(pid, fr)

    # ------------------------------------------------------------------
    # sender cores (mirrors sender.SenderCore driven by netsim's node)

    cdef int source_has(self, CSender* s, i64 upto, i64 t) nogil:
        if upto > s.src_limit:
            return 0
        if s.src_mode == SRC_UNLIMITED:
            return 1
        if s.src_mode == SRC_RATE:
            return s.src_rate * t // 8000000000 >= upto
        return (t // s.src_period + 1) * s.src_burst >= upto

    cdef i64 source_time(self, CSender* s, i64 upto) nogil:
        cdef i64 m
        if upto > s.src_limit:
            return INF
        if s.src_mode == SRC_UNLIMITED:
            return 0
        if s.src_mode == SRC_RATE:
            return (upto * 8000000000 + s.src_rate - 1) // s.src_rate
        m = (upto + s.src_burst - 1) // s.src_burst - 1
        return m * s.src_period

    cdef void fill_block(self, CSender* s) nogil:
        # offer_block equivalent: next 1024 oracle bytes into buffers[head]
        cdef i64 widx = s.src_offset >> 2
        cdef int k
        cdef u64 w
        cdef unsigned char* dst = &s.buffers[s.head * PAYLOAD]
        for k in range(PAYLOAD // 4):
            w = stream_word(s.stream_seed, widx + k)
            dst[4 * k] = <unsigned char>(w >> 24)
            dst[4 * k + 1] = <unsigned char>(w >> 16)
            dst[4 * k + 2] = <unsigned char>(w >> 8)
            dst[4 * k + 3] = <unsigned char>w
        s.fill_offset = PAYLOAD
        s.valid |= <u32>1 << s.head
        s.data_ready = 0
        s.src_offset += PAYLOAD

    cdef void core_reset(self, int i):
        cdef CSender* s = &self.senders[i]
        s.head = 0
        s.tail = 0
        s.retr = 0
        s.current_set = 0
        s.fill_offset = 0
        s.valid = 0
        s.sent_mask = 0
        s.conf = 0
        memset(s.set_numbers, 0, sizeof(s.set_numbers))
        s.data_ready = 1
        s.fifo_len = 0
        s.fifo_head = 0
        s.c_sent = 0
        s.c_rsnt = 0
        self.py_delay[i] = Fraction((<object>self.py_params[i]).initial_delay_ns)
        self.py_window_rsnt[i] = []
        self._cache_pacing(i)
        s.last_tx_ns = -s.delay_ns

    cdef void on_ack(self, CSender* s, u32 set_, u32 pkt):
        cdef u32 bit = <u32>1 << pkt
        if (s.valid & bit) == 0 or s.set_numbers[pkt] != set_:
            s.acks_stale += 1
            return
        if s.conf & bit:
            return
        s.conf |= bit
        s.acks_accepted += 1
        if pkt == <u32>s.tail:
            while s.tail != s.head and (s.conf >> s.tail) & 1:
                s.tail = (s.tail + 1) & (N_PKTS - 1)
        if pkt == <u32>s.retr:
            while s.retr != s.head and (s.conf >> s.retr) & 1:
                s.retr = (s.retr + 1) & (N_PKTS - 1)

    cdef int has_candidate(self, CSender* s) nogil:
        if s.head == s.tail or s.retr == s.head:
            return 0
        return ((s.valid & ~s.conf) >> s.retr) & 1

    cdef void advance_retr(self, CSender* s) nogil:
        cdef u32 pending = s.valid & ~s.conf
        cdef int i = s.retr
        cdef int k
        for k in range(N_PKTS + 1):
            i = (i + 1) & (N_PKTS - 1)
            if i == s.head:
                i = s.tail
                if i == s.head:
                    return
            if (pending >> i) & 1:
                s.retr = i
                return
            if i == s.retr:
                return

    cdef int step(self, int i, i64 now, int tx_ready):
        """One prioritized task; returns the frame index of an ordered
        transmission, -2 when a non-transmit task ran, -1 when idle."""
        cdef CSender* s = &self.senders[i]
        cdef u32 word
        cdef int nh, fr
        cdef CFrame* f
        cdef int is_resend
        if not s.running:
            return -1
        if s.fifo_len:
            word = s.fifo[s.fifo_head]
            s.fifo_head = (s.fifo_head + 1) & (FIFO_DEPTH - 1)
            s.fifo_len -= 1
            self.on_ack(s, word >> 16, word & 0x3F)
            return -2
        if not s.data_ready:
            nh = (s.head + 1) & (N_PKTS - 1)
            if nh != s.tail:
                s.head = nh
                if nh == 0:
                    s.current_set = (s.current_set + 1) & 0xFFFF
                s.valid &= ~(<u32>1 << nh)
                s.sent_mask &= ~(<u32>1 << nh)
                s.conf &= ~(<u32>1 << nh)
                s.set_numbers[nh] = s.current_set
                s.fill_offset = 0
                s.data_ready = 1
                return -2
        if not tx_ready or not self.has_candidate(s):
            return -1
        if now < s.last_tx_ns + s.delay_ns:
            return -1
        fr = self.alloc_frame()
        f = &self.pool[fr]
        f.kind = K_DATA
        f.src = i
        f.dst = DST_RECEIVER
        f.set_ = s.set_numbers[s.retr]
        f.retry = 0
        f.pkt = s.retr
        f.delay_us = s.delay_us
        memcpy(f.payload, &s.buffers[s.retr * PAYLOAD], PAYLOAD)
        is_resend = (s.sent_mask >> s.retr) & 1
        s.sent_mask |= <u32>1 << s.retr
        s.last_tx_set = f.set_
        s.last_tx_pkt = f.pkt
        s.last_tx_resend = is_resend
        s.frames_sent += 1
        s.frames_resent += is_resend
        # pacing record_transmission
        s.c_sent += 1
        s.c_rsnt += is_resend
        if s.c_sent >= s.n_update:
            self._pacing_window(i)
        s.tx_time_ns[s.retr] = now
        s.last_tx_ns = now
        self.advance_retr(s)
        return fr

    cdef void _pacing_window(self, int i):
        cdef CSender* s = &self.senders[i]
        (<list>self.py_window_rsnt[i]).append(s.c_rsnt)
        self.py_delay[i] = apply_window(
            self.py_delay[i], self.py_params[i], s.c_rsnt, s.c_sent
        )
        self._cache_pacing(i)
        s.c_sent = 0
        s.c_rsnt = 0

    cdef void request_wake(self, int i, i64 t):
        if t < self.senders[i].wake_at:
            self.senders[i].wake_at = t
            self.schedule(t, EV_SENDER_WAKE, i, -1, 0)

    cdef void ev_sender_wake(self, int i, i64 t):
        if t != self.senders[i].wake_at:
            return  # superseded by an earlier wake
        self.senders[i].wake_at = INF
        self._run_sender(i)

    cdef void _run_sender(self, int i):
        cdef CSender* s = &self.senders[i]
        cdef i64 now = self.now
        cdef i64 busy = s.up_busy
        cdef int progress, fr
        cdef i64 hint, t_src, t_tx, done
        while True:
            progress = 0
            while s.running and s.data_ready:
                if not self.source_has(s, s.src_offset + PAYLOAD, now):
                    break
                self.fill_block(s)
                progress = 1
            fr = self.step(i, now, 1 if now >= busy else 0)
            if fr >= 0:
                done = self.transmit(2 * i, fr, now)
                busy = done
                s.up_busy = done
                if self.tracing:
                    # transmit() may have freed the frame on loss; the
                    # row comes from the stashed transmission metadata
                    self._trace_row(
                        i, DIR_TX, K_DATA, s.last_tx_set, s.last_tx_pkt,
                        DATA_WIRE, D_RESENT if s.last_tx_resend else D_SENT,
                    )
                progress = 1
            elif fr == -2:
                progress = 1
            if not progress:
                break
        if self.checking:
            self.check_sender(i)
        if not s.running:
            return
        hint = INF
        if s.data_ready:
            t_src = self.source_time(s, s.src_offset + PAYLOAD)
            if t_src > now:
                hint = t_src
        if self.has_candidate(s):
            t_tx = s.last_tx_ns + s.delay_ns
            if t_tx < busy:
                t_tx = busy
            if t_tx < hint:
                hint = t_tx
        if hint < INF:
            self.request_wake(i, hint if hint > now else now + 1)

    cdef void ev_sender_rx(self, int i, int fr):
        cdef CSender* s = &self.senders[i]
        cdef CFrame* f = &self.pool[fr]
        cdef i64 rtt
        cdef int dropped
        cdef u32 pkt, bit
        if f.kind == K_ACK:
            pkt = f.pkt
            bit = <u32>1 << pkt
            if (pkt < N_PKTS and (s.valid & bit) and not (s.conf & bit)
                    and s.set_numbers[pkt] == f.set_):
                rtt = self.now - s.tx_time_ns[pkt]
                s.rtt_count += 1
                s.rtt_sum += rtt
                if rtt < s.rtt_min:
                    s.rtt_min = rtt
                if rtt > s.rtt_max:
                    s.rtt_max = rtt
            dropped = 1 if s.fifo_len == FIFO_DEPTH else 0
            if dropped:
                s.fifo_head = (s.fifo_head + 1) & (FIFO_DEPTH - 1)
                s.fifo_len -= 1
                s.fifo_drops += 1
            s.fifo[(s.fifo_head + s.fifo_len) & (FIFO_DEPTH - 1)] = (f.set_ << 16) | f.pkt
            s.fifo_len += 1
            s.acks_enqueued += 1
            if self.tracing:
                self._trace_frame(i, DIR_RX, fr, D_FIFO_DROP if dropped else D_OK)
        elif f.kind == K_START:
            if not s.running:
                s.running = 1
                self.core_reset(i)
            s.starts_received += 1
            if self.tracing:
                self._trace_frame(i, DIR_RX, fr, D_OK)
        elif f.kind == K_STOP:
            s.running = 0
            s.stops_received += 1
            if self.tracing:
                self._trace_frame(i, DIR_RX, fr, D_OK)
        self.drop_frame(fr)
        if self.checking:
            self.check_sender(i)
        self.request_wake(i, self.now)

    # ------------------------------------------------------------------
    # receiver node

    cdef void ev_recv_rx(self, int fr):
        cdef CFrame* f = &self.pool[fr]
        if f.kind == K_DATA and 0 <= f.src < self.n:
            self.senders[f.src].data_seen = 1
        if self.host_busy:
            self._host_push(fr, self.now)
        else:
            self.host_busy = 1
            self.schedule(self.now + self.proc_ns, EV_RECV_DONE, 0, fr, self.now)

    cdef void _host_push(self, int fr, i64 t_arr):
        cdef HostItem* nq
        cdef int k
        if self.host_len == self.host_cap:
            nq = <HostItem*>malloc(self.host_cap * 2 * sizeof(HostItem))
            for k in range(self.host_len):
                nq[k] = self.host_q[(self.host_head + k) % self.host_cap]
            free(self.host_q)
            self.host_q = nq
            self.host_head = 0
            self.host_cap *= 2
        self.host_q[(self.host_head + self.host_len) % self.host_cap].fr = fr
        self.host_q[(self.host_head + self.host_len) % self.host_cap].t_arr = t_arr
        self.host_len += 1

    cdef void ev_recv_done(self, int fr, i64 t_arr):
        cdef CFrame* f = &self.pool[fr]
        cdef CSlot* sl
        cdef int i, disp, send_ack, ack_fr
        cdef i64 lat, avail
        cdef HostItem item
        if f.kind == K_DATA:
            i = f.src
            sl = &self.slots[i]
            disp = self._handle_data(i, fr)
            if self.tracing:
                self._trace_frame(NODE_RECEIVER, DIR_RX, fr, disp)
            send_ack = disp == D_STORED or disp == D_DUP_ACK or disp == D_LATE_ACK
            if send_ack:
                ack_fr = self.alloc_frame()
                self.pool[ack_fr].kind = K_ACK
                self.pool[ack_fr].src = -2
                self.pool[ack_fr].dst = i
                self.pool[ack_fr].set_ = f.set_
                self.pool[ack_fr].retry = f.retry
                self.pool[ack_fr].pkt = f.pkt
                lat = self.now - t_arr
                sl.ack_lat_count += 1
                sl.ack_lat_sum += lat
                if lat < sl.ack_lat_min:
                    sl.ack_lat_min = lat
                if lat > sl.ack_lat_max:
                    sl.ack_lat_max = lat
                if self.tracing:
                    self._trace_frame(NODE_RECEIVER, DIR_TX, ack_fr, D_SENT)
                self.port_enqueue(self.n + 1, ack_fr)
            if disp == D_STORED:
                if not sl.consume_pending:
                    avail = sl.head - sl.tail
                    if avail >= self.wakeup_threshold:
                        sl.consume_pending = 1
                        self.schedule(self.now + self.consume_latency_ns,
                                      EV_CONSUME, i, -1, 0)
        else:
            self.stray_control += 1
        self.drop_frame(fr)
        if self.host_len:
            item = self.host_q[self.host_head]
            self.host_head = (self.host_head + 1) % self.host_cap
            self.host_len -= 1
            self.schedule(self.now + self.proc_ns, EV_RECV_DONE, 0, item.fr, item.t_arr)
        else:
            self.host_busy = 0

    cdef int _handle_data(self, int i, int fr):
        """Mirror of ReceiverCore.handle_frame; returns the trace code."""
        cdef CFrame* f = &self.pool[fr]
        cdef CSlot* sl = &self.slots[i]
        cdef int d
        cdef u32 bit, bm
        cdef i64 pos, off, rel
        if f.pkt >= N_PKTS:
            sl.bad_pkt += 1
            return D_BAD_PKT
        d = ((<int>f.set_ - <int>sl.expected_set + 0x8000) & 0xFFFF) - 0x8000
        if d == 0 or d == 1:
            bit = <u32>1 << f.pkt
            bm = sl.bitmap0 if d == 0 else sl.bitmap1
            if bm & bit:
                sl.dup_acked += 1
                return D_DUP_ACK
            pos = sl.exp_base + <i64>d * BUF_BYTES + <i64>f.pkt * PAYLOAD
            if pos + PAYLOAD > sl.tail + sl.capacity:
                sl.no_space += 1
                return D_NO_SPACE
            off = pos % sl.capacity
            memcpy(sl.ring + off, f.payload, PAYLOAD)
            if d == 0:
                sl.bitmap0 |= bit
            else:
                sl.bitmap1 |= bit
            while True:
                rel = sl.head - sl.exp_base
                if rel == BUF_BYTES:
                    sl.expected_set = (sl.expected_set + 1) & 0xFFFF
                    sl.exp_base += BUF_BYTES
                    sl.bitmap0 = sl.bitmap1
                    sl.bitmap1 = 0
                    continue
                if (sl.bitmap0 >> (rel // PAYLOAD)) & 1:
                    sl.head += PAYLOAD
                else:
                    break
            sl.stored += 1
            return D_STORED
        if -(sl.ring_sets - 1) <= d < 0:
            sl.dup_acked += 1
            return D_LATE_ACK
        sl.stale += 1
        return D_STALE

    cdef void ev_consume(self, int i):
        cdef CSlot* sl = &self.slots[i]
        cdef i64 avail
        sl.consume_pending = 0
        self._consume(i)
        avail = sl.head - sl.tail
        if avail > 0 and avail >= self.wakeup_threshold:
            sl.consume_pending = 1
            self.schedule(self.now + self.consume_latency_ns, EV_CONSUME, i, -1, 0)

    cdef void _consume(self, int i):
        cdef CSlot* sl = &self.slots[i]
        cdef i64 avail = sl.head - sl.tail
        cdef i64 off, first
        if avail == 0:
            return
        off = sl.tail % sl.capacity
        first = avail if off + avail <= sl.capacity else sl.capacity - off
        self._verify_chunk(sl, sl.ring + off, first, sl.verified)
        if first < avail:
            self._verify_chunk(sl, sl.ring, avail - first, sl.verified + first)
        sl.tail += avail
        sl.verified += avail
        if self.now >= self.warmup_ns:
            sl.delivered_measured += avail
        if self.tracing:
            self._trace_row(NODE_RECEIVER, DIR_CONSUME, 0, 0, 0, <int>avail, D_CONSUMED)
        if self.checking:
            self.check_slot(i)

    cdef void _verify_chunk(self, CSlot* sl, unsigned char* p, i64 nbytes,
                            i64 stream_off):
        cdef i64 nwords = nbytes >> 2
        cdef i64 widx = stream_off >> 2
        cdef i64 k
        cdef int j
        cdef u64 w
        cdef unsigned char exp[4]
        for k in range(nwords):
            w = stream_word(sl.stream_seed, widx + k)
            exp[0] = <unsigned char>(w >> 24)
            exp[1] = <unsigned char>(w >> 16)
            exp[2] = <unsigned char>(w >> 8)
            exp[3] = <unsigned char>w
            if (p[4 * k] != exp[0] or p[4 * k + 1] != exp[1]
                    or p[4 * k + 2] != exp[2] or p[4 * k + 3] != exp[3]):
                if not sl.verify_failed:
                    sl.verify_failed = 1
                    for j in range(4):
                        if p[4 * k + j] != exp[j]:
                            sl.first_mismatch = stream_off + 4 * k + j
                            break
                return

    cdef void ev_start_retry(self, int i):
        cdef int fr
        if self.senders[i].data_seen:
            return
        fr = self.alloc_frame()
        self.pool[fr].kind = K_START
        self.pool[fr].src = -2
        self.pool[fr].dst = i
        if self.tracing:
            self._trace_frame(NODE_RECEIVER, DIR_TX, fr, D_SENT)
        self.port_enqueue(self.n + 1, fr)
        self.schedule(self.now + self.start_retry_ns, EV_START_RETRY, i, -1, 0)

    # ------------------------------------------------------------------
    # invariants (enabled by check_invariants)

    cdef void check_sender(self, int i):
        cdef CSender* s = &self.senders[i]
        cdef int k, span
        cdef set live = set()
        assert (s.conf & ~s.valid) == 0, "confirmed implies valid"
        assert (s.sent_mask & ~s.valid) == 0, "sent implies valid"
        for k in range(N_PKTS):
            if (s.valid >> k) & 1:
                live.add(s.set_numbers[k])
        if len(live) > 1:
            assert len(live) == 2, f"sets {sorted(live)}"
            a, b = sorted(live)
            assert (b - a) & 0xFFFF in (1, 0xFFFF)
        span = (s.head - s.tail) & (N_PKTS - 1)
        assert ((s.retr - s.tail) & (N_PKTS - 1)) <= span or s.retr == s.head
        if s.running:
            assert s.data_ready == (s.fill_offset < PAYLOAD)
        if s.tail != s.head:
            assert ((s.conf >> s.tail) & 1) == 0
        k = s.tail
        while k != s.head:
            assert (s.valid >> k) & 1, f"hole at buffer {k}"
            k = (k + 1) & (N_PKTS - 1)

    cdef void check_slot(self, int i):
        cdef CSlot* sl = &self.slots[i]
        cdef i64 rel = sl.head - sl.exp_base
        cdef i64 full = rel // PAYLOAD
        assert 0 <= sl.head - sl.tail <= sl.capacity
        assert sl.exp_base <= sl.head <= sl.exp_base + BUF_BYTES
        assert (sl.bitmap0 & ((<u64>1 << full) - 1)) == (<u64>1 << full) - 1

    # ------------------------------------------------------------------
    # main loop

    cdef int _last_was_resend

    def run(self):
        cdef Event ev
        cdef i64 t_end = self.duration_ns
        cdef int i
        while self.heap_len and self.heap[0].t <= t_end:
            ev = self.pop_event()
            self.now = ev.t
            self.events += 1
            if ev.kind == EV_SENDER_WAKE:
                self.ev_sender_wake(ev.a, ev.t)
            elif ev.kind == EV_SENDER_RX:
                self.ev_sender_rx(ev.a, ev.fr)
            elif ev.kind == EV_SWITCH_RX:
                self.ev_switch_rx(ev.fr)
            elif ev.kind == EV_PORT_TX:
                self.ev_port_tx(ev.a)
            elif ev.kind == EV_RECV_RX:
                self.ev_recv_rx(ev.fr)
            elif ev.kind == EV_RECV_DONE:
                self.ev_recv_done(ev.fr, ev.b)
            elif ev.kind == EV_CONSUME:
                self.ev_consume(ev.a)
            elif ev.kind == EV_START_RETRY:
                self.ev_start_retry(ev.a)
        self.now = t_end
        for i in range(self.n):
            self._consume(i)  # final drain, ignoring the wakeup threshold

    # ------------------------------------------------------------------
    # results

    def result(self):
        cdef int i
        cdef CSender* s
        cdef CSlot* sl
        senders = []
        for i in range(self.n):
            s = &self.senders[i]
            sl = &self.slots[i]
            delay = self.py_delay[i]
            senders.append(
                {
                    "frames_sent": s.frames_sent,
                    "frames_resent": s.frames_resent,
                    "acks_enqueued": s.acks_enqueued,
                    "ack_fifo_drops": s.fifo_drops,
                    "acks_accepted": s.acks_accepted,
                    "acks_stale": s.acks_stale,
                    "rtt_count": s.rtt_count,
                    "rtt_sum_ns": s.rtt_sum,
                    "rtt_min_ns": s.rtt_min if s.rtt_count else -1,
                    "rtt_max_ns": s.rtt_max if s.rtt_count else -1,
                    "delivered_bytes": sl.verified,
                    "delivered_measured_bytes": sl.delivered_measured,
                    "verify_failed": sl.verify_failed,
                    "first_mismatch_at": sl.first_mismatch,
                    "final_delay_ns": s.delay_ns,
                    "final_delay_us": s.delay_us,
                    "final_delay_num": delay.numerator,
                    "final_delay_den": delay.denominator,
                    "window_rsnt": list(self.py_window_rsnt[i]),
                    "window_size": s.n_update,
                    "starts_received": s.starts_received,
                    "stops_received": s.stops_received,
                    "source_offered_bytes": s.src_offset,
                    "unconfirmed_at_end": bin(s.valid & ~s.conf).count("1"),
                    "ack_lat_count": sl.ack_lat_count,
                    "ack_lat_sum_ns": sl.ack_lat_sum,
                    "ack_lat_min_ns": sl.ack_lat_min if sl.ack_lat_count else -1,
                    "ack_lat_max_ns": sl.ack_lat_max if sl.ack_lat_count else -1,
                    "stored_frames": sl.stored,
                    "dup_acked": sl.dup_acked,
                    "no_space_drops": sl.no_space,
                    "stale_set": sl.stale,
                    "bad_pkt_index": sl.bad_pkt,
                }
            )
        links = []
        cdef CLink* lk
        order = []
        for i in range(self.n):
            order.append(2 * i)
            order.append(2 * i + 1)
        order.append(2 * self.n)
        order.append(2 * self.n + 1)
        for i in order:
            lk = &self.links[i]
            links.append(
                {
                    "sent": lk.sent,
                    "lost": lk.lost,
                    "dup_extra": lk.dup_extra,
                    "arrivals": lk.arrivals,
                }
            )
        return {
            "engine": "fast",
            "t_end_ns": self.now,
            "events": self.events,
            "senders": senders,
            "receiver": {
                "unregistered_source": 0,
                "stray_control": self.stray_control,
            },
            "links": links,
            "switch": {
                "enqueued": self.switch_enqueued,
                "drop_queue": self.switch_drop_queue,
                "drop_unknown": self.switch_drop_unknown,
            },
            "trace": self.trace if self.tracing else None,
        }


def simulate(norm_scenario: dict, trace: bool = False, check_invariants: bool = False) -> dict:
    """Run one scenario on the compiled engine; returns raw counters."""
    sim = FastSim(norm_scenario, trace=trace, check_invariants=check_invariants)
    sim.run()
    return sim.result()
