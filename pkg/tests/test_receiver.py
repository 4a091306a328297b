"""Protocol handler ladder, consumer ring, and control surface."""

import hashlib
import threading

import pytest

from fadelink.receiver import (
    AlreadyStartedError,
    ConsumeRangeError,
    ReceiverCore,
    RxCode,
    SlotTableFullError,
    UnknownFebError,
)
from fadelink.wire import Frame, FrameKind, SeqNum, mac

FEB = mac("02:fa:de:00:00:01")
FEB2 = mac("02:fa:de:00:00:02")
HOST = mac("02:fa:de:ff:ff:01")


def data_frame(set_, pkt, fill=None):
    payload = bytes([fill if fill is not None else (pkt & 0xFF)]) * 1024
    return Frame(
        dst=HOST, src=FEB, kind=FrameKind.DATA,
        seq=SeqNum(set_ & 0xFFFF, 0, pkt), delay_us=200, payload=payload,
    )


def make_receiver(ring_sets=4, threshold=1024):
    core = ReceiverCore(HOST, max_slaves=2)
    core.start_feb(FEB, ring_sets=ring_sets, wakeup_threshold=threshold)
    return core


def slot_state(core, mac_=FEB):
    slot = core.slots[mac_]
    return (
        slot.head, slot.tail, slot.expected_set, slot.exp_base,
        slot.bitmap0, slot.bitmap1,
        hashlib.sha256(bytes(slot.ring)).hexdigest(),
    )


def feed_set(core, set_, skip=()):
    for pkt in range(32):
        if pkt not in skip:
            core.handle_frame(data_frame(set_, pkt))


# ----------------------------------------------------------------------
# control surface

def test_start_allocates_ring():
    core = make_receiver(ring_sets=4)
    assert core.get_buf_len(FEB) == 4 * 32 * 1024 == 131072


def test_start_rejects_duplicate():
    core = make_receiver()
    with pytest.raises(AlreadyStartedError):
        core.start_feb(FEB)


def test_start_rejects_when_table_full():
    core = make_receiver()
    core.start_feb(FEB2)
    with pytest.raises(SlotTableFullError):
        core.start_feb(mac("02:fa:de:00:00:03"))


def test_start_frame_addressing():
    core = ReceiverCore(HOST)
    frame = core.start_feb(FEB)
    assert frame.kind is FrameKind.START
    assert frame.dst == FEB and frame.src == HOST


def test_stop_is_idempotent_and_keeps_slot():
    core = make_receiver()
    f1 = core.stop_feb(FEB)
    f2 = core.stop_feb(FEB)
    assert f1.kind is f2.kind is FrameKind.STOP
    assert FEB in core.slots


def test_stop_unknown_mac():
    core = make_receiver()
    with pytest.raises(UnknownFebError):
        core.stop_feb(FEB2)


def test_restart_after_stop_resets_slot():
    core = make_receiver()
    feed_set(core, 0)
    core.stop_feb(FEB)
    core.start_feb(FEB)
    slot = core.slots[FEB]
    assert slot.expected_set == 0 and slot.head == 0


def test_ring_sets_minimum_is_two():
    core = ReceiverCore(HOST)
    with pytest.raises(ValueError):
        core.start_feb(FEB, ring_sets=1)


# ----------------------------------------------------------------------
# decision ladder

def test_first_frame_stored_at_offset_zero():
    core = make_receiver()
    action = core.handle_frame(data_frame(0, 0, fill=0xAB))
    assert action.code is RxCode.STORED and action.stored
    assert action.ack == SeqNum(0, 0, 0)
    slot = core.slots[FEB]
    assert slot.head == 1024
    assert bytes(slot.ring[:1024]) == b"\xab" * 1024


def test_duplicate_replay_acks_without_change():
    core = make_receiver()
    frame = data_frame(0, 0)
    core.handle_frame(frame)
    before = slot_state(core)
    action = core.handle_frame(frame)
    assert action.code is RxCode.DUP_ACK
    assert action.ack == frame.seq and not action.stored
    assert slot_state(core) == before


def test_unregistered_source_gets_stop():
    core = make_receiver()
    frame = Frame(dst=HOST, src=FEB2, kind=FrameKind.DATA,
                  seq=SeqNum(0, 0, 0), payload=bytes(1024))
    action = core.handle_frame(frame)
    assert action.code is RxCode.UNREGISTERED
    assert action.stop_to == FEB2
    assert core.unregistered_source == 1


def test_stopped_source_gets_stop():
    core = make_receiver()
    core.stop_feb(FEB)
    action = core.handle_frame(data_frame(0, 0))
    assert action.code is RxCode.UNREGISTERED and action.stop_to == FEB


def test_next_set_accepted_while_current_open():
    core = make_receiver()
    action = core.handle_frame(data_frame(1, 5))
    assert action.code is RxCode.STORED
    slot = core.slots[FEB]
    assert slot.bitmap1 == 1 << 5
    assert slot.head == 0  # set 0 still empty; no contiguous prefix


def test_window_slides_when_set_completes():
    core = make_receiver()
    feed_set(core, 0)
    slot = core.slots[FEB]
    assert slot.expected_set == 1
    assert slot.exp_base == 32 * 1024
    assert slot.head == 32 * 1024


def test_late_duplicate_from_completed_set_is_acked():
    core = make_receiver(ring_sets=4)
    feed_set(core, 0)
    core.write_ptrs(FEB, 32 * 1024)
    action = core.handle_frame(data_frame(0, 3))
    assert action.code is RxCode.LATE_ACK
    assert action.ack == SeqNum(0, 0, 3)


def test_too_old_set_dropped_silently():
    core = make_receiver(ring_sets=2)  # window of completed sets: 1
    for s in range(2):
        feed_set(core, s)
        core.write_ptrs(FEB, 32 * 1024)
    slot = core.slots[FEB]
    assert slot.expected_set == 2
    action = core.handle_frame(data_frame(0, 0))  # d = -2 < -(n-1)
    assert action.code is RxCode.STALE_SET
    assert action.ack is None
    assert slot.stale_set == 1


def test_far_future_set_dropped_silently():
    core = make_receiver()
    action = core.handle_frame(data_frame(5, 0))
    assert action.code is RxCode.STALE_SET and action.ack is None


def test_bad_packet_index_counted():
    core = make_receiver()
    frame = Frame(dst=HOST, src=FEB, kind=FrameKind.DATA,
                  seq=SeqNum(0, 0, 40), payload=bytes(1024))
    action = core.handle_frame(frame)
    assert action.code is RxCode.BAD_PKT and action.ack is None
    assert core.slots[FEB].bad_pkt_index == 1


def test_control_frame_rejected_by_handler():
    core = make_receiver()
    with pytest.raises(ValueError):
        core.handle_frame(Frame(dst=HOST, src=FEB, kind=FrameKind.START))


def test_no_space_drop_without_ack_then_retry_succeeds():
    core = make_receiver(ring_sets=2)
    feed_set(core, 0)
    feed_set(core, 1)  # ring now completely full, nothing consumed
    frame = data_frame(2, 0)
    before = slot_state(core)
    action = core.handle_frame(frame)
    assert action.code is RxCode.NO_SPACE
    assert action.ack is None
    assert slot_state(core) == before
    assert core.slots[FEB].no_space_drops == 1
    core.write_ptrs(FEB, 32 * 1024)  # consumer frees one set
    action = core.handle_frame(frame)  # retransmission now fits
    assert action.code is RxCode.STORED


# ----------------------------------------------------------------------
# consumer surface

def test_read_ptrs_fresh_slot():
    core = make_receiver()
    assert core.read_ptrs(FEB) == (0, 0, 0)


def test_gap_blocks_head():
    core = make_receiver()
    core.handle_frame(data_frame(0, 0))
    core.handle_frame(data_frame(0, 2))
    head, tail, avail = core.read_ptrs(FEB)
    assert avail == 1024  # head stops at the missing packet 1
    core.handle_frame(data_frame(0, 1))
    head, tail, avail = core.read_ptrs(FEB)
    assert avail == 3 * 1024


def test_write_ptrs_consumes():
    core = make_receiver()
    core.handle_frame(data_frame(0, 0))
    core.write_ptrs(FEB, 1024)
    assert core.read_ptrs(FEB) == (1024, 1024, 0)
    core.write_ptrs(FEB, 0)  # consuming nothing is legal
    with pytest.raises(ConsumeRangeError):
        core.write_ptrs(FEB, 1)


def test_peek_views_wraps_ring():
    core = make_receiver(ring_sets=2)
    contents = {}
    for s in range(3):
        for pkt in range(32):
            core.handle_frame(data_frame(s, pkt, fill=(s * 32 + pkt) & 0xFF))
        _, _, avail = core.read_ptrs(FEB)
        if s == 1:
            # drain to free space; second set wraps relative to nothing
            views = core.peek_views(FEB, avail)
            got = b"".join(bytes(v) for v in views)
            contents[s] = got
            core.write_ptrs(FEB, avail)
    # set 2 landed at ring offset 0 again (capacity = 2 sets)
    s2 = b"".join(
        bytes([(2 * 32 + pkt) & 0xFF]) * 1024 for pkt in range(32)
    )
    _, _, avail = core.read_ptrs(FEB)
    assert avail == 32 * 1024
    got = b"".join(bytes(v) for v in core.peek_views(FEB, avail))
    assert got == s2


def test_poll_ready_threshold():
    core = make_receiver(threshold=4096)
    core.handle_frame(data_frame(0, 0))
    assert not core.poll_ready(FEB)
    for pkt in range(1, 4):
        core.handle_frame(data_frame(0, pkt))
    assert core.poll_ready(FEB)
    core.set_wakeup(FEB, 0)
    core.write_ptrs(FEB, 4096)
    assert core.poll_ready(FEB)  # degenerate threshold: always ready


def test_consumer_api_unknown_mac():
    core = make_receiver()
    for fn in (core.read_ptrs, core.poll_ready, core.get_buf_len):
        with pytest.raises(UnknownFebError):
            fn(FEB2)
    with pytest.raises(UnknownFebError):
        core.write_ptrs(FEB2, 0)
    with pytest.raises(UnknownFebError):
        core.set_wakeup(FEB2, 1)


def test_exactly_once_in_order_over_many_sets():
    core = make_receiver(ring_sets=3)
    expected = bytearray()
    delivered = bytearray()
    import random

    rnd = random.Random(1)
    for s in range(10):
        order = list(range(32))
        rnd.shuffle(order)
        for pkt in order:
            core.handle_frame(data_frame(s, pkt, fill=(s * 37 + pkt) & 0xFF))
            # duplicates sprinkled in
            if rnd.random() < 0.3:
                core.handle_frame(data_frame(s, pkt, fill=(s * 37 + pkt) & 0xFF))
            _, _, avail = core.read_ptrs(FEB)
            if avail and rnd.random() < 0.5:
                for view in core.peek_views(FEB, avail):
                    delivered.extend(view)
                core.write_ptrs(FEB, avail)
        for pkt in range(32):
            expected.extend(bytes([(s * 37 + pkt) & 0xFF]) * 1024)
        core.slots[FEB].check_invariants()
    _, _, avail = core.read_ptrs(FEB)
    for view in core.peek_views(FEB, avail):
        delivered.extend(view)
    core.write_ptrs(FEB, avail)
    assert bytes(delivered) == bytes(expected)


def test_handler_and_consumer_from_two_threads():
    core = make_receiver(ring_sets=2, threshold=0)
    sets = 40
    fails = []

    def producer():
        s = 0
        pkt = 0
        while s < sets:
            action = core.handle_frame(data_frame(s, pkt, fill=(s + pkt) & 0xFF))
            if action.code in (RxCode.STORED, RxCode.DUP_ACK, RxCode.LATE_ACK):
                pkt += 1
                if pkt == 32:
                    pkt = 0
                    s += 1
            # NO_SPACE: spin until the consumer frees room

    def consumer():
        got = 0
        expect = bytearray()
        for s in range(sets):
            for pkt in range(32):
                expect.extend(bytes([(s + pkt) & 0xFF]) * 1024)
        while got < sets * 32 * 1024:
            _, _, avail = core.read_ptrs(FEB)
            if not avail:
                continue
            chunk = b"".join(bytes(v) for v in core.peek_views(FEB, avail))
            if chunk != bytes(expect[got : got + avail]):
                fails.append(got)
                return
            core.write_ptrs(FEB, avail)
            got += avail

    threads = [threading.Thread(target=producer), threading.Thread(target=consumer)]
    for th in threads:
        th.start()
    for th in threads:
        th.join(timeout=60)
    assert not fails
    assert core.read_ptrs(FEB)[2] == 0


def test_metrics_snapshot_names():
    core = make_receiver()
    core.handle_frame(data_frame(0, 0))
    m = core.metrics()
    assert m["unregistered_source"] == 0
    key = FEB.hex()
    assert m[f"{key}.stored_frames"] == 1
    assert m[f"{key}.head"] == 1024
