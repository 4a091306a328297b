"""Frame coding: bit layouts, golden vectors, round-trip properties."""

import pathlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadelink import wire
from fadelink.wire import (
    Frame,
    FrameKind,
    SeqNum,
    FieldRangeError,
    MalformedFrameError,
    NotOurProtocol,
    SeqRangeError,
    UnknownTypeError,
    decode,
    encode,
    mac,
    pack_seq,
    set_distance,
    unpack_seq,
)

GOLDEN = pathlib.Path(__file__).parent / "golden"

FEB = mac("02:fa:de:00:00:01")
HOST = mac("02:fa:de:ff:ff:01")


def load_golden(name):
    text = (GOLDEN / f"{name}.hex").read_text()
    return bytes.fromhex("".join(text.split()))


# ----------------------------------------------------------------------
# sequence word packing

def test_pack_seq_zero():
    assert pack_seq(SeqNum(0, 0, 0)) == 0x00000000


def test_pack_seq_bit_layout():
    # independent oracle: (set << 16) | (retry << 6) | pkt
    assert pack_seq(SeqNum(1, 0, 31)) == (1 << 16) | 31 == 0x0001001F
    assert pack_seq(SeqNum(0xFFFF, 0, 5)) == 0xFFFF0005
    assert pack_seq(SeqNum(3, 5, 9)) == (3 << 16) | (5 << 6) | 9


@pytest.mark.parametrize(
    "seq",
    [SeqNum(0, 0, 64), SeqNum(0, 1024, 0), SeqNum(0x10000, 0, 0), SeqNum(0, 0, -1)],
)
def test_pack_seq_field_range(seq):
    with pytest.raises(FieldRangeError):
        pack_seq(seq)


def test_pack_seq_allows_six_bit_packet_numbers():
    # the wire field is 6 bits wide even though the protocol uses 0..31
    assert pack_seq(SeqNum(0, 0, 63)) == 63


def test_unpack_seq():
    assert unpack_seq(0x00000000) == SeqNum(0, 0, 0)
    assert unpack_seq(0x0001001F) == SeqNum(1, 0, 31)


def test_unpack_seq_rejects_pkt_32():
    with pytest.raises(SeqRangeError):
        unpack_seq(0x00000020)


@given(
    st.integers(0, 0xFFFF),
    st.integers(0, 0x3FF),
    st.integers(0, wire.N_PKTS - 1),
)
def test_pack_unpack_inverse(s, r, p):
    assert unpack_seq(pack_seq(SeqNum(s, r, p))) == SeqNum(s, r, p)


# ----------------------------------------------------------------------
# wraparound set arithmetic

def test_set_distance_examples():
    assert set_distance(5, 5) == 0
    assert set_distance(0xFFFF, 0x0000) == 1
    assert set_distance(0x0000, 0xFFFF) == -1


@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_set_distance_antisymmetric(a, b):
    d = set_distance(a, b)
    assert -0x8000 <= d <= 0x7FFF
    if d != -0x8000:
        assert set_distance(b, a) == -d
    assert (a + d) & 0xFFFF == b


# ----------------------------------------------------------------------
# frame encoding

def test_start_frame_layout():
    data = encode(Frame(dst=FEB, src=HOST, kind=FrameKind.START))
    assert len(data) == 64
    assert data[12:16] == bytes.fromhex("fade0001")
    assert data[16:] == bytes(48)


def test_data_frame_length_is_field_sum():
    payload = bytes(1024)
    f = Frame(dst=HOST, src=FEB, kind=FrameKind.DATA, seq=SeqNum(0, 0, 0), payload=payload)
    # 14 ethernet header + 2 type + 4 seq + 4 delay + 1024 payload
    assert len(encode(f)) == 14 + 2 + 4 + 4 + 1024 == 1048


def test_ack_frame_layout():
    data = encode(Frame(dst=FEB, src=HOST, kind=FrameKind.ACK, seq=SeqNum(2, 0, 7)))
    assert len(data) == 64
    assert data[12:20] == bytes.fromhex("fade000300020007")


def test_frame_invariants():
    with pytest.raises(ValueError):
        Frame(dst=FEB, src=HOST, kind=FrameKind.DATA, seq=SeqNum(0, 0, 0), payload=b"x")
    with pytest.raises(ValueError):
        Frame(dst=FEB, src=HOST, kind=FrameKind.START, seq=SeqNum(0, 0, 0))
    with pytest.raises(ValueError):
        Frame(dst=FEB[:5], src=HOST, kind=FrameKind.START)
    with pytest.raises(ValueError):
        Frame(dst=FEB, src=HOST, kind=FrameKind.DATA)


# ----------------------------------------------------------------------
# decoding errors

def test_decode_below_minimum():
    with pytest.raises(MalformedFrameError):
        decode(bytes(63))


def test_decode_unknown_type_word():
    raw = bytearray(load_golden("start"))
    raw[14:16] = bytes.fromhex("0002")
    with pytest.raises(UnknownTypeError):
        decode(bytes(raw))


def test_decode_foreign_ethertype():
    raw = bytearray(load_golden("start"))
    raw[12:14] = bytes.fromhex("0800")
    with pytest.raises(NotOurProtocol):
        decode(bytes(raw))


def test_decode_data_wrong_length():
    raw = load_golden("data")
    with pytest.raises(MalformedFrameError):
        decode(raw[:-1])


def test_decode_ignores_control_padding_content():
    raw = bytearray(load_golden("stop"))
    raw[40] = 0xEE
    f = decode(bytes(raw))
    assert f.kind is FrameKind.STOP


# ----------------------------------------------------------------------
# golden vectors (stored hex dumps are the oracle)

def test_golden_start():
    assert encode(Frame(dst=FEB, src=HOST, kind=FrameKind.START)) == load_golden("start")


def test_golden_stop():
    assert encode(Frame(dst=FEB, src=HOST, kind=FrameKind.STOP)) == load_golden("stop")


def test_golden_ack():
    frame = Frame(dst=FEB, src=HOST, kind=FrameKind.ACK, seq=SeqNum(2, 0, 7))
    raw = load_golden("ack")
    assert encode(frame) == raw
    assert decode(raw) == frame


def test_golden_data():
    payload = bytes((j * 7 + 3) & 0xFF for j in range(1024))
    frame = Frame(
        dst=HOST, src=FEB, kind=FrameKind.DATA,
        seq=SeqNum(1, 0, 31), delay_us=200, payload=payload,
    )
    raw = load_golden("data")
    assert encode(frame) == raw
    assert decode(raw) == frame


# ----------------------------------------------------------------------
# round trip over randomized frames

_macs = st.binary(min_size=6, max_size=6)
_seqs = st.builds(
    SeqNum,
    st.integers(0, 0xFFFF),
    st.integers(0, 0x3FF),
    st.integers(0, wire.N_PKTS - 1),
)


@st.composite
def frames(draw):
    kind = draw(st.sampled_from(list(FrameKind)))
    dst, src = draw(_macs), draw(_macs)
    if kind is FrameKind.DATA:
        return Frame(
            dst=dst, src=src, kind=kind, seq=draw(_seqs),
            delay_us=draw(st.integers(0, 0xFFFFFFFF)),
            payload=draw(st.binary(min_size=1024, max_size=1024)),
        )
    if kind is FrameKind.ACK:
        return Frame(dst=dst, src=src, kind=kind, seq=draw(_seqs))
    return Frame(dst=dst, src=src, kind=kind)


@settings(max_examples=200)
@given(frames())
def test_encode_decode_roundtrip(frame):
    raw = encode(frame)
    if frame.kind is FrameKind.DATA:
        assert len(raw) == 1048
    else:
        assert len(raw) == 64
    assert decode(raw) == frame
