"""Frame encoding/decoding for the 0xfade raw-Ethernet transport.

On-wire layouts (all multi-byte fields big-endian):

    START  | dst 6 | src 6 | fa de | 00 01 |                          pad to 64 bytes
    STOP   | dst 6 | src 6 | fa de | 00 05 |                          pad to 64 bytes
    ACK    | dst 6 | src 6 | fa de | 00 03 | seq 4 |                  pad to 64 bytes
    DATA   | dst 6 | src 6 | fa de | a5 a5 | seq 4 | delay 4 | payload 1024
                                                            = 1048 bytes total

`seq` is one 32-bit word packing the sequence counters:

    bits [31:16] set number   (16 bit, wraps)
    bits [15:6]  retry number (10 bit, transmitted as 0)
    bits [5:0]   packet number (6 bit field; protocol uses 0..31)

`delay` is the sender's current inter-packet delay in whole microseconds.
Control frames are padded with zeros to the 64-byte Ethernet minimum;
DATA frames stay below the 1518-byte MTU. No FCS is serialized: link
corruption is modeled as frame loss by the simulator.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

ETHERTYPE = 0xFADE
N_PKTS = 32              # packets per data set == sender packet buffers
PAYLOAD_SIZE = 1024      # bytes of data per DATA frame
SET_TOTAL_BYTES = N_PKTS * PAYLOAD_SIZE  # one data set == the 32 KiB window
MIN_FRAME_SIZE = 64      # control frames pad to this
DATA_FRAME_SIZE = 14 + 2 + 4 + 4 + PAYLOAD_SIZE  # 1048

_ETH_HDR = struct.Struct("!6s6sH")
_TYPE_WORD = struct.Struct("!H")
_U32 = struct.Struct("!I")

MacAddr = bytes  # exactly 6 bytes


class WireError(Exception):
    """Base class for frame coding errors."""


class FieldRangeError(WireError):
    """A sequence field does not fit its bit width."""


class SeqRangeError(WireError):
    """Packed word carries a packet number outside the 32-buffer protocol."""


class MalformedFrameError(WireError):
    """Byte sequence cannot be a frame of this protocol."""


class UnknownTypeError(MalformedFrameError):
    """Frame carries our EtherType but an unassigned type word."""


class NotOurProtocol(WireError):
    """EtherType differs from 0xfade; frame belongs to another protocol."""


class FrameKind(IntEnum):
    """Frame type; the value is the on-wire type word."""

    START = 0x0001
    ACK = 0x0003
    STOP = 0x0005
    DATA = 0xA5A5


_TYPE_WORDS = {k.value for k in FrameKind}


class SeqNum(NamedTuple):
    set: int
    retry: int
    pkt: int


def pack_seq(seq: SeqNum) -> int:
    """Pack sequence counters into the 32-bit wire word."""
    s, r, p = seq
    if not 0 <= s <= 0xFFFF:
        raise FieldRangeError(f"set number {s} does not fit 16 bits")
    if not 0 <= r <= 0x3FF:
        raise FieldRangeError(f"retry number {r} does not fit 10 bits")
    if not 0 <= p <= 0x3F:
        raise FieldRangeError(f"packet number {p} does not fit 6 bits")
    return (s << 16) | (r << 6) | p


def unpack_seq(word: int) -> SeqNum:
    """Inverse of pack_seq; rejects packet numbers the protocol never uses."""
    if not 0 <= word <= 0xFFFFFFFF:
        raise FieldRangeError(f"seq word {word:#x} does not fit 32 bits")
    pkt = word & 0x3F
    if pkt >= N_PKTS:
        raise SeqRangeError(f"packet number {pkt} >= {N_PKTS}")
    return SeqNum(set=word >> 16, retry=(word >> 6) & 0x3FF, pkt=pkt)


def set_distance(from_set: int, to_set: int) -> int:
    """Signed wraparound distance between two 16-bit set numbers.

    Returns the representative of (to_set - from_set) mod 2**16 in
    [-32768, 32767].
    """
    return ((to_set - from_set + 0x8000) & 0xFFFF) - 0x8000


def mac(text: str) -> MacAddr:
    """Parse 'aa:bb:cc:dd:ee:ff' into 6 raw bytes."""
    parts = text.split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address {text!r}")
    return bytes(int(p, 16) for p in parts)


def mac_str(addr: MacAddr) -> str:
    return ":".join(f"{b:02x}" for b in addr)


@dataclass(frozen=True, slots=True)
class Frame:
    """One decoded protocol frame.

    seq is meaningful for DATA and ACK frames, delay_us and payload for
    DATA frames only.
    """

    dst: MacAddr
    src: MacAddr
    kind: FrameKind
    seq: SeqNum | None = None
    delay_us: int = 0
    payload: bytes = field(default=b"", repr=False)

    def __post_init__(self):
        if len(self.dst) != 6 or len(self.src) != 6:
            raise ValueError("MAC addresses must be exactly 6 bytes")
        if self.kind in (FrameKind.DATA, FrameKind.ACK):
            if self.seq is None:
                raise ValueError(f"{self.kind.name} frame requires a seq")
        elif self.seq is not None:
            raise ValueError(f"{self.kind.name} frame carries no seq")
        if self.kind is FrameKind.DATA:
            if len(self.payload) != PAYLOAD_SIZE:
                raise ValueError(
                    f"DATA payload must be {PAYLOAD_SIZE} bytes, "
                    f"got {len(self.payload)}"
                )
            if not 0 <= self.delay_us <= 0xFFFFFFFF:
                raise ValueError("delay_us does not fit 32 bits")
        elif self.payload:
            raise ValueError(f"{self.kind.name} frame carries no payload")

    @property
    def wire_size(self) -> int:
        return DATA_FRAME_SIZE if self.kind is FrameKind.DATA else MIN_FRAME_SIZE


def encode(frame: Frame) -> bytes:
    """Serialize a frame to its exact wire bytes."""
    out = bytearray(_ETH_HDR.pack(frame.dst, frame.src, ETHERTYPE))
    out += _TYPE_WORD.pack(frame.kind.value)
    if frame.kind in (FrameKind.DATA, FrameKind.ACK):
        out += _U32.pack(pack_seq(frame.seq))
    if frame.kind is FrameKind.DATA:
        out += _U32.pack(frame.delay_us)
        out += frame.payload
        return bytes(out)
    out += bytes(MIN_FRAME_SIZE - len(out))
    return bytes(out)


def decode(data: bytes) -> Frame:
    """Parse wire bytes back into a Frame.

    Raises NotOurProtocol for foreign EtherTypes and MalformedFrameError
    (or UnknownTypeError) for anything that cannot be a valid frame.
    Padding content of control frames is ignored.
    """
    if len(data) < MIN_FRAME_SIZE:
        raise MalformedFrameError(f"frame of {len(data)} bytes below 64-byte minimum")
    dst, src, ethertype = _ETH_HDR.unpack_from(data, 0)
    if ethertype != ETHERTYPE:
        raise NotOurProtocol(f"EtherType {ethertype:#06x}")
    (word,) = _TYPE_WORD.unpack_from(data, 14)
    if word not in _TYPE_WORDS:
        raise UnknownTypeError(f"type word {word:#06x}")
    kind = FrameKind(word)
    if kind is FrameKind.DATA:
        if len(data) != DATA_FRAME_SIZE:
            raise MalformedFrameError(
                f"DATA frame of {len(data)} bytes, expected {DATA_FRAME_SIZE}"
            )
        seq = unpack_seq(_U32.unpack_from(data, 16)[0])
        (delay_us,) = _U32.unpack_from(data, 20)
        return Frame(dst, src, kind, seq, delay_us, data[24:])
    if len(data) != MIN_FRAME_SIZE:
        raise MalformedFrameError(
            f"{kind.name} frame of {len(data)} bytes, expected {MIN_FRAME_SIZE}"
        )
    if kind is FrameKind.ACK:
        seq = unpack_seq(_U32.unpack_from(data, 16)[0])
        return Frame(dst, src, kind, seq)
    return Frame(dst, src, kind)
