"""fadelink: reliable transport over raw Ethernet (EtherType 0xfade).

Software emulation of a small FPGA-to-host acquisition link: the
transmit-side descriptor state machine with a 32 x 1024-byte packet
window, the host-side protocol handler with per-board consumer rings,
adaptive inter-packet-delay congestion avoidance, and a deterministic
discrete-event simulator with a CLI harness for experiments and
end-to-end integrity verification.
"""

from .engine import engine_name, have_fast
from .harness import m_buf_bound, oracle_stream, run, sweep
from .pacing import PRESETS, DelayController, PacingParams
from .receiver import ReceiverCore
from .scenario import ScenarioError, load_scenario, normalize, validate
from .sender import SenderCore
from .wire import Frame, FrameKind, SeqNum, decode, encode, pack_seq, unpack_seq

__version__ = "0.1.0"

__all__ = [
    "DelayController",
    "Frame",
    "FrameKind",
    "PRESETS",
    "PacingParams",
    "ReceiverCore",
    "ScenarioError",
    "SenderCore",
    "SeqNum",
    "decode",
    "encode",
    "engine_name",
    "have_fast",
    "load_scenario",
    "m_buf_bound",
    "normalize",
    "oracle_stream",
    "pack_seq",
    "run",
    "sweep",
    "unpack_seq",
    "validate",
    "__version__",
]
