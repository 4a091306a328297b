"""Scenario files: schema, validation, and normalization.

Scenarios are JSON objects with nested sections mirroring the simulated
network. Unknown keys are rejected (they are almost always sweep typos)
and validation errors carry full field paths.

    {
      "seed": 1,
      "duration_s": 10.0,
      "warmup_fraction": 0.05,          // or "warmup_s": 0.5
      "start_retry_ms": 50,             // START repeats until data flows
      "senders": [
        {
          "mac": "02:fa:de:00:00:01",
          "nca_preset": "set1",         // or "nca": { ... }
          "link":   { "rate_bps": 1000000000, "propagation_ns": 0,
                      "loss_prob": 0.0, "dup_prob": 0.0,
                      "reorder_jitter_ns": 0 },
          "source": { "mode": "unlimited",    // constant_rate | burst
                      "stream_bytes": 0,      // 0 = unbounded
                      "rate_bps": 0,
                      "burst_bytes": 0, "burst_period_ns": 0 }
        }
      ],
      "switch":   { "egress_queue_frames": 16 },
      "receiver": { "mac": "02:fa:de:ff:ff:01",
                    "per_frame_processing_ns": 3000,
                    "ring_sets": 4, "wakeup_threshold": 1024,
                    "link": { ... } },
      "consumer": { "mode": "immediate",      // or "delayed"
                    "consume_latency_ns": 0 }
    }

Explicit "nca" sections take integer/float thresholds or exact "a/b"
strings: n_pkt_update, t_high, t_low, alpha_incr, alpha_decr,
initial_delay_ns, min_delay_ns, max_delay_ns.

Sweep parameter paths address raw scenario fields with dots and
indices, e.g. "senders[0].link.loss_prob"; "[*]" fans out over a list
and comma-separated paths set several fields to the same value.
"""

from __future__ import annotations

import copy
import json
import re
from fractions import Fraction

from . import rng
from .netsim import SRC_BURST, SRC_RATE, SRC_UNLIMITED
from .pacing import (
    INITIAL_DELAY_NS,
    MAX_DELAY_NS,
    MIN_DELAY_NS,
    PRESETS,
    PacingParams,
)
from .wire import mac as parse_mac

DEFAULT_RECEIVER_MAC = "02:fa:de:ff:ff:01"
_SOURCE_MODES = {"unlimited": SRC_UNLIMITED, "constant_rate": SRC_RATE, "burst": SRC_BURST}
_CONSUMER_MODES = ("immediate", "delayed")


class ScenarioError(Exception):
    """Invalid scenario; .errors lists one message per field."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def load_scenario(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    validate(raw)
    return raw


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, msg: str):
        self.errors.append(f"{path}: {msg}")

    def section(self, obj, path: str, allowed: set[str]) -> bool:
        if not isinstance(obj, dict):
            self.fail(path, "must be an object")
            return False
        for key in obj:
            if key not in allowed:
                self.fail(f"{path}.{key}", "unknown key")
        return True

    def num(self, obj, path, key, lo=None, hi=None, default=None, integer=False):
        if key not in obj:
            if default is None:
                self.fail(f"{path}.{key}", "required")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{path}.{key}", "must be a number")
            return default
        if integer and not isinstance(v, int):
            self.fail(f"{path}.{key}", "must be an integer")
            return default
        if lo is not None and v < lo:
            self.fail(f"{path}.{key}", f"must be >= {lo}")
            return default
        if hi is not None and v > hi:
            self.fail(f"{path}.{key}", f"must be <= {hi}")
            return default
        return v


def _check_link(c: _Checker, obj: dict, path: str):
    if not c.section(obj, path, {"rate_bps", "propagation_ns", "loss_prob", "dup_prob", "reorder_jitter_ns"}):
        return
    c.num(obj, path, "rate_bps", lo=1, integer=True)
    c.num(obj, path, "propagation_ns", lo=0, default=0, integer=True)
    c.num(obj, path, "loss_prob", lo=0.0, hi=1.0, default=0.0)
    c.num(obj, path, "dup_prob", lo=0.0, hi=1.0, default=0.0)
    c.num(obj, path, "reorder_jitter_ns", lo=0, default=0, integer=True)


def _fraction(c: _Checker, obj: dict, path: str, key: str) -> Fraction | None:
    if key not in obj:
        c.fail(f"{path}.{key}", "required")
        return None
    v = obj[key]
    try:
        if isinstance(v, str):
            num, den = v.split("/")
            return Fraction(int(num), int(den))
        if isinstance(v, bool):
            raise ValueError
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        c.fail(f"{path}.{key}", "must be a number or 'a/b' string")
        return None


def _check_pacing(c: _Checker, sender: dict, path: str) -> PacingParams | None:
    has_preset = "nca_preset" in sender
    has_explicit = "nca" in sender
    if has_preset and has_explicit:
        c.fail(path, "give either nca_preset or nca, not both")
        return None
    if has_preset:
        name = sender["nca_preset"]
        if name not in PRESETS:
            c.fail(f"{path}.nca_preset", f"unknown preset {name!r}, have {sorted(PRESETS)}")
            return None
        return PRESETS[name]
    if not has_explicit:
        return PRESETS["set1"]
    obj = sender["nca"]
    p = f"{path}.nca"
    if not c.section(obj, p, {"n_pkt_update", "t_high", "t_low", "alpha_incr",
                              "alpha_decr", "initial_delay_ns", "min_delay_ns", "max_delay_ns"}):
        return None
    n = c.num(obj, p, "n_pkt_update", lo=1, integer=True)
    t_high = _fraction(c, obj, p, "t_high")
    t_low = _fraction(c, obj, p, "t_low")
    a_incr = _fraction(c, obj, p, "alpha_incr")
    a_decr = _fraction(c, obj, p, "alpha_decr")
    initial = c.num(obj, p, "initial_delay_ns", lo=1, default=INITIAL_DELAY_NS, integer=True)
    mind = c.num(obj, p, "min_delay_ns", lo=1, default=MIN_DELAY_NS, integer=True)
    maxd = c.num(obj, p, "max_delay_ns", lo=1, default=MAX_DELAY_NS, integer=True)
    if None in (n, t_high, t_low, a_incr, a_decr, initial, mind, maxd):
        return None
    try:
        return PacingParams(n, t_high, t_low, a_incr, a_decr, initial, mind, maxd)
    except ValueError as exc:
        c.fail(p, str(exc))
        return None


def _check_mac(c: _Checker, obj: dict, path: str, key: str, default: str | None = None):
    text = obj.get(key, default)
    if text is None:
        c.fail(f"{path}.{key}", "required")
        return None
    try:
        return parse_mac(text)
    except (ValueError, AttributeError, TypeError):
        c.fail(f"{path}.{key}", f"bad MAC address {text!r}")
        return None


def validate(raw: dict) -> None:
    """Raise ScenarioError listing every problem with field paths."""
    c = _Checker()
    if not c.section(raw, "scenario", {"seed", "duration_s", "warmup_fraction", "warmup_s",
                                       "start_retry_ms", "senders", "switch", "receiver",
                                       "consumer"}):
        raise ScenarioError(c.errors)
    c.num(raw, "scenario", "seed", lo=0, integer=True)
    c.num(raw, "scenario", "duration_s", lo=1e-9)
    c.num(raw, "scenario", "warmup_fraction", lo=0.0, hi=0.99, default=0.05)
    if "warmup_s" in raw:
        c.num(raw, "scenario", "warmup_s", lo=0.0, default=0.0)
    c.num(raw, "scenario", "start_retry_ms", lo=0.001, default=50)

    senders = raw.get("senders")
    if not isinstance(senders, list) or not senders:
        c.fail("scenario.senders", "must be a non-empty list")
        raise ScenarioError(c.errors)
    macs = []
    for i, sender in enumerate(senders):
        path = f"senders[{i}]"
        if not c.section(sender, path, {"mac", "link", "source", "nca_preset", "nca"}):
            continue
        m = _check_mac(c, sender, path, "mac")
        if m is not None:
            macs.append((m, f"{path}.mac"))
        if "link" not in sender:
            c.fail(f"{path}.link", "required")
        else:
            _check_link(c, sender["link"], f"{path}.link")
        _check_pacing(c, sender, path)
        src = sender.get("source", {"mode": "unlimited"})
        sp = f"{path}.source"
        if c.section(src, sp, {"mode", "stream_bytes", "rate_bps", "burst_bytes", "burst_period_ns"}):
            mode = src.get("mode", "unlimited")
            if mode not in _SOURCE_MODES:
                c.fail(f"{sp}.mode", f"unknown mode {mode!r}")
            stream = c.num(src, sp, "stream_bytes", lo=0, default=0, integer=True)
            if stream and stream % 4:
                c.fail(f"{sp}.stream_bytes", "must be a multiple of 4 (32-bit input bus)")
            if mode == "constant_rate":
                c.num(src, sp, "rate_bps", lo=1, integer=True)
            if mode == "burst":
                c.num(src, sp, "burst_bytes", lo=1, integer=True)
                c.num(src, sp, "burst_period_ns", lo=1, integer=True)

    sw = raw.get("switch", {})
    if c.section(sw, "switch", {"egress_queue_frames"}):
        c.num(sw, "switch", "egress_queue_frames", lo=1, default=16, integer=True)

    recv = raw.get("receiver")
    if recv is None:
        c.fail("receiver", "required")
    elif c.section(recv, "receiver", {"mac", "per_frame_processing_ns", "ring_sets",
                                      "wakeup_threshold", "link"}):
        m = _check_mac(c, recv, "receiver", "mac", DEFAULT_RECEIVER_MAC)
        if m is not None:
            macs.append((m, "receiver.mac"))
        c.num(recv, "receiver", "per_frame_processing_ns", lo=0, default=3000, integer=True)
        c.num(recv, "receiver", "ring_sets", lo=2, default=4, integer=True)
        c.num(recv, "receiver", "wakeup_threshold", lo=0, default=1024, integer=True)
        if "link" not in recv:
            c.fail("receiver.link", "required")
        else:
            _check_link(c, recv["link"], "receiver.link")

    cons = raw.get("consumer", {})
    if c.section(cons, "consumer", {"mode", "consume_latency_ns"}):
        mode = cons.get("mode", "immediate")
        if mode not in _CONSUMER_MODES:
            c.fail("consumer.mode", f"unknown mode {mode!r}")
        c.num(cons, "consumer", "consume_latency_ns", lo=0, default=0, integer=True)
        if mode == "delayed" and cons.get("consume_latency_ns", 0) <= 0:
            c.fail("consumer.consume_latency_ns", "delayed mode needs a positive latency")

    seen = {}
    for m, where in macs:
        if m in seen:
            c.fail(where, f"duplicate MAC, also used at {seen[m]}")
        seen[m] = where

    if c.errors:
        raise ScenarioError(c.errors)


def _norm_link(obj: dict) -> dict:
    return {
        "rate_bps": obj["rate_bps"],
        "prop_ns": obj.get("propagation_ns", 0),
        "loss_thr": rng.prob_threshold(obj.get("loss_prob", 0.0)),
        "dup_thr": rng.prob_threshold(obj.get("dup_prob", 0.0)),
        "jitter_ns": obj.get("reorder_jitter_ns", 0),
    }


def normalize(raw: dict) -> dict:
    """Validate and reduce a scenario to the engines' integer form."""
    validate(raw)
    duration_ns = int(round(raw["duration_s"] * 1e9))
    if "warmup_s" in raw:
        warmup_ns = int(round(raw["warmup_s"] * 1e9))
    else:
        warmup_ns = int(round(duration_ns * raw.get("warmup_fraction", 0.05)))
    warmup_ns = min(warmup_ns, duration_ns)
    senders = []
    for i, sender in enumerate(raw["senders"]):
        src = sender.get("source", {"mode": "unlimited"})
        params = _check_pacing(_Checker(), sender, f"senders[{i}]")
        assert params is not None  # validate() already accepted it
        senders.append(
            {
                "mac": parse_mac(sender["mac"]),
                "link": _norm_link(sender["link"]),
                "source": {
                    "mode": _SOURCE_MODES[src.get("mode", "unlimited")],
                    "rate_bps": src.get("rate_bps", 0),
                    "burst_bytes": src.get("burst_bytes", 0),
                    "burst_period_ns": src.get("burst_period_ns", 0),
                    "stream_bytes": src.get("stream_bytes", 0),
                },
                "pacing": params,
            }
        )
    recv = raw["receiver"]
    cons = raw.get("consumer", {})
    return {
        "seed": raw["seed"],
        "duration_ns": duration_ns,
        "warmup_ns": warmup_ns,
        "start_retry_ns": int(round(raw.get("start_retry_ms", 50) * 1e6)),
        "senders": senders,
        "switch": {"queue_frames": raw.get("switch", {}).get("egress_queue_frames", 16)},
        "receiver": {
            "mac": parse_mac(recv.get("mac", DEFAULT_RECEIVER_MAC)),
            "link": _norm_link(recv["link"]),
            "proc_ns": recv.get("per_frame_processing_ns", 3000),
            "ring_sets": recv.get("ring_sets", 4),
            "wakeup_threshold": recv.get("wakeup_threshold", 1024),
        },
        "consumer": {
            "latency_ns": cons.get("consume_latency_ns", 0)
            if cons.get("mode", "immediate") == "delayed"
            else 0
        },
    }


# ----------------------------------------------------------------------
# sweep parameter paths

_SEG = re.compile(r"^(\w+)((?:\[(?:\d+|\*)\])*)$")


def _tokens(path: str) -> list:
    """'senders[0].link.loss_prob' -> ['senders', 0, 'link', 'loss_prob'].

    '[*]' becomes the token '*', fanning out over a whole list.
    """
    out: list = []
    for part in path.split("."):
        m = _SEG.match(part)
        if not m:
            raise ScenarioError([f"{path}: bad path segment {part!r}"])
        out.append(m.group(1))
        for idx in re.findall(r"\[(\d+|\*)\]", m.group(2)):
            out.append("*" if idx == "*" else int(idx))
    return out


def _descend(container, tok, full: str) -> list:
    if tok == "*":
        if not isinstance(container, list):
            raise ScenarioError([f"{full}: [*] applied to a non-list"])
        return list(container)
    if isinstance(tok, int):
        if not isinstance(container, list) or tok >= len(container):
            raise ScenarioError([f"{full}: index [{tok}] out of range"])
        return [container[tok]]
    if not isinstance(container, dict) or tok not in container:
        raise ScenarioError([f"{full}: no such field {tok!r}"])
    return [container[tok]]


def set_path(raw: dict, dotted: str, value) -> None:
    """Assign `value` at one or more dotted paths in a raw scenario.

    Comma-separated paths all receive the value. Intermediate segments
    must exist; the final key may be one the scenario left at its
    default. Callers re-validate afterwards, which rejects paths that
    name keys outside the schema.
    """
    for path in (p.strip() for p in dotted.split(",")):
        if not path:
            continue
        toks = _tokens(path)
        targets = [raw]
        for tok in toks[:-1]:
            nxt = []
            for t in targets:
                nxt.extend(_descend(t, tok, path))
            targets = nxt
        last = toks[-1]
        for t in targets:
            if isinstance(last, str):
                if not isinstance(t, dict):
                    raise ScenarioError([f"{path}: cannot set {last!r} here"])
                t[last] = value
            elif last == "*":
                if not isinstance(t, list):
                    raise ScenarioError([f"{path}: [*] applied to a non-list"])
                for i in range(len(t)):
                    t[i] = value
            else:
                if not isinstance(t, list) or last >= len(t):
                    raise ScenarioError([f"{path}: index [{last}] out of range"])
                t[last] = value


def with_value(raw: dict, dotted: str, value) -> dict:
    """Deep-copied scenario with `dotted` set to `value` (validated)."""
    out = copy.deepcopy(raw)
    set_path(out, dotted, value)
    validate(out)
    return out
