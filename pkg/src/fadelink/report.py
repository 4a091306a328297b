"""Run reports: derived metrics, JSON/CSV serialization, trace text.

Engines hand back integer counters only; every float (throughput,
means, ratios) is derived here so that reports are byte-identical
whenever the counters are, regardless of which engine produced them.
Integrity is decided purely by the engines' byte-for-byte stream
comparison, never inferred from counters.
"""

from __future__ import annotations

import json

from .netsim import (
    DIR_CONSUME,
    DIR_FWD,
    DIR_RX,
    DIR_TX,
    NODE_RECEIVER,
    NODE_SWITCH,
)
from .wire import PAYLOAD_SIZE, SET_TOTAL_BYTES, FrameKind, mac_str

_DIR_NAMES = {DIR_TX: "tx", DIR_RX: "rx", DIR_FWD: "fwd", DIR_CONSUME: "consume"}
_DISP_NAMES = [
    "sent", "resent", "lost", "dup", "drop_queue", "drop_unknown",
    "forwarded", "stored", "dup_ack", "late_ack", "no_space", "stale",
    "bad_pkt", "unregistered", "ok", "fifo_drop", "consumed",
]


def m_buf_bound(rate_bps: int, latency_ns: int) -> int:
    """Buffer bytes needed to sustain rate_bps across an ack latency."""
    if rate_bps <= 0:
        raise ValueError("rate_bps must be positive")
    return rate_bps * latency_ns // 8_000_000_000


def _stat_block(count: int, total: int, mn: int, mx: int) -> dict:
    return {
        "count": count,
        "min_ns": mn,
        "mean_ns": (total / count) if count else 0.0,
        "max_ns": mx,
    }


def build_report(raw_scenario: dict, norm: dict, result: dict) -> dict:
    duration_ns = norm["duration_ns"]
    warmup_ns = norm["warmup_ns"]
    measure_ns = duration_ns - warmup_ns
    senders = []
    all_pass = True
    total_delivered = 0
    total_throughput = 0.0
    for i, s in enumerate(result["senders"]):
        cfg = norm["senders"][i]
        stream_bytes = cfg["source"]["stream_bytes"]
        expected = stream_bytes // PAYLOAD_SIZE * PAYLOAD_SIZE if stream_bytes else None
        ok = s["verify_failed"] == 0
        if expected is not None:
            ok = ok and s["delivered_bytes"] == expected
        all_pass = all_pass and ok
        throughput = (
            s["delivered_measured_bytes"] * 8 * 1_000_000_000 / measure_ns
            if measure_ns
            else 0.0
        )
        total_delivered += s["delivered_bytes"]
        total_throughput += throughput
        windows = s["window_rsnt"]
        wsize = s["window_size"]
        last_quarter = windows[-max(1, len(windows) // 4):] if windows else []
        rtt_mean = s["rtt_sum_ns"] / s["rtt_count"] if s["rtt_count"] else 0
        link_rate = cfg["link"]["rate_bps"]
        payload_cap = link_rate * PAYLOAD_SIZE / (PAYLOAD_SIZE + 24)
        bound_bps = (
            SET_TOTAL_BYTES * 8 * 1_000_000_000 / rtt_mean if rtt_mean else float("inf")
        )
        senders.append(
            {
                "mac": mac_str(cfg["mac"]),
                "integrity": "pass" if ok else "fail",
                "bytes_delivered": s["delivered_bytes"],
                "bytes_delivered_measured": s["delivered_measured_bytes"],
                "bytes_expected": expected,
                "first_mismatch_at": s["first_mismatch_at"],
                "throughput_bps": throughput,
                "frames_sent": s["frames_sent"],
                "frames_resent": s["frames_resent"],
                "resend_ratio": s["frames_resent"] / s["frames_sent"]
                if s["frames_sent"]
                else 0.0,
                "final_delay_us": s["final_delay_us"],
                "final_delay_ns": s["final_delay_ns"],
                "ack_latency_ns": _stat_block(
                    s["ack_lat_count"], s["ack_lat_sum_ns"],
                    s["ack_lat_min_ns"], s["ack_lat_max_ns"],
                ),
                "ack_rtt_ns": _stat_block(
                    s["rtt_count"], s["rtt_sum_ns"], s["rtt_min_ns"], s["rtt_max_ns"]
                ),
                "window_limited": bound_bps < payload_cap,
                "m_buf_bound_bytes": m_buf_bound(link_rate, int(rtt_mean)),
                "pacing_windows": {
                    "count": len(windows),
                    "size": wsize,
                    "last_resend_ratio": windows[-1] / wsize if windows else 0.0,
                    "mean_ratio_last_quarter": (
                        sum(last_quarter) / (len(last_quarter) * wsize)
                        if last_quarter
                        else 0.0
                    ),
                },
                "counters": {
                    k: s[k]
                    for k in (
                        "acks_enqueued", "ack_fifo_drops", "acks_accepted",
                        "acks_stale", "starts_received", "stops_received",
                        "source_offered_bytes", "unconfirmed_at_end",
                        "stored_frames", "dup_acked", "no_space_drops",
                        "stale_set", "bad_pkt_index",
                    )
                },
            }
        )
    link_drops = sum(lk["lost"] for lk in result["links"])
    report = {
        "engine": result["engine"],
        "seed": norm["seed"],
        "duration_s": raw_scenario["duration_s"],
        "warmup_ns": warmup_ns,
        "events": result["events"],
        "integrity": "pass" if all_pass else "fail",
        "senders": senders,
        "global": {
            "bytes_delivered": total_delivered,
            "throughput_bps": total_throughput,
            "switch_drops": result["switch"]["drop_queue"],
            "unknown_dst_drops": result["switch"]["drop_unknown"],
            "link_drops": link_drops,
            "unregistered_source": result["receiver"]["unregistered_source"],
            "links": result["links"],
        },
    }
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


SUMMARY_HEADER = (
    "label,seed,engine,integrity,senders,bytes_delivered,"
    "throughput_bps,frames_sent,frames_resent,switch_drops,link_drops"
)


def summary_row(label: str, report: dict) -> str:
    g = report["global"]
    frames_sent = sum(s["frames_sent"] for s in report["senders"])
    frames_resent = sum(s["frames_resent"] for s in report["senders"])
    return (
        f"{label},{report['seed']},{report['engine']},{report['integrity']},"
        f"{len(report['senders'])},{g['bytes_delivered']},{g['throughput_bps']:.3f},"
        f"{frames_sent},{frames_resent},{g['switch_drops']},{g['link_drops']}"
    )


TRACE_HEADER = "time_ns,node,dir,kind,set,pkt,size,disposition"

_KIND_NAMES = {k.value: k.name for k in FrameKind}
_KIND_NAMES[0] = "-"


def trace_lines(trace: list[tuple]):
    """Render engine trace tuples as CSV lines (excluding the header)."""
    for t, node, direction, kind, st, pkt, size, disp in trace:
        if node == NODE_SWITCH:
            name = "switch"
        elif node == NODE_RECEIVER:
            name = "receiver"
        else:
            name = f"sender{node}"
        yield (
            f"{t},{name},{_DIR_NAMES[direction]},{_KIND_NAMES[kind]},"
            f"{st},{pkt},{size},{_DISP_NAMES[disp]}"
        )
