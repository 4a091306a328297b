"""Shared scenario builders for simulator-level tests."""

import pytest

GIG = 1_000_000_000
FAST = 100_000_000


def link(rate_bps=GIG, propagation_ns=500, loss=0.0, dup=0.0, jitter_ns=0):
    return {
        "rate_bps": rate_bps,
        "propagation_ns": propagation_ns,
        "loss_prob": loss,
        "dup_prob": dup,
        "reorder_jitter_ns": jitter_ns,
    }


def sender(idx=0, link_cfg=None, stream_bytes=0, mode="unlimited",
           preset="set1", **source_extra):
    src = {"mode": mode, "stream_bytes": stream_bytes}
    src.update(source_extra)
    return {
        "mac": f"02:fa:de:00:00:{idx + 1:02x}",
        "nca_preset": preset,
        "link": link_cfg or link(),
        "source": src,
    }


def scenario(senders=None, seed=1, duration_s=2.0, queue=16,
             receiver_link=None, proc_ns=3000, ring_sets=4,
             wakeup_threshold=1024, consumer=None, **top):
    sc = {
        "seed": seed,
        "duration_s": duration_s,
        "senders": senders or [sender()],
        "switch": {"egress_queue_frames": queue},
        "receiver": {
            "per_frame_processing_ns": proc_ns,
            "ring_sets": ring_sets,
            "wakeup_threshold": wakeup_threshold,
            "link": receiver_link or link(),
        },
        "consumer": consumer or {"mode": "immediate"},
    }
    sc.update(top)
    return sc


@pytest.fixture
def small_scenario():
    return scenario(
        senders=[sender(0, stream_bytes=256 * 1024)], seed=11, duration_s=3.0
    )
