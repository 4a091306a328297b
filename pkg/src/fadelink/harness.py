"""Experiment front-end: single runs, parameter sweeps, integrity oracle.

run() executes one scenario and returns (report, raw_result); sweep()
fans a scenario template out over one parameter (seed policy: template
seed + run index) and collects reports plus a flat summary table.
Sweeps can use worker processes; runs are independent and reports are
deterministic functions of (scenario, seed), so parallelism never
changes results.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

from . import rng
from .engine import engine_name, get_simulate
from .netsim import TAG_STREAM
from .report import SUMMARY_HEADER, build_report, m_buf_bound, summary_row
from .scenario import ScenarioError, normalize, with_value

__all__ = ["run", "sweep", "oracle_stream", "sender_stream_seed", "m_buf_bound"]


def oracle_stream(seed: int, length: int) -> bytes:
    """First `length` bytes of the deterministic payload stream.

    The same definition feeds sender sources and the consumer verifier;
    (s, n) is always a prefix of (s, m) for n <= m.
    """
    if length % 4:
        raise ScenarioError(["oracle_stream length must be a multiple of 4"])
    return rng.stream_bytes(seed, 0, length)


def sender_stream_seed(scenario_seed: int, sender_index: int) -> int:
    """Stream seed used for sender i inside a scenario."""
    return rng.derive(scenario_seed, TAG_STREAM, sender_index)


def run(
    raw_scenario: dict,
    engine: str = "auto",
    trace: bool = False,
    check_invariants: bool = False,
) -> tuple[dict, dict]:
    """Simulate one scenario; returns (report, raw engine result)."""
    norm = normalize(raw_scenario)
    simulate = get_simulate(engine)
    result = simulate(norm, trace=trace, check_invariants=check_invariants)
    result["engine"] = engine_name(engine)
    report = build_report(raw_scenario, norm, result)
    return report, result


def _sweep_one(args):
    raw, engine = args
    report, _ = run(raw, engine=engine)
    return report


def sweep(
    template: dict,
    parameter: str,
    values: list,
    engine: str = "auto",
    workers: int = 1,
) -> tuple[list[dict], str]:
    """One run per value of `parameter`; returns (reports, summary csv).

    Each run gets seed = template seed + its index, so a sweep is
    reproducible as a whole while runs stay decorrelated.
    """
    if not values:
        raise ScenarioError(["sweep needs a non-empty value list"])
    scenarios = []
    for idx, value in enumerate(values):
        raw = with_value(template, parameter, value)
        raw["seed"] = template["seed"] + idx
        scenarios.append(raw)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_one, [(s, engine) for s in scenarios]))
    else:
        reports = [_sweep_one((s, engine)) for s in scenarios]
    lines = [SUMMARY_HEADER]
    for value, report in zip(values, reports):
        lines.append(summary_row(f"{parameter}={value}", report))
    return reports, "\n".join(lines) + "\n"
