"""Command-line interface.

    fadelink run      <scenario.json>   run once, write report.json
    fadelink sweep    <scenario.json> --param <path> --values <list>
    fadelink validate <scenario.json>   check the config, print verdict
    fadelink trace    <scenario.json> --out <file>   run with frame trace

Global flags --seed/--duration/--out-dir override the scenario;
--engine picks the compiled or pure simulation core. Exit status is 0
only when every executed run passes stream integrity (2 = bad config).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .engine import ENGINES, engine_name, have_fast
from .harness import run, sweep
from .report import TRACE_HEADER, report_json, summary_row, trace_lines
from .scenario import ScenarioError, load_scenario, validate


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load(args) -> dict:
    raw = load_scenario(args.scenario)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.duration is not None:
        raw["duration_s"] = args.duration
    return raw


def _out_dir(args) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {path}", file=sys.stderr)


def cmd_run(args) -> int:
    raw = _load(args)
    t0 = time.perf_counter()
    report, _ = run(raw, engine=args.engine)
    elapsed = time.perf_counter() - t0
    _write(os.path.join(_out_dir(args), "report.json"), report_json(report))
    print(summary_row("run", report))
    print(
        f"engine={report['engine']} events={report['events']} "
        f"wall={elapsed:.2f}s",
        file=sys.stderr,
    )
    return 0 if report["integrity"] == "pass" else 1


def cmd_sweep(args) -> int:
    raw = _load(args)
    values = [_parse_value(v) for v in args.values.split(",")]
    reports, summary = sweep(
        raw, args.param, values, engine=args.engine, workers=args.workers
    )
    out = _out_dir(args)
    for idx, report in enumerate(reports):
        run_dir = os.path.join(out, f"run_{idx:03d}")
        os.makedirs(run_dir, exist_ok=True)
        _write(os.path.join(run_dir, "report.json"), report_json(report))
    _write(os.path.join(out, "summary.csv"), summary)
    print(summary, end="")
    return 0 if all(r["integrity"] == "pass" for r in reports) else 1


def cmd_validate(args) -> int:
    raw = load_scenario(args.scenario)
    print(f"{args.scenario}: valid ({len(raw['senders'])} sender(s))")
    return 0


def cmd_trace(args) -> int:
    raw = _load(args)
    report, result = run(raw, engine=args.engine, trace=True)
    out = _out_dir(args)
    trace_path = args.out or os.path.join(out, "trace.csv")
    lines = [TRACE_HEADER]
    lines.extend(trace_lines(result["trace"]))
    _write(trace_path, "\n".join(lines) + "\n")
    _write(os.path.join(out, "report.json"), report_json(report))
    print(summary_row("trace", report))
    return 0 if report["integrity"] == "pass" else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fadelink",
        description="0xfade reliable-Ethernet transport simulator",
    )
    parser.add_argument(
        "--engine",
        choices=ENGINES,
        default="auto",
        help=f"simulation core (auto resolves to {engine_name()!r}"
        f"{'' if have_fast() else '; fast engine not built'})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override scenario seed")
        p.add_argument("--duration", type=float, help="override duration [s]")
        p.add_argument("--out-dir", default="out", help="artifact directory")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run once per parameter value")
    common(p)
    p.add_argument("--param", required=True, help="dotted field path(s)")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int, default=1, help="parallel runs")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("trace", help="run with a per-frame event trace")
    common(p)
    p.add_argument("--out", help="trace file (default <out-dir>/trace.csv)")
    p.set_defaults(fn=cmd_trace)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
