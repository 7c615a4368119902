"""Command-line entry point tying the modules into one loop.

Subcommands: simulate (scenario to trace file), discover (one-shot model
estimation), continual (session over window files or closed-loop against
the simulator), eval (model vs ground truth), export-dot. All output is
deterministic under fixed seeds: summary and log lines are JSON, one per
line, with no timestamps.

Exit codes: 0 success, 2 input or validation error, 3 internal numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .config import EngineConfig, load_config
from .continual import RunRecord, SessionState, run_session, step
from .errors import EmptyFile, EngineError, SingularRegression
from .intervention import (
    InterventionPlan,
    load_plan,
    suggest,
    validate_plan_variables,
)
from .model import build_model, export_dot, load, save
from .pcmci import run_discovery
from .simulator import evaluate, generate, ground_truth, load_scenario
from .timeseries import VariableSet, ingest, save_trace, standardize


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _infer_variables(path: Path, format: str) -> VariableSet:
    # trace files are self-describing: csv header row or first jsonl object
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        raise EmptyFile(f"{path} is empty")
    if format == "jsonl":
        names = tuple(json.loads(first).keys())
    else:
        names = tuple(h.strip() for h in first.split(","))
    return VariableSet(names)


def _format_of(path: Path, override: str | None) -> str:
    if override:
        return override
    return "jsonl" if path.suffix == ".jsonl" else "csv"


def _load_engine_config(arg: str | None) -> EngineConfig:
    if arg is None:
        return EngineConfig().validate()
    return load_config(arg)


def _window_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence((base, index)).generate_state(1)[0])


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_scenario(args.spec)
    plan = None
    if args.plan:
        plan = load_plan(args.plan)
        validate_plan_variables(plan, spec.variables.count)
    seed = args.seed if args.seed is not None else None
    trace = generate(spec, args.t_total, plan=plan, seed=seed)
    out = Path(args.out)
    fmt = _format_of(out, args.format)
    save_trace(trace.window, out, fmt)
    _emit(
        {
            "command": "simulate",
            "rows": len(trace.window),
            "variables": list(spec.variables.names),
            "out": str(out),
            "executed": [list(iv) for iv in trace.executed],
        }
    )
    return 0


def cmd_discover(args: argparse.Namespace) -> int:
    config = _load_engine_config(args.config)
    path = Path(args.data)
    fmt = _format_of(path, args.format)
    variables = _infer_variables(path, fmt)
    window = standardize(ingest(path, variables, format=fmt))
    params = config.discovery_params()
    result = run_discovery(
        window,
        tau_max=params.tau_max,
        alpha_pc=params.alpha_pc,
        max_conds=params.max_conds,
        max_px=params.max_px,
    )
    model = build_model(result.matrix, params.alpha_link, run_id=1)
    if args.out:
        save(model, args.out)
    _emit(
        {
            "command": "discover",
            "rows": len(window),
            "links": model.link_count,
            "ci_tests": result.ci_test_count,
            "out": args.out,
        }
    )
    return 0


def _file_windows(paths: Sequence[str], fmt_override: str | None) -> Iterator:
    variables = None
    for raw in paths:
        path = Path(raw)
        fmt = _format_of(path, fmt_override)
        if variables is None:
            variables = _infer_variables(path, fmt)
        yield standardize(ingest(path, variables, format=fmt))


def cmd_continual(args: argparse.Namespace) -> int:
    config = _load_engine_config(args.config)
    params = config.discovery_params()
    log_lines: list[str] = []

    def emit_line(obj: dict) -> None:
        line = json.dumps(obj)
        sys.stdout.write(line + "\n")
        log_lines.append(line)

    def emit_run(record: RunRecord) -> None:
        emit_line({"record_type": "run", **record.to_obj()})

    if args.live:
        state, peak = _run_live(args, config, params, emit_line, emit_run)
    else:
        windows = _file_windows(args.windows, args.format)
        state, peak = run_session(windows, params, on_record=emit_run)
    emit_line(
        {
            "record_type": "summary",
            "runs": state.run_counter,
            "peak_samples": peak,
            "final_links": 0 if state.current_model is None else state.current_model.link_count,
        }
    )
    if args.out and state.current_model is not None:
        save(state.current_model, args.out)
    if args.log:
        Path(args.log).write_text("".join(line + "\n" for line in log_lines), encoding="utf-8")
    return 0


def _run_live(args, config, params, emit_line, emit_run) -> tuple[SessionState, int]:
    """Closed loop against the simulator: each run's plan shapes the next window."""
    spec = load_scenario(args.live)
    base_seed = args.seed if args.seed is not None else config.seed
    k = config.intervention_k if args.k is None else args.k
    w = config.window_capacity
    state = SessionState()
    peak = 0
    plan: InterventionPlan | None = None
    for i in range(args.runs):
        trace = generate(
            spec, w, plan=plan, seed=_window_seed(base_seed, i), t_start=i * w
        )
        window = standardize(trace.window)
        peak = max(peak, len(window))
        state = step(state, window, params)
        emit_run(state.history[-1])
        plan = None
        if k >= 1 and state.current_model is not None and state.current_model.links:
            candidate = suggest(state.current_model, k, params.alpha_link)
            if candidate.targets:
                plan = candidate
                emit_line(
                    {
                        "record_type": "plan",
                        "after_run": state.run_counter,
                        "targets": [
                            {
                                "variable": spec.variables.names[t.variable],
                                "cause": t.link.cause,
                                "effect": t.link.effect,
                                "lag": t.link.lag,
                                "p_value": t.p_value,
                            }
                            for t in plan.targets
                        ],
                        "duration": plan.duration,
                        "signal": {"kind": plan.signal.kind, "value": plan.signal.value},
                    }
                )
    return state, peak


def cmd_eval(args: argparse.Namespace) -> int:
    model = load(args.model)
    spec = load_scenario(args.spec)
    truth = ground_truth(spec)
    metrics = evaluate(model, truth, args.regime)
    _emit(
        {
            "command": "eval",
            "regime": args.regime,
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1": metrics.f1,
        }
    )
    return 0


def cmd_export_dot(args: argparse.Namespace) -> int:
    model = load(args.model)
    text = export_dot(model)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalstream",
        description="Continual causal discovery over streaming time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a trace file from a scenario spec")
    p.add_argument("spec", help="scenario JSON file")
    p.add_argument("--t-total", type=int, required=True, dest="t_total")
    p.add_argument("--out", required=True)
    p.add_argument("--plan", help="intervention plan JSON to execute")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("discover", help="estimate a causal model from one trace file")
    p.add_argument("data", help="trace file (csv or jsonl)")
    p.add_argument("--config")
    p.add_argument("--out", help="model file to write")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("continual", help="run a continual session over windows")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--windows", nargs="+", help="ordered trace files, one per run")
    source.add_argument("--live", help="scenario JSON for closed-loop simulation")
    p.add_argument("--runs", type=int, default=5, help="window count in live mode")
    p.add_argument("--config")
    p.add_argument("--out", help="final model file")
    p.add_argument("--log", help="also write the session log here")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="intervention targets per run; 0 disables")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p.set_defaults(func=cmd_continual)

    p = sub.add_parser("eval", help="score a model file against a scenario's ground truth")
    p.add_argument("model", help="model JSON file")
    p.add_argument("spec", help="scenario JSON file")
    p.add_argument("--regime", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-dot", help="render a model file as DOT text")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SingularRegression as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
