"""Linear lagged structural-causal-model simulator.

Stands in for the live environment: generates multivariate traces from a
scenario with regime switches and optional do-interventions, and scores a
learned model against the scenario's ground truth. Each effect at time t is
a linear combination of lagged values plus Gaussian noise; an intervened
variable is forced to the plan's signal with all incoming structural terms
severed. A small seeded scenario library ships as the standing test corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    CorruptFile,
    RegimeOutOfRange,
    ScheduleOutOfRange,
    ShapeMismatch,
    UnknownVariable,
    UnstableSpec,
)
from .intervention import InterventionPlan
from .pcmci import LinkKey
from .timeseries import TimeWindow, VariableSet

STABILITY_BUDGET = 0.9  # per effect, sum of |coefficients| may not exceed this


@dataclass(frozen=True)
class Edge:
    """One structural term: effect_t += coefficient * cause_{t-lag}."""

    cause: int
    effect: int
    lag: int
    coefficient: float


@dataclass(frozen=True)
class Regime:
    start_time: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))


@dataclass(frozen=True)
class ScenarioSpec:
    """Ground-truth generating model: regimes of edge lists plus noise scales.

    Construction is permissive; :func:`generate` validates and raises
    UnstableSpec so that invalid scenarios can exist as data (e.g. loaded
    from a file) and fail only when used.
    """

    variables: VariableSet
    regimes: tuple[Regime, ...]
    noise_sd: tuple[float, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "regimes", tuple(self.regimes))
        object.__setattr__(self, "noise_sd", tuple(float(s) for s in self.noise_sd))

    @property
    def max_lag(self) -> int:
        lags = [e.lag for regime in self.regimes for e in regime.edges]
        return max(lags, default=1)

    def validate(self) -> None:
        n = self.variables.count
        if len(self.noise_sd) != n:
            raise UnstableSpec(f"noise_sd has {len(self.noise_sd)} entries for {n} variables")
        if any(s < 0 for s in self.noise_sd):
            raise UnstableSpec("noise_sd entries must be >= 0")
        if not self.regimes:
            raise UnstableSpec("a scenario needs at least one regime")
        if self.regimes[0].start_time != 0:
            raise UnstableSpec("the first regime must start at time 0")
        starts = [r.start_time for r in self.regimes]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise UnstableSpec("regime start_times must be strictly increasing")
        for idx, regime in enumerate(self.regimes):
            budget: dict[int, float] = {}
            for e in regime.edges:
                if not (0 <= e.cause < n and 0 <= e.effect < n):
                    raise UnstableSpec(f"edge {e} references a variable outside the set")
                if e.lag < 1:
                    raise UnstableSpec(f"edge {e} has lag < 1")
                budget[e.effect] = budget.get(e.effect, 0.0) + abs(e.coefficient)
            for effect, total in budget.items():
                if total > STABILITY_BUDGET + 1e-12:
                    raise UnstableSpec(
                        f"regime {idx}: |coefficients| into variable "
                        f"{self.variables.names[effect]!r} sum to {total:.3f} > {STABILITY_BUDGET}"
                    )

    def regime_at(self, t: int) -> int:
        idx = 0
        for i, regime in enumerate(self.regimes):
            if regime.start_time <= t:
                idx = i
        return idx


@dataclass(frozen=True)
class GroundTruth:
    """Per-regime true link sets, derived exactly from a scenario's edges."""

    variables: VariableSet
    regimes: tuple[frozenset[LinkKey], ...]


def ground_truth(spec: ScenarioSpec) -> GroundTruth:
    return GroundTruth(
        variables=spec.variables,
        regimes=tuple(
            frozenset(
                LinkKey(e.cause, e.effect, e.lag) for e in regime.edges if e.coefficient != 0.0
            )
            for regime in spec.regimes
        ),
    )


ExecutedInterval = tuple[int, int, int]  # (variable, start, end), end exclusive


class GeneratedTrace(NamedTuple):
    window: TimeWindow
    executed: tuple[ExecutedInterval, ...]


def schedule_plan(plan: InterventionPlan, start: int) -> tuple[ExecutedInterval, ...]:
    """Sequential execution: one target at a time, each for plan.duration rows."""
    intervals = []
    t = start
    for target in plan.targets:
        intervals.append((target.variable, t, t + plan.duration))
        t += plan.duration
    return tuple(intervals)


def generate(
    spec: ScenarioSpec,
    t_total: int,
    plan: InterventionPlan | None = None,
    *,
    plan_start: int | None = None,
    executed: Sequence[ExecutedInterval] | None = None,
    initial: np.ndarray | None = None,
    seed: int | None = None,
    t_start: int = 0,
) -> GeneratedTrace:
    """Simulate ``t_total`` rows, starting at global time ``t_start``.

    The first ``max_lag`` rows are pure noise (or ``initial`` when given, the
    noise-free debug hook). Interventions come either from an explicit
    ``executed`` interval list or from ``plan`` scheduled sequentially from
    ``plan_start`` (default: right after the burn-in rows). Observational
    noise is drawn from a stream independent of the pulse stream, so traces
    with and without a plan share their noise bit for bit.
    """
    spec.validate()
    n = spec.variables.count
    max_lag = spec.max_lag
    if t_total <= max_lag:
        raise UnstableSpec(f"t_total must exceed the scenario max lag {max_lag}")

    if executed is None:
        if plan is not None and plan.targets:
            executed = schedule_plan(plan, max_lag if plan_start is None else plan_start)
        else:
            executed = ()
    executed = tuple((int(v), int(s), int(e)) for v, s, e in executed)
    for v, s, e in executed:
        if not (0 <= v < n):
            raise ScheduleOutOfRange(f"intervention variable index {v} out of range")
        if not (0 <= s < e <= t_total):
            raise ScheduleOutOfRange(f"interval [{s}, {e}) outside trace of length {t_total}")

    root = np.random.SeedSequence((spec.seed if seed is None else seed, 0xC0FFEE))
    noise_rng, pulse_rng = (np.random.default_rng(s) for s in root.spawn(2))
    noise = noise_rng.normal(0.0, 1.0, size=(t_total, n)) * np.asarray(spec.noise_sd)

    # per-regime coefficient stack: coeffs[r][lag-1] is an N x N cause->effect matrix
    coeffs = []
    for regime in spec.regimes:
        a = np.zeros((max_lag, n, n))
        for e in regime.edges:
            a[e.lag - 1, e.cause, e.effect] += e.coefficient
        coeffs.append(a)

    signal = np.zeros((t_total, n))
    mask = np.zeros((t_total, n), dtype=bool)
    for v, s, e in executed:
        if plan is not None and plan.signal.kind == "constant":
            signal[s:e, v] = plan.signal.value
        else:
            amplitude = plan.signal.value if plan is not None else 1.0
            signs = pulse_rng.integers(0, 2, size=e - s) * 2 - 1
            signal[s:e, v] = amplitude * signs
        mask[s:e, v] = True

    x = np.empty((t_total, n))
    burn = min(max_lag, t_total)
    if initial is not None:
        init = np.asarray(initial, dtype=float)
        if init.shape != (burn, n):
            raise ShapeMismatch(f"initial block must be {burn} x {n}, got {init.shape}")
        x[:burn] = init
    else:
        x[:burn] = noise[:burn]
    x[:burn][mask[:burn]] = signal[:burn][mask[:burn]]

    for t in range(burn, t_total):
        a = coeffs[spec.regime_at(t_start + t)]
        row = noise[t].copy()
        for lag in range(1, max_lag + 1):
            row += x[t - lag] @ a[lag - 1]
        intervened = mask[t]
        row[intervened] = signal[t, intervened]
        x[t] = row

    window = TimeWindow(
        spec.variables,
        x,
        start_index=t_start,
        capacity=t_total,
        intervention_mask=mask if mask.any() else None,
    )
    return GeneratedTrace(window, executed)


class EdgeMetrics(NamedTuple):
    precision: float
    recall: float
    f1: float


def evaluate(model, truth: GroundTruth, regime: int) -> EdgeMetrics:
    """Set-overlap metrics of a model's links against one regime's truth.

    An empty prediction scores precision 1 by convention; empty truth scores
    recall 1, so empty-vs-empty is a perfect (1, 1, 1).
    """
    if model.variables != truth.variables:
        raise ShapeMismatch("model and ground truth use different variable sets")
    if not (0 <= regime < len(truth.regimes)):
        raise RegimeOutOfRange(f"regime {regime} not in [0, {len(truth.regimes)})")
    predicted = set(model.links)
    actual = set(truth.regimes[regime])
    tp = len(predicted & actual)
    precision = tp / len(predicted) if predicted else 1.0
    recall = tp / len(actual) if actual else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return EdgeMetrics(precision, recall, f1)


def scenario_to_obj(spec: ScenarioSpec) -> dict:
    names = spec.variables.names
    return {
        "variables": list(names),
        "noise_sd": list(spec.noise_sd),
        "seed": spec.seed,
        "regimes": [
            {
                "start_time": regime.start_time,
                "edges": [
                    {
                        "cause": names[e.cause],
                        "effect": names[e.effect],
                        "lag": e.lag,
                        "coefficient": e.coefficient,
                    }
                    for e in regime.edges
                ],
            }
            for regime in spec.regimes
        ],
    }


def scenario_from_obj(obj: dict) -> ScenarioSpec:
    try:
        variables = VariableSet(tuple(obj["variables"]))
        regimes = []
        for entry in obj["regimes"]:
            edges = []
            for e in entry["edges"]:
                try:
                    cause = variables.index(str(e["cause"]))
                    effect = variables.index(str(e["effect"]))
                except KeyError as exc:
                    raise UnknownVariable(str(exc.args[0])) from None
                edges.append(Edge(cause, effect, int(e["lag"]), float(e["coefficient"])))
            regimes.append(Regime(int(entry["start_time"]), tuple(edges)))
        return ScenarioSpec(
            variables=variables,
            regimes=tuple(regimes),
            noise_sd=tuple(float(s) for s in obj["noise_sd"]),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"malformed scenario document: {exc}") from exc


def save_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_obj(spec), indent=1, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptFile(f"cannot read scenario file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_obj(obj)


def _xyz() -> VariableSet:
    return VariableSet(("x", "y", "z"))


def library() -> dict[str, ScenarioSpec]:
    """The seeded scenario corpus used by the standing recovery checks."""
    xyz = _xyz()
    wxyz = VariableSet(("w", "x", "y", "z"))
    return {
        "chain_3": ScenarioSpec(
            variables=xyz,
            regimes=(
                Regime(0, (Edge(0, 1, 1, 0.8), Edge(1, 2, 1, 0.8))),
            ),
            noise_sd=(1.0, 1.0, 1.0),
            seed=11,
        ),
        "fork_3": ScenarioSpec(
            variables=xyz,
            regimes=(
                Regime(0, (Edge(0, 1, 1, 0.8), Edge(0, 2, 2, 0.8))),
            ),
            noise_sd=(1.0, 1.0, 1.0),
            seed=12,
        ),
        "collider_3": ScenarioSpec(
            variables=xyz,
            regimes=(
                Regime(0, (Edge(0, 2, 1, 0.45), Edge(1, 2, 2, 0.45))),
            ),
            noise_sd=(1.0, 1.0, 1.0),
            seed=13,
        ),
        "auto_4": ScenarioSpec(
            variables=wxyz,
            regimes=(
                Regime(
                    0,
                    (
                        Edge(0, 0, 1, 0.5),
                        Edge(1, 1, 1, 0.5),
                        Edge(0, 1, 2, 0.4),
                        Edge(2, 2, 1, 0.3),
                        Edge(1, 2, 1, 0.5),
                        Edge(2, 3, 3, 0.6),
                    ),
                ),
            ),
            noise_sd=(1.0, 1.0, 1.0, 1.0),
            seed=14,
        ),
        "regime_switch_3": ScenarioSpec(
            variables=xyz,
            regimes=(
                Regime(
                    0,
                    (
                        Edge(0, 1, 1, 0.5),
                        Edge(2, 1, 2, 0.4),
                        Edge(0, 2, 1, 0.45),
                        Edge(1, 2, 3, 0.45),
                    ),
                ),
                Regime(
                    2000,
                    (
                        Edge(0, 1, 1, 0.5),
                        Edge(2, 1, 2, 0.4),
                        Edge(1, 2, 1, 0.45),
                        Edge(0, 2, 3, 0.45),
                    ),
                ),
            ),
            noise_sd=(1.0, 1.0, 1.0),
            seed=15,
        ),
    }


def weak_pair() -> ScenarioSpec:
    """Two variables joined by one deliberately underpowered link."""
    return ScenarioSpec(
        variables=VariableSet(("x", "y")),
        regimes=(Regime(0, (Edge(0, 1, 1, 0.15),)),),
        noise_sd=(1.0, 1.0),
        seed=21,
    )
