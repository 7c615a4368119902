"""Interventions strategy: rank unreliable links, emit a plan.

The least reliable retained links (largest p-values, closest to the
significance threshold) name the variables worth perturbing next. A plan
lists target cause variables in that order, to be executed sequentially by
the simulator; the injected signal raises variance at the target so the
outgoing edge under doubt is re-tested with more power.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .errors import CorruptFile, RangeError, UnknownVariable
from .pcmci import LinkKey
from .timeseries import TimeWindow

DEFAULT_AMPLITUDE = 3.0  # in standardized units
DEFAULT_DURATION = 100

SIGNAL_KINDS = ("random_pulse", "constant")


@dataclass(frozen=True)
class InterventionSignal:
    """What the executed intervention writes: sign-flipping pulses or a constant."""

    kind: str = "random_pulse"
    value: float = DEFAULT_AMPLITUDE

    def __post_init__(self) -> None:
        if self.kind not in SIGNAL_KINDS:
            raise RangeError(f"signal kind must be one of {SIGNAL_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class PlanTarget:
    variable: int
    link: LinkKey
    p_value: float


@dataclass(frozen=True)
class InterventionPlan:
    """Ordered intervention targets, most unreliable motivating link first."""

    targets: tuple[PlanTarget, ...] = ()
    duration: int = DEFAULT_DURATION
    signal: InterventionSignal = field(default_factory=InterventionSignal)

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.duration < 1:
            raise RangeError(f"duration must be >= 1, got {self.duration}")
        variables = [t.variable for t in self.targets]
        if len(set(variables)) != len(variables):
            raise RangeError("plan targets must not repeat a variable")
        ps = [t.p_value for t in self.targets]
        if any(b > a for a, b in zip(ps, ps[1:])):
            raise RangeError("plan targets must be ordered by motivating p_value descending")

    def __bool__(self) -> bool:
        return bool(self.targets)


def suggest(
    model,
    k: int,
    alpha_link: float,
    *,
    duration: int = DEFAULT_DURATION,
    signal: InterventionSignal | None = None,
) -> InterventionPlan:
    """Plan interventions on the cause variables of the k least reliable links."""
    if k < 1:
        raise RangeError(f"k must be >= 1, got {k}")
    if not 0.0 < alpha_link < 1.0:
        raise RangeError(f"alpha_link must lie in (0, 1), got {alpha_link}")
    ranked = sorted(
        model.links.items(),
        key=lambda item: (-item[1].p_value, item[0].cause, item[0].effect, item[0].lag),
    )
    targets = []
    seen = set()
    for key, stats in ranked:
        if key.cause in seen:
            continue
        seen.add(key.cause)
        targets.append(PlanTarget(variable=key.cause, link=key, p_value=stats.p_value))
        if len(targets) == k:
            break
    return InterventionPlan(
        targets=tuple(targets),
        duration=duration,
        signal=signal if signal is not None else InterventionSignal(),
    )


def annotate(
    window: TimeWindow,
    plan: InterventionPlan,
    executed: Sequence[tuple[int, int, int]],
) -> TimeWindow:
    """Mark executed (variable, start, end) intervals on the window's mask.

    Intervals are window-local row ranges, end exclusive; overlaps union.
    The mask is provenance only, CI tests read the values unchanged.
    """
    mask = window.mask_or_false().copy()
    t, n = mask.shape
    for v, s, e in executed:
        if not (0 <= v < n):
            raise RangeError(f"intervention variable index {v} out of range [0, {n})")
        if not (0 <= s <= e <= t):
            raise RangeError(f"interval [{s}, {e}) outside window of length {t}")
        mask[s:e, v] = True
    return replace(window, intervention_mask=mask)


def _plan_to_obj(plan: InterventionPlan) -> dict:
    return {
        "targets": [
            {
                "variable": t.variable,
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


def _plan_from_obj(obj: dict) -> InterventionPlan:
    try:
        targets = tuple(
            PlanTarget(
                variable=int(t["variable"]),
                link=LinkKey(int(t["cause"]), int(t["effect"]), int(t["lag"])),
                p_value=float(t["p_value"]),
            )
            for t in obj["targets"]
        )
        signal = InterventionSignal(str(obj["signal"]["kind"]), float(obj["signal"]["value"]))
        return InterventionPlan(targets=targets, duration=int(obj["duration"]), signal=signal)
    except (KeyError, TypeError, ValueError, RangeError) as exc:
        raise CorruptFile(f"malformed plan document: {exc}") from exc


def save_plan(plan: InterventionPlan, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(_plan_to_obj(plan), indent=1, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_plan(path: str | Path) -> InterventionPlan:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptFile(f"cannot read plan file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"plan file {path} is not valid JSON: {exc}") from exc
    return _plan_from_obj(obj)


def validate_plan_variables(plan: InterventionPlan, n_vars: int) -> None:
    """Reject plans naming variables outside the scenario's set."""
    for t in plan.targets:
        if not (0 <= t.variable < n_vars):
            raise UnknownVariable(str(t.variable))
