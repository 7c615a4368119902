"""Continual refinement of a stored causal model across windows.

Each delivered window yields a fresh inference matrix. If the stored model
still fits it (few significance decisions flip), the model absorbs the
fresh evidence by keeping, cell by cell, whichever side has the smaller
p-value; retained uncertainty therefore never grows while the world holds
still. If too many decisions flip, the regime changed: discovery restarts
warm, seeding and exempting the old links that still pass an unconditional
screen, which costs strictly fewer tests than a cold run when enough of
the old structure persists. Between steps no sample data is retained, only
the model and a per-run history line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import RangeError, ShapeMismatch
from .model import CausalModel, build_model
from .pcmci import InferenceMatrix, LinkKey, LinkStats, run_discovery
from .timeseries import TimeWindow

BRANCH_COLD = "cold"
BRANCH_STATIONARY = "stationary"
BRANCH_NON_STATIONARY = "non_stationary"


@dataclass(frozen=True)
class StationarityReport:
    """Fraction of link decisions that flipped between stored model and fresh matrix."""

    disagreement: float
    stationary: bool
    flipped_links: frozenset[LinkKey]


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    branch: str
    disagreement: float | None
    link_count: int
    ci_test_count: int

    @property
    def stationary(self) -> bool | None:
        if self.branch == BRANCH_COLD:
            return None
        return self.branch == BRANCH_STATIONARY

    def to_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "branch": self.branch,
            "disagreement": self.disagreement,
            "link_count": self.link_count,
            "ci_test_count": self.ci_test_count,
        }


@dataclass(frozen=True)
class DiscoveryParams:
    """Free parameters of one discovery run, shared by cold and warm paths."""

    tau_max: int = 3
    alpha_pc: float = 0.05
    alpha_link: float = 0.01
    theta_s: float = 0.1
    max_conds: int = 3
    max_px: int = 1


@dataclass(frozen=True)
class SessionState:
    """Everything carried between steps: a model, counters, history. No samples."""

    current_model: CausalModel | None = None
    run_counter: int = 0
    ci_test_count_last_run: int = 0
    history: tuple[RunRecord, ...] = ()

    def __post_init__(self) -> None:
        if len(self.history) != self.run_counter:
            raise ShapeMismatch(
                f"history length {len(self.history)} must equal run_counter {self.run_counter}"
            )


def check_stationarity(
    model: CausalModel, fresh: InferenceMatrix, alpha_link: float, theta_s: float
) -> StationarityReport:
    """Compare stored link decisions against the fresh matrix's decisions."""
    if model.variables != fresh.variables or model.tau_max != fresh.tau_max:
        raise ShapeMismatch("stored model and fresh matrix use different variables or tau_max")
    if not 0.0 <= theta_s <= 1.0:
        raise RangeError(f"theta_s must lie in [0, 1], got {theta_s}")
    flipped = []
    total = 0
    for key in fresh.keys():
        total += 1
        decision_old = key in model.links
        decision_new = fresh.cell(key)[1] <= alpha_link
        if decision_old != decision_new:
            flipped.append(key)
    disagreement = len(flipped) / total
    return StationarityReport(
        disagreement=disagreement,
        stationary=disagreement <= theta_s,
        flipped_links=frozenset(flipped),
    )


def merge_models(
    old: CausalModel, fresh: InferenceMatrix, alpha_link: float, run_id: int
) -> CausalModel:
    """Keep, per cell, whichever of old matrix and fresh matrix has smaller p.

    Ties go to the fresh side. Link stats follow the winning side; the
    merged matrix's sample_count and produced_at describe the fresh window,
    per-link counts live in the LinkStats.
    """
    if old.variables != fresh.variables or old.tau_max != fresh.tau_max:
        raise ShapeMismatch("models to merge use different variables or tau_max")
    old_m = old.inference
    fresh_wins = fresh.p_value <= old_m.p_value
    p_merged = np.where(fresh_wins, fresh.p_value, old_m.p_value)
    stat_merged = np.where(fresh_wins, fresh.statistic, old_m.statistic)
    merged_matrix = InferenceMatrix(
        variables=fresh.variables,
        tau_max=fresh.tau_max,
        statistic=stat_merged,
        p_value=p_merged,
        sample_count=fresh.sample_count,
        produced_at=fresh.produced_at,
    )
    links: dict[LinkKey, LinkStats] = {}
    for key in merged_matrix.keys():
        idx = (key.cause, key.effect, key.lag - 1)
        if p_merged[idx] > alpha_link:
            continue
        if fresh_wins[idx]:
            links[key] = LinkStats(
                statistic=float(fresh.statistic[idx]),
                p_value=float(fresh.p_value[idx]),
                source_run=run_id,
                sample_count=fresh.sample_count,
            )
        else:
            inherited = old.links.get(key)
            links[key] = inherited if inherited is not None else LinkStats(
                statistic=float(old_m.statistic[idx]),
                p_value=float(old_m.p_value[idx]),
                source_run=old.run_counter,
                sample_count=old_m.sample_count,
            )
    return CausalModel(
        variables=old.variables,
        tau_max=old.tau_max,
        alpha_link=alpha_link,
        links=links,
        inference=merged_matrix,
        run_counter=run_id,
    )


def _warm_seeds(
    old: CausalModel,
) -> tuple[dict[int, list[tuple[int, int]]], dict[int, frozenset[tuple[int, int]]]]:
    # per effect: old parents ordered strongest first, and the same pairs as exemptions
    by_effect: dict[int, list[tuple[LinkKey, LinkStats]]] = {}
    for key, stats in old.links.items():
        by_effect.setdefault(key.effect, []).append((key, stats))
    seeds = {}
    exempt = {}
    for effect, entries in by_effect.items():
        entries.sort(key=lambda e: (-abs(e[1].statistic), e[0].cause, e[0].lag))
        pairs = [(key.cause, key.lag) for key, _ in entries]
        seeds[effect] = pairs
        exempt[effect] = frozenset(pairs)
    return seeds, exempt


def rediscover_warm(
    old: CausalModel, window: TimeWindow, params: DiscoveryParams, run_id: int
) -> tuple[CausalModel, int]:
    """Rebuild the model after a regime change, reusing still-valid old links.

    Old links whose unconditional test still passes alpha_pc are kept
    without conditional retesting; everything else competes as in a cold
    run. Returns the rebuilt model and the number of CI tests spent.
    """
    seeds, exempt = _warm_seeds(old)
    result = run_discovery(
        window,
        tau_max=params.tau_max,
        alpha_pc=params.alpha_pc,
        max_conds=params.max_conds,
        max_px=params.max_px,
        seed_parents=seeds,
        exempt=exempt,
    )
    rebuilt = build_model(result.matrix, params.alpha_link, run_id)
    return rebuilt, result.ci_test_count


def step(state: SessionState, window: TimeWindow, params: DiscoveryParams) -> SessionState:
    """One iteration of the loop on an already-standardized window.

    First run stores a cold model. Later runs estimate a fresh matrix and
    either merge (stationary) or rediscover warm (non-stationary). The
    window is not retained in the returned state.
    """
    run_id = state.run_counter + 1
    fresh, _, fresh_tests = run_discovery(
        window,
        tau_max=params.tau_max,
        alpha_pc=params.alpha_pc,
        max_conds=params.max_conds,
        max_px=params.max_px,
    )
    if state.current_model is None:
        model = build_model(fresh, params.alpha_link, run_id)
        branch = BRANCH_COLD
        disagreement = None
        total_tests = fresh_tests
    else:
        report = check_stationarity(state.current_model, fresh, params.alpha_link, params.theta_s)
        disagreement = report.disagreement
        if report.stationary:
            model = merge_models(state.current_model, fresh, params.alpha_link, run_id)
            branch = BRANCH_STATIONARY
            total_tests = fresh_tests
        else:
            model, warm_tests = rediscover_warm(state.current_model, window, params, run_id)
            branch = BRANCH_NON_STATIONARY
            total_tests = fresh_tests + warm_tests
    record = RunRecord(
        run_id=run_id,
        branch=branch,
        disagreement=disagreement,
        link_count=model.link_count,
        ci_test_count=total_tests,
    )
    return SessionState(
        current_model=model,
        run_counter=run_id,
        ci_test_count_last_run=total_tests,
        history=state.history + (record,),
    )


def run_session(
    windows: Iterable[TimeWindow],
    params: DiscoveryParams,
    *,
    on_record: Callable[[RunRecord], None] | None = None,
) -> tuple[SessionState, int]:
    """Drive step over a window stream, holding one window at a time.

    Returns the final state and the peak number of sample rows held
    simultaneously, which instruments the one-window memory bound.
    """
    state = SessionState()
    peak_samples = 0
    for window in windows:
        peak_samples = max(peak_samples, len(window))
        state = step(state, window, params)
        if on_record is not None:
            on_record(state.history[-1])
    return state, peak_samples
