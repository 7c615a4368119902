"""Two-phase lagged causal discovery over a TimeWindow.

Phase one (condition selection) runs a stable-removal lagged PC variant per
effect variable: candidates are tested against the q strongest surviving
co-candidates at growing cardinality q, with removals applied in batch at
the end of each round. Phase two (MCI, momentary conditional independence)
tests every cause-effect-lag cell conditioned on the effect's selected
parents plus the cause's own strongest parents shifted in time, producing a
fully populated inference matrix of statistics and p-values.

Only lagged links (lag >= 1) are considered, so every discovered graph is
acyclic over (variable, time) nodes by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .citest import Lagged, partial_correlation
from .errors import RangeError, TooFewSamples
from .timeseries import TimeWindow, VariableSet


@dataclass(frozen=True, order=True)
class LinkKey:
    """One directed lagged edge: cause at time t - lag influences effect at t."""

    cause: int
    effect: int
    lag: int

    def __post_init__(self) -> None:
        if self.lag < 1:
            raise RangeError(f"link lag must be >= 1, got {self.lag}")
        if self.cause < 0 or self.effect < 0:
            raise RangeError("variable indices must be non-negative")


@dataclass(frozen=True)
class LinkStats:
    """Per-link test outcome with provenance of the run that supplied it."""

    statistic: float
    p_value: float
    source_run: int
    sample_count: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise RangeError(f"p_value {self.p_value} outside [0, 1]")
        if self.source_run < 0:
            raise RangeError("source_run must be >= 0")


@dataclass(frozen=True, eq=False)
class InferenceMatrix:
    """Dense statistic and p-value cells for every legal LinkKey.

    Cell (i, j, tau) lives at index [i, j, tau - 1]. ``sample_count`` is the
    window length the matrix was estimated from and ``produced_at`` the
    global index one past the window's last row.
    """

    variables: VariableSet
    tau_max: int
    statistic: np.ndarray
    p_value: np.ndarray
    sample_count: int
    produced_at: int

    def __post_init__(self) -> None:
        n = self.variables.count
        shape = (n, n, self.tau_max)
        stat = np.array(self.statistic, dtype=np.float64)
        pval = np.array(self.p_value, dtype=np.float64)
        if stat.shape != shape or pval.shape != shape:
            raise RangeError(f"matrix cells must have shape {shape}")
        if np.any(pval < 0.0) or np.any(pval > 1.0):
            raise RangeError("p_value cells must lie in [0, 1]")
        if np.any(np.abs(stat) > 1.0):
            raise RangeError("statistic cells must lie in [-1, 1]")
        stat.flags.writeable = False
        pval.flags.writeable = False
        object.__setattr__(self, "statistic", stat)
        object.__setattr__(self, "p_value", pval)

    def cell(self, key: LinkKey) -> tuple[float, float]:
        if key.lag > self.tau_max:
            raise RangeError(f"lag {key.lag} exceeds tau_max {self.tau_max}")
        idx = (key.cause, key.effect, key.lag - 1)
        return float(self.statistic[idx]), float(self.p_value[idx])

    def keys(self) -> Iterable[LinkKey]:
        n = self.variables.count
        for cause in range(n):
            for effect in range(n):
                for lag in range(1, self.tau_max + 1):
                    yield LinkKey(cause, effect, lag)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InferenceMatrix):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.tau_max == other.tau_max
            and self.sample_count == other.sample_count
            and self.produced_at == other.produced_at
            and np.array_equal(self.statistic, other.statistic)
            and np.array_equal(self.p_value, other.p_value)
        )


@dataclass(frozen=True)
class ParentSet:
    """Selected parents of one effect, strongest first."""

    effect: int
    parents: tuple[tuple[LinkKey, float], ...]

    def __post_init__(self) -> None:
        if any(key.effect != self.effect for key, _ in self.parents):
            raise RangeError("all parents must share the ParentSet's effect index")
        object.__setattr__(self, "parents", tuple(self.parents))

    def top(self, k: int) -> tuple[tuple[LinkKey, float], ...]:
        return self.parents[:k]


@dataclass
class TestCounter:
    """Mutable tally of CI tests performed during a discovery run."""

    __test__ = False  # counter type, not a pytest suite, despite the name

    count: int = 0

    def add(self, n: int = 1) -> None:
        self.count += n


def _candidate_order(
    n_vars: int, effect: int, tau_max: int, seed: Sequence[tuple[int, int]] | None
) -> list[tuple[int, int]]:
    # default order: (cause, lag) ascending; warm seeds go first, rest follow
    base = [(c, lag) for c in range(n_vars) for lag in range(1, tau_max + 1)]
    if not seed:
        return base
    seeded = [cl for cl in seed if cl in set(base)]
    seen = set(seeded)
    return seeded + [cl for cl in base if cl not in seen]


def _sorted_by_strength(
    candidates: Iterable[tuple[int, int]], stat: Mapping[tuple[int, int], float]
) -> list[tuple[int, int]]:
    # strongest first; equal strengths break by lower cause index, then lower lag
    return sorted(candidates, key=lambda cl: (-abs(stat[cl]), cl[0], cl[1]))


def condition_selection(
    window: TimeWindow,
    tau_max: int,
    alpha_pc: float,
    max_conds: int,
    *,
    seed_parents: Mapping[int, Sequence[tuple[int, int]]] | None = None,
    exempt: Mapping[int, frozenset[tuple[int, int]]] | None = None,
    counter: TestCounter | None = None,
) -> list[ParentSet]:
    """Select a parent candidate set for every variable.

    ``seed_parents`` fixes the initial candidate ordering per effect (warm
    starts put the previous model's parents first). Candidates listed in
    ``exempt`` that pass their unconditional test are kept without any
    conditional retest; they still serve as conditions for the others.
    """
    if tau_max < 1:
        raise RangeError(f"tau_max must be >= 1, got {tau_max}")
    if not 0.0 < alpha_pc < 1.0:
        raise RangeError(f"alpha_pc must lie in (0, 1), got {alpha_pc}")
    if max_conds < 0:
        raise RangeError(f"max_conds must be >= 0, got {max_conds}")
    if len(window) < tau_max + max_conds + 4:
        raise TooFewSamples(
            f"need at least {tau_max + max_conds + 4} rows for tau_max {tau_max} "
            f"and max_conds {max_conds}, window has {len(window)}"
        )
    n = window.n_vars
    result = []
    for effect in range(n):
        seed = seed_parents.get(effect) if seed_parents else None
        free = exempt.get(effect, frozenset()) if exempt else frozenset()
        result.append(
            _select_for_effect(window, effect, tau_max, alpha_pc, max_conds, seed, free, counter)
        )
    return result


def _select_for_effect(
    window: TimeWindow,
    effect: int,
    tau_max: int,
    alpha_pc: float,
    max_conds: int,
    seed: Sequence[tuple[int, int]] | None,
    exempt_keys: frozenset[tuple[int, int]],
    counter: TestCounter | None,
) -> ParentSet:
    y: Lagged = (effect, 0)
    stat: dict[tuple[int, int], float] = {}

    # cardinality 0: unconditional screen of every candidate
    survivors = []
    exempt_alive = set()
    for cl in _candidate_order(window.n_vars, effect, tau_max, seed):
        res = partial_correlation(window, cl, y)
        if counter is not None:
            counter.add()
        stat[cl] = res.statistic
        if res.p_value <= alpha_pc:
            survivors.append(cl)
            if cl in exempt_keys:
                exempt_alive.add(cl)

    for q in range(1, max_conds + 1):
        if q > len(survivors) - 1:
            break
        ordered = _sorted_by_strength(survivors, stat)
        removed = set()
        for cl in ordered:
            if cl in exempt_alive:
                continue
            conds = [other for other in ordered if other != cl][:q]
            res = partial_correlation(window, cl, y, conds)
            if counter is not None:
                counter.add()
            stat[cl] = res.statistic
            if res.p_value > alpha_pc:
                removed.add(cl)
        if removed:
            survivors = [cl for cl in survivors if cl not in removed]

    parents = tuple(
        (LinkKey(c, effect, lag), stat[(c, lag)])
        for c, lag in _sorted_by_strength(survivors, stat)
    )
    return ParentSet(effect, parents)


def mci(
    window: TimeWindow,
    parents: Sequence[ParentSet],
    tau_max: int,
    max_px: int,
    *,
    counter: TestCounter | None = None,
) -> InferenceMatrix:
    """Fill the full inference matrix with momentary-conditional-independence tests.

    Cell (i, j, tau) conditions on the selected parents of j (minus the
    tested link) plus the top ``max_px`` parents of i, each shifted tau
    steps further into the past.
    """
    if max_px < 0:
        raise RangeError(f"max_px must be >= 0, got {max_px}")
    n = window.n_vars
    if len(parents) != n or any(parents[j].effect != j for j in range(n)):
        raise RangeError("parents must hold one ParentSet per variable, in index order")
    statistic = np.zeros((n, n, tau_max))
    p_value = np.ones((n, n, tau_max))
    for j in range(n):
        y: Lagged = (j, 0)
        py = [(key.cause, key.lag) for key, _ in parents[j].parents]
        for i in range(n):
            px = parents[i].top(max_px)
            for tau in range(1, tau_max + 1):
                x: Lagged = (i, tau)
                conds = [cl for cl in py if cl != x]
                for key, _ in px:
                    shifted = (key.cause, key.lag + tau)
                    if shifted != x and shifted not in conds:
                        conds.append(shifted)
                res = partial_correlation(window, x, y, conds)
                if counter is not None:
                    counter.add()
                statistic[i, j, tau - 1] = res.statistic
                p_value[i, j, tau - 1] = res.p_value
    return InferenceMatrix(
        variables=window.variables,
        tau_max=tau_max,
        statistic=statistic,
        p_value=p_value,
        sample_count=len(window),
        produced_at=window.start_index + len(window),
    )


def significant_links(
    matrix: InferenceMatrix, alpha_link: float, run_id: int = 0
) -> dict[LinkKey, LinkStats]:
    """Cells with p <= alpha_link, as a deterministic LinkKey -> LinkStats map."""
    if not 0.0 < alpha_link < 1.0:
        raise RangeError(f"alpha_link must lie in (0, 1), got {alpha_link}")
    links = {}
    for key in matrix.keys():
        stat, p = matrix.cell(key)
        if p <= alpha_link:
            links[key] = LinkStats(
                statistic=stat,
                p_value=p,
                source_run=run_id,
                sample_count=matrix.sample_count,
            )
    return links


class DiscoveryResult(NamedTuple):
    matrix: InferenceMatrix
    parents: tuple[ParentSet, ...]
    ci_test_count: int


def run_discovery(
    window: TimeWindow,
    *,
    tau_max: int,
    alpha_pc: float,
    max_conds: int,
    max_px: int,
    seed_parents: Mapping[int, Sequence[tuple[int, int]]] | None = None,
    exempt: Mapping[int, frozenset[tuple[int, int]]] | None = None,
) -> DiscoveryResult:
    """Run both phases on one window and report the CI-test tally."""
    counter = TestCounter()
    parents = condition_selection(
        window,
        tau_max,
        alpha_pc,
        max_conds,
        seed_parents=seed_parents,
        exempt=exempt,
        counter=counter,
    )
    matrix = mci(window, parents, tau_max, max_px, counter=counter)
    return DiscoveryResult(matrix, tuple(parents), counter.count)
