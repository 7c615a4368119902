"""Conditional independence testing between lagged variables.

Partial correlation via residual regression: regress both tested columns on
the conditioning columns with ordinary least squares, Pearson-correlate the
residuals, and convert to a two-sided p-value through the Fisher
z-transform. All functions here are pure; they can run concurrently over a
shared read-only window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularRegression, TooFewSamples
from .timeseries import TimeWindow

# A lagged variable: (variable index, lag tau >= 0), meaning the value tau
# steps in the past.
Lagged = tuple[int, int]

ATANH_CLAMP = 1e-10
RIDGE_LAMBDA = 1e-8
CONDITION_LIMIT = 1e10
MIN_EXTRA_SAMPLES = 4
# residual energy below this fraction of the column's own energy is rounding
# dust from an exact linear dependence, not signal
DEGENERATE_SS_FRACTION = 1e-24


@dataclass(frozen=True)
class CITestResult:
    """Outcome of one conditional independence test."""

    statistic: float  # partial correlation r in [-1, 1]
    p_value: float  # two-sided Fisher-z p in [0, 1]
    effective_n: int  # samples left after lag alignment
    ridge_fallback: bool = False  # collinear conditions resolved with ridge


def normal_sf(x: float) -> float:
    """Standard normal survival function 1 - Phi(x), erfc-based."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _aligned_columns(samples: np.ndarray, nodes: Sequence[Lagged]) -> np.ndarray:
    """Stack lagged columns over their common effective time range."""
    t_total = samples.shape[0]
    max_lag = max(lag for _, lag in nodes)
    n_eff = t_total - max_lag
    if n_eff < 1:
        raise TooFewSamples(f"window of {t_total} rows cannot align lag {max_lag}")
    return np.column_stack(
        [samples[max_lag - lag : t_total - lag, var] for var, lag in nodes]
    )


def _validate_nodes(window: TimeWindow, x: Lagged, y: Lagged, z: Sequence[Lagged]) -> None:
    n = window.n_vars
    for var, lag in (x, y, *z):
        if not (0 <= var < n):
            raise ValueError(f"variable index {var} out of range for {n} variables")
        if lag < 0:
            raise ValueError("lags must be >= 0")
    if y[1] != 0:
        raise ValueError("the effect variable must be tested at lag 0")
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("tested variables cannot appear in the conditioning set")


def partial_correlation(
    window: TimeWindow,
    x: Lagged,
    y: Lagged,
    z: Sequence[Lagged] = (),
) -> CITestResult:
    """Partial correlation of x (lagged) and y (lag 0) given the lagged set z.

    With z empty this is the plain Pearson correlation. The p-value is
    2 * (1 - Phi(sqrt(n_eff - |z| - 3) * |atanh(r)|)) with r clamped to
    +/-(1 - 1e-10) so deterministic relationships keep a finite p.
    """
    z = tuple(z)
    _validate_nodes(window, x, y, z)
    nodes = (x, y, *z)
    cols = _aligned_columns(window.samples, nodes)
    n_eff = cols.shape[0]
    n_cond = len(z)
    if n_eff < n_cond + MIN_EXTRA_SAMPLES:
        raise TooFewSamples(
            f"{n_eff} aligned samples for {n_cond} conditions; need at least {n_cond + MIN_EXTRA_SAMPLES}"
        )

    xy = cols[:, :2]
    design = np.column_stack([np.ones(n_eff), cols[:, 2:]])
    beta, _, rank, sing = np.linalg.lstsq(design, xy, rcond=None)
    ridge = False
    cond = math.inf if sing[-1] == 0.0 else float(sing[0] / sing[-1])
    if rank < design.shape[1] or cond > CONDITION_LIMIT:
        ridge = True
        gram = design.T @ design + RIDGE_LAMBDA * np.eye(design.shape[1])
        try:
            beta = np.linalg.solve(gram, design.T @ xy)
        except np.linalg.LinAlgError as exc:
            raise SingularRegression(str(exc)) from exc
    resid = xy - design @ beta

    r = _residual_correlation(xy, resid)
    r_clamped = min(max(r, -1.0 + ATANH_CLAMP), 1.0 - ATANH_CLAMP)
    z_score = math.sqrt(n_eff - n_cond - 3) * abs(math.atanh(r_clamped))
    p = 2.0 * normal_sf(z_score)
    return CITestResult(
        statistic=float(np.clip(r, -1.0, 1.0)),
        p_value=min(p, 1.0),
        effective_n=n_eff,
        ridge_fallback=ridge,
    )


def _residual_correlation(xy: np.ndarray, resid: np.ndarray) -> float:
    a = resid[:, 0] - resid[:, 0].mean()
    b = resid[:, 1] - resid[:, 1].mean()
    for raw_col, res_col in ((xy[:, 0], a), (xy[:, 1], b)):
        centered = raw_col - raw_col.mean()
        raw_ss = float(centered @ centered)
        if raw_ss == 0.0 or float(res_col @ res_col) <= raw_ss * DEGENERATE_SS_FRACTION:
            # the tested variable is an exact function of the conditions: no
            # residual signal left, treat as conditionally independent
            return 0.0
    return float(a @ b) / math.sqrt(float(a @ a) * float(b @ b))
