"""Interval coverage scoring and variance-factor analytics.

The independence factor (IF) is the sum of squared population shares: the
steady-state regional variance relative to the per-country variance when
forecast errors are independent. The dependence factor (DF) adds the
correlation cross terms; DF/IF is the multiplicative increase in regional
variance from modeling between-country correlation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .correlation import CorrelationMatrix, pair_correlation
from .domain import CorrelationParams, CovariateStore, PopulationWeights
from .errors import DataValidationError
from .psd import repair_matrix


@dataclass(frozen=True)
class CoverageResult:
    """Proportion of observed values inside their intervals, per level."""

    levels: tuple[float, ...]
    overall: Mapping[float, float]
    by_period: Mapping[int, Mapping[float, float]]
    n_observations: int
    period_counts: Mapping[int, int]


def coverage(
    observed: Mapping[tuple[str, int], float],
    intervals: Mapping[tuple[str, int, float], tuple[float, float]],
) -> CoverageResult:
    """Score observed values against equal-tailed intervals.

    ``observed`` maps (region, period) to the realized value; ``intervals``
    maps (region, period, level) to (lo, hi). Every observed key must have
    an interval at every level appearing anywhere in ``intervals``.
    """
    if not observed:
        raise DataValidationError("no observed values to score")
    levels = tuple(sorted({lvl for (_, _, lvl) in intervals}))
    if not levels:
        raise DataValidationError("no intervals supplied")
    hits: dict[float, int] = {lvl: 0 for lvl in levels}
    period_hits: dict[int, dict[float, int]] = {}
    period_counts: dict[int, int] = {}
    for (region, period), value in sorted(observed.items()):
        period_counts[period] = period_counts.get(period, 0) + 1
        per = period_hits.setdefault(period, {lvl: 0 for lvl in levels})
        for lvl in levels:
            key = (region, period, lvl)
            if key not in intervals:
                raise DataValidationError(f"missing interval for {key}")
            lo, hi = intervals[key]
            if lo <= value <= hi:
                hits[lvl] += 1
                per[lvl] += 1
    n = len(observed)
    overall = {lvl: hits[lvl] / n for lvl in levels}
    by_period = {
        period: {lvl: period_hits[period][lvl] / period_counts[period] for lvl in levels}
        for period in sorted(period_counts)
    }
    return CoverageResult(levels, overall, by_period, n, dict(sorted(period_counts.items())))


def independence_factor(weights: PopulationWeights) -> float:
    """Sum of squared population shares."""
    p = np.asarray(weights.as_vector(weights.countries))
    return float(np.sum(p * p))


def dependence_factor(weights: PopulationWeights, matrix: CorrelationMatrix) -> float:
    """Sum of squared shares plus twice the correlation-weighted cross shares.

    The matrix must cover exactly the region's countries; its own country
    order is used for alignment.
    """
    if set(matrix.countries) != set(weights.countries):
        raise DataValidationError(
            f"matrix countries {sorted(matrix.countries)} do not match "
            f"region {weights.region!r} countries {list(weights.countries)}"
        )
    p = np.asarray(weights.as_vector(matrix.countries))
    r = matrix.values
    cross = np.triu(np.outer(p, p) * r, k=1)
    return float(np.sum(p * p) + 2.0 * np.sum(cross))


def df_if_ratio(weights: PopulationWeights, matrix: CorrelationMatrix) -> float:
    """Dependence factor over independence factor."""
    return dependence_factor(weights, matrix) / independence_factor(weights)


@dataclass(frozen=True)
class RegionVarianceRow:
    """One region's variance-factor summary."""

    region: str
    df_if: float
    max_proportion: float
    n_countries: int
    repaired: bool


def steady_state_matrix(
    weights: PopulationWeights,
    covariates: CovariateStore,
    params: CorrelationParams,
) -> tuple[CorrelationMatrix, bool]:
    """Low-regime correlation matrix for a region, repaired only if needed.

    In the long run every country is post-transition with TFR near
    replacement, i.e. below the threshold, so all pairs sit in the low
    regime. Returns the matrix and whether a PSD repair was required.
    """
    order = weights.countries
    n = len(order)
    raw = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            rho = pair_correlation(covariates.get(order[i], order[j]), "low", params)
            raw[i, j] = raw[j, i] = rho
    fixed, info = repair_matrix(raw)
    return CorrelationMatrix(order, fixed), info.repaired


def variance_report(
    regions: Sequence[PopulationWeights],
    covariates: CovariateStore,
    params: CorrelationParams,
) -> list[RegionVarianceRow]:
    """DF/IF, largest share, and country count per region at steady state."""
    rows = []
    for weights in regions:
        matrix, repaired = steady_state_matrix(weights, covariates, params)
        rows.append(
            RegionVarianceRow(
                region=weights.region,
                df_if=df_if_ratio(weights, matrix),
                max_proportion=max(weights.weights.values()),
                n_countries=len(weights.countries),
                repaired=repaired,
            )
        )
    return rows
