"""Correlation-model parameter estimation by pairwise pseudo-likelihood.

The intractable joint likelihood of the standardized error vectors is
replaced by a product of bivariate normal likelihoods over country pairs
and periods, with each pair-period's correlation chosen by regime (both
previous TFRs below the threshold, or not) and covariate combination. For
a fixed threshold the two regimes share no parameters, so each 4-vector of
coefficients is maximized independently with a Nelder-Mead simplex; the
threshold itself is profiled over a grid.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .domain import CorrelationParams, CountryId, CovariateStore, DEFAULT_CORRELATION_PARAMS, TFRPanel
from .errors import InsufficientDataError
from .validation import check_finite

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

#: Design rows (1, contig, comcol, same_region) for combo index
#: 4*contig + 2*comcol + same_region.
_COMBO_DESIGN = np.array([[1.0, c, k, r] for c in (0.0, 1.0) for k in (0.0, 1.0) for r in (0.0, 1.0)])

DEFAULT_MAX_ITER = 5000
_XATOL = 1e-8  # simplex diameter tolerance
_FATOL = 1e-10  # function spread tolerance
_SIMPLEX_STEP = 0.05


def bivariate_normal_loglik(x: float, y: float, rho: float) -> float:
    """Log-density of (x, y) under a standard bivariate normal with correlation rho."""
    check_finite(x, "x")
    check_finite(y, "y")
    if not (-1.0 < rho < 1.0):
        raise ValueError(f"|rho| must be < 1, got {rho!r}")
    one_minus = 1.0 - rho * rho
    return -LOG_2PI - 0.5 * math.log(one_minus) - (x * x - 2.0 * rho * x * y + y * y) / (2.0 * one_minus)


@dataclass(frozen=True)
class _PairTerms:
    """All pair-period likelihood terms, flattened in canonical order."""

    x: np.ndarray
    y: np.ndarray
    prev_i: np.ndarray
    prev_j: np.ndarray
    combo: np.ndarray  # int index into _COMBO_DESIGN

    @property
    def size(self) -> int:
        return int(self.x.size)


def _build_pair_terms(
    errors: Mapping[tuple[CountryId, int], float],
    panel: TFRPanel,
    covariates: CovariateStore,
) -> _PairTerms:
    """Enumerate pair-period terms in sorted (period, country-pair) order.

    Iteration order is canonical — sorted countries and periods — so the
    likelihood is exactly invariant to the order in which inputs were given.
    Pairs lacking both errors in a period contribute nothing.
    """
    xs: list[float] = []
    ys: list[float] = []
    pis: list[float] = []
    pjs: list[float] = []
    combos: list[int] = []
    countries = panel.countries
    stride = panel.stride
    for period in panel.periods:
        with_error = [c for c in countries if (c, period) in errors]
        for a_idx in range(len(with_error)):
            for b_idx in range(a_idx + 1, len(with_error)):
                a, b = with_error[a_idx], with_error[b_idx]
                cov = covariates.get(a, b)
                xs.append(errors[(a, period)])
                ys.append(errors[(b, period)])
                pis.append(panel.tfr(a, period - stride))
                pjs.append(panel.tfr(b, period - stride))
                combos.append(4 * cov.contig + 2 * cov.comcol + cov.same_region)
    return _PairTerms(
        np.asarray(xs), np.asarray(ys), np.asarray(pis), np.asarray(pjs), np.asarray(combos, dtype=int)
    )


def _bucket_stats(terms: _PairTerms, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sufficient statistics (count, sum x^2+y^2, sum xy) per covariate combo."""
    combo = terms.combo[mask]
    counts = np.bincount(combo, minlength=8).astype(float)
    sq = terms.x[mask] ** 2 + terms.y[mask] ** 2
    cross = terms.x[mask] * terms.y[mask]
    sxx = np.bincount(combo, weights=sq, minlength=8)
    sxy = np.bincount(combo, weights=cross, minlength=8)
    return counts, sxx, sxy


def _regime_neg_loglik(beta: np.ndarray, counts: np.ndarray, sxx: np.ndarray, sxy: np.ndarray) -> float:
    """Negative log pseudo-likelihood of one regime from bucketed statistics.

    Any coefficient vector implying a correlation outside (-1, 1) for any of
    the eight covariate combinations is rejected with +inf so the optimizer
    never leaves the valid region.
    """
    rho = _COMBO_DESIGN @ beta
    if np.any(np.abs(rho) >= 1.0) or not np.all(np.isfinite(rho)):
        return math.inf
    one_minus = 1.0 - rho * rho
    ll = -counts * LOG_2PI - 0.5 * counts * np.log(one_minus) - (sxx - 2.0 * rho * sxy) / (2.0 * one_minus)
    return -float(np.sum(ll))


def _split_stats(terms: _PairTerms, kappa: float):
    low = (terms.prev_i < kappa) & (terms.prev_j < kappa)
    return _bucket_stats(terms, low), _bucket_stats(terms, ~low)


def pseudo_loglik(
    params: CorrelationParams,
    errors: Mapping[tuple[CountryId, int], float],
    panel: TFRPanel,
    covariates: CovariateStore,
) -> float:
    """Log pseudo-likelihood of the given parameters on observed errors.

    Sums the regime-selected bivariate normal log-likelihood over all periods
    and country pairs for which both standardized errors exist.
    """
    terms = _build_pair_terms(errors, panel, covariates)
    (low_stats, high_stats) = _split_stats(terms, params.kappa)
    neg = _regime_neg_loglik(np.asarray(params.beta_low), *low_stats) + _regime_neg_loglik(
        np.asarray(params.beta_high), *high_stats
    )
    return -neg


@dataclass(frozen=True)
class OptimizerDiagnostics:
    """Convergence record of one regime's simplex maximization."""

    iterations: int
    n_evaluations: int
    converged: bool
    restarts: int


@dataclass(frozen=True)
class PseudoLikelihoodFit:
    """Result of the threshold grid search."""

    params: CorrelationParams
    loglik: float
    kappa_profile: tuple[tuple[float, float], ...]
    diagnostics: Mapping[float, tuple[OptimizerDiagnostics, OptimizerDiagnostics]]


def _initial_simplex(init: np.ndarray) -> np.ndarray:
    simplex = np.tile(init, (init.size + 1, 1))
    for i in range(init.size):
        simplex[i + 1, i] += _SIMPLEX_STEP
    return simplex


def _maximize_regime(
    stats: tuple[np.ndarray, np.ndarray, np.ndarray],
    init: np.ndarray,
    max_iter: int,
    restarts: int,
) -> tuple[np.ndarray, float, OptimizerDiagnostics]:
    counts, sxx, sxy = stats
    if counts.sum() == 0:
        # Regime absent from the data: coefficients unidentified, keep init.
        return init.copy(), 0.0, OptimizerDiagnostics(0, 0, True, 0)

    def objective(beta: np.ndarray) -> float:
        return _regime_neg_loglik(beta, counts, sxx, sxy)

    x0 = init.copy()
    iterations = 0
    evaluations = 0
    used_restarts = 0
    best = None
    for attempt in range(restarts + 1):
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": _initial_simplex(x0),
                "xatol": _XATOL,
                "fatol": _FATOL,
                "maxiter": max_iter,
                "maxfev": 4 * max_iter,
            },
        )
        iterations += int(result.nit)
        evaluations += int(result.nfev)
        if best is None or result.fun < best.fun:
            best = result
        if result.success:
            break
        if attempt < restarts:
            used_restarts += 1
            x0 = np.asarray(best.x, dtype=float)
    assert best is not None
    diag = OptimizerDiagnostics(iterations, evaluations, bool(best.success), used_restarts)
    return np.asarray(best.x, dtype=float), -float(best.fun), diag


def _fit_for_kappa(
    terms: _PairTerms,
    kappa: float,
    init: np.ndarray,
    max_iter: int,
    restarts: int,
) -> tuple[np.ndarray, np.ndarray, float, tuple[OptimizerDiagnostics, OptimizerDiagnostics]]:
    low_stats, high_stats = _split_stats(terms, kappa)
    beta_low, ll_low, diag_low = _maximize_regime(low_stats, init[:4], max_iter, restarts)
    beta_high, ll_high, diag_high = _maximize_regime(high_stats, init[4:], max_iter, restarts)
    return beta_low, beta_high, ll_low + ll_high, (diag_low, diag_high)


def _default_init() -> np.ndarray:
    return np.asarray(DEFAULT_CORRELATION_PARAMS.beta_low + DEFAULT_CORRELATION_PARAMS.beta_high)


def maximize_given_kappa(
    kappa: float,
    errors: Mapping[tuple[CountryId, int], float],
    panel: TFRPanel,
    covariates: CovariateStore,
    init: Sequence[float] | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = 1,
) -> tuple[tuple[float, ...], tuple[float, ...], float, tuple[OptimizerDiagnostics, OptimizerDiagnostics]]:
    """Maximize both regimes' coefficients at a fixed threshold.

    The low- and high-regime terms share no parameters, so the two 4-vector
    maximizations run independently. Returns (beta_low, beta_high, loglik,
    diagnostics); nonconvergence within the iteration cap yields the best
    point found, flagged ``converged=False``, after one restart from it.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa!r}")
    terms = _build_pair_terms(errors, panel, covariates)
    if terms.size == 0:
        raise InsufficientDataError("no pair-period terms: need two countries with errors in a common period")
    init_arr = _default_init() if init is None else np.asarray(list(init), dtype=float)
    if init_arr.shape != (8,):
        raise ValueError(f"init must have 8 entries (two beta 4-vectors), got shape {init_arr.shape}")
    beta_low, beta_high, loglik, diags = _fit_for_kappa(terms, kappa, init_arr, max_iter, restarts)
    return tuple(beta_low), tuple(beta_high), loglik, diags


def default_kappa_grid() -> tuple[float, ...]:
    """Thresholds 0.5, 0.6, ..., 9.0 children per woman (86 values)."""
    return tuple(round(0.5 + 0.1 * i, 10) for i in range(86))


def kappa_grid_search(
    errors: Mapping[tuple[CountryId, int], float],
    panel: TFRPanel,
    covariates: CovariateStore,
    grid: Sequence[float] | None = None,
    init: Sequence[float] | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = 1,
    threads: int = 1,
) -> PseudoLikelihoodFit:
    """Profile the threshold over a grid and return the best overall fit.

    Ties in the profile break toward the smaller threshold. Grid points are
    independent, so they may be evaluated concurrently; results do not
    depend on scheduling.
    """
    kappas = tuple(default_kappa_grid() if grid is None else grid)
    if not kappas:
        raise ValueError("kappa grid must be non-empty")
    if any(k <= 0 for k in kappas):
        raise ValueError("kappa grid values must be > 0")
    terms = _build_pair_terms(errors, panel, covariates)
    if terms.size == 0:
        raise InsufficientDataError("no pair-period terms: need two countries with errors in a common period")
    init_arr = _default_init() if init is None else np.asarray(list(init), dtype=float)

    def run(kappa: float):
        return _fit_for_kappa(terms, kappa, init_arr, max_iter, restarts)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, kappas))
    else:
        results = [run(k) for k in kappas]

    profile: list[tuple[float, float]] = []
    diagnostics: dict[float, tuple[OptimizerDiagnostics, OptimizerDiagnostics]] = {}
    best_idx = 0
    for idx, (kappa, (beta_low, beta_high, loglik, diags)) in enumerate(zip(kappas, results)):
        profile.append((float(kappa), loglik))
        diagnostics[float(kappa)] = diags
        if loglik > profile[best_idx][1]:
            best_idx = idx
    best_kappa = float(kappas[best_idx])
    beta_low, beta_high, best_loglik, _ = results[best_idx]
    params = CorrelationParams(best_kappa, tuple(beta_low), tuple(beta_high))
    logger.info("threshold grid search: best kappa = %.2f (loglik %.4f)", best_kappa, best_loglik)
    return PseudoLikelihoodFit(params, best_loglik, tuple(profile), diagnostics)
