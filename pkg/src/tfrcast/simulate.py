"""Joint trajectory projection and Monte Carlo prediction intervals.

Each trajectory draws one posterior parameter sample per country, then
evolves all countries forward jointly: per period the between-country
correlation matrix is built from the trajectory's own previous TFRs,
repaired to PSD, and used to draw correlated errors through its symmetric
square root (valid for singular matrices). Matrix factors are cached by
regime pattern, so the per-period cost is dominated by the draws.

All randomness flows from a single seed through a counter-based Philox
stream; equal inputs and seed give a bit-identical ensemble, and the
independent and correlated modes consume the stream identically so their
marginals pair up draw for draw.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .correlation import CorrelationMatrix, regime_correlation_matrices
from .domain import (
    CorrelationParams,
    CountryId,
    CovariateStore,
    Phase,
    PopulationWeights,
    PosteriorDraws,
    SIGMA_KNOTS,
    TFRPanel,
)
from .errors import DataValidationError
from .phase_model import DEFAULT_CONSTANTS, PostTransitionConstants, logistic_ramps
from .psd import repair_matrix, symmetric_sqrt
from .validation import check_probability_level

logger = logging.getLogger(__name__)

MODES = ("independent", "correlated")
DEFAULT_TFR_FLOOR = 0.5


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Simulated joint TFR futures; axis order (trajectory, country, period).

    The first period slice holds the launch values, so ``values`` has
    ``horizon + 1`` period layers.
    """

    values: np.ndarray
    countries: tuple[CountryId, ...]
    periods: tuple[int, ...]
    seed: int | None = None
    mode: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "periods", tuple(self.periods))
        if arr.ndim != 3:
            raise DataValidationError(f"ensemble values must be 3-D, got shape {arr.shape}")
        if arr.shape[1] != len(self.countries) or arr.shape[2] != len(self.periods):
            raise DataValidationError(
                f"ensemble shape {arr.shape} does not match {len(self.countries)} countries "
                f"x {len(self.periods)} periods"
            )
        if arr.size and not np.all(arr > 0):
            raise DataValidationError("ensemble TFR values must be positive")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_trajectories(self) -> int:
        return int(self.values.shape[0])

    @property
    def horizon(self) -> int:
        return len(self.periods) - 1

    def country_index(self, country: CountryId) -> int:
        try:
            return self.countries.index(country)
        except ValueError:
            raise DataValidationError(f"country {country} not in ensemble") from None

    def period_index(self, period: int) -> int:
        try:
            return self.periods.index(period)
        except ValueError:
            raise DataValidationError(f"period {period} not in ensemble") from None

    def samples(self, country: CountryId, period: int) -> np.ndarray:
        return self.values[:, self.country_index(country), self.period_index(period)]


def sample_joint_errors(matrix, sigmas, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from N(0, diag(sigma) R diag(sigma)) via the symmetric square root.

    ``matrix`` may be a :class:`CorrelationMatrix` or a plain PSD array;
    singular (repaired) matrices are fine. Returns one draw of shape (n,)
    when ``size`` is None, else ``size`` draws of shape (size, n).
    """
    arr = matrix.values if isinstance(matrix, CorrelationMatrix) else np.asarray(matrix, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    if sig.ndim != 1 or sig.size != arr.shape[0]:
        raise DataValidationError(f"sigma vector of size {sig.size} does not match {arr.shape[0]} countries")
    if not np.all(np.isfinite(sig)) or np.any(sig <= 0):
        raise DataValidationError("sigmas must be finite and > 0")
    root = symmetric_sqrt(arr)
    z = rng.standard_normal(arr.shape[0] if size is None else (size, arr.shape[0]))
    return sig * (z @ root)


def _decline_array(f, d, lo_mid, lo_rate, hi_mid, hi_rate):
    """Vectorized decline curve; mirrors :func:`tfrcast.phase_model.decline`."""
    raw = d * (expit(lo_rate * (f - lo_mid)) - expit(hi_rate * (f - hi_mid)))
    return np.maximum(raw, 0.0)


def _sigma_from_knots(f: np.ndarray, knot_values: np.ndarray) -> np.ndarray:
    """Piecewise-linear sigma evaluation with flat extrapolation.

    ``knot_values`` has shape (..., 4) aligned with ``f``'s shape (...).
    """
    knots = np.asarray(SIGMA_KNOTS)
    seg = np.clip(np.searchsorted(knots, f, side="left"), 1, len(knots) - 1)
    left = knots[seg - 1]
    right = knots[seg]
    w = np.clip((f - left) / (right - left), 0.0, 1.0)
    v_left = np.take_along_axis(knot_values, (seg - 1)[..., None], axis=-1)[..., 0]
    v_right = np.take_along_axis(knot_values, seg[..., None], axis=-1)[..., 0]
    return (1.0 - w) * v_left + w * v_right


class _FactorCache:
    """Symmetric square roots of repaired correlation matrices per regime pattern."""

    def __init__(self, low: np.ndarray, high: np.ndarray) -> None:
        self._low = low
        self._high = high
        self._store: dict[bytes, np.ndarray] = {}

    def factor(self, below: np.ndarray) -> np.ndarray:
        key = below.tobytes()
        root = self._store.get(key)
        if root is None:
            both = np.outer(below, below)
            r = np.where(both, self._low, self._high)
            np.fill_diagonal(r, 1.0)
            repaired, _ = repair_matrix(r)
            root = symmetric_sqrt(repaired)
            self._store[key] = root
        return root


def _launch_state(panel: TFRPanel, strict: bool) -> tuple[list[CountryId], np.ndarray, np.ndarray]:
    launch = panel.last_period
    keep: list[CountryId] = []
    f0: list[float] = []
    post0: list[bool] = []
    for country in panel.countries:
        if not panel.has(country, launch) or (country, launch) not in panel.phases:
            msg = f"country {country} has no TFR or phase at launch period {launch}"
            if strict:
                raise DataValidationError(msg)
            logger.warning("%s; excluding from projection", msg)
            continue
        phase = panel.phase(country, launch)
        if not phase.is_modeled:
            msg = f"country {country} is pre-transition at launch period {launch}"
            if strict:
                raise DataValidationError(msg)
            logger.warning("%s; excluding from projection", msg)
            continue
        keep.append(country)
        f0.append(panel.tfr(country, launch))
        post0.append(phase is Phase.POST_TRANSITION)
    if not keep:
        raise DataValidationError(f"no projectable countries at launch period {launch}")
    return keep, np.asarray(f0), np.asarray(post0, dtype=bool)


def project(
    panel: TFRPanel,
    draws: PosteriorDraws,
    params: CorrelationParams,
    covariates: CovariateStore,
    horizon: int,
    n_trajectories: int,
    seed: int,
    mode: str = "correlated",
    consts: PostTransitionConstants = DEFAULT_CONSTANTS,
    tfr_floor: float = DEFAULT_TFR_FLOOR,
    post_entry_tfr: float | None = None,
    post_entry_decrement: float = 0.01,
    strict: bool = False,
) -> TrajectoryEnsemble:
    """Simulate joint TFR trajectories from the panel's last period.

    One parameter draw per country is resampled per trajectory and held
    fixed across its periods. The regime of each country pair is decided by
    the trajectory's own previous simulated TFR. A transition-phase path
    enters the post-transition phase in the first period where its TFR falls
    below ``post_entry_tfr`` (default: the AR target) with an expected
    decrement below ``post_entry_decrement``. Sampled values are floored at
    ``tfr_floor`` children.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if n_trajectories < 1:
        raise ValueError(f"n_trajectories must be >= 1, got {n_trajectories}")
    entry_tfr = consts.target if post_entry_tfr is None else post_entry_tfr

    countries, f0, post0 = _launch_state(panel, strict)
    n_countries = len(countries)
    n_draws = draws.n_draws

    d_arr = np.empty((n_countries, n_draws))
    lo_mid = np.empty_like(d_arr)
    lo_rate = np.empty_like(d_arr)
    hi_mid = np.empty_like(d_arr)
    hi_rate = np.empty_like(d_arr)
    sig_knots = np.empty((n_countries, n_draws, len(SIGMA_KNOTS)))
    for ci, country in enumerate(countries):
        for ki, theta in enumerate(draws.for_country(country)):
            d_arr[ci, ki] = theta.d
            lo_mid[ci, ki], lo_rate[ci, ki], hi_mid[ci, ki], hi_rate[ci, ki] = logistic_ramps(theta)
            sig_knots[ci, ki] = theta.sigma.knot_values()

    rng = np.random.Generator(np.random.Philox(seed))
    pick = rng.integers(0, n_draws, size=(n_trajectories, n_countries))
    cols = np.arange(n_countries)
    sel = (cols, pick)
    d_sel = d_arr[sel]
    lo_mid_sel = lo_mid[sel]
    lo_rate_sel = lo_rate[sel]
    hi_mid_sel = hi_mid[sel]
    hi_rate_sel = hi_rate[sel]
    sig_sel = sig_knots[cols, pick]

    cache: _FactorCache | None = None
    if mode == "correlated":
        low_mat, high_mat = regime_correlation_matrices(covariates, params, countries)
        cache = _FactorCache(low_mat, high_mat)

    values = np.empty((n_trajectories, n_countries, horizon + 1))
    f = np.tile(f0, (n_trajectories, 1))
    post = np.tile(post0, (n_trajectories, 1))
    values[:, :, 0] = f

    for step in range(1, horizon + 1):
        z = rng.standard_normal((n_trajectories, n_countries))
        decl = _decline_array(f, d_sel, lo_mid_sel, lo_rate_sel, hi_mid_sel, hi_rate_sel)
        mean = np.where(post, consts.target + consts.ar_coef * (f - consts.target), f - decl)
        sigma = np.where(post, consts.s, _sigma_from_knots(f, sig_sel))
        if cache is None:
            eps = sigma * z
        else:
            below = f < params.kappa
            patterns, inverse = np.unique(below, axis=0, return_inverse=True)
            inverse = np.asarray(inverse).reshape(-1)  # 1-D across numpy versions
            eps = np.empty_like(z)
            for g in range(patterns.shape[0]):
                rows = inverse == g
                eps[rows] = (z[rows] @ cache.factor(patterns[g])) * sigma[rows]
        f_new = mean + eps
        np.maximum(f_new, tfr_floor, out=f_new)
        entering = (
            (~post)
            & (f_new < entry_tfr)
            & (_decline_array(f_new, d_sel, lo_mid_sel, lo_rate_sel, hi_mid_sel, hi_rate_sel) < post_entry_decrement)
        )
        post |= entering
        f = f_new
        values[:, :, step] = f

    periods = tuple(panel.last_period + panel.stride * k for k in range(horizon + 1))
    return TrajectoryEnsemble(values, tuple(countries), periods, seed=seed, mode=mode)


def regional_aggregate(ensemble: TrajectoryEnsemble, weights: PopulationWeights) -> np.ndarray:
    """Population-weighted regional TFR per trajectory and period.

    Returns an array of shape (n_trajectories, n_periods) aligned with
    ``ensemble.periods``. Every weighted country must be in the ensemble.
    """
    order = weights.countries
    idx = [ensemble.country_index(c) for c in order]
    p = np.asarray(weights.as_vector(order))
    return np.einsum("tcp,c->tp", ensemble.values[:, idx, :], p)


def prediction_interval(samples, level: float) -> tuple[float, float]:
    """Equal-tailed empirical interval by linear order-statistic interpolation."""
    check_probability_level(level)
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"need at least 2 samples in a 1-D array, got shape {arr.shape}")
    lo_q = (1.0 - level) / 2.0
    hi_q = 1.0 - lo_q
    lo, hi = np.quantile(arr, [lo_q, hi_q], method="linear")
    return float(lo), float(hi)


def interval_summary(samples: np.ndarray, levels) -> list[tuple[float, float, float, float]]:
    """Rows (level, lo, median, hi) for one sample vector."""
    med = float(np.quantile(np.asarray(samples, dtype=float), 0.5, method="linear"))
    out = []
    for level in levels:
        lo, hi = prediction_interval(samples, level)
        out.append((float(level), lo, med, hi))
    return out
