"""scikit-learn style wrappers around the functional core.

These classes follow the estimator conventions — hyperparameters in
``__init__`` mirrored to same-named attributes, ``fit`` returning ``self``,
learned state in trailing-underscore attributes, ``get_params`` and
``set_params`` inherited from :class:`sklearn.base.BaseEstimator` — so the
pipeline composes with the wider ecosystem (cloning, grid search over
hyperparameters, pipelines of transformers).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .correlation import CorrelationMatrix, build_correlation_matrix
from .domain import (
    CorrelationParams,
    CovariateStore,
    DEFAULT_CORRELATION_PARAMS,
    PosteriorDraws,
    TFRPanel,
)
from .estimation import DEFAULT_MAX_ITER, kappa_grid_search
from .phase_model import mean_standardized_errors
from .psd import PSD_TOLERANCE, repair_matrix
from .simulate import DEFAULT_TFR_FLOOR, TrajectoryEnsemble, interval_summary, project


class CorrelationModelEstimator(BaseEstimator):
    """Fit the threshold and regime coefficients of the correlation model.

    Parameters
    ----------
    kappa_grid : sequence of float, optional
        Candidate thresholds; defaults to 0.5..9.0 in steps of 0.1.
    init : sequence of 8 floats, optional
        Optimizer start (low-regime then high-regime coefficients).
    max_iter : int
        Per-regime simplex iteration cap.
    restarts : int
        Restarts from the best vertex on nonconvergence.
    """

    def __init__(self, kappa_grid=None, init=None, max_iter=DEFAULT_MAX_ITER, restarts=1, threads=1):
        self.kappa_grid = kappa_grid
        self.init = init
        self.max_iter = max_iter
        self.restarts = restarts
        self.threads = threads

    def fit(self, panel: TFRPanel, draws: PosteriorDraws, covariates: CovariateStore):
        errors = mean_standardized_errors(panel, draws)
        fit = kappa_grid_search(
            errors,
            panel,
            covariates,
            grid=self.kappa_grid,
            init=self.init,
            max_iter=self.max_iter,
            restarts=self.restarts,
            threads=self.threads,
        )
        self.errors_ = errors
        self.fit_ = fit
        self.params_ = fit.params
        self.loglik_ = fit.loglik
        self.kappa_profile_ = fit.kappa_profile
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before using the estimator")

    def correlation_matrix(self, prev_tfrs, covariates: CovariateStore, countries) -> CorrelationMatrix:
        """Model correlation matrix for the fitted parameters (not repaired)."""
        self._check_fitted()
        return build_correlation_matrix(prev_tfrs, covariates, self.params_, countries)


class PsdRepairer(TransformerMixin, BaseEstimator):
    """Stateless transformer projecting correlation matrices to valid ones.

    ``transform`` accepts a single matrix (:class:`CorrelationMatrix` or
    square array) or a list of them, returning the same shape of thing.
    """

    def __init__(self, psd_tol: float = PSD_TOLERANCE):
        self.psd_tol = psd_tol

    def fit(self, X=None, y=None):
        return self

    def _repair_one(self, matrix):
        if isinstance(matrix, CorrelationMatrix):
            fixed, _ = repair_matrix(matrix.values, psd_tol=self.psd_tol)
            return CorrelationMatrix(matrix.countries, fixed)
        fixed, _ = repair_matrix(np.asarray(matrix, dtype=float), psd_tol=self.psd_tol)
        return fixed

    def transform(self, X):
        if isinstance(X, (list, tuple)):
            return type(X)(self._repair_one(m) for m in X)
        return self._repair_one(X)


class TFRProjector(BaseEstimator):
    """Joint trajectory sampler with point and interval predictions.

    ``fit`` stores the launch panel, posterior draws, and covariates;
    ``sample`` regenerates the (deterministic, seeded) ensemble on demand,
    ``predict`` returns per-country median paths, and ``predict_interval``
    equal-tailed intervals keyed like the coverage scorer expects.
    """

    def __init__(
        self,
        params: CorrelationParams | None = None,
        horizon: int = 4,
        n_trajectories: int = 1000,
        seed: int = 0,
        mode: str = "correlated",
        tfr_floor: float = DEFAULT_TFR_FLOOR,
        strict: bool = False,
    ):
        self.params = params
        self.horizon = horizon
        self.n_trajectories = n_trajectories
        self.seed = seed
        self.mode = mode
        self.tfr_floor = tfr_floor
        self.strict = strict

    def fit(self, panel: TFRPanel, draws: PosteriorDraws, covariates: CovariateStore):
        self.panel_ = panel
        self.draws_ = draws
        self.covariates_ = covariates
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "panel_"):
            raise NotFittedError("call fit before sampling or predicting")

    def sample(self) -> TrajectoryEnsemble:
        self._check_fitted()
        return project(
            self.panel_,
            self.draws_,
            self.params if self.params is not None else DEFAULT_CORRELATION_PARAMS,
            self.covariates_,
            horizon=self.horizon,
            n_trajectories=self.n_trajectories,
            seed=self.seed,
            mode=self.mode,
            tfr_floor=self.tfr_floor,
            strict=self.strict,
        )

    def predict(self) -> np.ndarray:
        """Median TFR per (country, period), shape (n_countries, horizon + 1)."""
        ensemble = self.sample()
        self.countries_ = ensemble.countries
        self.periods_ = ensemble.periods
        return np.quantile(ensemble.values, 0.5, axis=0, method="linear")

    def predict_interval(self, levels=(0.8,)) -> dict[tuple[str, int, float], tuple[float, float]]:
        """Equal-tailed intervals keyed by (country, period, level)."""
        ensemble = self.sample()
        out: dict[tuple[str, int, float], tuple[float, float]] = {}
        for country in ensemble.countries:
            for period in ensemble.periods:
                for level, lo, _, hi in interval_summary(ensemble.samples(country, period), levels):
                    out[(country, period, level)] = (lo, hi)
        return out
