"""Between-country correlation matrices from pairwise covariates.

The correlation between two countries' forecast errors is a linear function
of three time-invariant 0/1 covariates, with separate coefficient sets for
the regime where both previous TFRs are below the threshold ``kappa`` and
the regime where at least one is at or above it. Matrices built here can be
non-positive-semidefinite; repair is a separate stage (:mod:`tfrcast.psd`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .domain import CorrelationParams, CountryId, CovariateStore, PairCovariates
from .errors import DataValidationError
from .validation import as_square_matrix, check_symmetric


@dataclass(frozen=True)
class CorrelationMatrix:
    """A dense symmetric correlation matrix with a fixed country order."""

    countries: tuple[CountryId, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "countries", tuple(self.countries))
        arr = as_square_matrix(self.values, "correlation matrix").copy()
        if arr.shape[0] != len(self.countries):
            raise DataValidationError(
                f"matrix is {arr.shape[0]}x{arr.shape[0]} but {len(self.countries)} countries were given"
            )
        if len(set(self.countries)) != len(self.countries):
            raise DataValidationError("country order contains duplicates")
        check_symmetric(arr, 1e-12, "correlation matrix")
        if arr.size and float(np.max(np.abs(np.diag(arr) - 1.0))) > 1e-12:
            raise DataValidationError("correlation matrix diagonal must be 1")
        if arr.size and float(np.max(np.abs(arr))) > 1.0 + 1e-12:
            raise DataValidationError("correlation entries must lie in [-1, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return len(self.countries)

    def index_of(self, country: CountryId) -> int:
        try:
            return self.countries.index(country)
        except ValueError:
            raise KeyError(f"country {country} not in correlation matrix") from None

    def entry(self, a: CountryId, b: CountryId) -> float:
        return float(self.values[self.index_of(a), self.index_of(b)])

    def reordered(self, order: Sequence[CountryId]) -> "CorrelationMatrix":
        """Permute rows and columns consistently to the given country order."""
        idx = [self.index_of(c) for c in order]
        if len(idx) != self.n:
            raise DataValidationError("reordering must use exactly the matrix's countries")
        return CorrelationMatrix(tuple(order), self.values[np.ix_(idx, idx)])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CorrelationMatrix)
            and self.countries == other.countries
            and np.array_equal(self.values, other.values)
        )


def pair_correlation(cov: PairCovariates, regime: str, params: CorrelationParams) -> float:
    """Model correlation for one pair in the given regime ('low' or 'high')."""
    b0, b1, b2, b3 = params.beta(regime)
    rho = b0 + b1 * cov.contig + b2 * cov.comcol + b3 * cov.same_region
    if not (-1.0 < rho < 1.0):
        # Unreachable for validated params; kept as a hard guard.
        raise ValueError(f"implied correlation {rho} outside (-1, 1)")
    return rho


def build_correlation_matrix(
    prev_tfrs: Mapping[CountryId, float],
    covariates: CovariateStore,
    params: CorrelationParams,
    countries: Sequence[CountryId],
) -> CorrelationMatrix:
    """Assemble the full correlation matrix for the given country order.

    The regime of a pair is 'low' iff both previous-period TFRs are strictly
    below ``params.kappa`` (ties fall in the high regime). The result may be
    non-PSD; callers that simulate from it must repair it first.
    """
    order = tuple(countries)
    missing = [c for c in order if c not in prev_tfrs]
    if missing:
        raise DataValidationError(f"no previous-period TFR for: {', '.join(missing)}")
    n = len(order)
    below = [prev_tfrs[c] < params.kappa for c in order]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            regime = "low" if (below[i] and below[j]) else "high"
            rho = pair_correlation(covariates.get(order[i], order[j]), regime, params)
            out[i, j] = rho
            out[j, i] = rho
    return CorrelationMatrix(order, out)


def regime_correlation_matrices(
    covariates: CovariateStore,
    params: CorrelationParams,
    countries: Sequence[CountryId],
) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise correlation arrays for the all-low and all-high regimes.

    Projection mixes the two per path: an entry is taken from the low matrix
    when both countries are below the threshold. Returned as plain arrays
    because intermediate mixtures need not satisfy matrix invariants.
    """
    order = tuple(countries)
    n = len(order)
    low = np.eye(n)
    high = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            cov = covariates.get(order[i], order[j])
            low[i, j] = low[j, i] = pair_correlation(cov, "low", params)
            high[i, j] = high[j, i] = pair_correlation(cov, "high", params)
    return low, high
