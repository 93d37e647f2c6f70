"""Core data types for the joint TFR forecasting pipeline.

Everything here is immutable after construction and safe to share across
threads. Countries are plain ISO-3166-alpha-3-style string codes and periods
are the calendar start year of a five-year interval (configurable stride).
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DataValidationError
from .validation import check_finite, check_indicator, check_positive

logger = logging.getLogger(__name__)

CountryId = str

#: Fixed interpolation knots (children per woman) for the piecewise-linear
#: transition-phase standard deviation specification.
SIGMA_KNOTS = (1.0, 2.5, 5.0, 9.0)


class Phase(enum.Enum):
    """Stage of a country's fertility transition."""

    PRE_TRANSITION = "pre_transition"
    TRANSITION = "transition"
    POST_TRANSITION = "post_transition"

    @property
    def rank(self) -> int:
        return _PHASE_RANK[self]

    @property
    def is_modeled(self) -> bool:
        """TFR evolution is only modeled during and after the transition."""
        return self is not Phase.PRE_TRANSITION

    @classmethod
    def parse(cls, text: str) -> "Phase":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise DataValidationError(f"unknown phase {text!r}; expected one of: {valid}") from None


_PHASE_RANK = {Phase.PRE_TRANSITION: 0, Phase.TRANSITION: 1, Phase.POST_TRANSITION: 2}


@dataclass(frozen=True)
class Diagnostic:
    """One panel-invariant violation found by :func:`validate_panel`."""

    rule: str
    country: CountryId | None
    period: int | None
    message: str

    def __str__(self) -> str:
        where = "/".join(str(x) for x in (self.country, self.period) if x is not None)
        return f"[{self.rule}] {where}: {self.message}" if where else f"[{self.rule}] {self.message}"


@dataclass(frozen=True)
class TFRPanel:
    """Observed or estimated TFR per (country, period) with phase labels.

    ``values`` maps (country, period_start) to TFR in children per woman and
    ``phases`` carries the phase label for the same keys. Phase labels are
    supplied by the input data, never inferred here.
    """

    values: Mapping[tuple[CountryId, int], float]
    phases: Mapping[tuple[CountryId, int], Phase]
    stride: int = 5

    def __post_init__(self) -> None:
        if self.stride <= 0:
            raise DataValidationError(f"stride must be positive, got {self.stride}")
        object.__setattr__(self, "values", dict(self.values))
        object.__setattr__(self, "phases", dict(self.phases))
        countries = tuple(sorted({c for c, _ in self.values}))
        periods = tuple(sorted({t for _, t in self.values}))
        if not countries:
            raise DataValidationError("panel is empty")
        object.__setattr__(self, "_countries", countries)
        object.__setattr__(self, "_periods", periods)

    @property
    def countries(self) -> tuple[CountryId, ...]:
        return self._countries  # type: ignore[attr-defined]

    @property
    def periods(self) -> tuple[int, ...]:
        return self._periods  # type: ignore[attr-defined]

    @property
    def last_period(self) -> int:
        return self.periods[-1]

    def has(self, country: CountryId, period: int) -> bool:
        return (country, period) in self.values

    def tfr(self, country: CountryId, period: int) -> float:
        try:
            return self.values[(country, period)]
        except KeyError:
            raise KeyError(f"no TFR for {country} at {period}") from None

    def phase(self, country: CountryId, period: int) -> Phase:
        try:
            return self.phases[(country, period)]
        except KeyError:
            raise KeyError(f"no phase label for {country} at {period}") from None

    def periods_for(self, country: CountryId) -> tuple[int, ...]:
        return tuple(t for t in self.periods if (country, t) in self.values)


def validate_panel(panel: TFRPanel) -> list[Diagnostic]:
    """Check every panel invariant; return one diagnostic per violation.

    Returns an empty list iff the panel is well formed. Never raises: this is
    the diagnostic entry point used by loaders and the CLI.
    """
    out: list[Diagnostic] = []
    stride = panel.stride

    for (country, period), tfr in sorted(panel.values.items()):
        if not math.isfinite(tfr):
            out.append(Diagnostic("tfr_finite", country, period, f"tfr = {tfr!r} is not finite"))
        elif tfr <= 0:
            out.append(Diagnostic("tfr_positive", country, period, f"tfr > 0 violated (tfr = {tfr!r})"))
        if (country, period) not in panel.phases:
            out.append(Diagnostic("phase_missing", country, period, "TFR value has no phase label"))

    for (country, period) in sorted(panel.phases):
        if (country, period) not in panel.values:
            out.append(Diagnostic("value_missing", country, period, "phase label has no TFR value"))

    for period in panel.periods:
        if period % stride != 0:
            out.append(
                Diagnostic("period_alignment", None, period, f"start year not a multiple of stride {stride}")
            )
    for prev, nxt in zip(panel.periods, panel.periods[1:]):
        if nxt - prev != stride:
            out.append(
                Diagnostic("panel_period_gap", None, nxt, f"gap in panel periods between {prev} and {nxt}")
            )

    for country in panel.countries:
        observed = panel.periods_for(country)
        for prev, nxt in zip(observed, observed[1:]):
            if nxt - prev != stride:
                out.append(
                    Diagnostic(
                        "country_period_gap", country, nxt, f"gap in observations between {prev} and {nxt}"
                    )
                )
        labeled = [(t, panel.phases[(country, t)]) for t in observed if (country, t) in panel.phases]
        for (t_prev, ph_prev), (t_next, ph_next) in zip(labeled, labeled[1:]):
            if ph_next.rank < ph_prev.rank:
                out.append(
                    Diagnostic(
                        "phase_order",
                        country,
                        t_next,
                        f"phase order violated: {ph_prev.value} at {t_prev} -> {ph_next.value} at {t_next}",
                    )
                )
    return out


@dataclass(frozen=True)
class PairCovariates:
    """Time-invariant 0/1 covariates for one unordered country pair."""

    contig: int = 0
    comcol: int = 0
    same_region: int = 0

    def __post_init__(self) -> None:
        check_indicator(self.contig, "contig")
        check_indicator(self.comcol, "comcol")
        check_indicator(self.same_region, "same_region")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.contig, self.comcol, self.same_region)


def pair_key(a: CountryId, b: CountryId) -> tuple[CountryId, CountryId]:
    """Canonical unordered key for a country pair."""
    return (a, b) if a <= b else (b, a)


class CovariateStore:
    """Symmetric lookup of pairwise covariates.

    Missing pairs resolve to (0, 0, 0) — the model's intercept-only "no
    relationship" case — with one logged warning per pair. Under
    ``strict=True`` a missing pair raises instead.
    """

    def __init__(
        self,
        table: Mapping[tuple[CountryId, CountryId], PairCovariates] | None = None,
        strict: bool = False,
    ) -> None:
        self._table: dict[tuple[CountryId, CountryId], PairCovariates] = {}
        self.strict = strict
        self._warned: set[tuple[CountryId, CountryId]] = set()
        for (a, b), cov in (table or {}).items():
            self.add(a, b, cov)

    def add(self, a: CountryId, b: CountryId, cov: PairCovariates) -> None:
        if a == b:
            raise DataValidationError(f"covariates for a country with itself are not meaningful: {a}")
        key = pair_key(a, b)
        existing = self._table.get(key)
        if existing is not None and existing != cov:
            raise DataValidationError(f"conflicting covariate rows for pair {key}")
        self._table[key] = cov

    def get(self, a: CountryId, b: CountryId) -> PairCovariates:
        key = pair_key(a, b)
        cov = self._table.get(key)
        if cov is None:
            if self.strict:
                raise DataValidationError(f"no covariate row for pair {key}")
            if key not in self._warned:
                self._warned.add(key)
                logger.warning("no covariate row for pair %s; defaulting to (0, 0, 0)", key)
            return PairCovariates()
        return cov

    def __contains__(self, key: tuple[CountryId, CountryId]) -> bool:
        return pair_key(*key) in self._table

    def __len__(self) -> int:
        return len(self._table)

    def items(self) -> Iterable[tuple[tuple[CountryId, CountryId], PairCovariates]]:
        return sorted(self._table.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CovariateStore) and self._table == other._table


_COMBOS = tuple((c, k, r) for c in (0, 1) for k in (0, 1) for r in (0, 1))


@dataclass(frozen=True)
class CorrelationParams:
    """Threshold plus regime-specific regression coefficients.

    ``beta_low`` applies when both countries' previous-period TFRs are below
    ``kappa``; ``beta_high`` when at least one is at or above it. Each 4-vector
    is (intercept, contig, comcol, same_region). Construction rejects any
    parameterization whose implied correlation leaves (−1, 1) for some 0/1
    covariate combination.
    """

    kappa: float
    beta_low: tuple[float, float, float, float]
    beta_high: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        check_positive(self.kappa, "kappa")
        object.__setattr__(self, "beta_low", tuple(float(v) for v in self.beta_low))
        object.__setattr__(self, "beta_high", tuple(float(v) for v in self.beta_high))
        for name, beta in (("beta_low", self.beta_low), ("beta_high", self.beta_high)):
            if len(beta) != 4:
                raise ValueError(f"{name} must have 4 coefficients, got {len(beta)}")
            for v in beta:
                check_finite(v, name)
            for combo in _COMBOS:
                rho = beta[0] + beta[1] * combo[0] + beta[2] * combo[1] + beta[3] * combo[2]
                if not (-1.0 < rho < 1.0):
                    raise ValueError(
                        f"{name} implies correlation {rho:.4f} outside (-1, 1) "
                        f"for covariates (contig, comcol, same_region) = {combo}"
                    )

    def beta(self, regime: str) -> tuple[float, float, float, float]:
        if regime == "low":
            return self.beta_low
        if regime == "high":
            return self.beta_high
        raise ValueError(f"regime must be 'low' or 'high', got {regime!r}")


#: Default parameter estimates shipped with the package (threshold of 5
#: children per woman; coefficients ordered intercept, contig, comcol,
#: same_region for the below-threshold and at/above-threshold regimes).
DEFAULT_CORRELATION_PARAMS = CorrelationParams(
    kappa=5.0,
    beta_low=(0.11, 0.26, 0.05, 0.09),
    beta_high=(0.05, 0.06, 0.00, 0.02),
)


@dataclass(frozen=True)
class ConstantSigma:
    """Constant transition-phase standard deviation."""

    value: float

    def __post_init__(self) -> None:
        check_positive(self.value, "sigma")

    def evaluate(self, f: float) -> float:
        return self.value

    def knot_values(self) -> tuple[float, float, float, float]:
        return (self.value,) * 4


@dataclass(frozen=True)
class PiecewiseSigma:
    """Piecewise-linear transition-phase standard deviation.

    ``values`` are the sigmas at the fixed knots ``SIGMA_KNOTS``; evaluation
    interpolates linearly between knots and extrapolates flat outside them,
    so positivity of the knot values guarantees positivity everywhere.
    """

    values: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(SIGMA_KNOTS):
            raise ValueError(f"expected {len(SIGMA_KNOTS)} knot values, got {len(self.values)}")
        for v in self.values:
            check_positive(v, "sigma knot value")

    def evaluate(self, f: float) -> float:
        knots = SIGMA_KNOTS
        if f <= knots[0]:
            return self.values[0]
        if f >= knots[-1]:
            return self.values[-1]
        for i in range(len(knots) - 1):
            if f <= knots[i + 1]:
                left, right = knots[i], knots[i + 1]
                w = (f - left) / (right - left)
                return (1.0 - w) * self.values[i] + w * self.values[i + 1]
        return self.values[-1]  # unreachable

    def knot_values(self) -> tuple[float, float, float, float]:
        return self.values


SigmaSpec = ConstantSigma | PiecewiseSigma


@dataclass(frozen=True)
class TransitionParams:
    """Country-specific decline-curve and noise parameters for one draw.

    ``d`` is the overall decline pace (maximum expected five-year decrement)
    and ``deltas`` are the four positive phase-width parameters of the double
    logistic decline curve. ``sigma`` specifies the transition-phase standard
    deviation as a function of the previous TFR.
    """

    d: float
    deltas: tuple[float, float, float, float]
    sigma: SigmaSpec

    def __post_init__(self) -> None:
        check_positive(self.d, "d")
        object.__setattr__(self, "deltas", tuple(float(v) for v in self.deltas))
        if len(self.deltas) != 4:
            raise ValueError(f"deltas must have 4 entries, got {len(self.deltas)}")
        for v in self.deltas:
            check_positive(v, "delta")


@dataclass(frozen=True)
class PosteriorDraws:
    """Per-country posterior draws of decline-curve parameters.

    Every country must carry the same number of draws K >= 1; projection and
    error standardization average or resample over them.
    """

    draws: Mapping[CountryId, tuple[TransitionParams, ...]]

    def __post_init__(self) -> None:
        clean = {c: tuple(ds) for c, ds in self.draws.items()}
        object.__setattr__(self, "draws", clean)
        if not clean:
            raise DataValidationError("no posterior draws supplied")
        sizes = {len(ds) for ds in clean.values()}
        if min(sizes) < 1:
            raise DataValidationError("every country needs at least one draw")
        if len(sizes) > 1:
            raise DataValidationError(f"draw counts differ across countries: {sorted(sizes)}")

    @property
    def n_draws(self) -> int:
        return len(next(iter(self.draws.values())))

    @property
    def countries(self) -> tuple[CountryId, ...]:
        return tuple(sorted(self.draws))

    def for_country(self, country: CountryId) -> tuple[TransitionParams, ...]:
        try:
            return self.draws[country]
        except KeyError:
            raise DataValidationError(f"no posterior draws for country {country}") from None


@dataclass(frozen=True)
class PopulationWeights:
    """Female-population shares of a region's countries, normalized to 1."""

    region: str
    weights: Mapping[CountryId, float]

    def __post_init__(self) -> None:
        clean = {c: float(w) for c, w in self.weights.items()}
        if not clean:
            raise DataValidationError(f"region {self.region!r} has no weights")
        for c, w in clean.items():
            if not math.isfinite(w) or w < 0:
                raise DataValidationError(f"weight for {c} in {self.region!r} must be finite and >= 0, got {w!r}")
        total = math.fsum(clean.values())
        if total <= 0:
            raise DataValidationError(f"weights for region {self.region!r} sum to {total}; cannot normalize")
        if abs(total - 1.0) > 1e-6:
            logger.warning("weights for region %r sum to %.9f; renormalizing", self.region, total)
        if abs(total - 1.0) > 1e-9:
            clean = {c: w / total for c, w in clean.items()}
        object.__setattr__(self, "weights", clean)

    @property
    def countries(self) -> tuple[CountryId, ...]:
        return tuple(sorted(self.weights))

    def share(self, country: CountryId) -> float:
        return self.weights[country]

    def as_vector(self, order: Sequence[CountryId]) -> list[float]:
        missing = [c for c in order if c not in self.weights]
        if missing:
            raise DataValidationError(f"region {self.region!r} has no weight for: {', '.join(missing)}")
        return [self.weights[c] for c in order]
