"""Country-level TFR evolution: conditional means, spreads, and errors.

During the fertility transition the expected TFR declines by a double
logistic function of the previous level; after the transition it follows a
mean-reverting AR(1) around replacement level. One-period-ahead forecast
errors standardized by the model's conditional spread are the raw material
for the between-country correlation analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import CountryId, Phase, PosteriorDraws, TFRPanel, TransitionParams
from .errors import UnsupportedPhaseError
from .validation import check_positive

#: Logistic rate scale: a ramp of width delta covers 10%..90% of its range.
_RATE_SCALE = 2.0 * math.log(9.0)


@dataclass(frozen=True)
class PostTransitionConstants:
    """Fixed constants of the post-transition AR(1) recursion."""

    target: float = 2.1
    ar_coef: float = 0.9
    s: float = 0.2

    def __post_init__(self) -> None:
        if not abs(self.ar_coef) < 1:
            raise ValueError(f"|ar_coef| must be < 1 for mean reversion, got {self.ar_coef}")
        check_positive(self.s, "s")
        check_positive(self.target, "target")


DEFAULT_CONSTANTS = PostTransitionConstants()


def logistic_ramps(theta: TransitionParams) -> tuple[float, float, float, float]:
    """Derive (lower midpoint, lower rate, upper midpoint, upper rate).

    Midpoints are cumulative phase widths: the decline ramps up around
    ``delta4 + delta3/2`` and back down around ``delta2 + delta3 + delta4 +
    delta1/2``; each ramp's rate spans its width parameter.
    """
    d1, d2, d3, d4 = theta.deltas
    lo_mid = d4 + 0.5 * d3
    hi_mid = d2 + d3 + d4 + 0.5 * d1
    return lo_mid, _RATE_SCALE / d3, hi_mid, _RATE_SCALE / d1


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def decline(theta: TransitionParams, f_prev: float) -> float:
    """Expected five-year TFR decrement at the previous level ``f_prev``.

    The curve is a difference of two logistic ramps positioned by cumulative
    phase widths: near zero at very low and very high TFR, close to ``d`` in
    between. Negative tails are clamped so the decrement is never negative.
    """
    if not (math.isfinite(f_prev) and f_prev > 0):
        raise ValueError(f"f_prev must be a positive finite TFR, got {f_prev!r}")
    lo_mid, lo_rate, hi_mid, hi_rate = logistic_ramps(theta)
    raw = theta.d * (_logistic(lo_rate * (f_prev - lo_mid)) - _logistic(hi_rate * (f_prev - hi_mid)))
    return max(0.0, raw)


def conditional_mean(
    f_prev: float,
    phase: Phase,
    theta: TransitionParams | None = None,
    consts: PostTransitionConstants = DEFAULT_CONSTANTS,
) -> float:
    """One-period-ahead expected TFR given the previous level and phase."""
    if phase is Phase.POST_TRANSITION:
        return consts.target + consts.ar_coef * (f_prev - consts.target)
    if phase is Phase.TRANSITION:
        if theta is None:
            raise ValueError("transition phase requires decline parameters")
        return f_prev - decline(theta, f_prev)
    raise UnsupportedPhaseError("TFR is not modeled before the fertility transition")


def conditional_sd(
    f_prev: float,
    phase: Phase,
    theta: TransitionParams | None = None,
    consts: PostTransitionConstants = DEFAULT_CONSTANTS,
) -> float:
    """One-period-ahead standard deviation given the previous level and phase."""
    if phase is Phase.POST_TRANSITION:
        return consts.s
    if phase is Phase.TRANSITION:
        if theta is None:
            raise ValueError("transition phase requires a sigma specification")
        return theta.sigma.evaluate(f_prev)
    raise UnsupportedPhaseError("TFR is not modeled before the fertility transition")


def standardized_error(
    f_obs: float,
    f_prev: float,
    phase: Phase,
    theta: TransitionParams | None = None,
    consts: PostTransitionConstants = DEFAULT_CONSTANTS,
) -> float:
    """Observed minus expected TFR, in units of the conditional spread."""
    mean = conditional_mean(f_prev, phase, theta, consts)
    sd = conditional_sd(f_prev, phase, theta, consts)
    return (f_obs - mean) / sd


def mean_standardized_errors(
    panel: TFRPanel,
    draws: PosteriorDraws,
    consts: PostTransitionConstants = DEFAULT_CONSTANTS,
) -> dict[tuple[CountryId, int], float]:
    """Average the standardized error over posterior draws, per (country, period).

    An error exists for (c, t) when the phase at t is modeled (transition or
    post-transition) and the panel holds an observation at the previous
    period; pre-transition periods are silently excluded. Draws are reduced
    in a fixed order so results are reproducible.
    """
    out: dict[tuple[CountryId, int], float] = {}
    stride = panel.stride
    for country in panel.countries:
        for period in panel.periods_for(country):
            if not panel.phase(country, period).is_modeled:
                continue
            if not panel.has(country, period - stride):
                continue
            f_obs = panel.tfr(country, period)
            f_prev = panel.tfr(country, period - stride)
            phase = panel.phase(country, period)
            thetas = draws.for_country(country)
            total = math.fsum(
                standardized_error(f_obs, f_prev, phase, theta, consts) for theta in thetas
            )
            out[(country, period)] = total / len(thetas)
    return out
