"""Shared fixture generators for the test suite."""
from __future__ import annotations

import numpy as np

from tfrcast import DEFAULT_CORRELATION_PARAMS, build_correlation_matrix, repair
from tfrcast.domain import (
    ConstantSigma,
    CovariateStore,
    PairCovariates,
    Phase,
    PosteriorDraws,
    TFRPanel,
    TransitionParams,
)
from tfrcast.phase_model import decline


_COV_CACHE = {
    (c, k, s): PairCovariates(c, k, s) for c in (0, 1) for k in (0, 1) for s in (0, 1)
}


def random_model_matrix(rng: np.random.Generator, max_size: int = 60, params=DEFAULT_CORRELATION_PARAMS):
    """Model correlation matrix with randomized clustered covariates.

    Mixes three structures: generic regional clustering (usually PSD),
    single contiguity hubs, and double hubs sharing many neighbours (which
    are reliably indefinite), over random below/above-threshold regimes.
    """
    style = rng.integers(0, 3)
    if style == 2:
        n_leaves = int(rng.integers(10, max(11, max_size - 1)))
        countries = ["HB0", "HB1"] + [f"L{i:03d}" for i in range(n_leaves)]
        cov = CovariateStore()
        for i, a in enumerate(countries):
            for j in range(i + 1, len(countries)):
                b = countries[j]
                hub_leaf = (a.startswith("HB")) != (b.startswith("HB"))
                cov.add(a, b, _COV_CACHE[(int(hub_leaf), 0, 0)])
        prev = {c: float(rng.uniform(1.5, 4.5)) for c in countries}
        return build_correlation_matrix(prev, cov, params, countries)

    n = int(rng.integers(2, max_size + 1))
    countries = [f"C{i:03d}" for i in range(n)]
    region_size = int(rng.integers(2, 9))
    hub = int(rng.integers(0, n)) if style == 1 else None
    cov = CovariateStore()
    for i in range(n):
        for j in range(i + 1, n):
            same = int(i // region_size == j // region_size)
            contig = int(same and (j - i == 1 or rng.random() < 0.3))
            if hub is not None and (i == hub or j == hub):
                contig = 1
            comcol = int(rng.random() < 0.08)
            cov.add(countries[i], countries[j], _COV_CACHE[(contig, comcol, same)])
    prev = {c: float(rng.uniform(1.0, 8.0)) for c in countries}
    return build_correlation_matrix(prev, cov, params, countries)


# ---------------------------------------------------------------------------
# Full-model recovery fixture: 40 countries in 8 regions of 5. Regions 0-1
# hold persistently low-TFR countries, 2-3 persistently high ones, and the
# mixed regions contribute countries that cross the threshold mid-window, so
# both regimes are populated throughout and the threshold is identified.
# ---------------------------------------------------------------------------

RECOVERY_N_COUNTRIES = 40
_PER_REGION = 5
_MIXED_SLOTS = ("low", "crosser", "high", "crosser", "crosser")
_THETA_FAST = TransitionParams(d=0.42, deltas=(3.0, 5.0, 1.0, 1.0), sigma=ConstantSigma(0.25))
_THETA_SLOW = TransitionParams(d=0.12, deltas=(3.0, 5.0, 1.0, 1.0), sigma=ConstantSigma(0.25))


def recovery_layout():
    countries = [f"C{i:02d}" for i in range(RECOVERY_N_COUNTRIES)]
    region = {c: i // _PER_REGION for i, c in enumerate(countries)}
    slot = {c: i % _PER_REGION for i, c in enumerate(countries)}
    kind = {}
    for c in countries:
        r = region[c]
        kind[c] = "low" if r in (0, 1) else "high" if r in (2, 3) else _MIXED_SLOTS[slot[c]]
    family = {c: (region[c] + 3 * slot[c]) % 8 for c in countries}
    cov = CovariateStore()
    for i, a in enumerate(countries):
        for j in range(i + 1, RECOVERY_N_COUNTRIES):
            b = countries[j]
            same = int(region[a] == region[b])
            contig = int(same and (abs(slot[a] - slot[b]) in (1, _PER_REGION - 1)))
            if not same and region[b] - region[a] == 1 and slot[a] == _PER_REGION - 1 and slot[b] == 0:
                contig = 1
            comcol = int(family[a] == family[b])
            cov.add(a, b, PairCovariates(contig, comcol, same))
    return countries, kind, cov


def simulate_recovery_panel(seed: int, params=DEFAULT_CORRELATION_PARAMS):
    """One joint draw of the full model over twelve five-year periods.

    Errors are sampled with numpy's multivariate normal (independent of the
    package's own sampler) from the repaired per-period model matrix, so the
    panel is an oracle draw of the data-generating process.
    """
    countries, kind, cov = recovery_layout()
    rng = np.random.default_rng(seed)
    periods = [1950 + 5 * i for i in range(12)]
    theta_of, f0 = {}, {}
    crosser_index = 0
    for c in countries:
        if kind[c] == "low":
            f0[c] = rng.uniform(2.9, 4.1)
            theta_of[c] = _THETA_SLOW
        elif kind[c] == "high":
            f0[c] = rng.uniform(7.8, 8.8)
            theta_of[c] = _THETA_SLOW
        else:
            f0[c] = 5.3 + (crosser_index % 6) * 0.55 + rng.uniform(0.0, 0.5)
            crosser_index += 1
            theta_of[c] = _THETA_FAST
    values, phases = {}, {}
    for c in countries:
        values[(c, periods[0])] = float(f0[c])
        phases[(c, periods[0])] = Phase.TRANSITION
    for t in periods[1:]:
        prev = {c: values[(c, t - 5)] for c in countries}
        model = build_correlation_matrix(prev, cov, params, countries)
        sampling = repair(model)
        eps = rng.multivariate_normal(np.zeros(len(countries)), sampling.values, method="eigh")
        for i, c in enumerate(countries):
            mean = prev[c] - decline(theta_of[c], prev[c])
            values[(c, t)] = max(mean + 0.25 * eps[i], 0.5)
            phases[(c, t)] = Phase.TRANSITION
    panel = TFRPanel(values, phases)
    draws = PosteriorDraws({c: (theta_of[c],) for c in countries})
    return panel, draws, cov
