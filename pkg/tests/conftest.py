"""Shared fixtures: small panels, covariates, and parameter draws."""
from __future__ import annotations

import pytest

from tfrcast import (
    ConstantSigma,
    CovariateStore,
    PairCovariates,
    Phase,
    PopulationWeights,
    PosteriorDraws,
    TFRPanel,
    TransitionParams,
)


@pytest.fixture
def basic_theta() -> TransitionParams:
    """Decline curve peaking near TFR 3 with a quarter-child spread."""
    return TransitionParams(d=0.5, deltas=(2.0, 1.5, 1.0, 1.0), sigma=ConstantSigma(0.25))


@pytest.fixture
def two_country_post_panel() -> TFRPanel:
    values = {
        ("AAA", 2005): 2.0,
        ("AAA", 2010): 2.0,
        ("BBB", 2005): 2.2,
        ("BBB", 2010): 2.2,
    }
    phases = {key: Phase.POST_TRANSITION for key in values}
    return TFRPanel(values, phases)


@pytest.fixture
def two_country_draws(basic_theta) -> PosteriorDraws:
    return PosteriorDraws({"AAA": (basic_theta,), "BBB": (basic_theta,)})


@pytest.fixture
def neighbour_covariates() -> CovariateStore:
    return CovariateStore({("AAA", "BBB"): PairCovariates(contig=1, comcol=0, same_region=1)})


@pytest.fixture
def lopsided_weights() -> PopulationWeights:
    return PopulationWeights("Pairton", {"AAA": 0.9, "BBB": 0.1})
