"""Shared fixtures: the measured enhancement chain and its bench parameters."""

import pytest

from nopacascade import (
    EprState,
    MeasurementContext,
    NopaParams,
    fit_kappa,
)

# Measured chain of correlation / anti-correlation variance pairs at the
# three stage boundaries (QNL = 2 scale).
CHAIN_STATES = (
    EprState(0.59, 13.6),
    EprState(0.38, 25.9),
    EprState(0.31, 34.2),
)

# Ring-cavity geometry of the enhancement stages: 10% coupler, 0.4%
# intra-cavity loss, 2 ns round trip.
RING_GAMMA1 = 0.1
RING_GAMMA2 = 0.004
RING_TAU = 2.0e-9

# Detection conditions: 94.7% efficiency, 10.5 mrad residual phase error,
# 2 MHz analysis frequency.
BENCH_ZETA = 0.947
BENCH_THETA = 0.0105
ANALYSIS_HZ = 2.0e6

# Input to the final stage expressed as squeezing parameters, and the level
# it is enhanced to there.
INPUT_R = 0.83
INPUT_R_PRIME = 0.45
ENHANCED_TARGET_DB = -8.3


@pytest.fixture(scope="session")
def bench_ctx():
    return MeasurementContext(
        zeta=BENCH_ZETA, theta=BENCH_THETA, omega_analysis=ANALYSIS_HZ
    )


@pytest.fixture(scope="session")
def ring_geometry():
    return NopaParams(gamma1=RING_GAMMA1, gamma2=RING_GAMMA2, kappa=0.0, tau=RING_TAU)


@pytest.fixture(scope="session")
def epr2_state():
    """Final-stage input reconstructed from its squeezing parameters."""
    from nopacascade import SqueezingParams, variances_from_squeezing

    return variances_from_squeezing(SqueezingParams(INPUT_R, INPUT_R_PRIME))


@pytest.fixture(scope="session")
def fitted_kappa(epr2_state, ring_geometry, bench_ctx):
    """Coupling fitted once so the final-stage input maps to -8.3 dB."""
    fit = fit_kappa(ENHANCED_TARGET_DB, epr2_state, ring_geometry, bench_ctx)
    assert fit.converged
    return fit.kappa_fit
