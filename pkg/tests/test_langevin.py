import math

import numpy as np
import pytest

from nopacascade import (
    SIGN_AMPLIFIED,
    SIGN_DEAMPLIFIED,
    AboveThresholdError,
    MeasurementContext,
    ModelMode,
    NopaParams,
    SqueezingParams,
    anticorrelation_out,
    correlation_out,
    output_variance,
    transfer,
)

from conftest import RING_TAU


def random_cavity(rng, kappa_fraction=0.9):
    nopa = NopaParams(
        gamma1=rng.uniform(0.01, 0.8),
        gamma2=rng.uniform(0.0, 0.25),
        kappa=0.0,
        tau=RING_TAU,
    )
    return nopa.with_kappa(rng.uniform(0.0, kappa_fraction) * nopa.threshold)


class TestCoefficients:
    def test_lossless_cavity_is_perfect_mirror(self):
        nopa = NopaParams(gamma1=0.2, gamma2=0.0, kappa=0.0, tau=RING_TAU)
        for omega in (0.0, 1e6, 1e9):
            coeff = transfer(nopa, omega, SIGN_DEAMPLIFIED)
            assert coeff.refl_sq == pytest.approx(1.0, abs=1e-15)
            assert coeff.loss_sq == 0.0

    def test_passive_unitarity(self):
        rng = np.random.default_rng(101)
        for _ in range(500):
            nopa = NopaParams(
                gamma1=rng.uniform(0.01, 1.0),
                gamma2=rng.uniform(0.0, 0.5),
                kappa=0.0,
                tau=RING_TAU,
            )
            omega = rng.uniform(0.0, 1e9)
            for sign in (SIGN_DEAMPLIFIED, SIGN_AMPLIFIED):
                coeff = transfer(nopa, omega, sign)
                assert coeff.refl_sq + coeff.loss_sq == pytest.approx(1.0, abs=1e-14)

    def test_high_frequency_transparency(self):
        rng = np.random.default_rng(103)
        for _ in range(100):
            nopa = random_cavity(rng)
            omega = 120.0 * (nopa.threshold + nopa.kappa) / nopa.tau
            coeff = transfer(nopa, omega, SIGN_DEAMPLIFIED)
            assert coeff.refl_sq > 0.999
            assert coeff.loss_sq < 1e-3

    def test_amplified_branch_reflects_more_on_resonance(self):
        rng = np.random.default_rng(107)
        for _ in range(100):
            nopa = random_cavity(rng)
            if nopa.kappa == 0.0:
                continue
            amp = transfer(nopa, 0.0, SIGN_AMPLIFIED).refl_sq
            deamp = transfer(nopa, 0.0, SIGN_DEAMPLIFIED).refl_sq
            assert amp >= deamp

    def test_above_threshold_rejected(self):
        nopa = NopaParams(0.1, 0.004, 0.104, RING_TAU)
        with pytest.raises(AboveThresholdError):
            transfer(nopa, 0.0, SIGN_DEAMPLIFIED)

    def test_bad_sign_rejected(self):
        nopa = NopaParams(0.1, 0.004, 0.05, RING_TAU)
        with pytest.raises(ValueError):
            transfer(nopa, 0.0, 2)


class TestOracleEquivalence:
    def test_vacuum_preserved(self):
        nopa = NopaParams(0.1, 0.02, 0.0, RING_TAU)
        assert output_variance(2.0, nopa, 1e7, SIGN_DEAMPLIFIED) == pytest.approx(
            2.0, abs=1e-14)

    def test_deamplified_term_matches_transfer_bracket(self):
        # 2*refl_sq*exp(-2r) + 2*loss_sq reproduces the de-amplified bracket
        # of the stage formula at perfect detection and zero phase error.
        rng = np.random.default_rng(109)
        for _ in range(1000):
            nopa = random_cavity(rng)
            omega = rng.uniform(0.0, 1e8) * 2.0 * math.pi
            r = rng.uniform(0.0, 1.5)
            coeff = transfer(nopa, omega, SIGN_DEAMPLIFIED)
            lhs = 2.0 * coeff.refl_sq * math.exp(-2.0 * r) + 2.0 * coeff.loss_sq
            ctx = MeasurementContext(zeta=1.0, theta=0.0,
                                     omega_analysis=omega / (2.0 * math.pi))
            rhs = correlation_out(SqueezingParams(r, 0.3), nopa, ctx,
                                  ModelMode.PHYSICAL)
            assert abs(lhs - rhs) < 1e-10

    def test_matches_correlation_and_anticorrelation(self):
        rng = np.random.default_rng(113)
        for _ in range(1000):
            nopa = random_cavity(rng)
            freq = rng.uniform(0.0, 1e8)
            omega = 2.0 * math.pi * freq
            r = rng.uniform(0.0, 1.5)
            rp = rng.uniform(0.0, 0.8)
            ctx = MeasurementContext(zeta=1.0, theta=0.0, omega_analysis=freq)
            params = SqueezingParams(r, rp)
            v_corr_in = 2.0 * math.exp(-2.0 * r)
            v_anti_in = 2.0 * math.exp(2.0 * r + 2.0 * rp)
            assert abs(
                output_variance(v_corr_in, nopa, omega, SIGN_DEAMPLIFIED)
                - correlation_out(params, nopa, ctx)
            ) < 1e-10
            assert abs(
                output_variance(v_anti_in, nopa, omega, SIGN_AMPLIFIED)
                - anticorrelation_out(params, nopa, ctx)
            ) < 1e-10

    def test_rejects_nonpositive_input(self):
        nopa = NopaParams(0.1, 0.004, 0.05, RING_TAU)
        with pytest.raises(ValueError):
            output_variance(0.0, nopa, 0.0, SIGN_DEAMPLIFIED)
