import math

import numpy as np
import pytest

from nopacascade import (
    EprState,
    SqueezingParams,
    UncertaintyViolationError,
    db_to_variance,
    duan_sum,
    squeezing_from_variances,
    variance_to_db,
    variances_from_squeezing,
)


class TestDecibelConversions:
    def test_qnl_is_zero_db(self):
        assert variance_to_db(2.0) == pytest.approx(0.0, abs=1e-15)
        assert db_to_variance(0.0) == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize(
        "variance,db",
        [(0.59, -5.3), (0.38, -7.2), (0.31, -8.1), (13.6, 8.3), (25.9, 11.1), (34.2, 12.3)],
    )
    def test_measured_levels(self, variance, db):
        assert variance_to_db(variance) == pytest.approx(db, abs=0.05)

    @pytest.mark.parametrize("db,variance", [(-7.2, 0.381), (-8.1, 0.310)])
    def test_db_to_variance_levels(self, db, variance):
        assert db_to_variance(db) == pytest.approx(variance, abs=1e-3)

    def test_round_trip(self):
        for v in np.logspace(-6, 6, 121):
            back = db_to_variance(variance_to_db(v))
            assert back == pytest.approx(v, rel=1e-10)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            variance_to_db(0.0)
        with pytest.raises(ValueError):
            variance_to_db(-1.0)


class TestSqueezingInversion:
    def test_measured_pair(self):
        params = squeezing_from_variances(EprState(0.38, 25.9))
        assert params.r == pytest.approx(0.830, abs=5e-3)
        assert params.r_prime == pytest.approx(0.450, abs=5e-3)

    def test_vacuum(self):
        params = squeezing_from_variances(EprState.vacuum())
        assert params.r == 0.0
        assert params.r_prime == 0.0

    def test_pure_state(self):
        state = EprState(2.0 * math.exp(-2.0), 2.0 * math.exp(2.0))
        params = squeezing_from_variances(state)
        assert params.r == pytest.approx(1.0, abs=1e-12)
        assert params.r_prime == pytest.approx(0.0, abs=1e-12)

    def test_resynthesis(self):
        state = EprState(0.38, 25.9)
        back = variances_from_squeezing(squeezing_from_variances(state))
        assert back.v_corr == pytest.approx(state.v_corr, rel=1e-12)
        assert back.v_anti == pytest.approx(state.v_anti, rel=1e-12)

    def test_round_trip_over_parameter_plane(self):
        for r in np.linspace(0.0, 5.0, 11):
            for rp in np.linspace(0.0, 5.0, 11):
                params = SqueezingParams(r, rp)
                back = squeezing_from_variances(variances_from_squeezing(params))
                assert back.r == pytest.approx(r, abs=1e-10)
                assert back.r_prime == pytest.approx(rp, abs=1e-10)

    def test_uncertainty_violation_rejected(self):
        with pytest.raises(UncertaintyViolationError):
            EprState(0.38, 2.0)

    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            SqueezingParams(-0.1, 0.0)
        with pytest.raises(ValueError):
            SqueezingParams(0.5, -0.1)


class TestDuanCriterion:
    @pytest.mark.parametrize(
        "state,expected_sum",
        [
            (EprState(0.59, 13.6), 1.18),
            (EprState(0.38, 25.9), 0.76),
            (EprState(0.31, 34.2), 0.62),
        ],
    )
    def test_measured_sums_entangled(self, state, expected_sum):
        result = duan_sum(state)
        assert result.sum == pytest.approx(expected_sum, abs=1e-12)
        assert result.entangled

    def test_vacuum_boundary_not_entangled(self):
        result = duan_sum(EprState.vacuum())
        assert result.sum == 4.0
        assert not result.entangled

    def test_monotone_in_v_corr(self):
        # Raising v_corr can only ever lose the entangled verdict.
        previous = True
        for v_corr in np.linspace(0.05, 3.0, 60):
            entangled = duan_sum(EprState(v_corr, 25.9)).entangled
            assert not (entangled and not previous)
            previous = entangled
