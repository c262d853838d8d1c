"""Scikit-learn style estimator wrapping a single amplifier stage.

States are rows of a (n_samples, 2) array holding (v_corr, v_anti), so a
stage behaves like any other transformer and cascades compose with
``sklearn.pipeline.Pipeline``::

    chain = make_pipeline(
        NopaStage(gamma1=0.1, gamma2=0.004, kappa=0.036, zeta=0.947, theta=0.0105),
        NopaStage(gamma1=0.1, gamma2=0.004, kappa=0.043, zeta=0.947, theta=0.0105),
    )
    enhanced = chain.fit(states).transform(states)
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .analysis import golden_section_min
from .states import EprState, variance_to_db
from .transfer import MeasurementContext, ModelMode, NopaParams, stage_map


def validate_state_array(X) -> np.ndarray:
    """Coerce input to a float (n, 2) array of physical (v_corr, v_anti) rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and X.shape == (2,):
        X = X.reshape(1, 2)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (v_corr, v_anti) rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("state array contains non-finite entries")
    if np.any(X <= 0):
        raise ValueError("variances must be positive")
    products = X[:, 0] * X[:, 1]
    if np.any(products < 4.0 * (1.0 - 1e-9)):
        raise ValueError("rows below the two-mode uncertainty bound v_corr * v_anti >= 4")
    return X


class NopaStage(BaseEstimator, TransformerMixin):
    """One amplifier stage as a transformer over (v_corr, v_anti) rows.

    Parameters
    ----------
    gamma1, gamma2 : coupler transmissivity and intra-cavity loss per round trip
    kappa : nonlinear coupling; None means it is fitted from data
    tau : cavity round-trip time in seconds
    zeta, theta : detection efficiency and residual phase fluctuation
    analysis_frequency_hz : noise analysis frequency
    mode : "physical" (default) or "strict"

    With ``kappa=None``, ``fit(X, y)`` adjusts the coupling so the output
    correlation variances of the rows in X match the targets y (in variance
    units), minimizing the summed squared dB residual on the weak-pump
    branch.  With a fixed ``kappa`` fitting is a no-op.
    """

    def __init__(self, gamma1=0.1, gamma2=0.004, kappa=None, tau=2e-9,
                 zeta=1.0, theta=0.0, analysis_frequency_hz=2e6, mode="physical"):
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.kappa = kappa
        self.tau = tau
        self.zeta = zeta
        self.theta = theta
        self.analysis_frequency_hz = analysis_frequency_hz
        self.mode = mode

    def _context(self) -> MeasurementContext:
        return MeasurementContext(zeta=self.zeta, theta=self.theta,
                                  omega_analysis=self.analysis_frequency_hz)

    def _nopa(self, kappa: float) -> NopaParams:
        return NopaParams(gamma1=self.gamma1, gamma2=self.gamma2,
                          kappa=kappa, tau=self.tau)

    def _output_states(self, X: np.ndarray, kappa: float) -> np.ndarray:
        nopa = self._nopa(kappa)
        ctx = self._context()
        mode = ModelMode(self.mode)
        out = np.empty_like(X)
        for i, (v_corr, v_anti) in enumerate(X):
            state = stage_map(EprState(v_corr, v_anti), nopa, ctx, mode)
            out[i] = (state.v_corr, state.v_anti)
        return out

    def fit(self, X, y=None):
        X = validate_state_array(X)
        if self.kappa is not None:
            self.kappa_ = float(self.kappa)
            self.residual_db_ = 0.0
            return self
        if y is None:
            raise ValueError("kappa=None requires target output correlation variances y")
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"y has {y.shape[0]} targets for {X.shape[0]} input rows")
        if np.any(y <= 0):
            raise ValueError("target variances must be positive")
        target_db = np.array([variance_to_db(v) for v in y])

        def objective(kappa: float) -> float:
            out = self._output_states(X, kappa)
            out_db = np.array([variance_to_db(v) for v in out[:, 0]])
            return float(np.sum((out_db - target_db) ** 2))

        # Outputs are not monotone in kappa; fit on the weak-pump branch,
        # below the output-minimizing coupling of every row.
        hi = self.gamma1 + self.gamma2 - 1e-9
        branch_hi = hi
        for row in X:
            def row_out(kappa, row=row):
                return self._output_states(row.reshape(1, 2), kappa)[0, 0]

            k_row, _, _ = golden_section_min(row_out, 0.0, hi)
            branch_hi = min(branch_hi, k_row)
        kappa, sq_residual, _ = golden_section_min(objective, 0.0, branch_hi)
        self.kappa_ = kappa
        self.residual_db_ = float(np.sqrt(sq_residual / X.shape[0]))
        return self

    def _fitted_kappa(self) -> float:
        if hasattr(self, "kappa_"):
            return self.kappa_
        if self.kappa is not None:
            return float(self.kappa)
        raise NotFittedError("NopaStage has no coupling; call fit or set kappa")

    def transform(self, X) -> np.ndarray:
        X = validate_state_array(X)
        return self._output_states(X, self._fitted_kappa())

    def predict(self, X) -> np.ndarray:
        """Output correlation variances only, one per input row."""
        return self.transform(X)[:, 0]
