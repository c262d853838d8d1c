"""Two-mode quadrature states, decibel bookkeeping and entanglement criteria.

Conventions: quadratures satisfy [X, Y] = 2i, so each vacuum quadrature has
unit variance and a two-mode quadrature sum/difference has variance 2 at the
quantum noise limit (QNL).  All variances in this package are dimensionless
numbers on that scale; decibels are always relative to the QNL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

QNL = 2.0

# Relative slack for the uncertainty product v_corr * v_anti >= 4, so that
# pure states (product exactly 4) survive float roundoff.
_UNCERTAINTY_SLACK = 1e-12


class UncertaintyViolationError(ValueError):
    """Raised for variance pairs below the two-mode uncertainty bound."""


@dataclass(frozen=True)
class SqueezingParams:
    """Correlation parameter ``r`` and extra noise factor ``r_prime``.

    ``r`` sets the correlated-quadrature variance 2*exp(-2r); ``r_prime``
    adds excess noise to the anti-correlated variance 2*exp(2r + 2r').
    """

    r: float
    r_prime: float

    def __post_init__(self):
        if not math.isfinite(self.r) or self.r < 0:
            raise ValueError(f"correlation parameter r must be >= 0, got {self.r}")
        if not math.isfinite(self.r_prime) or self.r_prime < 0:
            raise ValueError(f"extra noise factor r_prime must be >= 0, got {self.r_prime}")


@dataclass(frozen=True)
class EprState:
    """Two-mode entangled state summarized by its quadrature variances.

    ``v_corr`` is the variance of the correlated combinations
    <d^2(X1+X2)> = <d^2(Y1-Y2)> and ``v_anti`` the variance of the
    anti-correlated combinations <d^2(X1-X2)> = <d^2(Y1+Y2)>, both on the
    QNL = 2 scale.  Vacuum is (2, 2).
    """

    v_corr: float
    v_anti: float

    def __post_init__(self):
        if not (math.isfinite(self.v_corr) and self.v_corr > 0):
            raise ValueError(f"v_corr must be a positive variance, got {self.v_corr}")
        if not (math.isfinite(self.v_anti) and self.v_anti > 0):
            raise ValueError(f"v_anti must be a positive variance, got {self.v_anti}")
        if self.v_corr * self.v_anti < 4.0 * (1.0 - _UNCERTAINTY_SLACK):
            raise UncertaintyViolationError(
                f"v_corr * v_anti = {self.v_corr * self.v_anti:.6g} < 4: "
                "below the two-mode uncertainty bound"
            )

    @classmethod
    def vacuum(cls) -> "EprState":
        return cls(QNL, QNL)

    @classmethod
    def from_squeezing(cls, params: SqueezingParams) -> "EprState":
        return variances_from_squeezing(params)

    @classmethod
    def from_decibels(cls, db_corr: float, db_anti: float) -> "EprState":
        return cls(db_to_variance(db_corr), db_to_variance(db_anti))

    @property
    def db_corr(self) -> float:
        return variance_to_db(self.v_corr)

    @property
    def db_anti(self) -> float:
        return variance_to_db(self.v_anti)


class DuanResult(NamedTuple):
    sum: float
    entangled: bool


def variance_to_db(v: float) -> float:
    """Express a two-mode variance in dB relative to the QNL.

    Negative values are below the QNL (squeezed/correlated).
    """
    if not (math.isfinite(v) and v > 0):
        raise ValueError(f"variance must be positive, got {v}")
    return 10.0 * math.log10(v / QNL)


def db_to_variance(db: float) -> float:
    """Inverse of :func:`variance_to_db`: 0 dB maps to the QNL of 2."""
    return QNL * 10.0 ** (db / 10.0)


def squeezing_from_variances(state: EprState) -> SqueezingParams:
    """Invert an :class:`EprState` to its squeezing parameters (r, r').

    Raises :class:`UncertaintyViolationError` when the variance product is
    below 4 (such a pair has no physical (r, r') representation).
    """
    r = -0.5 * math.log(state.v_corr / QNL)
    if r < 0:
        if r < -_UNCERTAINTY_SLACK:
            raise ValueError(
                f"v_corr = {state.v_corr:.6g} exceeds the QNL; no non-negative "
                "correlation parameter reproduces it"
            )
        r = 0.0
    r_prime = 0.5 * math.log(state.v_anti / QNL) - r
    if r_prime < 0:
        if r_prime < -_UNCERTAINTY_SLACK:
            raise UncertaintyViolationError(
                f"state ({state.v_corr:.6g}, {state.v_anti:.6g}) lies below "
                "the uncertainty bound"
            )
        r_prime = 0.0
    return SqueezingParams(r=r, r_prime=r_prime)


def variances_from_squeezing(params: SqueezingParams) -> EprState:
    """Synthesize the variance pair for squeezing parameters (r, r')."""
    return EprState(
        v_corr=QNL * math.exp(-2.0 * params.r),
        v_anti=QNL * math.exp(2.0 * params.r + 2.0 * params.r_prime),
    )


def duan_sum(state: EprState) -> DuanResult:
    """Inseparability sum of the amplitude-sum and phase-difference variances.

    The two contributions are equal in this model, so the sum is 2 * v_corr.
    A value strictly below 4 certifies entanglement; the boundary itself is
    classified as separable.
    """
    total = 2.0 * state.v_corr
    return DuanResult(sum=total, entangled=total < 4.0)
