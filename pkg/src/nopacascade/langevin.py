"""Independent frequency-domain input-output coefficients for one cavity.

Derived from the linearized intracavity equations of motion: a quadrature
combination with round-trip parametric gain -g (g = +kappa for the
de-amplified combination, -kappa for the amplified one) obeys, after Fourier
transformation and elimination of the intracavity field,

    a_out = [(gamma1 - gamma2 - g) - i*omega*tau] / [(gamma1 + gamma2 + g) + i*omega*tau] * a_in
            + 2*sqrt(gamma1*gamma2) / [(gamma1 + gamma2 + g) + i*omega*tau] * v_in

with v_in the vacuum entering through the intra-cavity loss port.  Only the
squared magnitudes matter for variances, so they are computed directly from
real expressions.  This module deliberately re-derives the coefficients
instead of reusing :mod:`nopacascade.transfer`, serving as a cross-check of
that implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .states import QNL
from .transfer import AboveThresholdError, NopaParams

SIGN_DEAMPLIFIED = +1
SIGN_AMPLIFIED = -1


@dataclass(frozen=True)
class TransferCoefficients:
    """Squared reflection and loss-port magnitudes for one quadrature channel."""

    refl_sq: float
    loss_sq: float
    sign: int


def transfer(nopa: NopaParams, omega: float, sign: int) -> TransferCoefficients:
    """Coefficients for the channel selected by ``sign``.

    sign = +1 picks the de-amplified (correlated) combination, -1 the
    amplified (anti-correlated) one.  ``omega`` is the angular analysis
    frequency in rad/s.
    """
    if sign not in (SIGN_DEAMPLIFIED, SIGN_AMPLIFIED):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if nopa.kappa >= nopa.threshold:
        raise AboveThresholdError(
            f"kappa = {nopa.kappa:.6g} at or above threshold {nopa.threshold:.6g}"
        )
    g = sign * nopa.kappa
    g1, g2 = nopa.gamma1, nopa.gamma2
    wt2 = (omega * nopa.tau) ** 2
    denom = (g1 + g2 + g) ** 2 + wt2
    refl_sq = ((g1 - g2 - g) ** 2 + wt2) / denom
    loss_sq = 4.0 * g1 * g2 / denom
    return TransferCoefficients(refl_sq=refl_sq, loss_sq=loss_sq, sign=sign)


def output_variance(v_in: float, nopa: NopaParams, omega: float, sign: int) -> float:
    """Output variance of one channel: refl_sq * v_in + loss_sq * QNL."""
    if not v_in > 0:
        raise ValueError(f"input variance must be positive, got {v_in}")
    coeff = transfer(nopa, omega, sign)
    return coeff.refl_sq * v_in + coeff.loss_sq * QNL
