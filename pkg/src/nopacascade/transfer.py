"""Quadrature-variance transfer of a below-threshold NOPA cavity.

A seeded non-degenerate optical parametric amplifier locked to
de-amplification attenuates the correlated quadrature combinations of the
injected two-mode field and amplifies the anti-correlated ones.  On a
per-round-trip scale the cavity is described by the coupler transmissivity
``gamma1``, the intra-cavity loss ``gamma2`` and the nonlinear coupling
``kappa``; the oscillation threshold sits at kappa = gamma1 + gamma2.

At analysis frequency omega the de-amplified (+) and amplified (-) channels
reflect the input variance with

    refl(+,-) = [(gamma1 - gamma2 -+ kappa)^2 + (w*tau)^2] / D(+,-)
    loss(+,-) = 4*gamma1*gamma2 / D(+,-)
    D(+,-)    = (gamma1 + gamma2 +- kappa)^2 + (w*tau)^2

and vacuum enters through the loss port at the two-mode QNL of 2.  Imperfect
detection (``zeta``) admixes vacuum, and a residual pump/signal phase error
(``theta``) rotates the measured combination so that a sin^2(theta) fraction
of the orthogonal channel leaks into it.

Two evaluation modes are provided.  PHYSICAL (the default) preserves vacuum
(kappa = 0 maps the QNL to the QNL for every zeta, theta, omega) and routes
the theta-leak through the amplified channel.  STRICT keeps an uncorrected
variant of the same expression -- vacuum admixed with unit instead of QNL
variance and a subtracted (w*tau)^2 in the leak numerator, with both leak
fractions sharing the de-amplified denominator -- and is retained for
comparison against that algebraic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from .states import (
    QNL,
    EprState,
    SqueezingParams,
    squeezing_from_variances,
)


class AboveThresholdError(ValueError):
    """Raised when the pump coupling reaches the oscillation threshold."""


class StageError(ValueError):
    """A cascade stage failed; carries the 1-based index of the stage."""

    def __init__(self, stage_index: int, cause: Exception):
        self.stage_index = stage_index
        self.cause = cause
        super().__init__(f"stage {stage_index}: {cause}")


class ModelMode(str, Enum):
    STRICT = "strict"
    PHYSICAL = "physical"


ModeLike = Union[ModelMode, str]


@dataclass(frozen=True)
class NopaParams:
    """Cavity parameters of one amplifier stage (per round trip).

    gamma1: input/output coupler transmissivity, 0 < gamma1 <= 1
    gamma2: intra-cavity loss, 0 <= gamma2 < 1
    kappa:  nonlinear coupling efficiency, >= 0
    tau:    cavity round-trip time in seconds
    """

    gamma1: float
    gamma2: float
    kappa: float
    tau: float

    def __post_init__(self):
        if not (0 < self.gamma1 <= 1):
            raise ValueError(f"gamma1 must lie in (0, 1], got {self.gamma1}")
        if not (0 <= self.gamma2 < 1):
            raise ValueError(f"gamma2 must lie in [0, 1), got {self.gamma2}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be a positive time, got {self.tau}")

    @property
    def threshold(self) -> float:
        """Oscillation threshold of the nonlinear coupling."""
        return self.gamma1 + self.gamma2

    @property
    def below_threshold(self) -> bool:
        return self.kappa < self.threshold

    def with_kappa(self, kappa: float) -> "NopaParams":
        return replace(self, kappa=kappa)

    def with_gamma2(self, gamma2: float) -> "NopaParams":
        return replace(self, gamma2=gamma2)


@dataclass(frozen=True)
class MeasurementContext:
    """Detection efficiency, residual phase error and analysis frequency.

    zeta:  detection efficiency in [0, 1]
    theta: residual pump/signal phase fluctuation in radians, [0, pi/2)
    omega_analysis: noise analysis frequency Omega in Hz (angular 2*pi*Omega)
    """

    zeta: float = 1.0
    theta: float = 0.0
    omega_analysis: float = 0.0

    def __post_init__(self):
        if not (0 <= self.zeta <= 1):
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta}")
        if not (0 <= self.theta < math.pi / 2):
            raise ValueError(f"theta must lie in [0, pi/2), got {self.theta}")
        if not (math.isfinite(self.omega_analysis) and self.omega_analysis >= 0):
            raise ValueError(f"omega_analysis must be >= 0, got {self.omega_analysis}")

    @property
    def omega(self) -> float:
        """Angular analysis frequency in rad/s."""
        return 2.0 * math.pi * self.omega_analysis

    @classmethod
    def ideal(cls) -> "MeasurementContext":
        return cls(zeta=1.0, theta=0.0, omega_analysis=0.0)


@dataclass(frozen=True)
class PumpSpec:
    """Pump power relative to threshold plus the crystal coupling chi."""

    p_pump: float
    p_threshold: float
    chi: float

    def __post_init__(self):
        if not (math.isfinite(self.p_pump) and self.p_pump >= 0):
            raise ValueError(f"p_pump must be >= 0, got {self.p_pump}")
        if not (math.isfinite(self.p_threshold) and self.p_threshold > 0):
            raise ValueError(f"p_threshold must be > 0, got {self.p_threshold}")
        if not (math.isfinite(self.chi) and self.chi > 0):
            raise ValueError(f"chi must be > 0, got {self.chi}")


def kappa_from_pump(pump: PumpSpec) -> float:
    """Nonlinear coupling kappa = sqrt(p_pump / p_threshold) * chi."""
    return math.sqrt(pump.p_pump / pump.p_threshold) * pump.chi


@dataclass(frozen=True)
class CascadeStage:
    nopa: NopaParams
    ctx: MeasurementContext


@dataclass(frozen=True)
class CascadeConfig:
    """Ordered amplifier stages plus an optional final detection context."""

    stages: tuple[CascadeStage, ...]
    detection: Optional[MeasurementContext] = None

    def __post_init__(self):
        if not self.stages:
            raise ValueError("cascade requires at least one stage")


def _require_below_threshold(nopa: NopaParams):
    if nopa.kappa >= nopa.threshold:
        raise AboveThresholdError(
            f"kappa = {nopa.kappa:.6g} reaches the oscillation threshold "
            f"gamma1 + gamma2 = {nopa.threshold:.6g}"
        )


def _channel_terms(nopa: NopaParams, omega_tau_sq: float):
    """Numerators/denominators of the de-amplified (+) and amplified (-) channels."""
    g1, g2, k = nopa.gamma1, nopa.gamma2, nopa.kappa
    d_plus = (g1 + g2 + k) ** 2 + omega_tau_sq
    n_plus = (g1 - g2 - k) ** 2 + omega_tau_sq
    d_minus = (g1 + g2 - k) ** 2 + omega_tau_sq
    n_minus = (g1 - g2 + k) ** 2 + omega_tau_sq
    b = 4.0 * g1 * g2
    return d_plus, n_plus, d_minus, n_minus, b


def correlation_out(
    input: SqueezingParams,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> float:
    """Variance of the correlated output combinations of one stage.

    In PHYSICAL mode the cos^2(theta) part carries the de-amplified channel
    applied to the correlated input variance and the sin^2(theta) leak
    carries the amplified channel applied to the anti-correlated one; vacuum
    is admixed at the QNL.  STRICT mode keeps the uncorrected expression
    (see module docstring) and accepts any kappa >= 0.
    """
    mode = ModelMode(mode)
    if mode is ModelMode.PHYSICAL:
        _require_below_threshold(nopa)
    wt2 = (ctx.omega * nopa.tau) ** 2
    d_p, n_p, d_m, n_m, b = _channel_terms(nopa, wt2)
    e_corr = math.exp(-2.0 * input.r)
    e_anti = math.exp(2.0 * input.r + 2.0 * input.r_prime)
    zeta = ctx.zeta
    if mode is ModelMode.STRICT:
        vac = 1.0 - zeta
        main = zeta * (2.0 * n_p / d_p * e_corr + 2.0 * b / d_p) + vac
        leak = zeta * (2.0 * (n_p - 2.0 * wt2) / d_p * e_anti + 2.0 * b / d_p) + vac
    else:
        vac = QNL * (1.0 - zeta)
        main = zeta * (2.0 * n_p / d_p * e_corr + 2.0 * b / d_p) + vac
        leak = zeta * (2.0 * n_m / d_m * e_anti + 2.0 * b / d_m) + vac
    return main * math.cos(ctx.theta) ** 2 + leak * math.sin(ctx.theta) ** 2


def anticorrelation_out(
    input: SqueezingParams,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> float:
    """Variance of the anti-correlated output combinations of one stage.

    Dual of :func:`correlation_out` under kappa -> -kappa with the two input
    variances exchanged: the anti-correlated combinations see parametric
    gain.  Requires kappa below threshold in both modes (the amplified
    denominator vanishes at threshold on resonance).
    """
    mode = ModelMode(mode)
    _require_below_threshold(nopa)
    wt2 = (ctx.omega * nopa.tau) ** 2
    d_p, n_p, d_m, n_m, b = _channel_terms(nopa, wt2)
    e_corr = math.exp(-2.0 * input.r)
    e_anti = math.exp(2.0 * input.r + 2.0 * input.r_prime)
    zeta = ctx.zeta
    if mode is ModelMode.STRICT:
        vac = 1.0 - zeta
        main = zeta * (2.0 * n_m / d_m * e_anti + 2.0 * b / d_m) + vac
        leak = zeta * (2.0 * (n_m - 2.0 * wt2) / d_m * e_corr + 2.0 * b / d_m) + vac
    else:
        vac = QNL * (1.0 - zeta)
        main = zeta * (2.0 * n_m / d_m * e_anti + 2.0 * b / d_m) + vac
        leak = zeta * (2.0 * n_p / d_p * e_corr + 2.0 * b / d_p) + vac
    return main * math.cos(ctx.theta) ** 2 + leak * math.sin(ctx.theta) ** 2


def stage_map(
    state: EprState,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> EprState:
    """Map an input two-mode state through one amplifier stage."""
    params = squeezing_from_variances(state)
    return EprState(
        v_corr=correlation_out(params, nopa, ctx, mode),
        v_anti=anticorrelation_out(params, nopa, ctx, mode),
    )


def detection_map(state: EprState, ctx: MeasurementContext) -> EprState:
    """Apply detection efficiency and phase-error mixing without gain."""
    c2 = math.cos(ctx.theta) ** 2
    s2 = math.sin(ctx.theta) ** 2
    vac = QNL * (1.0 - ctx.zeta)
    return EprState(
        v_corr=ctx.zeta * (c2 * state.v_corr + s2 * state.v_anti) + vac,
        v_anti=ctx.zeta * (c2 * state.v_anti + s2 * state.v_corr) + vac,
    )


def cascade(
    state: EprState,
    config: CascadeConfig,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> list[EprState]:
    """Fold a state through every stage; element i is the state after stage i.

    The optional final detection context is applied to the last element, so
    the final entry is the detected output.  A failing stage aborts with a
    :class:`StageError` naming its 1-based index.
    """
    outputs: list[EprState] = []
    current = state
    for index, stage in enumerate(config.stages, start=1):
        try:
            current = stage_map(current, stage.nopa, stage.ctx, mode)
        except ValueError as exc:
            raise StageError(index, exc) from exc
        outputs.append(current)
    if config.detection is not None:
        outputs[-1] = detection_map(outputs[-1], config.detection)
    return outputs
