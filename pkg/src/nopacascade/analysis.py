"""Turning-point solving, pump fitting/optimization, sweeps and projections.

All solvers are derivative-free and deterministic: bisection for the
fixed-point search, golden-section for one-dimensional minimization, both
with hard iteration caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .states import (
    EprState,
    SqueezingParams,
    db_to_variance,
    squeezing_from_variances,
    variance_to_db,
)
from .transfer import (
    MeasurementContext,
    ModeLike,
    ModelMode,
    NopaParams,
    correlation_out,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_ITER = 200
_ABS_TOL = 1e-9

OPTIMAL_KAPPA = "optimal"
KappaPolicy = Union[float, str]

STATUS_CONVERGED = "converged"
STATUS_DEGENERATE = "degenerate"
STATUS_NO_CROSSING = "no_crossing"


@dataclass(frozen=True)
class FixedPointResult:
    """Turning point of a stage: the input variance it maps to itself."""

    v_star: float
    db_star: float
    iterations: int
    bracket: float
    status: str = STATUS_CONVERGED

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


@dataclass(frozen=True)
class FitResult:
    kappa_fit: float
    residual_db: float
    converged: bool


@dataclass(frozen=True)
class OptimalKappaResult:
    kappa_opt: float
    v_out_min: float


@dataclass(frozen=True)
class SweepGrid:
    """Output correlation variances (dB) over a gamma1 x gamma2 grid."""

    gamma1_axis: np.ndarray
    gamma2_axis: np.ndarray
    values: np.ndarray
    kappa_used: np.ndarray
    fixed: dict = field(default_factory=dict)


def golden_section_min(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = _ABS_TOL,
    max_iter: int = _MAX_ITER,
) -> tuple[float, float, int]:
    """Minimize a unimodal function on [lo, hi]; returns (x, f(x), iterations)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while abs(b - a) > tol and iterations < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        iterations += 1
    x = 0.5 * (a + b)
    return x, f(x), iterations


def _stage_curve(
    nopa: NopaParams,
    ctx: MeasurementContext,
    r_prime: float,
    mode: ModeLike,
) -> Callable[[float], float]:
    """Output correlation variance as a function of the input parameter r."""

    def f(r: float) -> float:
        return correlation_out(SqueezingParams(r=r, r_prime=r_prime), nopa, ctx, mode)

    return f


def turning_point(
    nopa: NopaParams,
    ctx: MeasurementContext,
    r_prime: float,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> FixedPointResult:
    """Locate the input variance a stage maps to itself.

    The input family is parameterized by r at fixed r_prime; the crossing of
    output-minus-input is bracketed on r in [0, 10] and found by bisection.
    An identity-like stage (the gap vanishes everywhere) is reported with a
    degenerate status, and a bracket without sign change with a no-crossing
    status; neither returns an arbitrary fixed point.
    """
    f = _stage_curve(nopa, ctx, r_prime, mode)

    def gap(r: float) -> float:
        return f(r) - 2.0 * math.exp(-2.0 * r)

    probes = (0.0, 0.5, 1.5, 4.0)
    if all(abs(gap(r)) < 1e-12 for r in probes):
        return FixedPointResult(
            v_star=math.nan, db_star=math.nan, iterations=0, bracket=math.inf,
            status=STATUS_DEGENERATE,
        )

    lo, hi = 0.0, 10.0
    g_lo, g_hi = gap(lo), gap(hi)
    if (g_lo > 0) == (g_hi > 0):
        return FixedPointResult(
            v_star=math.nan, db_star=math.nan, iterations=0,
            bracket=abs(2.0 * math.exp(-2.0 * lo) - 2.0 * math.exp(-2.0 * hi)),
            status=STATUS_NO_CROSSING,
        )

    iterations = 0
    mid = 0.5 * (lo + hi)
    g_mid = gap(mid)
    while iterations < _MAX_ITER:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid) < 0.5 * _ABS_TOL and (hi - lo) < 1e-12:
            break
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        iterations += 1
    v_star = 2.0 * math.exp(-2.0 * mid)
    bracket = abs(2.0 * math.exp(-2.0 * lo) - 2.0 * math.exp(-2.0 * hi))
    return FixedPointResult(
        v_star=v_star,
        db_star=variance_to_db(v_star),
        iterations=iterations,
        bracket=bracket,
        status=STATUS_CONVERGED,
    )


def optimal_kappa(
    input_state: EprState,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> OptimalKappaResult:
    """Pump coupling minimizing the output correlation variance.

    Golden-section over the stability interval [0, threshold - 1e-6],
    followed by a deterministic random probe pass that guards against a
    missed basin; any probe that beats the golden-section result seeds a
    local re-polish.
    """
    params = squeezing_from_variances(input_state)

    def f(k: float) -> float:
        return correlation_out(params, nopa.with_kappa(k), ctx, mode)

    hi = nopa.threshold - 1e-6
    k_best, v_best, _ = golden_section_min(f, 0.0, hi)
    rng = np.random.default_rng(171717)
    probes = rng.uniform(0.0, hi, size=100)
    for k in probes:
        v = f(float(k))
        if v < v_best - 1e-15:
            span = 0.05 * hi
            k_best, v_best, _ = golden_section_min(
                f, max(0.0, float(k) - span), min(hi, float(k) + span)
            )
    return OptimalKappaResult(kappa_opt=k_best, v_out_min=v_best)


def fit_kappa(
    target_db: float,
    input_state: EprState,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> FitResult:
    """Fit the pump coupling so the stage output matches a target level.

    The output is not monotone in kappa (past an optimum the amplified-noise
    leak degrades it again), so two pump levels can realize the same output;
    the fit searches the weak-pump branch [0, kappa_opt] where the map is
    one-to-one.  The kappa field of ``nopa`` is ignored.  Residuals are
    reported even when the target is unreachable; ``converged`` flags a
    residual within 0.05 dB.
    """
    target_v = db_to_variance(target_db)
    params = squeezing_from_variances(input_state)

    def f(k: float) -> float:
        return correlation_out(params, nopa.with_kappa(k), ctx, mode)

    hi = nopa.threshold - 1e-9
    k_opt, _, _ = golden_section_min(f, 0.0, hi)
    k_fit, _, _ = golden_section_min(lambda k: abs(f(k) - target_v), 0.0, k_opt)
    residual_db = abs(variance_to_db(f(k_fit)) - target_db)
    return FitResult(kappa_fit=k_fit, residual_db=residual_db, converged=residual_db <= 0.05)


def fit_chain(
    measured: Sequence[EprState],
    stage_geometries: Sequence[NopaParams],
    contexts: Sequence[MeasurementContext],
    mode: ModeLike = ModelMode.PHYSICAL,
) -> list[FitResult]:
    """Fit one kappa per enhancement stage of a measured chain.

    ``measured`` holds the states at every stage boundary; the first entry
    is taken as the first-stage output directly, and stage i >= 2 is fitted
    so the model maps measured[i-1] to measured[i].v_corr.
    """
    if len(measured) < 2:
        raise ValueError("chain fitting needs at least two measured states")
    n_stages = len(measured) - 1
    if len(stage_geometries) != n_stages or len(contexts) != n_stages:
        raise ValueError(
            f"expected {n_stages} stage geometries and contexts for "
            f"{len(measured)} measured states"
        )
    fits = []
    for i in range(n_stages):
        target = variance_to_db(measured[i + 1].v_corr)
        fits.append(fit_kappa(target, measured[i], stage_geometries[i], contexts[i], mode))
    return fits


def _resolve_cell_kappa(
    policy: KappaPolicy,
    input_state: EprState,
    nopa: NopaParams,
    ctx: MeasurementContext,
    mode: ModeLike,
) -> float:
    if isinstance(policy, str):
        if policy != OPTIMAL_KAPPA:
            raise ValueError(f"unknown kappa policy {policy!r}")
        return optimal_kappa(input_state, nopa, ctx, mode).kappa_opt
    return float(policy)


def sweep_gamma(
    input_state: EprState,
    ctx: MeasurementContext,
    kappa_policy: KappaPolicy,
    gamma1_axis: Sequence[float],
    gamma2_axis: Sequence[float],
    tau: float,
    mode: ModeLike = ModelMode.PHYSICAL,
) -> SweepGrid:
    """Output correlation variance (dB) over a coupler/loss grid.

    ``kappa_policy`` is either a fixed coupling or the string "optimal" for
    a per-cell optimum.  Axes must be non-empty and strictly increasing.
    """
    g1_axis = np.asarray(gamma1_axis, dtype=float)
    g2_axis = np.asarray(gamma2_axis, dtype=float)
    for name, axis in (("gamma1", g1_axis), ("gamma2", g2_axis)):
        if axis.size == 0:
            raise ValueError(f"{name} axis must be non-empty")
        if axis.size > 1 and not np.all(np.diff(axis) > 0):
            raise ValueError(f"{name} axis must be strictly increasing")
    params = squeezing_from_variances(input_state)
    values = np.empty((g1_axis.size, g2_axis.size))
    kappas = np.empty_like(values)
    for i, g1 in enumerate(g1_axis):
        for j, g2 in enumerate(g2_axis):
            try:
                nopa = NopaParams(gamma1=g1, gamma2=g2, kappa=0.0, tau=tau)
                k = _resolve_cell_kappa(kappa_policy, input_state, nopa, ctx, mode)
                v = correlation_out(params, nopa.with_kappa(k), ctx, mode)
            except ValueError as exc:
                raise ValueError(
                    f"sweep cell ({i}, {j}) with gamma1={g1:.6g}, gamma2={g2:.6g}: {exc}"
                ) from exc
            values[i, j] = variance_to_db(v)
            kappas[i, j] = k
    if not np.all(np.isfinite(values)):
        raise ValueError("sweep produced non-finite cells")
    return SweepGrid(
        gamma1_axis=g1_axis,
        gamma2_axis=g2_axis,
        values=values,
        kappa_used=kappas,
        fixed={
            "input_state": input_state,
            "ctx": ctx,
            "kappa_policy": kappa_policy,
            "tau": tau,
            "mode": str(ModelMode(mode).value),
        },
    )


def projection_improved_loss(
    input_state: EprState,
    nopa: NopaParams,
    improved_gamma2: float,
    ctx: MeasurementContext,
    mode: ModeLike = ModelMode.PHYSICAL,
    reoptimize_kappa: bool = False,
) -> float:
    """Output level (dB) after replacing the intra-cavity loss.

    By default the pump coupling of ``nopa`` is kept, isolating the effect
    of the loss improvement; with ``reoptimize_kappa`` the coupling is
    re-optimized for the improved cavity.
    """
    if improved_gamma2 > nopa.gamma2:
        raise ValueError(
            f"improved gamma2 = {improved_gamma2:.6g} exceeds the baseline "
            f"{nopa.gamma2:.6g}"
        )
    improved = nopa.with_gamma2(improved_gamma2)
    if reoptimize_kappa:
        improved = improved.with_kappa(
            optimal_kappa(input_state, improved, ctx, mode).kappa_opt
        )
    params = squeezing_from_variances(input_state)
    return variance_to_db(correlation_out(params, improved, ctx, mode))
