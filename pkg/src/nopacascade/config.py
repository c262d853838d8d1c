"""Flat key-value run configuration for the command-line interface.

Grammar (one assignment per line, ``#`` starts a comment, blank lines are
ignored)::

    mode = physical                 # or strict
    analysis_frequency_hz = 2.0e6

    # exactly one input specification:
    input.v_corr = 0.38             # variances, or
    input.v_anti = 25.9
    #   input.r / input.r_prime     (squeezing parameters), or
    #   input.db_corr / input.db_anti

    stage.1.gamma1 = 0.1
    stage.1.gamma2 = 0.004
    stage.1.tau = 2.0e-9
    stage.1.zeta = 0.947            # defaults to 1.0
    stage.1.theta = 0.0105          # defaults to 0.0

    # exactly one kappa specification per stage:
    stage.1.kappa = 0.047           # fixed value, or
    #   stage.1.pump.p_pump / stage.1.pump.p_threshold / stage.1.pump.chi
    #   stage.1.kappa_policy = optimal
    #   stage.1.kappa_policy = fit  (requires stage.1.target_db)

    detection.zeta = 1.0            # optional final detection context
    detection.theta = 0.0

    chain.1.v_corr = 0.59           # measured chain for fit-chain
    chain.1.v_anti = 13.6

    output.format = csv
    output.path = out.csv
    output.precision = 12           # significant digits, 6..17

Stages are numbered 1..N without gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .states import EprState, db_to_variance, variances_from_squeezing, SqueezingParams
from .transfer import MeasurementContext, ModelMode, NopaParams, PumpSpec, kappa_from_pump


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""

    def __init__(self, message: str, line: Optional[int] = None, fieldname: Optional[str] = None):
        self.line = line
        self.fieldname = fieldname
        where = f" (line {line})" if line is not None else ""
        what = f" [{fieldname}]" if fieldname else ""
        super().__init__(f"config error{where}{what}: {message}")


POLICY_FIT = "fit"
POLICY_OPTIMAL = "optimal"


@dataclass(frozen=True)
class StageConfig:
    gamma1: float
    gamma2: float
    tau: float
    zeta: float = 1.0
    theta: float = 0.0
    kappa: Optional[float] = None
    pump: Optional[PumpSpec] = None
    kappa_policy: Optional[str] = None
    target_db: Optional[float] = None

    def geometry(self) -> NopaParams:
        """Stage cavity parameters with a placeholder zero coupling."""
        return NopaParams(gamma1=self.gamma1, gamma2=self.gamma2, kappa=0.0, tau=self.tau)

    def context(self, analysis_frequency_hz: float) -> MeasurementContext:
        return MeasurementContext(
            zeta=self.zeta, theta=self.theta, omega_analysis=analysis_frequency_hz
        )

    def fixed_kappa(self) -> Optional[float]:
        """The coupling when specified directly or through pump powers."""
        if self.kappa is not None:
            return self.kappa
        if self.pump is not None:
            return kappa_from_pump(self.pump)
        return None


@dataclass(frozen=True)
class RunConfig:
    mode: ModelMode
    input_state: EprState
    analysis_frequency_hz: float
    stages: tuple[StageConfig, ...]
    detection: Optional[MeasurementContext] = None
    chain: tuple[EprState, ...] = ()
    output_format: str = "csv"
    output_path: Optional[str] = None
    precision: int = 12


def _parse_assignments(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line=lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, fieldname=key)
        entries[key] = (value, lineno)
    return entries


def _take_float(entries, key) -> Optional[float]:
    if key not in entries:
        return None
    value, lineno = entries.pop(key)
    try:
        number = float(value)
    except ValueError:
        raise ConfigError(f"{value!r} is not a number", line=lineno, fieldname=key) from None
    if not math.isfinite(number):
        raise ConfigError(f"{value!r} is not finite", line=lineno, fieldname=key)
    return number


def _take_str(entries, key) -> Optional[str]:
    if key not in entries:
        return None
    value, _ = entries.pop(key)
    return value


def _build_input_state(entries) -> EprState:
    specs = {
        "variance": ("input.v_corr", "input.v_anti"),
        "squeezing": ("input.r", "input.r_prime"),
        "decibel": ("input.db_corr", "input.db_anti"),
    }
    present = {
        name: keys for name, keys in specs.items() if any(k in entries for k in keys)
    }
    if len(present) != 1:
        raise ConfigError(
            "exactly one input specification required: v_corr/v_anti, "
            "r/r_prime, or db_corr/db_anti",
            fieldname="input",
        )
    (name, keys), = present.items()
    first = _take_float(entries, keys[0])
    second = _take_float(entries, keys[1])
    if first is None or second is None:
        raise ConfigError(f"both {keys[0]} and {keys[1]} are required", fieldname=keys[0])
    try:
        if name == "variance":
            return EprState(v_corr=first, v_anti=second)
        if name == "squeezing":
            return variances_from_squeezing(SqueezingParams(r=first, r_prime=second))
        return EprState(v_corr=db_to_variance(first), v_anti=db_to_variance(second))
    except ValueError as exc:
        raise ConfigError(str(exc), fieldname=keys[0]) from exc


def _build_stage(entries, index: int) -> StageConfig:
    prefix = f"stage.{index}."

    def take(name, required=False, default=None):
        value = _take_float(entries, prefix + name)
        if value is None:
            if required:
                raise ConfigError(f"missing required field", fieldname=prefix + name)
            return default
        return value

    gamma1 = take("gamma1", required=True)
    gamma2 = take("gamma2", required=True)
    tau = take("tau", required=True)
    zeta = take("zeta", default=1.0)
    theta = take("theta", default=0.0)
    kappa = take("kappa")
    target_db = take("target_db")
    policy = _take_str(entries, prefix + "kappa_policy")

    pump = None
    pump_keys = [prefix + "pump." + s for s in ("p_pump", "p_threshold", "chi")]
    if any(k in entries for k in pump_keys):
        p_pump = take("pump.p_pump", required=True)
        p_threshold = take("pump.p_threshold", required=True)
        chi = take("pump.chi", required=True)
        try:
            pump = PumpSpec(p_pump=p_pump, p_threshold=p_threshold, chi=chi)
        except ValueError as exc:
            raise ConfigError(str(exc), fieldname=pump_keys[0]) from exc

    n_specs = sum(x is not None for x in (kappa, pump, policy))
    if n_specs != 1:
        raise ConfigError(
            "exactly one kappa specification required: kappa, pump.*, or kappa_policy",
            fieldname=prefix + "kappa",
        )
    if policy is not None and policy not in (POLICY_FIT, POLICY_OPTIMAL):
        raise ConfigError(
            f"kappa_policy must be '{POLICY_FIT}' or '{POLICY_OPTIMAL}', got {policy!r}",
            fieldname=prefix + "kappa_policy",
        )
    if policy == POLICY_FIT and target_db is None:
        raise ConfigError(
            "kappa_policy = fit requires target_db", fieldname=prefix + "target_db"
        )
    try:
        return StageConfig(
            gamma1=gamma1, gamma2=gamma2, tau=tau, zeta=zeta, theta=theta,
            kappa=kappa, pump=pump, kappa_policy=policy, target_db=target_db,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), fieldname=prefix.rstrip(".")) from exc


def _collect_indices(entries, prefix: str) -> list[int]:
    indices = set()
    for key in entries:
        if key.startswith(prefix):
            rest = key[len(prefix):]
            head = rest.split(".", 1)[0]
            if not head.isdigit():
                raise ConfigError(f"bad index in {key!r}", fieldname=key)
            indices.add(int(head))
    ordered = sorted(indices)
    if ordered and ordered != list(range(1, len(ordered) + 1)):
        raise ConfigError(
            f"{prefix.rstrip('.')} indices must be 1..N without gaps, got {ordered}",
            fieldname=prefix.rstrip("."),
        )
    return ordered


def parse_config(text: str) -> RunConfig:
    entries = _parse_assignments(text)

    mode_text = _take_str(entries, "mode") or ModelMode.PHYSICAL.value
    try:
        mode = ModelMode(mode_text)
    except ValueError:
        raise ConfigError(
            f"mode must be 'strict' or 'physical', got {mode_text!r}", fieldname="mode"
        ) from None

    frequency = _take_float(entries, "analysis_frequency_hz")
    if frequency is None:
        frequency = 0.0
    if frequency < 0:
        raise ConfigError("analysis_frequency_hz must be >= 0", fieldname="analysis_frequency_hz")

    input_state = _build_input_state(entries)

    stage_indices = _collect_indices(entries, "stage.")
    if not stage_indices:
        raise ConfigError("at least one stage.N block is required", fieldname="stage")
    stages = tuple(_build_stage(entries, i) for i in stage_indices)

    detection = None
    if "detection.zeta" in entries or "detection.theta" in entries:
        det_zeta = _take_float(entries, "detection.zeta")
        det_theta = _take_float(entries, "detection.theta")
        try:
            detection = MeasurementContext(
                zeta=1.0 if det_zeta is None else det_zeta,
                theta=0.0 if det_theta is None else det_theta,
                omega_analysis=frequency,
            )
        except ValueError as exc:
            raise ConfigError(str(exc), fieldname="detection.zeta") from exc

    chain_states = []
    for i in _collect_indices(entries, "chain."):
        vc = _take_float(entries, f"chain.{i}.v_corr")
        va = _take_float(entries, f"chain.{i}.v_anti")
        if vc is None or va is None:
            raise ConfigError(
                f"chain.{i} needs both v_corr and v_anti", fieldname=f"chain.{i}.v_corr"
            )
        try:
            chain_states.append(EprState(v_corr=vc, v_anti=va))
        except ValueError as exc:
            raise ConfigError(str(exc), fieldname=f"chain.{i}.v_corr") from exc

    output_format = _take_str(entries, "output.format") or "csv"
    if output_format != "csv":
        raise ConfigError(f"output.format must be 'csv', got {output_format!r}",
                          fieldname="output.format")
    output_path = _take_str(entries, "output.path")
    precision_f = _take_float(entries, "output.precision")
    precision = 12 if precision_f is None else int(precision_f)
    if not 6 <= precision <= 17:
        raise ConfigError("output.precision must lie in [6, 17]", fieldname="output.precision")

    if entries:
        key, (_, lineno) = next(iter(entries.items()))
        raise ConfigError(f"unknown key {key!r}", line=lineno, fieldname=key)

    return RunConfig(
        mode=mode,
        input_state=input_state,
        analysis_frequency_hz=frequency,
        stages=stages,
        detection=detection,
        chain=tuple(chain_states),
        output_format=output_format,
        output_path=output_path,
        precision=precision,
    )


def parse_config_file(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from exc
    return parse_config(text)


def serialize_config(config: RunConfig) -> str:
    """Render a configuration back to its text form (round-trip stable)."""
    lines = [
        f"mode = {config.mode.value}",
        f"analysis_frequency_hz = {config.analysis_frequency_hz!r}",
        f"input.v_corr = {config.input_state.v_corr!r}",
        f"input.v_anti = {config.input_state.v_anti!r}",
    ]
    for i, stage in enumerate(config.stages, start=1):
        prefix = f"stage.{i}."
        lines.append(f"{prefix}gamma1 = {stage.gamma1!r}")
        lines.append(f"{prefix}gamma2 = {stage.gamma2!r}")
        lines.append(f"{prefix}tau = {stage.tau!r}")
        lines.append(f"{prefix}zeta = {stage.zeta!r}")
        lines.append(f"{prefix}theta = {stage.theta!r}")
        if stage.kappa is not None:
            lines.append(f"{prefix}kappa = {stage.kappa!r}")
        if stage.pump is not None:
            lines.append(f"{prefix}pump.p_pump = {stage.pump.p_pump!r}")
            lines.append(f"{prefix}pump.p_threshold = {stage.pump.p_threshold!r}")
            lines.append(f"{prefix}pump.chi = {stage.pump.chi!r}")
        if stage.kappa_policy is not None:
            lines.append(f"{prefix}kappa_policy = {stage.kappa_policy}")
        if stage.target_db is not None:
            lines.append(f"{prefix}target_db = {stage.target_db!r}")
    if config.detection is not None:
        lines.append(f"detection.zeta = {config.detection.zeta!r}")
        lines.append(f"detection.theta = {config.detection.theta!r}")
    for i, state in enumerate(config.chain, start=1):
        lines.append(f"chain.{i}.v_corr = {state.v_corr!r}")
        lines.append(f"chain.{i}.v_anti = {state.v_anti!r}")
    lines.append(f"output.format = {config.output_format}")
    if config.output_path is not None:
        lines.append(f"output.path = {config.output_path}")
    lines.append(f"output.precision = {config.precision}")
    return "\n".join(lines) + "\n"
