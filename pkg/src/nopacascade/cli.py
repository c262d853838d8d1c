"""Command-line interface: eval, sweep, fixedpoint, fit-kappa, fit-chain,
optimize-kappa, project and check-duan subcommands over a shared run
configuration.

Exit codes: 0 success, 2 configuration/usage error, 3 model domain error,
4 unwritable output path, 5 solver or fit did not converge.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .analysis import (
    OPTIMAL_KAPPA,
    FitResult,
    fit_chain,
    fit_kappa,
    optimal_kappa,
    projection_improved_loss,
    sweep_gamma,
    turning_point,
)
from .config import (
    POLICY_FIT,
    POLICY_OPTIMAL,
    ConfigError,
    RunConfig,
    StageConfig,
    parse_config_file,
)
from .states import (
    EprState,
    db_to_variance,
    duan_sum,
    squeezing_from_variances,
    variance_to_db,
)
from .transfer import (
    MeasurementContext,
    ModelMode,
    NopaParams,
    StageError,
    detection_map,
    stage_map,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_NO_CONVERGENCE = 5


def _fmt(x: float, precision: int) -> str:
    return f"{x:.{precision}g}"


def _fmt_db(db: float) -> str:
    return f"{db:+.1f}"


def _write_output(path: Optional[str], lines: list[str]):
    """Write CSV lines to a file (LF endings) or echo them to stdout."""
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _UnwritableOutput(f"cannot write {path!r}: {exc}") from exc


class _UnwritableOutput(Exception):
    pass


def _resolve_stage_kappa(
    stage: StageConfig,
    state: EprState,
    frequency: float,
    mode: ModelMode,
) -> float:
    fixed = stage.fixed_kappa()
    if fixed is not None:
        return fixed
    geometry = stage.geometry()
    ctx = stage.context(frequency)
    if stage.kappa_policy == POLICY_OPTIMAL:
        return optimal_kappa(state, geometry, ctx, mode).kappa_opt
    return fit_kappa(stage.target_db, state, geometry, ctx, mode).kappa_fit


def _run_cascade(config: RunConfig, mode: ModelMode):
    """Resolve per-stage couplings in cascade order and fold the input through.

    Returns (states, kappas): the state after each stage (detection applied
    to the last) and the coupling used per stage.
    """
    state = config.input_state
    states: list[EprState] = []
    kappas: list[float] = []
    for index, stage in enumerate(config.stages, start=1):
        try:
            kappa = _resolve_stage_kappa(stage, state, config.analysis_frequency_hz, mode)
            nopa = stage.geometry().with_kappa(kappa)
            state = stage_map(state, nopa, stage.context(config.analysis_frequency_hz), mode)
        except StageError:
            raise
        except ValueError as exc:
            raise StageError(index, exc) from exc
        states.append(state)
        kappas.append(kappa)
    if config.detection is not None:
        states[-1] = detection_map(states[-1], config.detection)
    return states, kappas


def _single_stage(config: RunConfig) -> StageConfig:
    return config.stages[0]


def cmd_eval(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
             args) -> int:
    states, kappas = _run_cascade(config, mode)

    header = (
        f"{'stage':>5}  {'gamma1':>8}  {'gamma2':>8}  {'kappa':>10}  "
        f"{'v_corr':>10}  {'v_anti':>10}  {'db_corr':>8}  {'db_anti':>8}  "
        f"{'duan_sum':>8}  entangled"
    )
    print(header)

    def human_row(label, g1, g2, kappa, state):
        duan = duan_sum(state)
        flag = "yes" if duan.entangled else "no"
        print(
            f"{label:>5}  {g1:>8}  {g2:>8}  {kappa:>10}  "
            f"{state.v_corr:>10.4g}  {state.v_anti:>10.4g}  "
            f"{_fmt_db(state.db_corr):>8}  {_fmt_db(state.db_anti):>8}  "
            f"{duan.sum:>8.4g}  {flag}"
        )

    human_row("input", "-", "-", "-", config.input_state)
    for i, (stage, state, kappa) in enumerate(zip(config.stages, states, kappas), start=1):
        human_row(str(i), f"{stage.gamma1:.4g}", f"{stage.gamma2:.4g}",
                  f"{kappa:.6g}", state)

    csv_lines = ["stage,gamma1,gamma2,kappa_used,v_corr,v_anti,db_corr,db_anti,duan_sum,entangled"]

    def csv_row(label, g1, g2, kappa, state):
        duan = duan_sum(state)
        cells = [
            label, g1, g2, kappa,
            _fmt(state.v_corr, precision), _fmt(state.v_anti, precision),
            _fmt(state.db_corr, precision), _fmt(state.db_anti, precision),
            _fmt(duan.sum, precision), "true" if duan.entangled else "false",
        ]
        csv_lines.append(",".join(cells))

    csv_row("0", "", "", "", config.input_state)
    for i, (stage, state, kappa) in enumerate(zip(config.stages, states, kappas), start=1):
        csv_row(str(i), _fmt(stage.gamma1, precision), _fmt(stage.gamma2, precision),
                _fmt(kappa, precision), state)
    _write_output(out, csv_lines)
    return EXIT_OK


def _parse_range(text: str, name: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{name} must be LO:HI, got {text!r}", fieldname=name)
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{name} bounds must be numbers, got {text!r}", fieldname=name) from None
    if hi < lo:
        raise ConfigError(f"{name} upper bound below lower bound", fieldname=name)
    return lo, hi


def cmd_sweep(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
              args) -> int:
    stage = _single_stage(config)
    if stage.kappa_policy == POLICY_FIT:
        raise ConfigError(
            "sweep supports a fixed kappa or the optimal policy, not fit",
            fieldname="stage.1.kappa_policy",
        )
    policy = OPTIMAL_KAPPA if stage.kappa_policy == POLICY_OPTIMAL else stage.fixed_kappa()
    g1_lo, g1_hi = _parse_range(args.gamma1, "--gamma1")
    g2_lo, g2_hi = _parse_range(args.gamma2, "--gamma2")
    steps = args.steps
    if steps < 1:
        raise ConfigError("--steps must be >= 1", fieldname="--steps")
    g1_axis = np.linspace(g1_lo, g1_hi, steps)
    g2_axis = np.linspace(g2_lo, g2_hi, steps)
    grid = sweep_gamma(
        config.input_state,
        stage.context(config.analysis_frequency_hz),
        policy,
        g1_axis,
        g2_axis,
        stage.tau,
        mode,
    )
    lines = ["gamma1,gamma2,kappa_used,v_corr,db_corr"]
    for i, g1 in enumerate(grid.gamma1_axis):
        for j, g2 in enumerate(grid.gamma2_axis):
            db = grid.values[i, j]
            cells = [
                _fmt(g1, precision), _fmt(g2, precision),
                _fmt(grid.kappa_used[i, j], precision),
                _fmt(db_to_variance(db), precision),
                _fmt(db, precision),
            ]
            lines.append(",".join(cells))
    _write_output(out, lines)
    return EXIT_OK


def cmd_fixedpoint(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                   args) -> int:
    stage = _single_stage(config)
    kappa = _resolve_stage_kappa(stage, config.input_state,
                                 config.analysis_frequency_hz, mode)
    nopa = stage.geometry().with_kappa(kappa)
    ctx = stage.context(config.analysis_frequency_hz)
    r_prime = squeezing_from_variances(config.input_state).r_prime
    result = turning_point(nopa, ctx, r_prime, mode)
    if result.converged:
        print(
            f"turning point: v_corr = {result.v_star:.6g} "
            f"({_fmt_db(result.db_star)} dB), {result.iterations} iterations, "
            f"bracket {result.bracket:.3g}"
        )
    else:
        print(f"turning point search did not converge: {result.status}")
    lines = ["v_star,db_star,iterations,bracket,status"]
    lines.append(",".join([
        _fmt(result.v_star, precision), _fmt(result.db_star, precision),
        str(result.iterations), _fmt(result.bracket, precision), result.status,
    ]))
    _write_output(out, lines)
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def _print_fit(label: str, fit: FitResult):
    status = "converged" if fit.converged else "NOT converged"
    print(f"{label}: kappa = {fit.kappa_fit:.6g}, residual = {fit.residual_db:.3g} dB ({status})")


def cmd_fit_kappa(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                  args) -> int:
    stage = _single_stage(config)
    target_db = args.target_db if args.target_db is not None else stage.target_db
    if target_db is None:
        raise ConfigError("fit-kappa needs --target-db or stage.1.target_db",
                          fieldname="stage.1.target_db")
    fit = fit_kappa(target_db, config.input_state, stage.geometry(),
                    stage.context(config.analysis_frequency_hz), mode)
    _print_fit("fit", fit)
    lines = ["kappa_fit,residual_db,converged"]
    lines.append(",".join([
        _fmt(fit.kappa_fit, precision), _fmt(fit.residual_db, precision),
        "true" if fit.converged else "false",
    ]))
    _write_output(out, lines)
    return EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def cmd_fit_chain(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                  args) -> int:
    if len(config.chain) < 2:
        raise ConfigError("fit-chain needs chain.1..chain.N entries (N >= 2)",
                          fieldname="chain")
    n_stages = len(config.chain) - 1
    if len(config.stages) != n_stages:
        raise ConfigError(
            f"fit-chain with {len(config.chain)} chain states needs {n_stages} stages, "
            f"got {len(config.stages)}",
            fieldname="stage",
        )
    geometries = [s.geometry() for s in config.stages]
    contexts = [s.context(config.analysis_frequency_hz) for s in config.stages]
    fits = fit_chain(config.chain, geometries, contexts, mode)
    lines = ["stage,kappa_fit,residual_db,converged"]
    for i, fit in enumerate(fits, start=2):
        _print_fit(f"stage {i}", fit)
        lines.append(",".join([
            str(i), _fmt(fit.kappa_fit, precision), _fmt(fit.residual_db, precision),
            "true" if fit.converged else "false",
        ]))
    _write_output(out, lines)
    return EXIT_OK if all(f.converged for f in fits) else EXIT_NO_CONVERGENCE


def cmd_optimize_kappa(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                       args) -> int:
    stage = _single_stage(config)
    result = optimal_kappa(config.input_state, stage.geometry(),
                           stage.context(config.analysis_frequency_hz), mode)
    db = variance_to_db(result.v_out_min)
    print(
        f"optimal coupling: kappa = {result.kappa_opt:.6g}, "
        f"v_corr = {result.v_out_min:.6g} ({_fmt_db(db)} dB)"
    )
    lines = ["kappa_opt,v_out_min,db_out_min"]
    lines.append(",".join([
        _fmt(result.kappa_opt, precision), _fmt(result.v_out_min, precision),
        _fmt(db, precision),
    ]))
    _write_output(out, lines)
    return EXIT_OK


def cmd_project(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                args) -> int:
    stage = _single_stage(config)
    kappa = _resolve_stage_kappa(stage, config.input_state,
                                 config.analysis_frequency_hz, mode)
    nopa = stage.geometry().with_kappa(kappa)
    db = projection_improved_loss(
        config.input_state, nopa, args.improved_gamma2,
        stage.context(config.analysis_frequency_hz), mode,
        reoptimize_kappa=args.reoptimize_kappa,
    )
    print(
        f"projected output with gamma2 = {args.improved_gamma2:.6g}: "
        f"{_fmt_db(db)} dB"
    )
    lines = ["improved_gamma2,db_out"]
    lines.append(",".join([_fmt(args.improved_gamma2, precision), _fmt(db, precision)]))
    _write_output(out, lines)
    return EXIT_OK


def cmd_check_duan(config: RunConfig, mode: ModelMode, out: Optional[str], precision: int,
                   args) -> int:
    duan = duan_sum(config.input_state)
    verdict = "entangled" if duan.entangled else "not entangled"
    print(f"inseparability sum = {duan.sum:.6g} -> {verdict}")
    lines = ["duan_sum,entangled"]
    lines.append(",".join([_fmt(duan.sum, precision),
                           "true" if duan.entangled else "false"]))
    _write_output(out, lines)
    return EXIT_OK


_COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "fixedpoint": cmd_fixedpoint,
    "fit-kappa": cmd_fit_kappa,
    "fit-chain": cmd_fit_chain,
    "optimize-kappa": cmd_optimize_kappa,
    "project": cmd_project,
    "check-duan": cmd_check_duan,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--mode", choices=[m.value for m in ModelMode],
                        help="override the configured model mode")
    common.add_argument("--out", help="write machine-readable CSV to this path")
    common.add_argument("--precision", type=int,
                        help="significant digits for CSV output (6..17)")

    parser = argparse.ArgumentParser(
        prog="nopacascade",
        description="Cascaded NOPA entanglement enhancement simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("eval", parents=[common],
                   help="propagate the input state through the configured stages")
    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="sweep the stage-1 output over a gamma1 x gamma2 grid")
    p_sweep.add_argument("--gamma1", required=True, metavar="LO:HI")
    p_sweep.add_argument("--gamma2", required=True, metavar="LO:HI")
    p_sweep.add_argument("--steps", type=int, required=True,
                         help="points per axis (endpoints included)")
    sub.add_parser("fixedpoint", parents=[common],
                   help="locate the enhancement turning point of stage 1")
    p_fit = sub.add_parser("fit-kappa", parents=[common],
                           help="fit the stage-1 coupling to a target output level")
    p_fit.add_argument("--target-db", type=float, dest="target_db")
    sub.add_parser("fit-chain", parents=[common],
                   help="fit per-stage couplings to a measured chain")
    sub.add_parser("optimize-kappa", parents=[common],
                   help="find the coupling minimizing the stage-1 output variance")
    p_proj = sub.add_parser("project", parents=[common],
                            help="re-evaluate stage 1 with an improved intra-cavity loss")
    p_proj.add_argument("--improved-gamma2", type=float, required=True,
                        dest="improved_gamma2")
    p_proj.add_argument("--reoptimize-kappa", action="store_true",
                        dest="reoptimize_kappa")
    sub.add_parser("check-duan", parents=[common],
                   help="evaluate the inseparability criterion for the input state")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = parse_config_file(args.config)
        mode = ModelMode(args.mode) if args.mode else config.mode
        out = args.out if args.out is not None else config.output_path
        precision = args.precision if args.precision is not None else config.precision
        if not 6 <= precision <= 17:
            raise ConfigError("--precision must lie in [6, 17]", fieldname="--precision")
        return _COMMANDS[args.command](config, mode, out, precision, args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except _UnwritableOutput as exc:
        print(exc, file=sys.stderr)
        return EXIT_IO
    except StageError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
