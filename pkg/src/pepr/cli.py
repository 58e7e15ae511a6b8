"""Command-line entry points.

Subcommands:
    optimize           run one experiment ensemble
    sweep-constraints  grid over the Rabi bound Omega_max * t_f (J_max = Omega_max)
    sweep-dissipation  grid over the dephasing rate gamma_z
    sweep-modes        grid over the number of sine modes per channel
    trace              emit a protocol time-series CSV for saved parameters
    selftest           matrix-oracle equivalence suite

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    emit_protocol_trace,
    load_config,
    run_experiment,
)
from .models import StateVector, make_model, product_state
from .parametrization import params_from_json, pulse_area
from .propagator import IntegratorConfig
from . import selftest as selftest_mod

_CONFIG_FLAGS = {
    "model": str,
    "method": str,
    "n_modes": int,
    "alpha": float,
    "epsilon": float,
    "n_traj": int,
    "n_fid": int,
    "max_runs": int,
    "steps_pow2": int,
    "gamma_z": float,
    "omega_max": float,
    "j_max": float,
    "seed": int,
    "checkpoint_start": int,
    "checkpoint_factor": float,
    "max_reject": int,
    "workers": int,
    "outdir": str,
}


def _experiment_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML or JSON file with ExperimentConfig fields")
    for name, typ in _CONFIG_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", type=typ, dest=name)
    return p


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        cfg = load_config(args.config)
        data = {k: getattr(cfg, k) for k in ExperimentConfig.__dataclass_fields__}
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return config_from_dict(data)


def _grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid grid {text!r}: {exc}") from exc


def _final_stats(result) -> tuple[float, float, float]:
    finals = [rec.final_infidelity for rec in result.records]
    row = result.summary[-1]
    return row.log_mean_infidelity, min(finals), max(finals)


def _cmd_optimize(args) -> int:
    cfg = _build_config(args)
    result = run_experiment(cfg)
    last = result.summary[-1]
    print(
        f"{cfg.model}/{cfg.method}: n_run={last.n_run} "
        f"log_mean_infidelity={last.log_mean_infidelity:.3f} "
        f"min={last.min_infidelity:.3e} max={last.max_infidelity:.3e}"
    )
    if result.outdir:
        print(f"outputs in {result.outdir}")
    return 0


def _run_sweep(args, field_values, sub_name, extra_cols=None) -> int:
    """Run one experiment per grid point and collect a sweep summary CSV."""
    base = _build_config(args)
    outdir = Path(base.outdir) if base.outdir else None
    rows = []
    for label, overrides in field_values:
        cfg = replace(base, **overrides)
        if outdir is not None:
            cfg = replace(cfg, outdir=str(outdir / f"{sub_name}_{label}"))
        cfg.validate()
        result = run_experiment(cfg)
        log_mean, best, worst = _final_stats(result)
        extras = extra_cols(result) if extra_cols else []
        rows.append((label, log_mean, best, worst, extras))
        extra_txt = " ".join(f"{v:.4f}" for v in extras)
        print(f"{sub_name}={label}: log_mean={log_mean:.3f} best={best:.3e} "
              f"worst={worst:.3e} {extra_txt}".rstrip())
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        header = f"{sub_name},log_mean_infidelity,min_infidelity,max_infidelity"
        n_extra = len(rows[0][4]) if rows else 0
        header += "".join(f",extra_{i + 1}" for i in range(n_extra))
        lines = [header]
        for label, log_mean, best, worst, extras in rows:
            line = f"{label},{log_mean!r},{best!r},{worst!r}"
            line += "".join(f",{v!r}" for v in extras)
            lines.append(line)
        (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")
        print(f"sweep summary in {outdir / 'sweep.csv'}")
    return 0


def _cmd_sweep_constraints(args) -> int:
    grid = _grid(args.omega_grid)
    if not grid:
        raise ConfigError("--omega-grid must contain at least one value")

    def pulse_areas_of_best(result):
        best = min(result.records, key=lambda r: r.final_infidelity)
        model = make_model(result.config.model, result.config.gamma_z)
        return [
            pulse_area(best.final_params, x_ch, y_ch)
            for x_ch, y_ch in model.rabi_pairs
        ]

    points = [(f"{w:g}", {"omega_max": w, "j_max": w}) for w in grid]
    return _run_sweep(args, points, "omega_max", pulse_areas_of_best)


def _cmd_sweep_dissipation(args) -> int:
    grid = _grid(args.gamma_grid)
    if not grid:
        raise ConfigError("--gamma-grid must contain at least one value")
    points = [(f"{g:g}", {"gamma_z": g}) for g in grid]
    return _run_sweep(args, points, "gamma_z")


def _cmd_sweep_modes(args) -> int:
    try:
        grid = [int(tok) for tok in args.modes_grid.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid --modes-grid: {exc}") from exc
    if not grid:
        raise ConfigError("--modes-grid must contain at least one value")
    points = [(str(n), {"n_modes": n}) for n in grid]
    return _run_sweep(args, points, "n_modes")


def _default_trace_states(model) -> list[StateVector]:
    if model.name == "hadamard":
        return [StateVector([0.0, 0.0, 1.0], xi=1)]
    # CNOT showcase states |00> and |10>
    return [product_state([0, 0, 1], [0, 0, 1]), product_state([0, 0, -1], [0, 0, 1])]


def _cmd_trace(args) -> int:
    try:
        params = params_from_json(Path(args.params).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read params file: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        model = make_model(args.model, args.gamma_z)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    int_cfg = IntegratorConfig(args.steps_pow2, params.t_f)
    emit_protocol_trace(
        model, params, _default_trace_states(model), int_cfg,
        args.out, n_samples=args.samples,
    )
    print(f"trace written to {args.out}")
    return 0


def _cmd_selftest(args) -> int:
    ok = selftest_mod.run(trials=args.trials, seed=args.seed, verbose=True)
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepr", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _experiment_parent()

    sub.add_parser("optimize", parents=[parent]).set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep-constraints", parents=[parent])
    p.add_argument("--omega-grid", required=True,
                   help="comma-separated Omega_max values (J_max follows Omega_max)")
    p.set_defaults(func=_cmd_sweep_constraints)

    p = sub.add_parser("sweep-dissipation", parents=[parent])
    p.add_argument("--gamma-grid", required=True, help="comma-separated gamma_z values")
    p.set_defaults(func=_cmd_sweep_dissipation)

    p = sub.add_parser("sweep-modes", parents=[parent])
    p.add_argument("--modes-grid", required=True, help="comma-separated n_modes values")
    p.set_defaults(func=_cmd_sweep_modes)

    p = sub.add_parser("trace")
    p.add_argument("--params", required=True, help="control-params JSON file")
    p.add_argument("--model", default="cnot", choices=["hadamard", "cnot"])
    p.add_argument("--gamma-z", type=float, default=0.0, dest="gamma_z")
    p.add_argument("--steps-pow2", type=int, default=12, dest="steps_pow2")
    p.add_argument("--samples", type=int, default=513)
    p.add_argument("--out", default="trace.csv")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("selftest")
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
