"""Seeded ensemble experiments: config, metrics, checkpointing, CSV/SVG output.

An experiment runs n_traj independent optimization trajectories against a
shared run budget.  Trajectory i draws its random streams from
SeedSequence(seed).spawn(n_traj)[i], split once more into an optimizer
stream and an evaluation stream, so results are a pure function of the
configuration and trajectories can execute in any order or in parallel.

Checkpoints are taken on a geometric run-count schedule (factor 1.2 by
default; factor 1.0 checkpoints every step).  Reported infidelities are
n_fid-state averages evaluated from the evaluation stream and are never
charged to the optimizer's run ledger.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .models import ModelSpec, StateVector, make_model, sample_initial_state, target_qubit_bloch
from .optimizers import (
    GrapeConfig,
    PeprConfig,
    grape_step,
    pepr_step,
    propagation_loss,
    sample_initial_params,
)
from .parametrization import (
    ConstraintSpec,
    ControlParams,
    evaluate_control,
    params_to_json,
    pulse_area,
)
from .propagator import IntegratorConfig, RunLedger, propagate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TrajectoryRecord",
    "SummaryRow",
    "ExperimentResult",
    "INFIDELITY_FLOOR",
    "load_config",
    "evaluate_infidelity",
    "log_mean_infidelity",
    "ensemble_variance",
    "run_experiment",
    "emit_protocol_trace",
]

INFIDELITY_FLOOR = 1e-16

_MODEL_DEFAULT_MODES = {"hadamard": 2, "cnot": 8}
_PEPR_DEFAULT_ALPHA = {"hadamard": 2.5, "cnot": 0.5}
_GRAPE_DEFAULT_ALPHA = 1.2


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass
class ExperimentConfig:
    model: str = "cnot"
    method: str = "pepr"
    n_modes: int | None = None
    alpha: float | None = None
    epsilon: float = 1e-7
    n_traj: int = 10
    n_fid: int = 10
    max_runs: int = 30000
    steps_pow2: int = 12
    t_f: float = 1.0
    gamma_z: float = 0.0
    omega_max: float | None = None
    j_max: float | None = None
    grid_points: int = 4096
    seed: int = 0
    checkpoint_start: int = 10
    checkpoint_factor: float = 1.2
    max_reject: int = 1000
    count_rejected_runs: bool = True
    workers: int | None = None
    outdir: str | None = None

    def validate(self) -> None:
        if self.model not in ("hadamard", "cnot"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.method not in ("pepr", "grape"):
            raise ConfigError(f"unknown method {self.method!r}")
        for name in ("n_traj", "n_fid", "max_runs", "max_reject", "checkpoint_start"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_modes is not None and self.n_modes < 1:
            raise ConfigError("n_modes must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.checkpoint_factor < 1.0:
            raise ConfigError("checkpoint_factor must be >= 1.0")
        if self.gamma_z < 0:
            raise ConfigError("gamma_z must be >= 0")
        if self.model == "hadamard" and self.gamma_z != 0.0:
            raise ConfigError("the Hadamard model does not support gamma_z != 0")
        if self.steps_pow2 < 6:
            raise ConfigError("steps_pow2 must be >= 6")
        if self.t_f <= 0:
            raise ConfigError("t_f must be > 0")

    def resolved_n_modes(self) -> int:
        return self.n_modes if self.n_modes is not None else _MODEL_DEFAULT_MODES[self.model]

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        if self.method == "grape":
            return _GRAPE_DEFAULT_ALPHA
        return _PEPR_DEFAULT_ALPHA[self.model]

    def constraint_spec(self) -> ConstraintSpec | None:
        if self.omega_max is None and self.j_max is None:
            return None
        return ConstraintSpec(self.omega_max, self.j_max, self.grid_points)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML or JSON file."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text.decode())
        except Exception as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root in {path} must be a table/object")
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**data)
    cfg.validate()
    return cfg


@dataclass
class TrajectoryRecord:
    trajectory_id: int
    seed: int
    checkpoints: list[tuple[int, float]]
    final_params: ControlParams
    rejections: int = 0
    step_errors: int = 0

    @property
    def final_infidelity(self) -> float:
        return self.checkpoints[-1][1]


@dataclass
class SummaryRow:
    n_run: int
    log_mean_infidelity: float
    variance: float
    min_infidelity: float
    max_infidelity: float
    n_clamped: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrajectoryRecord]
    summary: list[SummaryRow]
    outdir: Path | None = None


def evaluate_infidelity(
    model: ModelSpec,
    params: ControlParams,
    n_fid: int,
    rng: np.random.Generator,
    int_cfg: IntegratorConfig,
) -> float:
    """Average state infidelity over n_fid fresh initial states.

    Reporting only: the evolutions here are checkpoint diagnostics and do not
    count toward any run ledger.
    """
    if n_fid < 1:
        raise ValueError("n_fid must be >= 1")
    total = 0.0
    for _ in range(n_fid):
        state = sample_initial_state(model, rng)
        total += propagation_loss(model, params, state, int_cfg)
    return total / n_fid


def log_mean_infidelity(samples) -> float:
    """Mean of log10 over the ensemble; nonpositive samples clamp to the floor."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    clamped = np.maximum(arr, INFIDELITY_FLOOR)
    return float(np.mean(np.log10(clamped)))


def ensemble_variance(samples) -> float:
    """Unbiased sample variance of the infidelity ensemble."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("variance needs at least two samples")
    return float(np.var(arr, ddof=1))


def _checkpoint_after(threshold: int, factor: float) -> int:
    return max(threshold + 1, math.ceil(threshold * factor))


def _run_trajectory(cfg: ExperimentConfig, trajectory_id: int) -> TrajectoryRecord:
    model = make_model(cfg.model, cfg.gamma_z)
    int_cfg = IntegratorConfig(cfg.steps_pow2, cfg.t_f)
    n_modes = cfg.resolved_n_modes()
    alpha = cfg.resolved_alpha()
    constraints = cfg.constraint_spec()

    traj_ss = np.random.SeedSequence(cfg.seed).spawn(cfg.n_traj)[trajectory_id]
    opt_ss, eval_ss = traj_ss.spawn(2)
    opt_rng = np.random.default_rng(opt_ss)
    eval_rng = np.random.default_rng(eval_ss)

    params = sample_initial_params(model, n_modes, opt_rng, constraints, cfg.t_f)
    ledger = RunLedger()
    checkpoints: list[tuple[int, float]] = []
    rejections = 0
    step_errors = 0
    next_cp = cfg.checkpoint_start

    if cfg.method == "pepr":
        opt_cfg = PeprConfig(
            alpha=alpha,
            constraints=constraints,
            max_reject=cfg.max_reject,
            count_rejected_runs=cfg.count_rejected_runs,
        )
    else:
        opt_cfg = GrapeConfig(alpha=alpha, epsilon=cfg.epsilon, constraints=constraints)
    grape_cost = model.n_channels * n_modes + 1

    def record_checkpoint():
        infid = evaluate_infidelity(model, params, cfg.n_fid, eval_rng, int_cfg)
        checkpoints.append((ledger.count, infid))

    consecutive_failures = 0
    while True:
        if cfg.method == "pepr":
            if ledger.count >= cfg.max_runs:
                break
            result = pepr_step(model, params, opt_cfg, opt_rng, int_cfg, ledger)
            params = result.params
            rejections += result.rejections
            if not result.accepted:
                step_errors += 1
                consecutive_failures += 1
                # without run accounting for rejections a failed step makes no
                # budget progress; bail out rather than spin
                if not cfg.count_rejected_runs and consecutive_failures >= 10:
                    break
            else:
                consecutive_failures = 0
        else:
            if ledger.count + grape_cost > cfg.max_runs:
                break
            params = grape_step(model, params, opt_cfg, opt_rng, int_cfg, ledger)
        if ledger.count >= next_cp:
            record_checkpoint()
            while next_cp <= ledger.count:
                next_cp = _checkpoint_after(next_cp, cfg.checkpoint_factor)

    if not checkpoints or checkpoints[-1][0] != ledger.count:
        record_checkpoint()

    return TrajectoryRecord(
        trajectory_id=trajectory_id,
        seed=cfg.seed,
        checkpoints=checkpoints,
        final_params=params,
        rejections=rejections,
        step_errors=step_errors,
    )


def _summarize(records: list[TrajectoryRecord]) -> list[SummaryRow]:
    by_run: dict[int, list[float]] = {}
    for rec in records:
        for n_run, infid in rec.checkpoints:
            by_run.setdefault(n_run, []).append(infid)
    rows = []
    for n_run in sorted(by_run):
        vals = np.asarray(by_run[n_run])
        rows.append(SummaryRow(
            n_run=n_run,
            log_mean_infidelity=log_mean_infidelity(vals),
            variance=ensemble_variance(vals) if vals.size >= 2 else 0.0,
            min_infidelity=float(vals.min()),
            max_infidelity=float(vals.max()),
            n_clamped=int(np.sum(vals <= 0.0)),
        ))
    return rows


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full trajectory ensemble and emit CSV/JSON/SVG artifacts."""
    cfg.validate()
    ids = list(range(cfg.n_traj))
    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    workers = max(1, min(workers, cfg.n_traj))
    if workers == 1:
        records = [_run_trajectory(cfg, i) for i in ids]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trajectory, [cfg] * len(ids), ids))
    records.sort(key=lambda r: r.trajectory_id)
    summary = _summarize(records)

    outdir = None
    if cfg.outdir is not None:
        outdir = Path(cfg.outdir)
        try:
            _write_outputs(cfg, records, summary, outdir)
        except OSError as exc:
            raise RuntimeError(f"failed writing outputs to {outdir}: {exc}") from exc
    return ExperimentResult(config=cfg, records=records, summary=summary, outdir=outdir)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_outputs(cfg, records, summary, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = asdict(cfg)
    resolved["n_modes"] = cfg.resolved_n_modes()
    resolved["alpha"] = cfg.resolved_alpha()
    (outdir / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")

    lines = ["trajectory_id,n_run,infidelity"]
    for rec in records:
        for n_run, infid in rec.checkpoints:
            lines.append(f"{rec.trajectory_id},{n_run},{_fmt(infid)}")
    (outdir / "trajectories.csv").write_text("\n".join(lines) + "\n")

    lines = ["n_run,log_mean_infidelity,variance,min_infidelity,max_infidelity,n_clamped"]
    for row in summary:
        lines.append(
            f"{row.n_run},{_fmt(row.log_mean_infidelity)},{_fmt(row.variance)},"
            f"{_fmt(row.min_infidelity)},{_fmt(row.max_infidelity)},{row.n_clamped}"
        )
    (outdir / "summary.csv").write_text("\n".join(lines) + "\n")

    params_dir = outdir / "params"
    params_dir.mkdir(exist_ok=True)
    for rec in records:
        path = params_dir / f"traj_{rec.trajectory_id:03d}.json"
        path.write_text(params_to_json(rec.final_params) + "\n")

    xs = [row.n_run for row in summary]
    ys = [row.log_mean_infidelity for row in summary]
    _write_svg(
        outdir / "summary.svg", xs, ys,
        xlabel="N_run", ylabel="log10 mean infidelity",
        title=f"{cfg.model} / {cfg.method}",
    )


def _svg_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _write_svg(path: Path, xs, ys, xlabel: str, ylabel: str, title: str) -> None:
    """Minimal line plot (log-scaled x) over the summary data; CSV stays the
    interface of record."""
    w, h, ml, mr, mt, mb = 640, 420, 70, 20, 30, 50
    pw, ph = w - ml - mr, h - mt - mb
    lx = [math.log10(max(x, 1)) for x in xs]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _svg_ticks(x0, x1):
        parts.append(
            f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" y2="{mt + ph + 4}" stroke="black"/>'
            f'<text x="{px(t):.1f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">1e{t:.1f}</text>'
        )
    for t in _svg_ticks(y0, y1):
        parts.append(
            f'<line x1="{ml - 4}" y1="{py(t):.1f}" x2="{ml}" y2="{py(t):.1f}" stroke="black"/>'
            f'<text x="{ml - 8}" y="{py(t) + 4:.1f}" text-anchor="end" font-size="11">{t:.2f}</text>'
        )
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(lx, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#c22" stroke-width="1.5"/>')
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{h - 12}" text-anchor="middle" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>'
    )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def emit_protocol_trace(
    model: ModelSpec,
    params: ControlParams,
    initial_states: list[StateVector],
    int_cfg: IntegratorConfig,
    path: str | Path,
    n_samples: int = 513,
) -> None:
    """Time series of the control functions and the target-qubit Bloch vector.

    One block of rows per initial state (state_id column).  Every sample time
    must sit on the integration grid so the piecewise propagation is exact;
    pulse areas are appended as comment footer lines.
    """
    if (n_samples - 1) <= 0 or int_cfg.n_steps % (n_samples - 1) != 0:
        raise ValueError("n_samples - 1 must divide the number of integration steps")
    times = np.arange(n_samples) * (int_cfg.t_f / (n_samples - 1))
    n_pairs = len(model.rabi_pairs)

    header = ["state_id", "t"]
    header += list(model.channel_names)
    for i in range(n_pairs):
        header += [f"omega_abs_{i + 1}", f"phi_{i + 1}"]
    header += ["bloch_x", "bloch_y", "bloch_z"]
    lines = [",".join(header)]

    controls = np.array([
        evaluate_control(params, ch, times) for ch in range(model.n_channels)
    ])
    for state_id, state in enumerate(initial_states):
        current = state
        for i, t in enumerate(times):
            if i > 0:
                current = propagate(model, params, current, times[i - 1], t, int_cfg)
            row = [str(state_id), _fmt(t)]
            row += [_fmt(controls[ch, i]) for ch in range(model.n_channels)]
            for x_ch, y_ch in model.rabi_pairs:
                hx, hy = controls[x_ch, i], controls[y_ch, i]
                row.append(_fmt(math.hypot(hx, hy)))
                row.append(_fmt(math.atan2(-hy, hx)))
            row += [_fmt(v) for v in target_qubit_bloch(model, current)]
            lines.append(",".join(row))
    for i, (x_ch, y_ch) in enumerate(model.rabi_pairs):
        lines.append(f"# pulse_area_{i + 1} = {_fmt(pulse_area(params, x_ch, y_ch))}")
    Path(path).write_text("\n".join(lines) + "\n")
