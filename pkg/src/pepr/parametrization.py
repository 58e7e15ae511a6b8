"""Sine-mode control parametrization and amplitude-constraint math.

Every control function is a truncated sine series over [0, t_f],

    theta_j(t) = sum_{k=1..n_modes} coeffs[j, k-1] * sin(pi * k * t / t_f),

so a pulse is fully described by a real coefficient matrix with one row per
control channel.  Channels are plain 0-based row indices; mode numbers k are
1-based because they enter the sine argument directly.  The dual coefficients
g_k(t) = (2/t_f) * sin(pi * k * t / t_f) decompose a delta function in this
basis and drive the response-projection update.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ControlParams",
    "ConstraintSpec",
    "evaluate_control",
    "projection_coefficient",
    "max_rabi_amplitude",
    "max_abs_control",
    "satisfies_constraints",
    "rescale_to_constraints",
    "pulse_area",
    "params_to_json",
    "params_from_json",
]

MIN_GRID_POINTS = 256


@dataclass(frozen=True, eq=False)
class ControlParams:
    """Coefficient table of all control channels plus the protocol duration."""

    coeffs: np.ndarray  # (n_channels, n_modes)
    t_f: float = 1.0

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.float64, copy=True, order="C")
        if arr.ndim != 2:
            raise ValueError(f"coeffs must be 2-dimensional, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coeffs must be finite")
        if not (self.t_f > 0.0 and np.isfinite(self.t_f)):
            raise ValueError(f"t_f must be positive and finite, got {self.t_f}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "t_f", float(self.t_f))

    @property
    def n_channels(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    def with_coeffs(self, coeffs: np.ndarray) -> "ControlParams":
        return ControlParams(coeffs, self.t_f)


@dataclass(frozen=True)
class ConstraintSpec:
    """Amplitude bounds checked on a uniform time grid.

    omega_max bounds the Rabi amplitude sqrt(h_x^2 + h_y^2) of each (x, y)
    channel pair; j_max bounds |J(t)| of each coupling channel.  Either bound
    may be None (unconstrained).  grid_points sets the resolution of the
    evaluation grid; 4096 oversamples mode numbers k <= 8 by more than 250x.
    """

    omega_max: float | None = None
    j_max: float | None = None
    grid_points: int = 4096

    def __post_init__(self):
        if self.omega_max is not None and self.omega_max < 0:
            raise ValueError("omega_max must be >= 0")
        if self.j_max is not None and self.j_max < 0:
            raise ValueError("j_max must be >= 0")
        if self.grid_points < MIN_GRID_POINTS:
            raise ValueError(f"grid_points must be >= {MIN_GRID_POINTS}")


def _check_channel(params: ControlParams, channel: int) -> None:
    if not 0 <= channel < params.n_channels:
        raise ValueError(f"channel {channel} out of range [0, {params.n_channels})")


def evaluate_control(params: ControlParams, channel: int, t):
    """Evaluate one control function at time(s) t in [0, t_f]."""
    _check_channel(params, channel)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > params.t_f):
        raise ValueError(f"t must lie in [0, {params.t_f}]")
    k = np.arange(1, params.n_modes + 1)
    basis = np.sin(np.pi * np.multiply.outer(t_arr, k) / params.t_f)
    value = basis @ params.coeffs[channel]
    return float(value) if t_arr.ndim == 0 else value


def projection_coefficient(params: ControlParams, mode: int, t_r: float) -> float:
    """Dual coefficient g_k(t_r) = (2/t_f) sin(pi k t_r / t_f) for mode k."""
    if not 1 <= mode <= params.n_modes:
        raise ValueError(f"mode {mode} out of range [1, {params.n_modes}]")
    if not 0.0 <= t_r <= params.t_f:
        raise ValueError(f"t_r must lie in [0, {params.t_f}]")
    return 2.0 / params.t_f * float(np.sin(np.pi * mode * t_r / params.t_f))


def _grid(params: ControlParams, grid_points: int) -> np.ndarray:
    # grid_points intervals; the endpoint-inclusive sampling keeps dyadic
    # extrema (for example t_f/2 for mode 1) exactly on the grid
    return np.linspace(0.0, params.t_f, grid_points + 1)


def _channel_on_grid(params: ControlParams, channel: int, grid_points: int) -> np.ndarray:
    return evaluate_control(params, channel, _grid(params, grid_points))


def max_rabi_amplitude(
    params: ControlParams,
    x_channel: int,
    y_channel: int,
    constraints: ConstraintSpec | None = None,
) -> float:
    """Grid maximum of the Rabi amplitude sqrt(h_x^2 + h_y^2) of one pair."""
    n = constraints.grid_points if constraints is not None else 4096
    hx = _channel_on_grid(params, x_channel, n)
    hy = _channel_on_grid(params, y_channel, n)
    return float(np.max(np.hypot(hx, hy)))


def max_abs_control(
    params: ControlParams,
    channel: int,
    constraints: ConstraintSpec | None = None,
) -> float:
    """Grid maximum of |theta_j(t)| for a single channel."""
    n = constraints.grid_points if constraints is not None else 4096
    return float(np.max(np.abs(_channel_on_grid(params, channel, n))))


def satisfies_constraints(
    params: ControlParams,
    constraints: ConstraintSpec,
    rabi_pairs: Iterable[tuple[int, int]],
    coupling_channels: Iterable[int] = (),
) -> bool:
    """True if all amplitude bounds hold on the evaluation grid.

    A relative guard of 1e-9 absorbs the rounding of an exact rescale, so
    rescale_to_constraints output always satisfies its own bounds.
    """
    guard = 1.0 + 1e-9
    if constraints.omega_max is not None:
        for x_ch, y_ch in rabi_pairs:
            if max_rabi_amplitude(params, x_ch, y_ch, constraints) > constraints.omega_max * guard:
                return False
    if constraints.j_max is not None:
        for ch in coupling_channels:
            if max_abs_control(params, ch, constraints) > constraints.j_max * guard:
                return False
    return True


def rescale_to_constraints(
    params: ControlParams,
    constraints: ConstraintSpec,
    rabi_pairs: Iterable[tuple[int, int]],
    coupling_channels: Iterable[int] = (),
) -> ControlParams:
    """Divide each channel group by max(1, grid_max / bound).

    Leaves already-admissible groups untouched; the result satisfies the
    bounds on the evaluation grid.  Idempotent.
    """
    coeffs = np.array(params.coeffs)
    if constraints.omega_max is not None:
        for x_ch, y_ch in rabi_pairs:
            amp = max_rabi_amplitude(params, x_ch, y_ch, constraints)
            factor = max(1.0, amp / constraints.omega_max) if constraints.omega_max > 0 else np.inf
            if factor > 1.0:
                coeffs[x_ch] /= factor
                coeffs[y_ch] /= factor
    if constraints.j_max is not None:
        for ch in coupling_channels:
            amp = max_abs_control(params, ch, constraints)
            factor = max(1.0, amp / constraints.j_max) if constraints.j_max > 0 else np.inf
            if factor > 1.0:
                coeffs[ch] /= factor
    return params.with_coeffs(coeffs)


def pulse_area(
    params: ControlParams,
    x_channel: int,
    y_channel: int,
    grid_points: int = 4096,
) -> float:
    """Trapezoid quadrature of the Rabi amplitude over [0, t_f]."""
    hx = _channel_on_grid(params, x_channel, grid_points)
    hy = _channel_on_grid(params, y_channel, grid_points)
    return float(np.trapezoid(np.hypot(hx, hy), dx=params.t_f / grid_points))


def params_to_json(params: ControlParams) -> str:
    """Serialize to the channel-major wire format {"t_f": ..., "coeffs": [[...]]}."""
    return json.dumps({"t_f": params.t_f, "coeffs": params.coeffs.tolist()})


def params_from_json(text: str) -> ControlParams:
    obj = json.loads(text)
    try:
        return ControlParams(np.asarray(obj["coeffs"], dtype=np.float64), float(obj["t_f"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed control-params JSON: {exc}") from exc
