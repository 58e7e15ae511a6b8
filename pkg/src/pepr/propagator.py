"""Fixed-step fourth-order Runge-Kutta propagation on the coordinate vectors.

The step size is h = t_f / 2**steps_pow2 and all span endpoints (including
the kick time t_r) live on the step grid, which makes piecewise propagation
compose exactly.  Controls are evaluated at the RK4 substep times t, t+h/2,
t+h from a cached sine table, so the inner loop is free of transcendentals.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .models import (
    CNOT_ID,
    ModelSpec,
    StateVector,
    cnot_rhs_raw,
    hadamard_rhs_raw,
    perturbation_map,
)

__all__ = [
    "IntegratorConfig",
    "RunLedger",
    "propagate",
    "propagate_with_kick",
    "snap_to_grid",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Step count 2**steps_pow2 over the protocol duration t_f."""

    steps_pow2: int = 14
    t_f: float = 1.0

    def __post_init__(self):
        if self.steps_pow2 < 6:
            raise ValueError("steps_pow2 must be >= 6")
        if not self.t_f > 0.0:
            raise ValueError("t_f must be positive")

    @property
    def n_steps(self) -> int:
        return 1 << self.steps_pow2

    @property
    def h(self) -> float:
        return self.t_f / self.n_steps


class RunLedger:
    """Counter of completed full-span time evolutions (the cost unit)."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        if count < 0:
            raise ValueError("count must be >= 0")
        self.count = count

    def add(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("ledger only counts forward")
        self.count += n

    def __repr__(self):
        return f"RunLedger(count={self.count})"


@lru_cache(maxsize=16)
def _sine_table(n_modes: int, steps_pow2: int, t_f: float) -> np.ndarray:
    """sin(pi k t / t_f) for k=1..n_modes on the half-step grid, shape (2N+1, n_modes)."""
    n = 1 << steps_pow2
    t_sub = np.arange(2 * n + 1) * (t_f / (2 * n))
    k = np.arange(1, n_modes + 1)
    table = np.sin(np.pi * np.outer(t_sub, k) / t_f)
    table.setflags(write=False)
    return table


@njit(cache=True)
def _rk4_span(model_id, y, xi, theta, sines, i0, i1, h, gamma_z):  # pragma: no cover
    dim = y.shape[0]
    n_ch = theta.shape[0]
    n_modes = theta.shape[1]
    u0 = np.empty(n_ch)
    u1 = np.empty(n_ch)
    u2 = np.empty(n_ch)
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    yt = np.empty(dim)
    for i in range(i0, i1):
        for c in range(n_ch):
            a0 = 0.0
            a1 = 0.0
            a2 = 0.0
            for k in range(n_modes):
                a0 += theta[c, k] * sines[2 * i, k]
                a1 += theta[c, k] * sines[2 * i + 1, k]
                a2 += theta[c, k] * sines[2 * i + 2, k]
            u0[c] = a0
            u1[c] = a1
            u2[c] = a2
        if model_id == 0:
            hadamard_rhs_raw(y, u0, gamma_z, xi, k1)
        else:
            cnot_rhs_raw(y, u0, gamma_z, xi, k1)
        for m in range(dim):
            yt[m] = y[m] + 0.5 * h * k1[m]
        if model_id == 0:
            hadamard_rhs_raw(yt, u1, gamma_z, xi, k2)
        else:
            cnot_rhs_raw(yt, u1, gamma_z, xi, k2)
        for m in range(dim):
            yt[m] = y[m] + 0.5 * h * k2[m]
        if model_id == 0:
            hadamard_rhs_raw(yt, u1, gamma_z, xi, k3)
        else:
            cnot_rhs_raw(yt, u1, gamma_z, xi, k3)
        for m in range(dim):
            yt[m] = y[m] + h * k3[m]
        if model_id == 0:
            hadamard_rhs_raw(yt, u2, gamma_z, xi, k4)
        else:
            cnot_rhs_raw(yt, u2, gamma_z, xi, k4)
        for m in range(dim):
            y[m] += h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
    return y


def _grid_index(t: float, cfg: IntegratorConfig, name: str) -> int:
    i = round(t / cfg.h)
    if not 0 <= i <= cfg.n_steps or abs(i * cfg.h - t) > 1e-12 * cfg.t_f:
        raise ValueError(f"{name}={t} is not on the integration grid (h={cfg.h})")
    return i


def snap_to_grid(t: float, cfg: IntegratorConfig) -> float:
    """Nearest integration grid point to t, clipped to [0, t_f]."""
    i = min(max(round(t / cfg.h), 0), cfg.n_steps)
    return i * cfg.h


def propagate(
    model: ModelSpec,
    params,
    state: StateVector,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
) -> StateVector:
    """RK4-propagate a state from t0 to t1 under the parametrized controls.

    Both endpoints must be multiples of the step h.  Does not touch any run
    ledger; accounting belongs to the caller.
    """
    if params.t_f != cfg.t_f:
        raise ValueError(f"params.t_f={params.t_f} does not match cfg.t_f={cfg.t_f}")
    i0 = _grid_index(t0, cfg, "t0")
    i1 = _grid_index(t1, cfg, "t1")
    if i0 > i1:
        raise ValueError(f"t0={t0} must not exceed t1={t1}")
    sines = _sine_table(params.n_modes, cfg.steps_pow2, cfg.t_f)
    y = np.array(state.coords)
    _rk4_span(
        model.model_id, y, float(state.xi), params.coeffs, sines,
        i0, i1, cfg.h, model.gamma_z,
    )
    return StateVector(y, xi=state.xi)


def propagate_with_kick(
    model: ModelSpec,
    params,
    initial: StateVector,
    channel: int,
    t_r: float,
    cfg: IntegratorConfig,
    ledger: RunLedger | None = None,
) -> StateVector:
    """Propagate 0 -> t_r, apply the commutator kick i[B_channel, .], propagate to t_f.

    The two spans together cover [0, t_f] once, so the whole probe counts as
    exactly one run; the ledger (when given) is incremented by 1.
    """
    at_kick = propagate(model, params, initial, 0.0, t_r, cfg)
    kicked = perturbation_map(model, channel, at_kick)
    result = propagate(model, params, kicked, t_r, cfg.t_f, cfg)
    if ledger is not None:
        ledger.add(1)
    return result
