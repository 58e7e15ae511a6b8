"""PEPR stochastic updates and the finite-difference GRAPE baseline.

A PEPR update probes the fidelity response to a single commutator kick at a
random time t_r on a random channel and writes the result into all modes of
that channel at once:

    theta[j, k] -= alpha * sin(pi k t_r / t_f) * chi_j(t_r),

where alpha is the effective learning rate (alpha = alpha_0 * 2 / t_f in
terms of the delta-decomposition rate alpha_0).  One probe costs one run.

GRAPE evaluates the loss L = 1 - F once at theta and once per coordinate
shifted by epsilon, all with one shared random initial state, then applies
theta -= alpha * grad(L).  One iteration costs n_channels * n_modes + 1 runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import ModelSpec, StateVector, fidelity, sample_initial_state
from .parametrization import (
    ConstraintSpec,
    ControlParams,
    rescale_to_constraints,
    satisfies_constraints,
)
from .propagator import IntegratorConfig, RunLedger, propagate, propagate_with_kick, snap_to_grid

__all__ = [
    "PeprConfig",
    "GrapeConfig",
    "SusceptibilitySample",
    "PeprStepResult",
    "susceptibility",
    "pepr_step",
    "forward_difference",
    "grape_gradient",
    "grape_step",
    "sample_initial_params",
]


@dataclass(frozen=True)
class PeprConfig:
    alpha: float = 0.5
    constraints: ConstraintSpec | None = None
    max_reject: int = 1000
    # Rejected constrained attempts still compute a time evolution; they are
    # counted as runs unless this is switched off.
    count_rejected_runs: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.max_reject < 1:
            raise ValueError("max_reject must be >= 1")


@dataclass(frozen=True)
class GrapeConfig:
    alpha: float = 1.2
    epsilon: float = 1e-7
    constraints: ConstraintSpec | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class SusceptibilitySample:
    """One response probe: channel index, probe time, value chi_j(t_r)."""

    channel: int
    t_r: float
    chi: float


@dataclass(frozen=True)
class PeprStepResult:
    params: ControlParams
    accepted: bool
    rejections: int
    sample: SusceptibilitySample | None


def susceptibility(
    model: ModelSpec,
    params: ControlParams,
    initial: StateVector,
    channel: int,
    t_r: float,
    cfg: IntegratorConfig,
    ledger: RunLedger | None = None,
) -> SusceptibilitySample:
    """Linear response of the final-time fidelity to a kick of B_channel at t_r.

    Computed as the fidelity trace of the target-transformed initial state
    against the kicked and propagated (traceless) object.  Counts one run.
    """
    kicked = propagate_with_kick(model, params, initial, channel, t_r, cfg, ledger)
    chi = fidelity(model, initial, kicked)
    return SusceptibilitySample(channel=channel, t_r=t_r, chi=chi)


def apply_pepr_update(
    params: ControlParams, sample: SusceptibilitySample, alpha: float
) -> ControlParams:
    """Write one response sample into all modes of the probed channel."""
    k = np.arange(1, params.n_modes + 1)
    coeffs = np.array(params.coeffs)
    coeffs[sample.channel] -= alpha * sample.chi * np.sin(np.pi * k * sample.t_r / params.t_f)
    return params.with_coeffs(coeffs)


def pepr_step(
    model: ModelSpec,
    params: ControlParams,
    cfg: PeprConfig,
    rng: np.random.Generator,
    int_cfg: IntegratorConfig,
    ledger: RunLedger,
) -> PeprStepResult:
    """One PEPR update attempt sequence.

    Draws a fresh initial state, a uniform channel and a grid-snapped uniform
    probe time, computes the response and applies the multimode update.  With
    constraints set, a violating candidate is discarded and the whole draw is
    repeated (new state, channel and time), up to max_reject times; the step
    then reports failure and leaves the parameters unchanged.
    """
    sample = None
    for attempt in range(cfg.max_reject):
        initial = sample_initial_state(model, rng)
        channel = int(rng.integers(model.n_channels))
        t_r = snap_to_grid(rng.uniform(0.0, int_cfg.t_f), int_cfg)
        sample = susceptibility(
            model, params, initial, channel, t_r, int_cfg,
            ledger if cfg.count_rejected_runs else None,
        )
        candidate = apply_pepr_update(params, sample, cfg.alpha)
        if cfg.constraints is None or satisfies_constraints(
            candidate, cfg.constraints, model.rabi_pairs, model.coupling_channels
        ):
            if not cfg.count_rejected_runs:
                ledger.add(1)
            return PeprStepResult(
                params=candidate, accepted=True, rejections=attempt, sample=sample
            )
    return PeprStepResult(
        params=params, accepted=False, rejections=cfg.max_reject, sample=sample
    )


def forward_difference(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float) -> np.ndarray:
    """Forward-difference gradient (f(x + eps e_i) - f(x)) / eps, one f call per entry plus one."""
    x = np.asarray(x, dtype=np.float64)
    base = f(x)
    grad = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        shifted = np.array(x)
        shifted[idx] += eps
        grad[idx] = (f(shifted) - base) / eps
    return grad


def propagation_loss(
    model: ModelSpec,
    params: ControlParams,
    initial: StateVector,
    cfg: IntegratorConfig,
    ledger: RunLedger | None = None,
) -> float:
    """State infidelity 1 - F after a full time evolution; counts one run."""
    final = propagate(model, params, initial, 0.0, cfg.t_f, cfg)
    if ledger is not None:
        ledger.add(1)
    return 1.0 - fidelity(model, initial, final)


def grape_gradient(
    model: ModelSpec,
    params: ControlParams,
    cfg: GrapeConfig,
    initial: StateVector,
    int_cfg: IntegratorConfig,
    ledger: RunLedger,
) -> np.ndarray:
    """Forward-difference gradient of the loss, shape (n_channels, n_modes).

    All n_channels * n_modes + 1 loss evaluations share the given initial
    state and each one counts as a run.
    """

    def loss(coeffs: np.ndarray) -> float:
        return propagation_loss(
            model, params.with_coeffs(coeffs), initial, int_cfg, ledger
        )

    return forward_difference(loss, params.coeffs, cfg.epsilon)


def grape_step(
    model: ModelSpec,
    params: ControlParams,
    cfg: GrapeConfig,
    rng: np.random.Generator,
    int_cfg: IntegratorConfig,
    ledger: RunLedger,
) -> ControlParams:
    """One full-parameter GRAPE iteration, with constraint rescaling if set."""
    initial = sample_initial_state(model, rng)
    grad = grape_gradient(model, params, cfg, initial, int_cfg, ledger)
    updated = params.with_coeffs(params.coeffs - cfg.alpha * grad)
    if cfg.constraints is not None:
        updated = rescale_to_constraints(
            updated, cfg.constraints, model.rabi_pairs, model.coupling_channels
        )
    return updated


def sample_initial_params(
    model: ModelSpec,
    n_modes: int,
    rng: np.random.Generator,
    constraints: ConstraintSpec | None = None,
    t_f: float = 1.0,
) -> ControlParams:
    """Standard-normal coefficients, rescaled into the constraints when given."""
    params = ControlParams(rng.normal(size=(model.n_channels, n_modes)), t_f)
    if constraints is not None:
        params = rescale_to_constraints(
            params, constraints, model.rabi_pairs, model.coupling_channels
        )
    return params
