"""Matrix-oracle equivalence suite behind `pepr selftest`.

Each check compares the hand-written coordinate machinery against brute-force
complex-matrix computation and prints one PASS/FAIL line.
"""
from __future__ import annotations

import numpy as np

from . import oracle
from .models import (
    StateVector,
    eom_rhs,
    fidelity,
    make_model,
    perturbation_map,
    sample_initial_state,
)
from .parametrization import ControlParams
from .propagator import IntegratorConfig, propagate

EOM_TOL = 1e-12
MAP_TOL = 1e-12
FID_TOL = 1e-12
ROUNDTRIP_TOL = 1e-14
PROP_TOL = 1e-10

# the printed single-qubit commutator maps carry 1/2 relative to the raw
# commutator in the half-normalized Bloch layout
_MAP_FACTOR = {"hadamard": 2.0, "cnot": 1.0}


def _check_eom(model, rng, trials):
    worst = 0.0
    for _ in range(trials):
        for xi in (0, 1):
            state = StateVector(rng.normal(size=model.dim), xi=xi)
            controls = rng.normal(size=model.n_channels)
            lhs = eom_rhs(model, state, controls).coords
            m = oracle.to_matrix(model, state)
            rhs = oracle.from_matrix(
                model, oracle.lindblad_rhs(model, m, controls, model.gamma_z)
            ).coords
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def _check_maps(model, rng, trials):
    factor = _MAP_FACTOR[model.name]
    worst = 0.0
    for _ in range(trials):
        state = StateVector(rng.normal(size=model.dim), xi=int(rng.integers(2)))
        for ch in range(model.n_channels):
            mapped = perturbation_map(model, ch, state)
            if mapped.xi != 0:
                return np.inf
            m = oracle.to_matrix(model, state)
            b = oracle.control_operators(model)[ch]
            comm = oracle.from_matrix(model, 1j * (b @ m - m @ b)).coords
            worst = max(worst, float(np.max(np.abs(factor * mapped.coords - comm))))
    return worst


def _check_fidelity(model, rng, trials):
    worst = 0.0
    for _ in range(trials):
        initial = sample_initial_state(model, rng)
        final = StateVector(rng.normal(size=model.dim), xi=int(rng.integers(2)))
        direct = fidelity(model, initial, final)
        brute = oracle.fidelity_matrix(
            model, oracle.to_matrix(model, initial), oracle.to_matrix(model, final)
        )
        worst = max(worst, abs(direct - brute))
    return worst


def _check_roundtrip(model, rng, trials):
    worst = 0.0
    for _ in range(trials):
        state = StateVector(rng.normal(size=model.dim), xi=int(rng.integers(2)))
        back = oracle.from_matrix(model, oracle.to_matrix(model, state))
        worst = max(worst, float(np.max(np.abs(back.coords - state.coords))))
        if back.xi != state.xi:
            return np.inf
    return worst


def _check_propagation(model, rng, trials):
    cfg = IntegratorConfig(steps_pow2=10)
    worst = 0.0
    for _ in range(trials):
        params = ControlParams(rng.normal(size=(model.n_channels, 4)))
        state = sample_initial_state(model, rng)
        vec = propagate(model, params, state, 0.0, cfg.t_f, cfg)
        mat = oracle.propagate_matrix(
            model, params, oracle.to_matrix(model, state), 0.0, cfg.t_f, cfg
        )
        worst = max(
            worst,
            float(np.max(np.abs(vec.coords - oracle.from_matrix(model, mat).coords))),
        )
    return worst


def run(trials: int = 300, seed: int = 0, verbose: bool = True) -> bool:
    rng = np.random.default_rng(seed)
    models = {
        "hadamard": make_model("hadamard"),
        "cnot": make_model("cnot", gamma_z=0.05),
        "cnot unitary": make_model("cnot"),
    }
    checks = []
    for label, model in models.items():
        checks.append((f"eom vs lindblad matrix [{label}]", _check_eom(model, rng, trials), EOM_TOL))
    for label in ("hadamard", "cnot unitary"):
        model = models[label]
        checks.append((f"commutator maps [{label}]", _check_maps(model, rng, trials), MAP_TOL))
        checks.append((f"fidelity quadratic form [{label}]", _check_fidelity(model, rng, trials), FID_TOL))
        checks.append((f"layout roundtrip [{label}]", _check_roundtrip(model, rng, trials), ROUNDTRIP_TOL))
    for label in ("hadamard", "cnot", "cnot unitary"):
        checks.append(
            (f"propagation vs matrix rk4 [{label}]", _check_propagation(models[label], rng, 3), PROP_TOL)
        )

    all_ok = True
    for name, worst, tol in checks:
        ok = worst <= tol
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: max dev {worst:.3e} (tol {tol:.0e})")
    return all_ok
