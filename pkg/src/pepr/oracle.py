"""Brute-force complex-matrix reference for the vector-coordinate machinery.

Everything here works directly on 2x2 / 4x4 density matrices: Hamiltonian
assembly from the control operators, the Lindblad right-hand side, exact
unitary kicks, an independent fixed-step RK4, and the trace fidelity.  The
module exists to validate the hand-written coordinate equations and to
supply expected values in tests; it is never used in the optimization path.
"""
from __future__ import annotations

import numpy as np

from .models import CNOT_ID, HADAMARD_ID, ModelSpec, StateVector

__all__ = [
    "control_operators",
    "target_matrix",
    "to_matrix",
    "from_matrix",
    "hamiltonian",
    "lindblad_rhs",
    "unitary_kick",
    "propagate_matrix",
    "fidelity_matrix",
]

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

_HEISENBERG = np.kron(SX, SX) + np.kron(SY, SY) + np.kron(SZ, SZ)

_OPERATORS = {
    HADAMARD_ID: (SX, SY),
    CNOT_ID: (
        np.kron(SX, ID2), np.kron(SY, ID2),
        np.kron(ID2, SX), np.kron(ID2, SY),
        _HEISENBERG,
    ),
}

_DEPHASERS = (np.kron(SZ, ID2), np.kron(ID2, SZ))

_HADAMARD_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_CNOT_GATE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def control_operators(model: ModelSpec) -> tuple[np.ndarray, ...]:
    return _OPERATORS[model.model_id]


def target_matrix(model: ModelSpec) -> np.ndarray:
    return _HADAMARD_GATE if model.model_id == HADAMARD_ID else _CNOT_GATE


def to_matrix(model: ModelSpec, state: StateVector) -> np.ndarray:
    y = state.coords
    xi = float(state.xi)
    if model.model_id == HADAMARD_ID:
        return 0.5 * (xi * ID2 + y[0] * SX + y[1] * SY + y[2] * SZ)
    r1, r2, r3, r4, r5, r6, r7, r8, r9, r10, r11, r12, r13, r14, r15 = y
    return np.array([
        [r1, r4 - 1j * r5, r6 - 1j * r7, r10 - 1j * r11],
        [r4 + 1j * r5, r2, r8 - 1j * r9, r12 - 1j * r13],
        [r6 + 1j * r7, r8 + 1j * r9, r3, r14 - 1j * r15],
        [r10 + 1j * r11, r12 + 1j * r13, r14 + 1j * r15, xi - r1 - r2 - r3],
    ])


def from_matrix(model: ModelSpec, m: np.ndarray, herm_tol: float = 1e-10) -> StateVector:
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    trace = float(np.trace(m).real)
    xi = int(round(trace))
    if xi not in (0, 1) or abs(trace - xi) > 1e-9:
        raise ValueError(f"matrix trace {trace} is neither 0 nor 1")
    if model.model_id == HADAMARD_ID:
        coords = np.array([
            np.trace(m @ SX).real,
            np.trace(m @ SY).real,
            np.trace(m @ SZ).real,
        ])
    else:
        coords = np.array([
            m[0, 0].real, m[1, 1].real, m[2, 2].real,
            m[0, 1].real, -m[0, 1].imag,
            m[0, 2].real, -m[0, 2].imag,
            m[1, 2].real, -m[1, 2].imag,
            m[0, 3].real, -m[0, 3].imag,
            m[1, 3].real, -m[1, 3].imag,
            m[2, 3].real, -m[2, 3].imag,
        ])
    return StateVector(coords, xi=xi)


def hamiltonian(model: ModelSpec, controls) -> np.ndarray:
    u = np.asarray(controls, dtype=float)
    ops = control_operators(model)
    if u.shape != (len(ops),):
        raise ValueError(f"controls must have shape ({len(ops)},), got {u.shape}")
    h = np.zeros_like(ops[0])
    for uj, op in zip(u, ops):
        h = h + uj * op
    return h


def lindblad_rhs(model: ModelSpec, m: np.ndarray, controls, gamma_z: float = 0.0) -> np.ndarray:
    """-i [H, rho] plus per-qubit sigma_z dephasing (CNOT model only)."""
    h = hamiltonian(model, controls)
    rhs = -1j * (h @ m - m @ h)
    if gamma_z != 0.0:
        if model.model_id == HADAMARD_ID:
            raise ValueError("the Hadamard model does not support dephasing")
        for L in _DEPHASERS:
            rhs = rhs + gamma_z * (L @ m @ L - m)
    return rhs


def unitary_kick(model: ModelSpec, m: np.ndarray, channel: int, eps: float) -> np.ndarray:
    """Exact kick exp(i eps B) rho exp(-i eps B) via eigendecomposition."""
    ops = control_operators(model)
    if not 0 <= channel < len(ops):
        raise ValueError(f"channel {channel} out of range [0, {len(ops)})")
    w, v = np.linalg.eigh(ops[channel])
    u = (v * np.exp(1j * eps * w)) @ v.conj().T
    return u @ m @ u.conj().T


def _controls_at(coeffs: np.ndarray, t: float, t_f: float) -> np.ndarray:
    k = np.arange(1, coeffs.shape[1] + 1)
    return coeffs @ np.sin(np.pi * k * t / t_f)


def propagate_matrix(model: ModelSpec, params, m: np.ndarray, t0: float, t1: float, cfg) -> np.ndarray:
    """Independent fixed-step RK4 on the matrix-form Lindblad equation."""
    h = cfg.h
    i0 = round(t0 / h)
    i1 = round(t1 / h)
    if abs(i0 * h - t0) > 1e-12 or abs(i1 * h - t1) > 1e-12 or not 0 <= i0 <= i1 <= cfg.n_steps:
        raise ValueError("t0/t1 must be grid-aligned and ordered")
    coeffs = params.coeffs
    gz = model.gamma_z
    m = np.array(m, dtype=complex)
    for i in range(i0, i1):
        t = i * h
        u0 = _controls_at(coeffs, t, cfg.t_f)
        u1 = _controls_at(coeffs, t + 0.5 * h, cfg.t_f)
        u2 = _controls_at(coeffs, t + h, cfg.t_f)
        k1 = lindblad_rhs(model, m, u0, gz)
        k2 = lindblad_rhs(model, m + 0.5 * h * k1, u1, gz)
        k3 = lindblad_rhs(model, m + 0.5 * h * k2, u1, gz)
        k4 = lindblad_rhs(model, m + h * k3, u2, gz)
        m = m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return m


def fidelity_matrix(model: ModelSpec, m_initial: np.ndarray, m_final: np.ndarray) -> float:
    """Trace overlap Tr(rho_final . V rho_initial V^dagger)."""
    v = target_matrix(model)
    return float(np.trace(m_final @ v @ m_initial @ v.conj().T).real)
