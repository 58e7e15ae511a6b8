"""Physical models: single-qubit Hadamard target and two-qubit CNOT target.

Both models evolve a density operator written as a real coordinate vector
plus a trace flag xi in {0, 1} (xi=1: unit-trace state, xi=0: traceless
commutator object).  This is the canonical coordinate layout used by every
map and fidelity expression in the package:

Hadamard model, d=3, coords (rx, ry, rz):

    rho = 1/2 [[xi + rz, rx - i ry],
               [rx + i ry, xi - rz]]

CNOT model, d=15, coords (r1..r15), basis order |00>, |01>, |10>, |11>
with qubit 1 first:

    rho = [[r1,        r4 - i r5,   r6 - i r7,   r10 - i r11],
           [r4 + i r5,  r2,         r8 - i r9,   r12 - i r13],
           [r6 + i r7,  r8 + i r9,  r3,          r14 - i r15],
           [r10 + i r11, r12 + i r13, r14 + i r15, xi - r1 - r2 - r3]]

Control channels (fixed order, documented in the README):

    hadamard: (h_x, h_y)                  operators (sigma_x, sigma_y)
    cnot:     (h_x1, h_y1, h_x2, h_y2, J) operators (sigma_x^1, sigma_y^1,
              sigma_x^2, sigma_y^2, sigma^1.sigma^2)

The CNOT model supports per-qubit sigma_z dephasing at rate gamma_z; the
Hadamard model is unitary only and rejects gamma_z != 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "ModelSpec",
    "StateVector",
    "hadamard_model",
    "cnot_model",
    "make_model",
    "eom_rhs",
    "perturbation_map",
    "fidelity",
    "sample_initial_state",
    "product_state",
    "target_qubit_bloch",
]

HADAMARD_ID = 0
CNOT_ID = 1


@dataclass(frozen=True)
class ModelSpec:
    """Immutable model definition bundle; build via hadamard_model / cnot_model."""

    name: str
    dim: int
    n_channels: int
    channel_names: tuple[str, ...]
    rabi_pairs: tuple[tuple[int, int], ...]
    coupling_channels: tuple[int, ...]
    gamma_z: float = 0.0

    def __post_init__(self):
        if self.gamma_z < 0:
            raise ValueError("gamma_z must be >= 0")
        if self.name == "hadamard" and self.gamma_z != 0.0:
            raise ValueError("the Hadamard model is unitary; gamma_z must be 0")

    @property
    def model_id(self) -> int:
        return HADAMARD_ID if self.name == "hadamard" else CNOT_ID


def hadamard_model(gamma_z: float = 0.0) -> ModelSpec:
    return ModelSpec(
        name="hadamard",
        dim=3,
        n_channels=2,
        channel_names=("h_x", "h_y"),
        rabi_pairs=((0, 1),),
        coupling_channels=(),
        gamma_z=gamma_z,
    )


def cnot_model(gamma_z: float = 0.0) -> ModelSpec:
    return ModelSpec(
        name="cnot",
        dim=15,
        n_channels=5,
        channel_names=("h_x1", "h_y1", "h_x2", "h_y2", "J"),
        rabi_pairs=((0, 1), (2, 3)),
        coupling_channels=(4,),
        gamma_z=gamma_z,
    )


def make_model(name: str, gamma_z: float = 0.0) -> ModelSpec:
    if name == "hadamard":
        return hadamard_model(gamma_z)
    if name == "cnot":
        return cnot_model(gamma_z)
    raise ValueError(f"unknown model {name!r} (expected 'hadamard' or 'cnot')")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Real density-operator coordinates plus trace flag."""

    coords: np.ndarray
    xi: int = 1

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError("coords must be a 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite")
        if self.xi not in (0, 1):
            raise ValueError(f"xi must be 0 or 1, got {self.xi}")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)
        object.__setattr__(self, "xi", int(self.xi))


def _check_state(model: ModelSpec, state: StateVector) -> None:
    if state.coords.shape[0] != model.dim:
        raise ValueError(
            f"state dimension {state.coords.shape[0]} does not match model "
            f"'{model.name}' (dim {model.dim})"
        )


# Raw right-hand sides consumed both by eom_rhs and by the RK4 kernel in
# propagator.py.  The CNOT equations are the generalized-Bloch form of
# drho/dt = -i[H, rho] + gamma_z * sum_i (sz_i rho sz_i - rho) in the layout
# above, with the trace flag entering only through the (3,3) matrix entry.


@njit(cache=True)
def hadamard_rhs_raw(y, u, gz, xi, out):  # pragma: no cover - exercised via wrappers
    hx = u[0]
    hy = u[1]
    out[0] = 2.0 * hy * y[2]
    out[1] = -2.0 * hx * y[2]
    out[2] = 2.0 * hx * y[1] - 2.0 * hy * y[0]


@njit(cache=True)
def cnot_rhs_raw(y, u, gz, xi, out):  # pragma: no cover - exercised via wrappers
    r1, r2, r3 = y[0], y[1], y[2]
    r4, r5, r6, r7 = y[3], y[4], y[5], y[6]
    r8, r9 = y[7], y[8]
    r10, r11, r12, r13, r14, r15 = y[9], y[10], y[11], y[12], y[13], y[14]
    hx1, hy1, hx2, hy2, jj = u[0], u[1], u[2], u[3], u[4]
    # d123: populations of |00>, |01>, |10>
    out[0] = 2.0 * (hx1 * r7 + hx2 * r5 - hy1 * r6 - hy2 * r4)
    out[1] = 4.0 * jj * r9 + 2.0 * (hx1 * r13 - hx2 * r5 - hy1 * r12 + hy2 * r4)
    out[2] = -4.0 * jj * r9 - 2.0 * (hx1 * r7 - hx2 * r15 - hy1 * r6 + hy2 * r14)
    out[3] = (2.0 * jj * (r7 - r5) - 2.0 * gz * r4 + hx1 * (r11 + r9)
              - hy1 * (r10 + r8) + hy2 * (r1 - r2))
    out[4] = (2.0 * jj * (r4 - r6) - 2.0 * gz * r5 + hx1 * (r8 - r10)
              - hx2 * (r1 - r2) + hy1 * (r9 - r11))
    out[5] = (2.0 * jj * (r5 - r7) - 2.0 * gz * r6 + hx2 * (r11 - r9)
              + hy1 * (r1 - r3) - hy2 * (r10 + r8))
    out[6] = (2.0 * jj * (r6 - r4) - 2.0 * gz * r7 - hx1 * (r1 - r3)
              + hx2 * (r8 - r10) - hy2 * (r11 + r9))
    out[7] = (-4.0 * gz * r8 + hx1 * (r15 - r5) + hx2 * (r13 - r7)
              + hy1 * (r4 - r14) + hy2 * (r6 - r12))
    out[8] = (2.0 * jj * (r3 - r2) - 4.0 * gz * r9 + hx1 * (r14 - r4)
              + hx2 * (r6 - r12) + hy1 * (r15 - r5) + hy2 * (r7 - r13))
    out[9] = (-4.0 * gz * r10 + hx1 * (r5 - r15) + hx2 * (r7 - r13)
              + hy1 * (r4 - r14) + hy2 * (r6 - r12))
    out[10] = (-4.0 * gz * r11 + hx1 * (r14 - r4) + hx2 * (r12 - r6)
               + hy1 * (r5 - r15) + hy2 * (r7 - r13))
    # diag1 = r1 + 2 r2 + r3 - xi, diag2 = r1 + r2 + 2 r3 - xi collect the
    # population imbalances against the |11> entry
    diag1 = r1 + 2.0 * r2 + r3 - xi
    diag2 = r1 + r2 + 2.0 * r3 - xi
    out[11] = (2.0 * jj * (r13 - r15) - 2.0 * gz * r12 + hx2 * (r9 - r11)
               + hy1 * diag1 + hy2 * (r10 + r8))
    out[12] = (2.0 * jj * (r14 - r12) - 2.0 * gz * r13 - hx1 * diag1
               + hx2 * (r10 - r8) + hy2 * (r11 + r9))
    out[13] = (2.0 * jj * (r15 - r13) - 2.0 * gz * r14 - hx1 * (r11 + r9)
               + hy1 * (r10 + r8) + hy2 * diag2)
    out[14] = (2.0 * jj * (r12 - r14) - 2.0 * gz * r15 + hx1 * (r10 - r8)
               - hx2 * diag2 + hy1 * (r11 - r9))


def eom_rhs(model: ModelSpec, state: StateVector, controls) -> StateVector:
    """Time derivative of the coordinate vector for given control values.

    The returned object carries the same trace flag as the input; the flow
    preserves the trace.
    """
    _check_state(model, state)
    u = np.asarray(controls, dtype=np.float64)
    if u.shape != (model.n_channels,):
        raise ValueError(f"controls must have shape ({model.n_channels},), got {u.shape}")
    out = np.empty(model.dim)
    if model.model_id == HADAMARD_ID:
        hadamard_rhs_raw(state.coords, u, 0.0, float(state.xi), out)
    else:
        cnot_rhs_raw(state.coords, u, model.gamma_z, float(state.xi), out)
    return StateVector(out, xi=state.xi)


def _perturbation_hadamard(channel: int, y: np.ndarray) -> np.ndarray:
    rx, ry, rz = y
    if channel == 0:  # sigma_x
        return np.array([0.0, rz, -ry])
    return np.array([-rz, 0.0, rx])  # sigma_y


def _perturbation_cnot(channel: int, y: np.ndarray, xi: float) -> np.ndarray:
    r1, r2, r3, r4, r5, r6, r7, r8, r9, r10, r11, r12, r13, r14, r15 = y
    if channel == 0:  # sigma_x^1
        return np.array([
            -2 * r7, -2 * r13, 2 * r7,
            -r11 - r9, r10 - r8, 0.0, r1 - r3,
            r5 - r15, r4 - r14,
            r15 - r5, r4 - r14, 0.0, r1 + 2 * r2 + r3 - xi,
            r11 + r9, r8 - r10,
        ])
    if channel == 1:  # sigma_y^1
        return np.array([
            2 * r6, 2 * r12, -2 * r6,
            r10 + r8, r11 - r9, r3 - r1, 0.0,
            r14 - r4, r5 - r15,
            r14 - r4, r15 - r5, xi - r1 - 2 * r2 - r3, 0.0,
            -r10 - r8, r9 - r11,
        ])
    if channel == 2:  # sigma_x^2
        return np.array([
            -2 * r5, 2 * r5, -2 * r15,
            0.0, r1 - r2, r9 - r11, r10 - r8,
            r7 - r13, r12 - r6,
            r13 - r7, r6 - r12, r11 - r9, r8 - r10,
            0.0, r1 + r2 + 2 * r3 - xi,
        ])
    if channel == 3:  # sigma_y^2
        return np.array([
            2 * r4, -2 * r4, 2 * r14,
            r2 - r1, 0.0, r10 + r8, r11 + r9,
            r12 - r6, r13 - r7,
            r12 - r6, r13 - r7, -r10 - r8, -r11 - r9,
            xi - r1 - r2 - 2 * r3, 0.0,
        ])
    # Heisenberg coupling sigma^1.sigma^2
    return np.array([
        0.0, -4 * r9, 4 * r9,
        2 * (r5 - r7), 2 * (r6 - r4), 2 * (r7 - r5), 2 * (r4 - r6),
        0.0, 2 * (r2 - r3),
        0.0, 0.0, 2 * (r15 - r13), 2 * (r12 - r14),
        2 * (r13 - r15), 2 * (r14 - r12),
    ])


def perturbation_map(model: ModelSpec, channel: int, state: StateVector) -> StateVector:
    """Coordinate image of the commutator kick i[B_channel, rho].

    Commutators are traceless, so the result always carries xi=0.
    """
    _check_state(model, state)
    if not 0 <= channel < model.n_channels:
        raise ValueError(f"channel {channel} out of range [0, {model.n_channels})")
    if model.model_id == HADAMARD_ID:
        out = _perturbation_hadamard(channel, state.coords)
    else:
        out = _perturbation_cnot(channel, state.coords, float(state.xi))
    return StateVector(out, xi=0)


def fidelity(model: ModelSpec, initial: StateVector, final: StateVector) -> float:
    """Overlap Tr(rho_final . V rho_initial V^dagger) as a closed quadratic form.

    The initial state must be unit trace (xi=1); the final object may be a
    propagated state (xi=1) or a propagated commutator object (xi=0), in
    which case the same bilinear form yields the response value.
    """
    _check_state(model, initial)
    _check_state(model, final)
    if initial.xi != 1:
        raise ValueError("initial state must have xi=1")
    r = initial.coords
    s = final.coords
    xif = float(final.xi)
    if model.model_id == HADAMARD_ID:
        # target V = Hadamard: V rho V^dag has Bloch vector (rz, -ry, rx)
        return 0.5 * (xif + s[2] * r[0] + s[0] * r[2] - s[1] * r[1])
    # target V = CNOT in the fixed basis order
    return float(
        s[0] * (r[0] - r[2])
        + s[1] * (r[1] - r[2])
        + s[2] * (1.0 - r[0] - r[1] - 2.0 * r[2])
        + xif * r[2]
        + 2.0 * (
            s[3] * r[3] + s[4] * r[4]
            + s[5] * r[9] + s[6] * r[10]
            + s[7] * r[11] + s[8] * r[12]
            + s[9] * r[5] + s[10] * r[6]
            + s[11] * r[7] + s[12] * r[8]
            + s[13] * r[13] - s[14] * r[14]
        )
    )


def _unit_bloch(rng: np.random.Generator, normalize: bool) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            break
    return v / norm if normalize else v


def product_state(bloch1, bloch2) -> StateVector:
    """CNOT-layout coordinates of the two-qubit product state rho_1 (x) rho_2."""
    x1, y1, z1 = np.asarray(bloch1, dtype=np.float64)
    x2, y2, z2 = np.asarray(bloch2, dtype=np.float64)
    q = 0.25
    coords = np.array([
        q * (1 + z1) * (1 + z2),
        q * (1 + z1) * (1 - z2),
        q * (1 - z1) * (1 + z2),
        q * (1 + z1) * x2,
        q * (1 + z1) * y2,
        q * x1 * (1 + z2),
        q * y1 * (1 + z2),
        q * (x1 * x2 + y1 * y2),
        q * (x2 * y1 - x1 * y2),
        q * (x1 * x2 - y1 * y2),
        q * (x1 * y2 + x2 * y1),
        q * x1 * (1 - z2),
        q * y1 * (1 - z2),
        q * (1 - z1) * x2,
        q * (1 - z1) * y2,
    ])
    return StateVector(coords, xi=1)


def sample_initial_state(
    model: ModelSpec, rng: np.random.Generator, normalize: bool = True
) -> StateVector:
    """Draw a random initial state with per-qubit N(0,1) Bloch components.

    With normalize=True (default) each qubit's Bloch vector is scaled to unit
    norm, producing a pure state; normalize=False keeps the raw draws.
    """
    if model.model_id == HADAMARD_ID:
        return StateVector(_unit_bloch(rng, normalize), xi=1)
    return product_state(_unit_bloch(rng, normalize), _unit_bloch(rng, normalize))


def target_qubit_bloch(model: ModelSpec, state: StateVector) -> np.ndarray:
    """Bloch vector of the gate's target qubit (the only qubit for Hadamard)."""
    _check_state(model, state)
    y = state.coords
    if model.model_id == HADAMARD_ID:
        return np.array(y)
    return np.array([
        2.0 * (y[3] + y[13]),
        2.0 * (y[4] + y[14]),
        2.0 * (y[0] + y[2]) - float(state.xi),
    ])
