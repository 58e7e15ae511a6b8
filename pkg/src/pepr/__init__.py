"""Pulse engineering for qubit gates via projected response probes, with a GRAPE baseline."""

from .models import (
    ModelSpec,
    StateVector,
    cnot_model,
    eom_rhs,
    fidelity,
    hadamard_model,
    make_model,
    perturbation_map,
    product_state,
    sample_initial_state,
)
from .optimizers import (
    GrapeConfig,
    PeprConfig,
    SusceptibilitySample,
    grape_gradient,
    grape_step,
    pepr_step,
    sample_initial_params,
    susceptibility,
)
from .parametrization import (
    ConstraintSpec,
    ControlParams,
    evaluate_control,
    max_rabi_amplitude,
    params_from_json,
    params_to_json,
    projection_coefficient,
    pulse_area,
    rescale_to_constraints,
)
from .propagator import IntegratorConfig, RunLedger, propagate, propagate_with_kick

__version__ = "0.1.0"

__all__ = [
    "ConstraintSpec",
    "ControlParams",
    "GrapeConfig",
    "IntegratorConfig",
    "ModelSpec",
    "PeprConfig",
    "RunLedger",
    "StateVector",
    "SusceptibilitySample",
    "cnot_model",
    "eom_rhs",
    "evaluate_control",
    "fidelity",
    "grape_gradient",
    "grape_step",
    "hadamard_model",
    "make_model",
    "max_rabi_amplitude",
    "params_from_json",
    "params_to_json",
    "pepr_step",
    "perturbation_map",
    "product_state",
    "projection_coefficient",
    "propagate",
    "propagate_with_kick",
    "pulse_area",
    "rescale_to_constraints",
    "sample_initial_params",
    "sample_initial_state",
    "susceptibility",
]
