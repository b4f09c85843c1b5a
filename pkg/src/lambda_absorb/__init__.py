"""Deterministic single-photon absorption by a three-level lambda emitter.

A cascaded source/target model simulated with quantum trajectories, checked
against a Lindblad master-equation integrator and closed-form optical Bloch
results.
"""

__version__ = "0.1.0"

from .core import CompositeSpace, Operator, StateVector, apply, dagger, expectation, kron, norm2, normalize, sigma
from .errors import (
    ConfigurationError,
    DegenerateStateError,
    DimensionMismatchError,
    IntegratorError,
    JumpLogicError,
    LambdaAbsorbError,
    NumericalInstabilityError,
)
from .model import (
    CascadeParams,
    PulseShape,
    ScenarioModel,
    build_basic_model,
    build_collapse_ops,
    build_entanglement_model,
    build_h_eff,
    build_h_herm,
    omega_L,
)
from .obe import ObeParams, build_coherent_drive_model, mean_output_field, quasi_steady_coherence
from .oracle import DensityMatrix, c1_flux, integrate_master, lindblad_rhs
from .trajectory import (
    EnsembleResult,
    IntegratorConfig,
    TrajectoryRecord,
    absorption_probability,
    evolve_trajectory,
    run_ensemble,
    select_jump_channel,
    split_seed,
)
