"""Deterministic photon-free-detection entanglement via adiabatic transfer in lambda-system cavities."""

from .dynamics import (
    DensityOperator,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    dephasing_fidelity_reference,
    evolve_master_equation,
    fidelity_bound,
    perturbative_fidelity,
    run_single_transfer,
)
from .frames import (
    FrameData,
    adiabatic_eigensystem,
    coefficients_xyz,
    correction_w,
    excited_population_formula,
    frame_data,
    lindblad_vector_phi,
    max_excited_population,
    superadiabatic_transform,
)
from .model import (
    BasisLabel,
    ConfigError,
    DomainError,
    Frame,
    NoiseModel,
    Operator,
    SystemParams,
    drive_envelope,
    hamiltonian_lab,
    hamiltonian_rwa,
)
from .network import (
    LossModel,
    apply_photon_loss,
    bell_fidelity,
    bell_state,
    distillation_success,
    distilled_pair,
    joint_generators,
    joint_initial_state,
    run_entanglement_generation,
    run_joint,
)

__version__ = "0.1.0"
