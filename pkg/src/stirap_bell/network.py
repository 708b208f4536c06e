"""Two nodes sharing one photon: joint dynamics, Bell fidelity, loss, distillation.

The joint state lives in the six-dimensional single-excitation sector

    0: |0>_L|m>_R   1: |1>_L|m>_R   2: |e>_L|m>_R
    3: |m>_L|0>_R   4: |m>_L|1>_R   5: |m>_L|e>_R

with ``|m> = |M>|vac>`` the idle node state. Index 6, when present, is the
photon-lost state ``|m>_L|m>_R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DensityOperator,
    IntegratorConfig,
    Trajectory,
    _NodeModel,
    _run_model,
    node_kind,
)
from .frames import adiabatic_eigensystem, lindblad_vector_phi
from .model import (
    DomainError,
    Frame,
    NoiseModel,
    Operator,
    SystemParams,
    hamiltonian_lab,
    hamiltonian_rwa,
)

__all__ = [
    "JOINT_LABELS",
    "LossModel",
    "apply_photon_loss",
    "bell_fidelity",
    "bell_state",
    "distillation_success",
    "joint_generators",
    "joint_initial_state",
    "run_entanglement_generation",
    "swap_operator",
]

JOINT_LABELS = ("0m", "1m", "em", "m0", "m1", "me")
JOINT_DIM = 6
LOST = 6


def _ket(dim: int, *indices: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[list(indices)] = 1.0 / math.sqrt(len(indices))
    return v


def bell_state(dim: int = JOINT_DIM) -> np.ndarray:
    """``(|0>_L|m>_R + |m>_L|0>_R)/sqrt 2`` as a vector of length ``dim``."""
    return _ket(dim, 0, 3)


def joint_initial_state() -> DensityOperator:
    """Photon split evenly between the two cavities, both atoms in ``|M>``."""
    return DensityOperator.pure(_ket(JOINT_DIM, 1, 4))


def swap_operator(dim: int = JOINT_DIM) -> np.ndarray:
    """Permutation exchanging the two nodes (fixes the lost-photon state)."""
    S = np.zeros((dim, dim))
    for i in range(3):
        S[i, i + 3] = S[i + 3, i] = 1.0
    for i in range(6, dim):
        S[i, i] = 1.0
    return S


def _node_generators(params: SystemParams, t: float) -> tuple[np.ndarray, np.ndarray]:
    if params.frame is Frame.LAB:
        H = hamiltonian_lab(params, t).matrix
    elif params.noise is NoiseModel.SUPERADIABATIC:
        energies, _ = adiabatic_eigensystem(params, t)
        H = np.diag(energies).astype(complex)
    else:
        H = hamiltonian_rwa(params, t).matrix
    if params.noise is NoiseModel.SUPERADIABATIC:
        phi = lindblad_vector_phi(params, t)
    else:
        phi = np.array([0, 0, 1], dtype=complex)
    return H, np.outer(phi, phi.conj())


def joint_generators(
    params_l: SystemParams, params_r: SystemParams, t: float
) -> tuple[Operator, Operator, Operator]:
    """Block-diagonal joint Hamiltonian and the two embedded noise operators.

    In superadiabatic mode the blocks are the diagonal superadiabatic
    Hamiltonians; lab-frame nodes use the full lab Hamiltonian.
    """
    H = np.zeros((JOINT_DIM, JOINT_DIM), dtype=complex)
    Ls = []
    for off, params in ((0, params_l), (3, params_r)):
        h, L = _node_generators(params, t)
        H[off:off + 3, off:off + 3] = h
        big = np.zeros_like(H)
        big[off:off + 3, off:off + 3] = L
        Ls.append(big)
    basis = "joint"
    return Operator(H, basis), Operator(Ls[0], basis), Operator(Ls[1], basis)


def _joint_model(params_l: SystemParams, params_r: SystemParams) -> _NodeModel:
    return _NodeModel(
        (params_l, params_r), (node_kind(params_l), node_kind(params_r)), (0, 3), JOINT_DIM
    )


def bell_fidelity(rho) -> float:
    m = np.asarray(rho.matrix if isinstance(rho, Operator) else rho)
    psi = bell_state(m.shape[0])
    return float(np.real(psi.conj() @ m @ psi))


def run_joint(
    params_l: SystemParams,
    params_r: SystemParams,
    rho0,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Evolve any joint initial state over the ramp; populations in the bare basis."""
    cfg = cfg or IntegratorConfig()
    T = params_l.duration
    if not math.isclose(T, params_r.duration, rel_tol=1e-12):
        raise ValueError("both nodes must share the same ramp duration")
    model = _joint_model(params_l, params_r)
    rho0 = np.asarray(rho0.matrix if isinstance(rho0, Operator) else rho0, dtype=complex)
    V = model.to_frame(0.0)
    traj = _run_model(model, V @ rho0 @ V.conj().T, T, cfg)
    traj.labels = tuple(f"P{s}" for s in JOINT_LABELS)
    traj.meta["params"] = (params_l, params_r)
    traj.meta["model"] = model
    return traj


def final_bare_state(traj: Trajectory) -> np.ndarray:
    model: _NodeModel = traj.meta["model"]
    U = model.to_bare(traj.times[-1])
    return U @ traj.states[-1] @ U.conj().T


def run_entanglement_generation(
    params_l: SystemParams,
    params_r: SystemParams | None = None,
    cfg: IntegratorConfig | None = None,
) -> tuple[Trajectory, float]:
    """Fidelity with the target Bell state after the ramp, starting from the split photon."""
    params_r = params_l if params_r is None else params_r
    traj = run_joint(params_l, params_r, joint_initial_state(), cfg)
    F = bell_fidelity(final_bare_state(traj))
    traj.meta["bell_fidelity"] = F
    return traj, F


@dataclass(frozen=True)
class LossModel:
    p_loss: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_loss <= 1.0:
            raise DomainError(f"p_loss={self.p_loss!r} outside [0, 1]")


def apply_photon_loss(rho, loss: LossModel | float) -> DensityOperator:
    """Mix in the lost-photon state ``|m m>`` with weight ``p_loss``.

    A six-dimensional input is first embedded into the seven-dimensional
    space that includes the lost-photon state.
    """
    if not isinstance(loss, LossModel):
        loss = LossModel(loss)
    m = np.asarray(rho.matrix if isinstance(rho, Operator) else rho, dtype=complex)
    if m.shape == (JOINT_DIM, JOINT_DIM):
        m = np.pad(m, ((0, 1), (0, 1)))
    elif m.shape != (JOINT_DIM + 1, JOINT_DIM + 1):
        raise ValueError(f"expected a 6x6 or 7x7 joint state, got {m.shape}")
    lost = np.zeros_like(m)
    lost[LOST, LOST] = 1.0
    return DensityOperator((1.0 - loss.p_loss) * m + loss.p_loss * lost, "joint+lost")


def distillation_success(loss: LossModel | float) -> float:
    """Herald probability ``(1 - p_loss)**2 / 2`` of two-round parity distillation.

    Two lossy copies feed two parity projections on ancilla qubits; a
    heralded success leaves the ancillas in a perfect Bell pair.
    """
    if not isinstance(loss, LossModel):
        loss = LossModel(loss)
    return (1.0 - loss.p_loss) ** 2 / 2.0


def distilled_pair(loss: LossModel | float) -> tuple[float, DensityOperator]:
    """Success probability and the heralded ancilla state ``(|00> + |11>)/sqrt 2``."""
    psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2.0)
    return distillation_success(loss), DensityOperator.pure(psi, "ancilla")
