"""Protocol parameters, basis conventions and the single-node Hamiltonians.

A node is a lambda-type emitter in a cavity, restricted to the single
excitation manifold spanned by

    |0> = |G>|vac>,   |1> = |M> a^dag |vac>,   |e> = |E>|vac>

in that index order. All rates are expressed in units of the cavity
coupling ``g`` and all times in units of ``1/g``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "BasisLabel",
    "ConfigError",
    "DomainError",
    "Frame",
    "NoiseModel",
    "Operator",
    "SystemParams",
    "drive_envelope",
    "hamiltonian_lab",
    "hamiltonian_rwa",
]

# |cos(a t)| below this is treated as exactly zero so that the envelope
# and every frame quantity vanish cleanly at the end of the ramp.
COS_FLOOR = 1e-15


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; ``key`` names the culprit."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class DomainError(ValueError):
    """Time argument outside the protocol window ``[0, T]``."""


class Frame(str, enum.Enum):
    ROTATING_RWA = "rwa"
    LAB = "lab"


class NoiseModel(str, enum.Enum):
    SUPERADIABATIC = "super"
    LAB_EXCITED = "lab"
    NONE = "none"


class BasisLabel(enum.IntEnum):
    ZERO = 0
    ONE = 1
    E = 2
    REF = 3


@dataclass(frozen=True)
class Operator:
    """Dense square complex matrix tagged with the basis it is written in."""

    matrix: np.ndarray
    basis: str = "bare"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __getitem__(self, idx):
        return self.matrix[idx]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.basis)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol)

    def is_unitary(self, atol: float = 1e-12) -> bool:
        eye = np.eye(self.dim)
        return bool(np.max(np.abs(self.matrix.conj().T @ self.matrix - eye)) <= atol)


@dataclass(frozen=True)
class SystemParams:
    """Rates of one node plus the frame and noise selectors.

    ``epsilon`` is the common atomic/cavity/drive frequency; it only matters
    in the lab frame.
    """

    g: float = 1.0
    delta: float = 50.0
    ramp: float = 0.01
    gamma: float = 0.1
    epsilon: float = 1000.0
    frame: Frame = Frame.ROTATING_RWA
    noise: NoiseModel = NoiseModel.SUPERADIABATIC

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        object.__setattr__(self, "noise", NoiseModel(self.noise))
        for key in ("g", "delta", "ramp", "gamma", "epsilon"):
            value = getattr(self, key)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(key, f"expected a number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(key, "must be finite")
            object.__setattr__(self, key, float(value))
        for key in ("g", "delta", "ramp"):
            if getattr(self, key) <= 0:
                raise ConfigError(key, "must be > 0")
        if self.gamma < 0:
            raise ConfigError("gamma", "must be >= 0")
        if self.frame is Frame.LAB and self.epsilon <= 0:
            raise ConfigError("epsilon", "must be > 0 in the lab frame")
        if self.frame is Frame.LAB and self.noise is NoiseModel.SUPERADIABATIC:
            raise ConfigError(
                "noise", "superadiabatic noise is defined only in the rotating frame"
            )

    @property
    def duration(self) -> float:
        """Protocol length T = pi / (2 a)."""
        return math.pi / (2.0 * self.ramp)

    @property
    def strong_drive(self) -> bool:
        return self.delta / self.g >= 10.0

    def normalized(self) -> "SystemParams":
        """Same physics with every rate divided by ``g`` (so ``g == 1``)."""
        g = self.g
        return replace(
            self,
            g=1.0,
            delta=self.delta / g,
            ramp=self.ramp / g,
            gamma=self.gamma / g,
            epsilon=self.epsilon / g,
        )

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def check_time(params: SystemParams, t: float) -> float:
    T = params.duration
    # allow rounding slop from computing T in a different order
    if not (-1e-12 * T <= t <= T * (1 + 1e-12)):
        raise DomainError(f"t={t!r} outside [0, {T!r}]")
    return min(max(float(t), 0.0), T)


def _cos_sin(params: SystemParams, t: float) -> tuple[float, float]:
    c = math.cos(params.ramp * t)
    s = math.sin(params.ramp * t)
    if abs(c) < COS_FLOOR:
        c = 0.0
    return c, s


def drive_envelope(params: SystemParams, t: float) -> float:
    """Drive amplitude Delta cos^2(a t), exactly zero at ``t = T``."""
    t = check_time(params, t)
    c, _ = _cos_sin(params, t)
    return params.delta * c * c


def hamiltonian_rwa(params: SystemParams, t: float) -> Operator:
    """Rotating-frame Hamiltonian after the RWA, with epsilon shifted to 0."""
    env = drive_envelope(params, t)
    h = np.zeros((3, 3), dtype=complex)
    h[BasisLabel.ONE, BasisLabel.E] = h[BasisLabel.E, BasisLabel.ONE] = params.g
    h[BasisLabel.E, BasisLabel.ZERO] = h[BasisLabel.ZERO, BasisLabel.E] = env / 2.0
    return Operator(h, "bare")


def hamiltonian_lab(params: SystemParams, t: float) -> Operator:
    """Lab-frame Hamiltonian with the full ``cos(eps t)`` drive.

    Resonance is hard-wired: drive, cavity and atomic transition all sit at
    ``params.epsilon``.
    """
    if params.epsilon <= 0:
        raise ConfigError("epsilon", "must be > 0 in the lab frame")
    env = drive_envelope(params, t)
    eps = params.epsilon
    h = np.zeros((3, 3), dtype=complex)
    h[BasisLabel.ONE, BasisLabel.ONE] = eps
    h[BasisLabel.E, BasisLabel.E] = eps
    h[BasisLabel.ONE, BasisLabel.E] = h[BasisLabel.E, BasisLabel.ONE] = params.g
    drive = env * math.cos(eps * t)
    h[BasisLabel.E, BasisLabel.ZERO] = h[BasisLabel.ZERO, BasisLabel.E] = drive
    return Operator(h, "lab")
