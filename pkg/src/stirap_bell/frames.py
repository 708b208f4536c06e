"""Closed-form adiabatic and first-order superadiabatic frames of one node.

Index convention for transformed bases: column/row ``k`` of ``D`` and ``Ds``
belongs to the eigenstate labelled by basis index ``k`` in the canonical
order (0, 1, e). So column 1 is the upper state ``E_1`` and column 2 is the
lower state ``E_e``.

Everything is evaluated through

    x = i 4 sqrt(2) g a Delta cos sin / N^3,   y = Delta cos^2 / N,   z = 2 g / N,
    N = sqrt(4 g^2 + Delta^2 cos^4),

which stay finite over the whole ramp, including ``t = T`` where the drive
switches off.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import Operator, SystemParams, _cos_sin, check_time

__all__ = [
    "FrameData",
    "MaxExcitation",
    "adiabatic_eigensystem",
    "coefficients_xyz",
    "correction_w",
    "excited_population_formula",
    "excited_population_printed",
    "frame_data",
    "lindblad_vector_phi",
    "max_excited_population",
    "superadiabatic_transform",
]

SQRT2 = math.sqrt(2.0)
PEAK_CONSTANT = 25.0 * math.sqrt(5.0) / 108.0


def _gap(params: SystemParams, c: float) -> float:
    dc2 = params.delta * c * c
    return math.sqrt(4.0 * params.g**2 + dc2 * dc2)


def coefficients_xyz(params: SystemParams, t: float) -> tuple[complex, float, float]:
    t = check_time(params, t)
    g, a, delta = params.g, params.ramp, params.delta
    c, s = _cos_sin(params, t)
    n = _gap(params, c)
    x = 1j * 4.0 * SQRT2 * g * a * delta * c * s / n**3
    y = delta * c * c / n
    z = 2.0 * g / n
    return x, y, z


def _adiabatic_columns(y: float, z: float) -> np.ndarray:
    r = 1.0 / SQRT2
    return np.array(
        [
            [-z, r * y, r * y],
            [y, r * z, r * z],
            [0.0, r, -r],
        ],
        dtype=complex,
    )


def adiabatic_eigensystem(params: SystemParams, t: float) -> tuple[np.ndarray, Operator]:
    """Eigenvalues ``(E_0, E_1, E_e)`` and the transform ``D`` with matching columns.

    Signs follow the printed eigenvectors; ``E_0`` is the dark state with no
    excited-state amplitude.
    """
    t = check_time(params, t)
    c, _ = _cos_sin(params, t)
    half_gap = 0.5 * _gap(params, c)
    _, y, z = coefficients_xyz(params, t)
    energies = np.array([0.0, half_gap, -half_gap])
    return energies, Operator(_adiabatic_columns(y, z), "adiabatic")


def correction_w(params: SystemParams, t: float) -> Operator:
    """Non-adiabatic coupling ``-i D^dag dD/dt`` in the adiabatic index basis."""
    t = check_time(params, t)
    g, a, delta = params.g, params.ramp, params.delta
    c, s = _cos_sin(params, t)
    dc2 = delta * c * c
    coef = -2j * SQRT2 * g * a * delta * c * s / (4.0 * g * g + dc2 * dc2)
    w = np.zeros((3, 3), dtype=complex)
    w[0, 1] = w[0, 2] = coef
    w[1, 0] = w[2, 0] = -coef
    return Operator(w, "adiabatic")


def _superadiabatic_columns(x: complex, y: float, z: float) -> np.ndarray:
    r = 1.0 / SQRT2
    return np.array(
        [
            [-z, r * y + x * z, r * y - x * z],
            [y, r * z - x * y, r * z + x * y],
            [-SQRT2 * x, r, -r],
        ],
        dtype=complex,
    )


def superadiabatic_transform(params: SystemParams, t: float) -> Operator:
    """First-order superadiabatic transform ``Ds`` (not re-orthonormalised)."""
    x, y, z = coefficients_xyz(params, t)
    return Operator(_superadiabatic_columns(x, y, z), "superadiabatic")


def lindblad_vector_phi(params: SystemParams, t: float) -> np.ndarray:
    """Image of ``|e>`` in the superadiabatic frame, truncated at first order in x.

    Its squared norm is ``1 + 2|x|^2``; it is deliberately not renormalised.
    """
    x, _, _ = coefficients_xyz(params, t)
    return np.array([SQRT2 * x, 1.0 / SQRT2, -1.0 / SQRT2], dtype=complex)


def excited_population_formula(params: SystemParams, t: float) -> float:
    x, _, _ = coefficients_xyz(params, t)
    return 2.0 * abs(x) ** 2


def excited_population_printed(params: SystemParams, t: float) -> float:
    """The expanded fraction ``64 g^2 a^2 D^2 c^2 s^2 / (4 g^2 + D^2 c^4)^3``."""
    t = check_time(params, t)
    g, a, delta = params.g, params.ramp, params.delta
    c, s = _cos_sin(params, t)
    return 64 * g**2 * a**2 * delta**2 * c**2 * s**2 / (4 * g**2 + delta**2 * c**4) ** 3


@dataclass(frozen=True)
class FrameData:
    t: float
    eigenvalues: np.ndarray
    D: Operator
    w: Operator
    Ds: Operator
    x: complex
    y: float
    z: float


def frame_data(params: SystemParams, t: float) -> FrameData:
    energies, D = adiabatic_eigensystem(params, t)
    x, y, z = coefficients_xyz(params, t)
    return FrameData(
        t=float(t),
        eigenvalues=energies,
        D=D,
        w=correction_w(params, t),
        Ds=Operator(_superadiabatic_columns(x, y, z), "superadiabatic"),
        x=x,
        y=y,
        z=z,
    )


@dataclass(frozen=True)
class MaxExcitation:
    """Peak excited-state probability, closed form next to a numeric search."""

    t_star_formula: float
    p_max_formula: float
    t_star_numeric: float
    p_max_numeric: float
    approximation_unreliable: bool

    @property
    def relative_gap(self) -> float:
        return abs(self.p_max_formula - self.p_max_numeric) / self.p_max_numeric


def max_excited_population(params: SystemParams, grid_points: int = 1000) -> MaxExcitation:
    g, a, delta = params.g, params.ramp, params.delta
    T = params.duration
    unreliable = g / delta > 0.1
    if unreliable:
        warnings.warn(
            f"g/delta = {g / delta:.3g} > 0.1: closed-form peak is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )

    p_formula = PEAK_CONSTANT * a * a * delta / g**3
    arg = math.sqrt(min(1.0, 2.0 * g / (math.sqrt(5.0) * delta)))
    t_formula = math.acos(arg) / a

    ts = np.linspace(0.0, T, grid_points + 1)
    ps = np.array([excited_population_formula(params, t) for t in ts])
    i = int(np.argmax(ps))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid_points)]
    res = minimize_scalar(
        lambda t: -excited_population_formula(params, min(max(t, 0.0), T)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    t_num = float(res.x)
    p_num = excited_population_formula(params, t_num)
    if p_num < ps[i]:
        t_num, p_num = float(ts[i]), float(ps[i])
    return MaxExcitation(t_formula, p_formula, t_num, p_num, unreliable)
