"""Master-equation integration and the single-node experiments.

The equation solved everywhere is

    d rho/dt = -i [H(t), rho] - sum_j (gamma_j / 2) [L_j(t), [L_j(t), rho]]

with Hermitian ``L_j``. :func:`evolve_master_equation` takes arbitrary
callables and runs in plain numpy; the protocol runs go through the compiled
stepper in :mod:`._kernel`, which implements the same step-doubling scheme.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from . import _kernel
from .frames import (
    PEAK_CONSTANT,
    _superadiabatic_columns,
    coefficients_xyz,
    superadiabatic_transform,
)
from .model import Frame, NoiseModel, Operator, SystemParams

__all__ = [
    "DensityOperator",
    "IntegrationError",
    "IntegratorConfig",
    "IntegratorDiagnostics",
    "Trajectory",
    "dephasing_fidelity_reference",
    "evolve_master_equation",
    "fidelity_bound",
    "perturbative_fidelity",
    "run_single_transfer",
]

TRACE_FAIL = 1e-6
NEGATIVITY_FAIL = 1e-6
DEFAULT_RECORDS = 1000
# window constant for the O(a) bound: arcsin(u) <= (pi/2) u with c = 1
DEFAULT_WINDOW_N = math.pi / 2
ROTATING_TOLERANCE = 1e-9
LAB_TOLERANCE = 1e-11


class IntegrationError(RuntimeError):
    """The integrated state stopped being a density matrix."""

    def __init__(self, time: float, reason: str):
        super().__init__(f"t={time:.6g}: {reason}")
        self.time = time
        self.reason = reason


@dataclass(frozen=True)
class DensityOperator(Operator):
    def validate(self, atol: float = 1e-10, negativity: float = 1e-8) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m).real - 1.0) > atol:
            raise ValueError(f"trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -negativity:
            raise ValueError("density operator is not positive semidefinite")

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @classmethod
    def pure(cls, psi, basis: str = "bare") -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), basis)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control. ``base_step=None`` and ``tolerance=None`` pick
    frame-dependent defaults (the lab frame needs a tighter per-step
    tolerance because its runs take far more steps).

    ``record_stride`` is the spacing of record points in units of the base
    step; ``None`` gives roughly a thousand records per run.
    """

    base_step: float | None = None
    tolerance: float | None = None
    max_halvings: int = 20
    record_stride: int | None = None

    def __post_init__(self):
        if self.base_step is not None and not self.base_step > 0:
            raise ValueError("base_step must be > 0")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass(frozen=True)
class IntegratorDiagnostics:
    base_step: float
    min_step: float
    accepted_steps: int
    rejected_steps: int
    forced_steps: int
    max_step_error: float
    max_trace_drift: float
    max_hermiticity_drift: float


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    basis: str
    populations: np.ndarray
    labels: tuple[str, ...]
    diagnostics: IntegratorDiagnostics
    meta: dict = field(default_factory=dict)

    def state(self, i: int) -> DensityOperator:
        return DensityOperator(self.states[i], self.basis)

    def final_populations(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.labels, self.populations[-1])}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO(newline="")
        buf.write(",".join(("t",) + self.labels) + "\n")
        for t, row in zip(self.times, self.populations):
            buf.write(",".join(_fmt(v) for v in (t, *row)) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v: float) -> str:
    s = format(float(v), ".12g")
    return "0" if s == "-0" else s


def population_labels(dim: int) -> tuple[str, ...]:
    base = ("P0", "P1", "Pe", "Pr")
    if dim <= 4:
        return base[:dim]
    return tuple(f"P{i}" for i in range(dim))


def _record_times(t_end: float, base_step: float, stride: int | None) -> np.ndarray:
    n_steps = t_end / base_step
    if stride is None:
        stride = max(1, math.ceil(n_steps / DEFAULT_RECORDS))
    spacing = stride * base_step
    k = math.ceil(t_end / spacing - 1e-9)
    times = np.arange(k) * spacing
    return np.append(times, t_end)


def _check_states(times: np.ndarray, states: np.ndarray) -> None:
    finite = np.all(np.isfinite(states), axis=(1, 2))
    if not finite.all():
        i = int(np.argmin(finite))
        raise IntegrationError(times[i], "non-finite state")
    traces = np.real(np.einsum("kii->k", states))
    bad = np.nonzero(~(np.abs(traces - 1.0) <= TRACE_FAIL))[0]
    if bad.size:
        i = bad[0]
        raise IntegrationError(times[i], f"trace drift {traces[i] - 1.0:.3g}")
    herm = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    mins = np.linalg.eigvalsh(herm).min(axis=1)
    bad = np.nonzero(mins < -NEGATIVITY_FAIL)[0]
    if bad.size:
        i = bad[0]
        raise IntegrationError(times[i], f"negative eigenvalue {mins[i]:.3g}")


def _as_matrix(op) -> np.ndarray:
    return np.asarray(op.matrix if isinstance(op, Operator) else op, dtype=complex)


def evolve_master_equation(
    h_of_t: Callable[[float], object],
    l_of_t: Callable[[float], object],
    gamma: float | Sequence[float],
    rho0,
    t_end: float,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate the double-commutator master equation for arbitrary generators.

    ``l_of_t`` may return one Hermitian operator or a sequence of them, with
    ``gamma`` a scalar or one rate per operator. Same step-doubling RK4 as
    the compiled protocol runs, in numpy.
    """
    cfg = cfg or IntegratorConfig()
    base = cfg.base_step if cfg.base_step is not None else 0.01
    tol = cfg.tolerance if cfg.tolerance is not None else ROTATING_TOLERANCE
    rho = _as_matrix(rho0).copy()
    n = rho.shape[0]
    gammas = np.atleast_1d(np.asarray(gamma, dtype=float))

    def lindblads(t):
        ls = l_of_t(t)
        if isinstance(ls, (Operator, np.ndarray)) and np.ndim(_as_matrix(ls)) == 2:
            ls = [ls]
        return [_as_matrix(L) for L in ls]

    def rhs(t, r):
        H = _as_matrix(h_of_t(t))
        out = -1j * (H @ r - r @ H)
        ls = lindblads(t)
        for g_j, L in zip(np.broadcast_to(gammas, (len(ls),)), ls):
            if g_j:
                Lr = L @ r
                rL = r @ L
                out -= 0.5 * g_j * (L @ Lr - 2.0 * Lr @ L + rL @ L)
        return out

    def rk4(r, t, h, k1):
        k2 = rhs(t + h / 2, r + h / 2 * k1)
        k3 = rhs(t + h / 2, r + h / 2 * k2)
        k4 = rhs(t + h, r + h * k3)
        return r + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    record = _record_times(t_end, base, cfg.record_stride)
    states = np.zeros((len(record), n, n), dtype=complex)
    states[0] = rho
    h, t = base, 0.0
    h_min = base / 2.0**cfg.max_halvings
    acc = rej = forced = 0
    max_err = herm_drift = trace_drift = 0.0
    min_h = base
    for i, t_next in enumerate(record[1:], start=1):
        while t < t_next:
            hs, last = h, False
            if t + hs >= t_next - 1e-12 * t_next:
                hs, last = t_next - t, True
            k1 = rhs(t, rho)
            full = rk4(rho, t, hs, k1)
            mid = rk4(rho, t, hs / 2, k1)
            half = rk4(mid, t + hs / 2, hs / 2, rhs(t + hs / 2, mid))
            err = float(np.max(np.abs(half - full)))
            if err > tol and hs > h_min * (1 + 1e-9):
                h, rej = hs / 2, rej + 1
                continue
            forced += err > tol
            herm_drift = max(herm_drift, float(np.max(np.abs(half - half.conj().T))))
            trace_drift = max(trace_drift, abs(np.trace(half).real - 1.0))
            rho = 0.5 * (half + half.conj().T)
            acc += 1
            max_err = max(max_err, err)
            if not last:
                min_h = min(min_h, hs)
            t = t_next if last else t + hs
            if err < tol / 32 and h < base:
                h = min(2 * h, base)
        states[i] = rho
    _check_states(record, states)
    diag = IntegratorDiagnostics(base, min_h, acc, rej, forced, max_err, trace_drift, herm_drift)
    pops = np.real(np.einsum("kii->ki", states))
    return Trajectory(record, states, "bare", pops, population_labels(n), diag)


# -- compiled protocol runs ------------------------------------------------


@dataclass(frozen=True)
class _NodeModel:
    """Direct sum of node blocks handed to the compiled stepper."""

    nodes: tuple[SystemParams, ...]
    kinds: tuple[int, ...]
    offsets: tuple[int, ...]
    dim: int

    def arrays(self):
        p = np.array([[q.g, q.delta, q.ramp, q.epsilon] for q in self.nodes], dtype=float)
        gam = np.array(
            [0.0 if q.noise is NoiseModel.NONE else q.gamma for q in self.nodes], dtype=float
        )
        return (
            np.array(self.kinds, dtype=np.int64),
            p,
            np.array(self.offsets, dtype=np.int64),
            gam,
        )

    @property
    def basis(self) -> str:
        names = {_kernel.SUPER: "superadiabatic", _kernel.BARE: "bare", _kernel.LAB: "lab"}
        return "+".join(names[k] for k in self.kinds)

    def default_step(self) -> float:
        steps = []
        for q, k in zip(self.nodes, self.kinds):
            if k == _kernel.LAB:
                steps.append(2 * math.pi / q.epsilon / 20)
            else:
                steps.append(min(0.01 / q.delta, 0.01 / q.g))
        return min(steps)

    def default_tolerance(self) -> float:
        lab = any(k == _kernel.LAB for k in self.kinds)
        return LAB_TOLERANCE if lab else ROTATING_TOLERANCE

    def to_bare(self, t: float) -> np.ndarray:
        """Map from the integration frame to the bare (lab or rotating) frame."""
        U = np.eye(self.dim, dtype=complex)
        for q, k, o in zip(self.nodes, self.kinds, self.offsets):
            if k == _kernel.SUPER:
                U[o:o + 3, o:o + 3] = _superadiabatic_columns(*coefficients_xyz(q, t))
            elif k == _kernel.LAB:
                phase = np.exp(-1j * q.epsilon * t)
                U[o + 1, o + 1] = U[o + 2, o + 2] = phase
        return U

    def to_frame(self, t: float) -> np.ndarray:
        """Inverse of :meth:`to_bare`, exact at the ramp ends where x = 0."""
        return np.linalg.inv(self.to_bare(t))


def node_kind(params: SystemParams) -> int:
    if params.frame is Frame.LAB:
        return _kernel.LAB
    if params.noise is NoiseModel.SUPERADIABATIC:
        return _kernel.SUPER
    return _kernel.BARE


def _single_model(params: SystemParams, dim: int = 3) -> _NodeModel:
    return _NodeModel((params,), (node_kind(params),), (0,), dim)


def _bare_populations(model: _NodeModel, times, states) -> np.ndarray:
    """Diagonals of the bare-frame state, renormalised to unit trace.

    The first-order superadiabatic transform is unitary only up to O(|x|^2);
    renormalising keeps the reported populations a probability vector.
    """
    pops = np.empty((len(times), model.dim))
    for i, t in enumerate(times):
        U = model.to_bare(t)
        rho = U @ states[i] @ U.conj().T
        d = np.real(np.diag(rho))
        pops[i] = d / d.sum()
    return pops


def _run_model(model: _NodeModel, rho0: np.ndarray, t_end: float, cfg: IntegratorConfig):
    base = cfg.base_step if cfg.base_step is not None else model.default_step()
    tol = cfg.tolerance if cfg.tolerance is not None else model.default_tolerance()
    record = _record_times(t_end, base, cfg.record_stride)
    kinds, p, offsets, gam = model.arrays()
    states, stats = _kernel.integrate(
        kinds, p, offsets, gam, np.ascontiguousarray(rho0, dtype=complex),
        record, base, tol, cfg.max_halvings,
    )
    _check_states(record, states)
    diag = IntegratorDiagnostics(
        base_step=base,
        min_step=float(stats[4]),
        accepted_steps=int(stats[0]),
        rejected_steps=int(stats[1]),
        forced_steps=int(stats[2]),
        max_step_error=float(stats[3]),
        max_trace_drift=float(stats[6]),
        max_hermiticity_drift=float(stats[5]),
    )
    pops = _bare_populations(model, record, states)
    return Trajectory(record, states, model.basis, pops, population_labels(model.dim), diag)


def run_single_transfer(params: SystemParams, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Ramp the drive off starting from bare ``|1><1|``.

    The frame is chosen from ``params``: superadiabatic noise integrates the
    diagonal superadiabatic Hamiltonian with the transformed dephasing
    operator; lab-excited noise (or no noise) integrates the bare rotating
    or lab Hamiltonian with ``|e><e|``. Populations are always reported in
    the bare basis.
    """
    cfg = cfg or IntegratorConfig()
    model = _single_model(params)
    rho_bare = np.zeros((3, 3), dtype=complex)
    rho_bare[1, 1] = 1.0
    V = model.to_frame(0.0)
    traj = _run_model(model, V @ rho_bare @ V.conj().T, params.duration, cfg)
    traj.meta["params"] = params
    return traj


def dephasing_fidelity_reference(params: SystemParams, cfg: IntegratorConfig | None = None) -> float:
    """Fidelity of ``(|E_00> + |r>)/sqrt 2`` against its decoherence-free evolution.

    ``|r>`` is a fourth level with no Hamiltonian or noise coupling.
    """
    cfg = cfg or IntegratorConfig()
    if params.frame is Frame.LAB:
        raise ValueError("reference-state fidelity is defined in the rotating frame")
    model = _single_model(params, dim=4)
    dark = superadiabatic_transform(params, 0.0).matrix[:, 0]
    psi = np.append(dark, 1.0) / math.sqrt(2.0)
    V = model.to_frame(0.0)
    rho0 = V @ np.outer(psi, psi.conj()) @ V.conj().T
    noisy = _run_model(model, rho0, params.duration, cfg)
    ideal_params = replace(params, gamma=0.0)
    ideal = _run_model(_single_model(ideal_params, dim=4), rho0, params.duration, cfg)
    return float(np.real(np.trace(ideal.states[-1] @ noisy.states[-1])))


def _x_squared(params: SystemParams, t: np.ndarray) -> np.ndarray:
    g, a, delta = params.g, params.ramp, params.delta
    c = np.cos(a * t)
    c = np.where(np.abs(c) < 1e-15, 0.0, c)
    s = np.sin(a * t)
    n2 = 4 * g * g + (delta * c * c) ** 2
    return 32.0 * (g * a * delta * c * s) ** 2 / n2**3


def perturbative_fidelity(params: SystemParams, rtol: float = 1e-8) -> tuple[float, float]:
    """``(1 - gamma * I, I)`` with ``I`` the integral of ``|x|^2`` over the ramp.

    Composite Simpson on a grid doubled until the relative change drops
    below ``rtol``.
    """
    T = params.duration
    n = 64
    prev = None
    while True:
        t = np.linspace(0.0, T, n + 1)
        val = float(simpson(_x_squared(params, t), x=t))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            break
        if n > 2**26:
            raise RuntimeError("Simpson refinement did not converge")
        prev, n = val, 2 * n
    return 1.0 - params.gamma * val, val


@dataclass(frozen=True)
class FidelityBound:
    bound: float
    per_ramp: float


def fidelity_bound(params: SystemParams, n: float = DEFAULT_WINDOW_N) -> FidelityBound:
    """Upper bound on ``1 - F`` linear in the ramp rate.

    ``n`` sets the width ``(n/a) sqrt(g/Delta)`` of the late-time window where
    the excited amplitude is non-negligible.
    """
    if not n > 0:
        raise ValueError("n must be > 0")
    g, a, delta = params.g, params.ramp, params.delta
    bound = (
        (PEAK_CONSTANT / 2.0)
        * params.gamma
        * (n / a)
        * math.sqrt(g / delta)
        * (a * a * delta / g**3)
    )
    return FidelityBound(bound, bound / a)
