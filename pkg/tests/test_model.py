import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from stirap_bell.model import (
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

P = SystemParams(g=1.0, delta=50.0, ramp=0.01)
T = P.duration


class TestSystemParams:
    def test_duration(self):
        assert T == pytest.approx(math.pi / 0.02)

    @pytest.mark.parametrize("key", ["g", "delta", "ramp"])
    def test_positive_rates(self, key):
        with pytest.raises(ConfigError) as exc:
            SystemParams(**{key: 0.0})
        assert exc.value.key == key

    def test_negative_gamma(self):
        with pytest.raises(ConfigError, match="gamma"):
            SystemParams(gamma=-1.0)

    def test_lab_needs_epsilon(self):
        with pytest.raises(ConfigError, match="epsilon"):
            SystemParams(frame="lab", noise="lab", epsilon=0.0)

    def test_superadiabatic_noise_rejected_in_lab_frame(self):
        with pytest.raises(ConfigError, match="noise"):
            SystemParams(frame=Frame.LAB, noise=NoiseModel.SUPERADIABATIC)

    def test_normalized_scales_rates(self):
        p = SystemParams(g=2.0, delta=100.0, ramp=0.02, gamma=0.2, epsilon=2000.0).normalized()
        assert (p.g, p.delta, p.ramp, p.gamma, p.epsilon) == (1.0, 50.0, 0.01, 0.1, 1000.0)

    def test_strong_drive_flag(self):
        assert P.strong_drive
        assert not SystemParams(delta=5.0).strong_drive

    def test_basis_order(self):
        assert [int(b) for b in BasisLabel] == [0, 1, 2, 3]


class TestDriveEnvelope:
    def test_examples(self):
        assert drive_envelope(P, 0.0) == 50.0
        assert drive_envelope(P, T) == 0.0
        assert drive_envelope(P, math.pi / (4 * 0.01)) == pytest.approx(25.0, rel=1e-14)

    def test_monotone_and_bounded(self):
        ts = np.linspace(0.0, T, 2001)
        env = np.array([drive_envelope(P, t) for t in ts])
        assert np.all(env >= 0) and np.all(env <= 50.0)
        assert np.all(np.diff(env) <= 0)

    @pytest.mark.parametrize("t", [-1e-3, T * 1.001])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            drive_envelope(P, t)


class TestHamiltonians:
    def test_rwa_end_of_ramp(self):
        H = hamiltonian_rwa(P, T).matrix
        expected = np.zeros((3, 3))
        expected[1, 2] = expected[2, 1] = 1.0
        np.testing.assert_array_equal(H, expected)

    def test_rwa_start(self):
        H = hamiltonian_rwa(P, 0.0)
        assert H[2, 0] == 25.0
        assert H.basis == "bare"

    @pytest.mark.parametrize("t", np.linspace(0, T, 7))
    def test_hermitian_exactly(self, t):
        assert hamiltonian_rwa(P, t).is_hermitian(0.0)
        assert hamiltonian_lab(P.with_(frame="lab", noise="lab"), t).is_hermitian(0.0)

    def test_lab_entries(self):
        p = P.with_(frame="lab", noise="lab", epsilon=1000.0)
        H = hamiltonian_lab(p, 0.0).matrix
        assert H[2, 0] == 50.0
        np.testing.assert_array_equal(np.real(np.diag(H)), [0.0, 1000.0, 1000.0])

    def test_lab_drive_averages_to_zero(self):
        p = P.with_(frame="lab", noise="lab", epsilon=1000.0)
        period = 2 * math.pi / p.epsilon
        # freeze the envelope: cos^2(a t) barely moves over one carrier period
        ts = 50.0 + np.linspace(0.0, period, 4001)
        vals = np.array([hamiltonian_lab(p, t)[2, 0].real for t in ts])
        mean = np.trapezoid(vals, ts) / period
        assert abs(mean) < 1e-3 * drive_envelope(p, 50.0)

    def test_operator_rejects_non_square(self):
        with pytest.raises(ValueError):
            Operator(np.zeros((2, 3)))


def _rotating_propagator(params, t_end, lab):
    """Rotating-frame propagator from direct Schrodinger integration."""
    def rhs(t, y):
        H = (hamiltonian_lab(params, t) if lab else hamiltonian_rwa(params, t)).matrix
        U = y.reshape(3, 3)
        return (-1j * H @ U).ravel()

    sol = solve_ivp(rhs, (0.0, t_end), np.eye(3, dtype=complex).ravel(),
                    method="DOP853", rtol=1e-10, atol=1e-12)
    U = sol.y[:, -1].reshape(3, 3)
    if lab:
        H0 = np.diag([0.0, params.epsilon, params.epsilon])
        U = expm(1j * H0 * t_end) @ U
    return U


def test_lab_propagator_converges_to_rwa():
    base = SystemParams(g=1.0, delta=10.0, ramp=0.2, frame="lab", noise="lab")
    T_ = base.duration
    U_rwa = _rotating_propagator(base.with_(frame="rwa"), T_, lab=False)
    errs = []
    for eps in (40.0, 160.0):
        U_lab = _rotating_propagator(base.with_(epsilon=eps), T_, lab=True)
        errs.append(np.max(np.abs(U_lab - U_rwa)))
    assert errs[1] < errs[0]
