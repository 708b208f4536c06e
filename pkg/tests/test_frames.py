import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stirap_bell.frames import (
    PEAK_CONSTANT,
    adiabatic_eigensystem,
    coefficients_xyz,
    correction_w,
    excited_population_formula,
    excited_population_printed,
    frame_data,
    lindblad_vector_phi,
    max_excited_population,
    superadiabatic_transform,
)
from stirap_bell.model import SystemParams, hamiltonian_rwa

P = SystemParams(g=1.0, delta=50.0, ramp=0.01)
T = P.duration

params_st = st.builds(
    lambda d, a: SystemParams(g=1.0, delta=d, ramp=a),
    st.floats(10.0, 200.0),
    st.floats(1e-3, 0.1),
)
fraction_st = st.floats(0.0, 1.0)


def _numeric_eig_match(H, energies, D):
    """Match closed-form columns to numpy eigenvectors up to a phase."""
    w, V = np.linalg.eigh(H)
    for k, e in enumerate(energies):
        j = int(np.argmin(np.abs(w - e)))
        assert abs(w[j] - e) <= 1e-12 * max(1.0, abs(e))
        overlap = abs(np.vdot(V[:, j], D[:, k]))
        assert overlap == pytest.approx(1.0, abs=1e-12)


class TestAdiabaticEigensystem:
    def test_end_of_ramp(self):
        energies, D = adiabatic_eigensystem(P, T)
        np.testing.assert_allclose(energies, [0.0, 1.0, -1.0], atol=1e-15)
        np.testing.assert_array_equal(D.matrix[:, 0], [-1.0, 0.0, 0.0])

    def test_start_eigenvalue_against_numpy(self):
        energies, D = adiabatic_eigensystem(P, 0.0)
        assert energies[1] == pytest.approx(math.sqrt(2504.0) / 2, rel=1e-15)
        assert energies[1] == pytest.approx(25.0199920064, abs=1e-9)
        _numeric_eig_match(hamiltonian_rwa(P, 0.0).matrix, energies, D.matrix)

    @settings(max_examples=120, deadline=None)
    @given(params_st, fraction_st)
    def test_residual_and_unitarity(self, p, frac):
        t = frac * p.duration
        H = hamiltonian_rwa(p, t).matrix
        energies, D = adiabatic_eigensystem(p, t)
        for k in range(3):
            col = D.matrix[:, k]
            assert np.max(np.abs(H @ col - energies[k] * col)) <= 1e-12 * max(1.0, p.delta)
        assert D.is_unitary(1e-12)
        offdiag = D.matrix.conj().T @ H @ D.matrix - np.diag(energies)
        assert np.max(np.abs(offdiag)) <= 1e-12 * max(1.0, p.delta)
        assert energies[0] == 0.0

    @settings(max_examples=50, deadline=None)
    @given(params_st, fraction_st)
    def test_matches_numeric_eigensolver(self, p, frac):
        t = frac * p.duration
        energies, D = adiabatic_eigensystem(p, t)
        _numeric_eig_match(hamiltonian_rwa(p, t).matrix, energies, D.matrix)


class TestCoefficients:
    def test_start(self):
        x, y, z = coefficients_xyz(P, 0.0)
        assert x == 0
        assert y == pytest.approx(50 / math.sqrt(2504), rel=1e-15)
        assert z == pytest.approx(2 / math.sqrt(2504), rel=1e-15)

    def test_end(self):
        assert coefficients_xyz(P, T) == (0j, 0.0, 1.0)

    @settings(max_examples=100, deadline=None)
    @given(params_st, fraction_st)
    def test_identities(self, p, frac):
        x, y, z = coefficients_xyz(p, frac * p.duration)
        assert y * y + z * z == pytest.approx(1.0, abs=1e-12)
        assert x.real == 0.0


def _fd_w(p, t, h=1e-6):
    _, D = adiabatic_eigensystem(p, t)
    _, Dp = adiabatic_eigensystem(p, t + h)
    _, Dm = adiabatic_eigensystem(p, t - h)
    return -1j * D.matrix.conj().T @ (Dp.matrix - Dm.matrix) / (2 * h)


class TestCorrection:
    def test_zero_at_start(self):
        np.testing.assert_array_equal(correction_w(P, 0.0).matrix, np.zeros((3, 3)))

    def test_i_w_structure(self):
        w = correction_w(P, 100.0).matrix
        assert np.allclose(w, w.conj().T, atol=0)
        assert np.all(w.real == 0)

    def test_finite_difference_oracle(self):
        w = correction_w(P, 100.0).matrix
        assert np.max(np.abs(w - _fd_w(P, 100.0))) <= 1e-6

    def test_equal_weights(self):
        w = correction_w(P, 120.0).matrix
        assert w[0, 1] == w[0, 2] == -w[1, 0] == -w[2, 0]
        assert w[1, 2] == w[2, 1] == 0


class TestSuperadiabatic:
    def test_end_is_minus_zero(self):
        Ds = superadiabatic_transform(P, T).matrix
        np.testing.assert_array_equal(Ds[:, 0], [-1.0, 0.0, 0.0])

    def test_start_overlap_with_one(self):
        Ds = superadiabatic_transform(P, 0.0).matrix
        assert abs(Ds[1, 0]) ** 2 == pytest.approx(2500 / 2504, rel=1e-14)
        assert abs(Ds[1, 0]) ** 2 == pytest.approx(0.9984, abs=1e-4)

    def test_first_order_unitarity_scan(self):
        ts = np.linspace(0.0, T, 2001)
        xmax = max(abs(coefficients_xyz(P, t)[0]) for t in ts)
        for t in ts[::10]:
            Ds = superadiabatic_transform(P, t).matrix
            assert np.max(np.abs(Ds.conj().T @ Ds - np.eye(3))) <= 10 * xmax**2

    def test_gram_matrix_exact_second_order(self):
        # Ds^dag Ds = I + |x|^2 [[2,0,0],[0,1,-1],[0,-1,1]] (closed form of the columns)
        t = 140.0
        x, _, _ = coefficients_xyz(P, t)
        Ds = superadiabatic_transform(P, t).matrix
        expected = np.eye(3) + abs(x) ** 2 * np.array([[2, 0, 0], [0, 1, -1], [0, -1, 1]])
        np.testing.assert_allclose(Ds.conj().T @ Ds, expected, atol=1e-15)


class TestLindbladVector:
    def test_ends(self):
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(lindblad_vector_phi(P, 0.0), [0, r, -r], atol=0)
        np.testing.assert_allclose(lindblad_vector_phi(P, T), [0, r, -r], atol=0)

    def test_norm(self):
        x, _, _ = coefficients_xyz(P, 140.0)
        phi = lindblad_vector_phi(P, 140.0)
        assert np.vdot(phi, phi).real == pytest.approx(1 + 2 * abs(x) ** 2, rel=1e-14)

    @pytest.mark.parametrize("t", [50.0, 120.0, 140.0, 150.0])
    def test_matches_conjugated_projector(self, t):
        Ds = superadiabatic_transform(P, t).matrix
        Pe = np.zeros((3, 3))
        Pe[2, 2] = 1.0
        phi = lindblad_vector_phi(P, t)
        x, _, _ = coefficients_xyz(P, t)
        dev = Ds.conj().T @ Pe @ Ds - np.outer(phi, phi.conj())
        assert np.max(np.abs(dev)) <= 10 * abs(x) ** 2 + 1e-16


class TestExcitedPopulation:
    def test_zero_at_ends(self):
        assert excited_population_formula(P, 0.0) == 0.0
        assert excited_population_formula(P, T) == 0.0

    def test_printed_fraction_is_same_expression(self):
        for t in np.linspace(0, T, 51):
            assert excited_population_formula(P, t) == pytest.approx(
                excited_population_printed(P, t), rel=1e-12, abs=1e-300
            )

    def test_value_at_half_ramp(self):
        t = T / 2
        c = s = math.sqrt(0.5)
        expected = 64 * 0.01**2 * 2500 * c**2 * s**2 / (4 + 2500 * c**4) ** 3
        assert excited_population_formula(P, t) == pytest.approx(expected, rel=1e-12)


class TestMaxExcitedPopulation:
    def test_reference_parameters(self):
        peak = max_excited_population(P)
        assert peak.p_max_formula == pytest.approx(25 * math.sqrt(5) / 108 * 1e-4 * 50, rel=1e-15)
        assert peak.p_max_formula == pytest.approx(2.588e-3, abs=1e-6)
        assert peak.t_star_formula == pytest.approx(143.66, abs=0.01)
        assert peak.relative_gap < 0.05
        assert not peak.approximation_unreliable

    def test_numeric_peak_beats_grid(self):
        peak = max_excited_population(P)
        ts = np.linspace(0, T, 20001)
        grid_max = max(excited_population_formula(P, t) for t in ts)
        assert peak.p_max_numeric >= grid_max - 1e-12
        assert peak.p_max_numeric == pytest.approx(grid_max, rel=1e-6)

    def test_closed_form_scaling(self):
        base = max_excited_population(P).p_max_formula
        assert max_excited_population(P.with_(ramp=0.005)).p_max_formula == pytest.approx(base / 4, rel=1e-14)
        assert max_excited_population(P.with_(delta=100.0)).p_max_formula == pytest.approx(2 * base, rel=1e-14)

    def test_agreement_improves_with_drive(self):
        gaps = [max_excited_population(P.with_(delta=d)).relative_gap for d in (50.0, 100.0, 200.0)]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_warning_outside_regime(self):
        with pytest.warns(RuntimeWarning):
            peak = max_excited_population(SystemParams(delta=5.0))
        assert peak.approximation_unreliable


def test_frame_data_bundle():
    fd = frame_data(P, 140.0)
    assert fd.D.is_unitary()
    assert fd.x == coefficients_xyz(P, 140.0)[0]
    np.testing.assert_array_equal(fd.Ds.matrix, superadiabatic_transform(P, 140.0).matrix)
