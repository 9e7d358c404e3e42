import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zktdvp.oracle import dense_b_operator, dense_coherent_state, spin_matrices
from zktdvp.spin_coherent import (OPERATORS, b_coefficients, coherent_coefficients, expectations,
                                  h_tilde)

SPINS_TO_5_2 = (0.5, 1.0, 1.5, 2.0, 2.5)
angles = st.tuples(st.floats(0.05, np.pi - 0.05), st.floats(0.0, 2 * np.pi))


def dense_operators(theta, phi, J, dtheta, dphi):
    sx, sy, sz, sp, sm = (m / J for m in spin_matrices(J))
    P = np.zeros_like(sz)
    P[0, 0] = 1.0
    B = dense_b_operator(theta, phi, J, dtheta, dphi)
    return {"P": P, "sz": sz, "sp": sp, "sm": sm, "sx": sx, "B": B,
            "sxsx": sx @ sx, "sxsz": sx @ sz, "szsx": sz @ sx, "szsz": sz @ sz,
            "sxB": sx @ B, "szB": sz @ B, "BdB": B.conj().T @ B}


def test_reference_state_is_lowest_weight():
    np.testing.assert_array_equal(coherent_coefficients(0.0, 1.3, 2.0), [1, 0, 0, 0, 0])


@given(angles)
def test_spin_half_amplitudes(ang):
    th, ph = ang
    c = coherent_coefficients(th, ph, 0.5)
    np.testing.assert_allclose(c, [np.cos(th / 2), np.exp(-1j * ph) * np.sin(th / 2)], atol=1e-15)


def test_spin_one_at_equator():
    np.testing.assert_allclose(coherent_coefficients(np.pi / 2, 0.0, 1.0),
                               [0.5, 1 / np.sqrt(2), 0.5], atol=1e-15)


@given(angles, st.sampled_from(SPINS_TO_5_2))
def test_amplitudes_are_normalised_and_match_rotation(ang, J):
    th, ph = ang
    c = coherent_coefficients(th, ph, J)
    assert np.sum(np.abs(c) ** 2) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(c, dense_coherent_state(th, ph, J), atol=1e-12)


@settings(max_examples=100)
@given(angles, st.sampled_from(SPINS_TO_5_2), st.floats(-1, 1), st.floats(-1, 1))
def test_expectation_tables_match_dense_matrices(ang, J, dth, dph):
    th, ph = ang
    bundle = expectations(th, ph, J, dth, dph)
    omega = dense_coherent_state(th, ph, J)
    ground = np.zeros_like(omega)
    ground[0] = 1.0
    for name, O in dense_operators(th, ph, J, dth, dph).items():
        want = (np.vdot(omega, O @ omega), np.vdot(ground, O @ omega), np.vdot(ground, O @ ground))
        np.testing.assert_allclose(bundle[name], want, atol=1e-12, err_msg=name)


@given(angles, st.sampled_from(SPINS_TO_5_2), st.floats(-1, 1), st.floats(-1, 1))
def test_tangent_operator_generates_the_derivative(ang, J, dth, dph):
    th, ph = ang
    h = 1e-6
    fd = (dense_coherent_state(th + h * dth, ph + h * dph, J)
          - dense_coherent_state(th - h * dth, ph - h * dph, J)) / (2 * h)
    B = dense_b_operator(th, ph, J, dth, dph)
    np.testing.assert_allclose(B @ dense_coherent_state(th, ph, J), fd, atol=1e-8)


@given(angles, st.sampled_from(SPINS_TO_5_2))
def test_tangent_coefficients_real_along_theta(ang, J):
    b = b_coefficients(ang[0], J, 1.0, 0.0)
    assert b.scalar.imag == 0 and b.zcoef.imag == 0


def test_operator_list_is_complete():
    assert set(expectations(0.4, 0.1, 1.0).values) == set(OPERATORS)


@given(angles, st.sampled_from(SPINS_TO_5_2))
def test_projector_weight_and_mixed_order_conjugates(ang, J):
    b = expectations(*ang, J)
    assert b.omega("P") == pytest.approx(b.x ** 2, abs=1e-15)
    assert b.omega("sxsz") == pytest.approx(np.conj(b.omega("szsx")), abs=1e-14)


@pytest.mark.parametrize("J", SPINS_TO_5_2)
def test_reference_state_tables_coincide(J):
    b = expectations(0.0, 0.7, J)
    for name in OPERATORS:
        if "B" in name:
            continue
        assert b.omega(name) == pytest.approx(b.ground_omega(name), abs=1e-15)
        assert b.ground_omega(name) == pytest.approx(b.ground(name), abs=1e-15)


def test_spin_half_sx_squares_to_one():
    assert expectations(1.1, 0.4, 0.5).omega("sxsx") == pytest.approx(1.0, abs=1e-15)


@given(angles, st.floats(0.05, np.pi - 0.05), st.sampled_from(SPINS_TO_5_2))
def test_h_tilde_closed_forms(ang, th_next, J):
    th, ph = ang
    x, x_next = np.cos(th / 2) ** (2 * J), np.cos(th_next / 2) ** (2 * J)
    b = expectations(th, ph, J)
    want_x = np.sin(th) * np.cos(ph) * (1 + np.cos(th / 2) ** (4 * J - 2) * (x_next - 1))
    assert h_tilde("sx", b, x, x_next) == pytest.approx(want_x, abs=1e-13)
    assert h_tilde("sz", b, x, x_next) == pytest.approx(1 - np.cos(th), abs=1e-14)


@pytest.mark.parametrize("op", ["sx", "sz"])
def test_h_tilde_vanishes_on_reference_state(op):
    assert h_tilde(op, expectations(0.0, 0.3, 1.5), 1.0, 0.6) == 0
