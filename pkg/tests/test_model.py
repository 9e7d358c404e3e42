import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zktdvp import (DegenerateManifoldError, ModelParams, ParameterError, VariationalState,
                    derive_sites, validate)
from zktdvp.model import one_minus_cell_product, reduce_theta

from helpers import SPINS, cells


def test_validate_accepts_matching_lengths():
    validate(ModelParams(2, 0.5, [1, 1], [0.2, -0.1]))


@pytest.mark.parametrize("kwargs, match", [
    (dict(K=2, J=0.3, Omega=[1, 1], Delta=[0, 0]), "2J"),
    (dict(K=2, J=0.5, Omega=[1, 1, 1], Delta=[0, 0]), "Omega"),
    (dict(K=2, J=0.5, Omega=[1, 1], Delta=[0]), "Delta"),
    (dict(K=0, J=0.5, Omega=[], Delta=[]), "K"),
    (dict(K=1, J=1.0, Omega=[np.nan], Delta=[0]), "finite"),
])
def test_validate_names_the_violation(kwargs, match):
    with pytest.raises(ParameterError, match=match):
        validate(ModelParams(**kwargs))


def test_validate_rejects_state_of_wrong_size():
    with pytest.raises(ParameterError, match="sites"):
        validate(ModelParams(2, 1, [1, 1], [0, 0]), VariationalState([0.1] * 3, [0] * 3))


def test_state_rejects_nonfinite_and_ragged_angles():
    with pytest.raises(ParameterError):
        VariationalState([0.1, np.inf], [0, 0])
    with pytest.raises(ParameterError):
        VariationalState([0.1, 0.2], [0])


def test_params_are_read_only():
    p = ModelParams(2, 1, [1, 1], [0, 0])
    with pytest.raises(ValueError):
        p.Omega[0] = 3.0


@pytest.mark.parametrize("J", SPINS)
def test_all_ground_cell_has_unit_overlap_and_eta(J):
    sites = derive_sites(ModelParams(3, J, [1] * 3, [0] * 3), VariationalState([0] * 3, [0.4] * 3))
    np.testing.assert_array_equal(sites.x, 1.0)
    np.testing.assert_array_equal(sites.eta, 1.0)


def test_single_site_spin_half_at_equator():
    sites = derive_sites(ModelParams(1, 0.5, [1], [0]), VariationalState([np.pi / 2], [0]))
    assert sites.x[0] == pytest.approx(np.sqrt(0.5), abs=1e-15)
    assert sites.eta[0] == pytest.approx(2 / 3, abs=1e-15)


@given(st.sampled_from(SPINS), st.lists(st.floats(0.05, 3.0), min_size=3, max_size=3))
def test_three_site_eta_matches_explicit_row(J, theta):
    sites = derive_sites(ModelParams(3, J, [1] * 3, [0] * 3), VariationalState(theta, [0] * 3))
    z = sites.x ** 2 - 1
    beta = np.prod(z)
    for i in range(3):
        a, b = z[i - 1], z[i - 2]
        assert sites.eta[i] == pytest.approx((1 + a + a * b) / (1 - beta), rel=1e-12)


@given(st.sampled_from(SPINS), st.lists(st.floats(0.05, 3.0), min_size=2, max_size=2))
def test_two_site_eta_and_dropped_beta(J, theta):
    state = VariationalState(theta, [0, 0])
    exact = derive_sites(ModelParams(2, J, [1, 1], [0, 0]), state)
    dropped = derive_sites(ModelParams(2, J, [1, 1], [0, 0], retain_beta=False), state)
    # with w = x^2: 1 + z = w and 1 - z_0 z_1 = w_0 + w_1 - w_0 w_1, free of cancellation
    w = exact.x ** 2
    np.testing.assert_allclose(exact.eta, w[::-1] / (w[0] + w[1] - w[0] * w[1]), rtol=1e-12)
    np.testing.assert_allclose(dropped.eta, w[::-1], rtol=1e-12)


@settings(max_examples=200)
@given(cells(max_k=8))
def test_eta_recursion_closes_around_the_cell(cell):
    params, state = cell
    sites = derive_sites(params, state)
    z = sites.x ** 2 - 1
    for i in range(params.K):
        nxt = 1 + z[i] * sites.eta[i]
        assert nxt == pytest.approx(sites.eta[(i + 1) % params.K], abs=1e-12)


@given(st.sampled_from(SPINS))
def test_overlap_strictly_decreasing_on_open_interval(J):
    theta = np.linspace(1e-3, np.pi - 1e-3, 400)
    x = derive_sites(ModelParams(400, J, [0] * 400, [0] * 400),
                     VariationalState(theta, np.zeros(400))).x
    assert np.all(np.diff(x) < 0)


@given(cells(max_k=6), st.integers(0, 5))
def test_relabelling_the_cell_rotates_every_site_array(cell, n):
    params, state = cell
    a = derive_sites(params, state)
    b = derive_sites(params.shifted(n), state.shifted(n))
    for name in ("x", "eta", "ctilde"):
        np.testing.assert_allclose(getattr(b, name), np.roll(getattr(a, name), -n),
                                   rtol=1e-12, atol=1e-14)


@given(cells(max_k=4), st.integers(-3, 3))
def test_theta_is_reduced_by_its_period(cell, n):
    params, state = cell
    shifted = VariationalState(state.theta + n * params.theta_period, state.phi)
    a, b = derive_sites(params, state), derive_sites(params, shifted)
    np.testing.assert_allclose(b.x, a.x, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(b.eta, a.eta, rtol=1e-9, atol=1e-12)
    assert np.all((b.theta >= 0) & (b.theta < params.theta_period))
    np.testing.assert_array_equal(shifted.theta, state.theta + n * params.theta_period)


def test_reduce_theta_periods():
    assert reduce_theta(5 * np.pi, 0.5)[()] == pytest.approx(np.pi)
    assert reduce_theta(5 * np.pi, 1.0)[()] == pytest.approx(np.pi)
    assert reduce_theta(-0.5, 2.0)[()] == pytest.approx(2 * np.pi - 0.5)


@pytest.mark.parametrize("J", SPINS)
def test_all_sites_at_pi_are_degenerate(J):
    with pytest.raises(DegenerateManifoldError):
        derive_sites(ModelParams(2, J, [1, 1], [0, 0]), VariationalState([np.pi] * 2, [0, 0]))


def test_one_site_at_pi_is_not_degenerate():
    sites = derive_sites(ModelParams(2, 1, [1, 1], [0, 0]), VariationalState([np.pi, 1.0], [0, 0]))
    assert np.all(np.isfinite(sites.eta))


@given(cells(max_k=6))
def test_ctilde_vanishes_for_spin_half(cell):
    params, state = cell
    sites = derive_sites(params.replace(J=0.5), state)
    np.testing.assert_allclose(sites.ctilde, 0.0, atol=1e-15)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_one_minus_cell_product_matches_naive_form(gap):
    naive = 1 - np.prod([-(1 - g) for g in gap])
    assert one_minus_cell_product(gap) == pytest.approx(naive, abs=1e-14)


def test_one_minus_cell_product_keeps_tiny_gaps():
    # naive 1 - (1 - 1e-20)(1 - 3e-20) is exactly zero in double precision
    assert one_minus_cell_product([1e-20, 3e-20]) == pytest.approx(4e-20, rel=1e-12)


def test_large_spin_eta_stays_finite_and_near_its_limits():
    odd = derive_sites(ModelParams(3, 200, [1] * 3, [0] * 3), VariationalState([0.5, 0.7, 0.6], [0] * 3))
    np.testing.assert_allclose(odd.eta, 0.5, atol=1e-3)
    even = derive_sites(ModelParams(2, 200, [1] * 2, [0] * 2), VariationalState([0.5, 0.7], [0] * 2))
    assert np.all(np.isfinite(even.eta)) and np.all(even.eta > 0)
