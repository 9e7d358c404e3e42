import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zktdvp import (ModelParams, VariationalState, WrongSpinError, derive_sites, energy_variance,
                    gram_blocks, leakage_large_j, leakage_rate, leakage_spin_half)
from zktdvp.leakage import BREAKDOWN_LABELS
from zktdvp.oracle import numeric_environment

from helpers import SPINS, cells, spin_half_point


def test_spin_half_reference_leakage_is_one_twelfth():
    params, state = spin_half_point()
    assert leakage_spin_half(params, state) == pytest.approx(1 / 12, abs=1e-15)
    rep = leakage_rate(params, state)
    assert rep.gamma2 == pytest.approx(1 / 12, abs=1e-14)
    assert rep.gamma2_definition == pytest.approx(1 / 12, abs=1e-14)


def test_frozen_variance_at_reference_point():
    params, state = spin_half_point(phi=(0.3, -0.2), Delta=(0.5, -0.5))
    rep = energy_variance(params, state)
    assert rep.total == pytest.approx(0.95624457709288, abs=1e-12)
    assert rep.gamma2 is None


@settings(max_examples=150)
@given(cells(max_k=6, spins=(0.5,)))
def test_compact_spin_half_leakage_agrees(cell):
    params, state = cell
    assert leakage_rate(params, state).gamma2 == pytest.approx(leakage_spin_half(params, state),
                                                               abs=1e-10)


@given(cells(max_k=6, spins=(0.5,), min_sin=0.0))
def test_compact_spin_half_leakage_is_nonnegative(cell):
    params, state = cell
    assert leakage_spin_half(params, state) >= 0


def test_spin_half_leakage_vanishes_on_reference_state():
    params = ModelParams(3, 0.5, [1, 2, 3], [0, 0, 0])
    assert leakage_spin_half(params, VariationalState([0] * 3, [0.1] * 3)) == 0


def test_spin_half_leakage_near_pi_is_finite():
    params = ModelParams(2, 0.5, [1, 1], [0, 0])
    g2 = leakage_spin_half(params, VariationalState([np.pi - 0.01] * 2, [0, 0]))
    assert np.isfinite(g2) and g2 >= 0


def test_compact_form_rejects_other_spins():
    with pytest.raises(WrongSpinError):
        leakage_spin_half(ModelParams(1, 1.5, [1], [0]), VariationalState([1.0], [0.0]))


@settings(max_examples=150)
@given(cells(max_k=5), st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_leakage_is_independent_of_detuning(cell, other):
    params, state = cell
    moved = params.replace(Delta=other[:params.K])
    a = leakage_rate(params, state, cross_check=False).gamma2
    b = leakage_rate(moved, state, cross_check=False).gamma2
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


@given(cells(max_k=5), st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_defining_expression_is_independent_of_detuning(cell, other):
    params, state = cell
    a = leakage_rate(params, state)
    b = leakage_rate(params.replace(Delta=other[:params.K]), state)
    scale = max(a.total, b.total, abs(a.gamma2), 1e-300)
    assert abs(a.gamma2_definition - b.gamma2_definition) <= 1e-12 * scale


@settings(max_examples=300)
@given(cells(max_k=5))
def test_leakage_is_nonnegative(cell):
    params, state = cell
    assert leakage_rate(params, state, cross_check=False).gamma2 >= -1e-12


@settings(max_examples=150)
@given(cells(max_k=5))
def test_closed_form_matches_defining_expression(cell):
    params, state = cell
    rep = leakage_rate(params, state)
    scale = max(abs(rep.gamma2), rep.total, 1e-300)
    assert abs(rep.gamma2 - rep.gamma2_definition) <= 1e-9 * scale


@given(cells(max_k=5))
def test_variance_pieces_sum_and_are_real(cell):
    params, state = cell
    rep = energy_variance(params, state)
    assert rep.total == pytest.approx(rep.var_zz + rep.var_zxxz + rep.var_xx, abs=1e-13)
    assert all(isinstance(v, float) for v in (rep.var_zz, rep.var_zxxz, rep.var_xx, rep.total))
    assert rep.total >= -1e-12


@given(cells(max_k=5))
def test_zz_variance_is_detuning_weighted_phi_phi_gram(cell):
    params, state = cell
    sites = derive_sites(params, state)
    g_pp = gram_blocks(params, sites).g_pp.real
    f = params.Delta / params.J
    rep = energy_variance(params, state)
    # the assembled form cancels entries much larger than the result near theta = pi
    magnitude = np.abs(f) @ np.abs(g_pp) @ np.abs(f)
    assert rep.var_zz * params.K == pytest.approx(f @ g_pp @ f, rel=1e-10, abs=1e-13 * magnitude)


@given(cells(max_k=4))
def test_breakdown_has_every_labelled_summand(cell):
    params, state = cell
    rep = leakage_rate(params, state, cross_check=False)
    assert tuple(rep.breakdown()) == BREAKDOWN_LABELS
    assert rep.gamma2_definition is None


@pytest.mark.parametrize("seed", range(5))
def test_variance_and_leakage_match_numeric_environment(seed):
    rng = np.random.default_rng(200 + seed)
    K, J = int(rng.integers(1, 5)), float(rng.choice(SPINS))
    params = ModelParams(K, J, rng.normal(size=K), rng.normal(size=K))
    state = VariationalState(rng.uniform(0.3, 2.8, K), rng.uniform(0, 2 * np.pi, K))
    ref = numeric_environment(params, state)
    rep = leakage_rate(params, state)
    assert rep.total * K == pytest.approx(ref.variance, rel=1e-9)
    assert rep.gamma2 == pytest.approx(ref.gamma2, rel=1e-9, abs=1e-9 * ref.variance / K)


@given(cells(max_k=4, spins=(25.0, 50.0)))
def test_large_spin_limit_vanishes_at_quarter_turn(cell):
    params, state = cell
    quarter = VariationalState(state.theta, np.full(params.K, np.pi / 2))
    assert leakage_large_j(params, quarter) == pytest.approx(0, abs=1e-30)


def test_odd_cell_leakage_decays_faster_than_inverse_spin():
    state = VariationalState([0.5, 0.7, 0.6], [0.3, 0.2, 0.1])
    values = []
    for J in (25, 50, 100, 200):
        values.append(leakage_rate(ModelParams(3, J, [1, 1, 1], [0, 0, 0]), state,
                                   cross_check=False).gamma2)
    js = np.array([25, 50, 100, 200])
    scaled = np.array(values) * js
    assert np.all(np.diff(scaled) < 0)
    assert scaled[-1] < 1e-3 * scaled[0]


def test_odd_cell_eta_approaches_one_half():
    state = VariationalState([0.5, 0.7, 0.6], [0.3, 0.2, 0.1])
    gaps = [np.max(np.abs(derive_sites(ModelParams(3, J, [1] * 3, [0] * 3), state).eta - 0.5))
            for J in (25, 50, 100)]
    assert gaps[0] > gaps[1] > gaps[2]
