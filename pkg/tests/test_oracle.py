import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from zktdvp import (DegenerateManifoldError, ModelParams, VariationalState, derive_sites, eom_exact,
                    leakage_rate, variational_energy)
from zktdvp.oracle import (InfiniteMPS, OracleError, build_basis, build_hamiltonian,
                           constrained_dimension, exact_report, mps_to_statevector, site_tensor,
                           unconstrained_weight)

from helpers import cells


def brute_force_dimension(L, J):
    levels = range(int(round(2 * J)) + 1)
    return sum(1 for w in itertools.product(levels, repeat=L)
               if not any(w[i] and w[(i + 1) % L] for i in range(L)))


@pytest.mark.parametrize("L, J, dim", [(4, 0.5, 7), (6, 0.5, 18), (8, 0.5, 47), (4, 1.0, 17)])
def test_constrained_dimensions(L, J, dim):
    assert constrained_dimension(L, J) == dim
    assert build_basis(L, J).dim == dim
    assert brute_force_dimension(L, J) == dim


@pytest.mark.parametrize("L, J", [(5, 1.5), (6, 2.0), (7, 0.5)])
def test_trace_count_matches_enumeration(L, J):
    assert constrained_dimension(L, J) == brute_force_dimension(L, J)


def test_basis_words_respect_blockade():
    words = build_basis(9, 1.0).states
    assert not np.any((words > 0) & (np.roll(words, -1, axis=1) > 0))


def test_basis_cap_and_minimum_length():
    with pytest.raises(OracleError):
        build_basis(12, 2.0, cap=100)
    with pytest.raises(ValueError):
        build_basis(2, 0.5)


def test_zero_drive_hamiltonian_is_diagonal_detuning():
    J = 1.0
    basis = build_basis(6, J)
    params = ModelParams(2, J, [0, 0], [0.7, -0.4])
    H = build_hamiltonian(basis, params).toarray()
    assert not np.any(H - np.diag(np.diag(H)))
    sigma = basis.states.astype(float) - J
    np.testing.assert_allclose(np.diag(H), (sigma / J) @ np.tile(params.Delta, 3), atol=1e-15)


def test_hamiltonian_is_hermitian_and_needs_whole_cells():
    basis = build_basis(8, 1.5)
    H = build_hamiltonian(basis, ModelParams(2, 1.5, [1.0, 0.3], [0.2, -0.1]))
    assert abs(H - H.conj().T).max() < 1e-15
    with pytest.raises(ValueError):
        build_hamiltonian(build_basis(7, 0.5), ModelParams(2, 0.5, [1, 1], [0, 0]))


def test_reference_state_vector_is_direct_trace():
    params = ModelParams(2, 0.5, [1, 1], [0, 0])
    state = VariationalState([0.0, 0.0], [0.3, 0.1])
    L = 6
    basis = build_basis(L, 0.5)
    psi = mps_to_statevector(state, params, L, basis)
    A = site_tensor(0.0, 0.3, 0.5)
    for k, w in enumerate(basis.states.tolist()):
        M = np.eye(2)
        for s in w:
            M = M @ A[s]
        assert psi[k] == pytest.approx(np.trace(M), abs=1e-15)
    ground = basis.index()[(0,) * L]
    assert psi[ground] == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=10)
@given(cells(max_k=2, spins=(0.5, 1.0)))
def test_ansatz_never_violates_blockade(cell):
    params, state = cell
    assert unconstrained_weight(state, params, 2 * params.K if params.K > 1 else 4) == 0


def test_frozen_state_without_hamiltonian_does_not_leak():
    params = ModelParams(2, 1.0, [0, 0], [0, 0])
    state = VariationalState([1.0, 2.0], [0.3, 0.4])
    e, var, g2 = exact_report(state, params, 6, np.zeros(4))
    assert e == 0 and var == pytest.approx(0, abs=1e-15) and g2 == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("theta, phi, Delta", [
    ((np.pi / 2, np.pi / 2), (0.3, -0.2), (0.5, -0.5)),
    ((1.0, 2.0), (0.1, 0.7), (0.2, 0.3)),
])
def test_finite_size_error_tracks_subdominant_eigenvalue(theta, phi, Delta):
    params = ModelParams(2, 0.5, [1, 1], Delta)
    state = VariationalState(theta, phi)
    lam = abs(derive_sites(params, state).beta_cell)
    v = eom_exact(params, state).as_vector()
    energy = variational_energy(params, state) / 2
    variance = leakage_rate(params, state, cross_check=False).total
    for L in (8, 10, 12):
        e, var, _ = exact_report(state, params, L, v)
        bound = 10 * lam ** (L / 2)
        assert abs(e - energy) <= bound
        assert abs(var - variance) <= bound


@given(cells(max_k=4))
def test_subdominant_ratio_is_cell_beta(cell):
    params, state = cell
    sites = derive_sites(params, state)
    if abs(sites.beta_cell) > 1 - 1e-6:
        return
    assert InfiniteMPS(params, state).ratio == pytest.approx(abs(sites.beta_cell), abs=1e-9)


def test_power_iteration_refuses_near_degenerate_cell():
    params = ModelParams(2, 0.5, [1, 1], [0, 0])
    with pytest.raises(DegenerateManifoldError, match="lambda2"):
        InfiniteMPS(params, VariationalState([np.pi - 1e-6] * 2, [0, 0]))


@given(cells(max_k=3, min_sin=0.3))
def test_environment_vectors_are_normalised_fixed_points(cell):
    params, state = cell
    sites = derive_sites(params, state)
    if abs(sites.beta_cell) > 0.99:
        return
    mps = InfiniteMPS(params, state)
    for s in range(params.K):
        assert mps.l[s] @ mps.r[s] == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(mps.l[s] @ mps._cell[s], mps.l[s], atol=1e-10)
