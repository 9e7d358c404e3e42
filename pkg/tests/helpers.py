"""Hypothesis strategies and small builders shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from zktdvp import ModelParams, VariationalState

SPINS = (0.5, 1.0, 1.5, 2.0)


def away_from_poles(min_sin=0.05):
    return st.floats(0.0, 4 * np.pi).filter(lambda t: abs(np.sin(t)) >= min_sin)


@st.composite
def cells(draw, max_k=5, spins=SPINS, min_sin=0.05, k=None, retain_beta=True):
    """(params, state) with every theta at least ``min_sin`` away from a pole."""
    K = k if k is not None else draw(st.integers(1, max_k))
    J = draw(st.sampled_from(spins))
    coupling = st.floats(-2.0, 2.0)
    Omega = draw(st.lists(coupling, min_size=K, max_size=K))
    Delta = draw(st.lists(coupling, min_size=K, max_size=K))
    theta = draw(st.lists(away_from_poles(min_sin), min_size=K, max_size=K))
    phi = draw(st.lists(st.floats(0.0, 2 * np.pi), min_size=K, max_size=K))
    return ModelParams(K, J, Omega, Delta, retain_beta=retain_beta), VariationalState(theta, phi)


def spin_half_point(phi=(0.0, 0.0), Delta=(0.0, 0.0)):
    """J = 1/2, K = 2, theta = (pi/2, pi/2), Omega = (1, 1)."""
    return ModelParams(2, 0.5, [1.0, 1.0], Delta), VariationalState([np.pi / 2] * 2, phi)
