"""Connected Gram matrix of the Z_K ansatz and the closed-form inverse of Im G_theta,phi.

All blocks are densities: the common L/K prefactor is dropped from G and the
matching K/L from its inverse.  Block ``g_tp[i, j]`` is
<d_theta_i Psi | d_phi_j Psi>_c and similarly for the others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (POLE_TOL, DegenerateManifoldError, ModelParams, PoleError, ResonanceError,
                    Sites, one_minus_cell_product)

__all__ = [
    "GramBundle",
    "InverseParameters",
    "RESONANCE_TOL",
    "ETA_TOL",
    "gram_blocks",
    "phi_phi_parts",
    "inverse_parameters",
    "inverse_im_g_thetaphi",
    "assemble",
]

RESONANCE_TOL = 1e-12
#: eta_i at or below this makes the theta_i, phi_i tangent vectors null.
ETA_TOL = 1e-300


@dataclass(frozen=True)
class GramBundle:
    g_tt: np.ndarray
    g_tp: np.ndarray
    g_pt: np.ndarray
    g_pp: np.ndarray
    inv_im_g_tp: np.ndarray | None = None

    def full(self) -> np.ndarray:
        return assemble(self)


def assemble(bundle: GramBundle) -> np.ndarray:
    """The 2K x 2K matrix in the order (theta_1..theta_K, phi_1..phi_K)."""
    return np.block([[bundle.g_tt, bundle.g_tp], [bundle.g_pt, bundle.g_pp]])


def _geometric(sites: Sites) -> tuple[np.ndarray, float]:
    """fwd[i, j] = beta over the forward arc strictly between i and j (length < K).

    For j == i the arc is the K-1 sites i+1..i+K-1.  Also returns the resummation
    factor 1/(1 - beta_[1,K]) (or 1 when beta is dropped).
    """
    K = sites.K
    fwd = np.empty((K, K))
    for i in range(K):
        for k in range(K):
            span = k - 1 if k else K - 1
            fwd[i, (i + k) % K] = sites.span_beta(i + 1, i + span)
    return fwd, sites.resum


def gram_blocks(params: ModelParams, sites: Sites) -> GramBundle:
    """Connected Gram blocks (densities) from the closed forms."""
    J = sites.J
    K = sites.K
    th = sites.theta
    eta = sites.eta
    one_c = 1.0 - np.cos(th)
    # x^2 tan(th/2) written as cos^(4J-1) sin so it stays finite at th = pi
    x2_tan = np.cos(th / 2) ** (2 * int(round(2 * J)) - 1) * np.sin(th / 2)
    fwd, resum = _geometric(sites)
    w = fwd * resum  # w[i, j]: forward-arc weight from i to j

    g_tt = np.diag(eta * J / 2).astype(complex)

    # theta_i / phi_j, j != i: i J^2 eta_i x_i^2 tan_i w[i,j] (1 - cos_j)
    lead = eta * x2_tan
    g_tp = 1j * J * J * lead[:, None] * w * one_c[None, :]
    g_tp[np.diag_indices(K)] += -1j * eta * J * np.sin(th) / 2
    g_pt = g_tp.conj().T

    g_hat, g_diag = phi_phi_parts(sites)
    g_pp = one_c[:, None] * g_hat * one_c[None, :] + np.diag(g_diag * np.sin(th) ** 2)
    return GramBundle(g_tt, g_tp, g_pt, g_pp.astype(complex))


def phi_phi_parts(sites: Sites) -> tuple[np.ndarray, np.ndarray]:
    """Split G_phi,phi = (1-cos th_i) G_hat_ij (1-cos th_j) + diag(d_i sin^2 th_i).

    The split keeps quadratic forms like sum G_ij F_i F_j finite at theta = 0,
    where F carries 1/(1 - cos theta).
    """
    J = sites.J
    eta = sites.eta
    fwd, resum = _geometric(sites)
    pair = (eta * np.roll(eta, -1))[:, None] * fwd * resum
    g_hat = -J * J * (pair + pair.T)
    g_hat[np.diag_indices(sites.K)] += eta * (1 - eta) * J * J
    return g_hat, eta * J / 2


@dataclass(frozen=True)
class InverseParameters:
    """Im G_theta,phi = A + C with A_ij = a_i b_j prod z over the forward arc and C = diag(c)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    z: np.ndarray
    ctilde: np.ndarray
    one_minus_prod_z: float
    one_minus_prod_ctilde: float


def inverse_parameters(sites: Sites) -> InverseParameters:
    J = sites.J
    th = sites.theta
    sin = np.sin(th)
    if np.min(np.abs(sin)) < POLE_TOL:
        i = int(np.argmin(np.abs(sin)))
        raise PoleError(f"sin(theta_{i}) = {sin[i]:.3e}; Im G_theta,phi is not invertible")
    if np.min(sites.eta) <= ETA_TOL:
        i = int(np.argmin(sites.eta))
        raise DegenerateManifoldError(
            f"eta_{i} = {sites.eta[i]:.3e}: site {i} has no tangent weight, Im G_theta,phi is singular")
    x2 = sites.x ** 2
    a = -J * sites.eta * x2 * np.tan(th / 2)
    b = -J * (1 - np.cos(th)) * sites.resum
    c = -sites.eta * J * sin / 2
    z = x2 - 1.0
    if sites.retain_beta and sites.ctilde_gap is not None:
        # the (1 - prod z) factor of A^-1 cancels the resummation in b, leaving sites.ctilde
        omz = sites.one_minus_beta
        gap = sites.ctilde_gap
    else:
        omz = one_minus_cell_product(x2)
        gap = 1.0 + z - a * b * omz / c
    return InverseParameters(a, b, c, z, gap - 1.0, omz, one_minus_cell_product(gap))


def inverse_im_g_thetaphi(params: ModelParams, sites: Sites) -> np.ndarray:
    """Closed-form (Im G_theta,phi)^-1 (density, K/L stripped).

    Entry (i, j) carries the product of ctilde over the sites strictly inside the
    forward arc from i to j (the full K-1 sites on the diagonal).
    """
    p = inverse_parameters(sites)
    K = sites.K
    # both factors are tiny at large J; only their ratio matters
    if not abs(p.one_minus_prod_ctilde) > RESONANCE_TOL * abs(p.one_minus_prod_z):
        raise ResonanceError(
            f"1 - prod ctilde = {float(p.one_minus_prod_ctilde)!r} against 1 - prod z = "
            f"{float(p.one_minus_prod_z)!r}: inverse is resonant")
    scale = p.one_minus_prod_z / p.one_minus_prod_ctilde
    # a/c = cos^(4J-2)(th/2) and b/c = 2 tan(th/2) resum / eta, formed directly so that
    # tiny eta (large J) does not underflow c_i c_j
    half = sites.theta / 2
    a_c = np.cos(half) ** (2 * int(round(2 * sites.J)) - 2)
    b_c = 2 * np.tan(half) * sites.resum / sites.eta
    inv = np.empty((K, K))
    for i in range(K):
        run = 1.0
        # walk j = i+1, i+2, ..., i+K (last step lands on the diagonal)
        for k in range(1, K + 1):
            j = (i + k) % K
            inv[i, j] = -scale * a_c[i] * b_c[j] * run
            run *= p.ctilde[j]
        inv[i, i] += 1.0 / p.c[i]
    return inv
