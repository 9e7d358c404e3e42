"""Energy variance and quantum leakage Gamma^2 of the variational flow.

Gamma^2 = (1/L) ( <H^2>_c - 2 sum mu_dot Im <d_mu Psi|H|Psi>_c
                  + sum mu_dot Re G mu_dot ),
evaluated with the TDVP velocity.  Everything is returned per site.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import _nxt, check_poles, dpsi_h, hx_tilde, residuals
from .gram import gram_blocks, inverse_im_g_thetaphi, phi_phi_parts
from .model import ModelParams, Sites, VariationalState, WrongSpinError, derive_sites

__all__ = [
    "VarianceReport",
    "BREAKDOWN_LABELS",
    "energy_variance",
    "leakage_rate",
    "leakage_spin_half",
    "leakage_large_j",
]

BREAKDOWN_LABELS = (
    "xx_neighbour",
    "onsite",
    "theta_dot_I_theta",
    "phi_I_phi",
    "theta_dot_squared",
    "u_R_theta",
    "u_squared",
)


@dataclass(frozen=True)
class VarianceReport:
    """Per-site variance pieces and leakage.

    var_zz, var_zxxz and var_xx sum to ``total``.  ``gamma2_breakdown`` holds
    the seven summands of the fully reduced closed form (labels in
    ``BREAKDOWN_LABELS``).  The last two carry 1/x^2 and cancel each other, so
    near theta = pi at J >= 3/2 their sum loses digits; ``gamma2`` therefore
    replaces them by the equivalent u^T G_phi,phi u (u = (Im G_tp)^-1 R_theta),
    which is stable.  ``gamma2_definition`` evaluates the defining expression
    with the closed-form Gram matrix and <dPsi|H|Psi>_c.
    """

    var_zz: float
    var_zxxz: float
    var_xx: float
    total: float
    gamma2: float | None = None
    gamma2_breakdown: tuple | None = None
    gamma2_definition: float | None = None

    def breakdown(self) -> dict:
        return dict(zip(BREAKDOWN_LABELS, self.gamma2_breakdown or ()))


def _phi_quadratic(g_hat, g_diag, a, b) -> float:
    """sum_ij G_phi,phi[i,j] F_i F'_j given a = ((1-cos)F, sin F) and b likewise."""
    return float(a[0] @ g_hat @ b[0] + np.sum(g_diag * a[1] * b[1]))


def _onsite_xx(params: ModelParams, sites: Sites) -> np.ndarray:
    """The single-site s^x s^x piece (the bracket multiplying eta Omega^2 / 2J)."""
    J = sites.J
    two_j = int(round(2 * J))
    th, ph = sites.theta, sites.phi
    cos = np.cos(th)
    dx = _nxt(sites.x) - 1.0
    c42 = np.cos(th / 2) ** (2 * two_j - 2)
    # h~^2 / (1 - cos) = (1 + cos) cos^2 phi (1 + c42 dx)^2
    h2_over = (1 + cos) * np.cos(ph) ** 2 * (1 + c42 * dx) ** 2
    # x^2 tan^2(th/2) = cos^(4J-2) sin^2(th/2)
    x2_tan2 = c42 * np.sin(th / 2) ** 2
    return (1 + (2 * J - 1) * np.cos(ph) ** 2 * np.sin(th) ** 2
            + (-1 - 2 * J + (2 * J - 1) * cos) * h2_over
            + dx * (sites.x ** 2 * (2 + dx) + 2 * (2 * J - 1) * np.cos(2 * ph) * x2_tan2))


def _xx_neighbour(params: ModelParams, sites: Sites) -> np.ndarray:
    two_j = int(round(2 * sites.J))
    th, ph = sites.theta, sites.phi
    x2_tan = np.cos(th / 2) ** (2 * two_j - 1) * np.sin(th / 2)
    Om = params.Omega
    return (2 * Om * _nxt(Om) * sites.eta * x2_tan * _nxt(sites.x) * _nxt(sites.x, 2)
            * np.tan(_nxt(th) / 2) * np.cos(_nxt(ph) - ph))


def _variance_parts(params: ModelParams, sites: Sites):
    J = sites.J
    th, ph = sites.theta, sites.phi
    cos, sin = np.cos(th), np.sin(th)
    two_j = int(round(2 * J))
    c42 = np.cos(th / 2) ** (2 * two_j - 2)
    dx = _nxt(sites.x) - 1.0
    g_hat, g_diag = phi_phi_parts(sites)
    res = residuals(params, sites)
    # F split into its Delta and Omega parts, each as ((1-cos) F, sin F)
    f_z = (params.Delta * (1 - cos) / J, params.Delta * sin / J)
    f_x = (params.Omega * hx_tilde(sites) / J,
           params.Omega * (1 + cos) * np.cos(ph) * (1 + c42 * dx) / J)
    zz = _phi_quadratic(g_hat, g_diag, f_z, f_z)
    zx = 2 * _phi_quadratic(g_hat, g_diag, f_z, f_x) + 2 * np.sum(params.Delta * res.I_phi) / J
    xx = (_phi_quadratic(g_hat, g_diag, f_x, f_x) + np.sum(_xx_neighbour(params, sites))
          + np.sum(sites.eta * params.Omega ** 2 / (2 * J) * _onsite_xx(params, sites)))
    return zz, zx, xx


def energy_variance(params: ModelParams, state: VariationalState) -> VarianceReport:
    """<H^2>_c per site split into ZZ, ZX+XZ and XX parts (no leakage)."""
    sites = derive_sites(params, state)
    zz, zx, xx = _variance_parts(params, sites)
    K = sites.K
    return VarianceReport(zz / K, zx / K, xx / K, (zz + zx + xx) / K)


def leakage_rate(params: ModelParams, state: VariationalState,
                 cross_check: bool = True) -> VarianceReport:
    """Gamma^2 from the closed form, plus the definition-based value as a cross-check.

    With ``cross_check=False`` the definition is skipped and
    ``gamma2_definition`` is None (the integrator's hot path).
    """
    sites = derive_sites(params, state)
    check_poles(sites)
    K, J = sites.K, sites.J
    th, eta = sites.theta, sites.eta
    sin, omc = np.sin(th), 1 - np.cos(th)
    zz, zx, xx = _variance_parts(params, sites)
    inv = inverse_im_g_thetaphi(params, sites)
    res = residuals(params, sites)
    theta_dot = inv.T @ res.R_phi
    u = inv @ res.R_theta
    x2 = sites.x ** 2
    eta_next = _nxt(eta)

    terms = (
        np.sum(_xx_neighbour(params, sites)),
        np.sum(eta * params.Omega ** 2 / (2 * J) * _onsite_xx(params, sites)),
        -2 * np.sum(theta_dot * res.I_theta),
        -2 * np.sum((params.Omega * hx_tilde(sites) / (J * omc) - u) * res.I_phi),
        np.sum(eta * J / 2 * theta_dot ** 2),
        2 * np.sum(u * (-eta_next * sin / x2) * res.R_theta),
        np.sum(eta * J * sin ** 2 / (2 * x2) * ((1 - eta) * sites.ctilde - eta_next) * u ** 2),
    )
    breakdown = tuple(float(t) / K for t in terms)

    gram = gram_blocks(params, sites)
    gamma2 = (sum(terms[:5]) + u @ gram.g_pp.real @ u) / K
    if not cross_check:
        return VarianceReport(zz / K, zx / K, xx / K, (zz + zx + xx) / K,
                              gamma2=float(gamma2), gamma2_breakdown=breakdown)
    G = gram.full()
    dh = dpsi_h(params, sites, gram, res)
    F = (params.Omega * hx_tilde(sites) + params.Delta * omc) / (J * omc)
    v = np.concatenate([theta_dot, F - u])
    definition = ((zz + zx + xx) - 2 * v @ dh.imag + v @ G.real @ v) / K
    return VarianceReport(zz / K, zx / K, xx / K, (zz + zx + xx) / K,
                          gamma2=float(gamma2), gamma2_breakdown=breakdown,
                          gamma2_definition=float(definition))


def leakage_spin_half(params: ModelParams, state: VariationalState) -> float:
    """Gamma^2 = (1/K) sum Omega_i^2 sin^2(th_i/2) sin^2(th_{i+1}/2) eta_i (1 - eta_i) / eta_{i+1}."""
    if params.two_j != 1:
        raise WrongSpinError(f"leakage_spin_half needs J = 1/2, got J = {params.J}")
    sites = derive_sites(params, state)
    s2 = np.sin(sites.theta / 2) ** 2
    eta = sites.eta
    return float(np.mean(params.Omega ** 2 * s2 * _nxt(s2) * eta * (1 - eta) / _nxt(eta)))


def leakage_large_j(params: ModelParams, state: VariationalState) -> float:
    """Large-J limit: (1/K) sum Omega_i^2 eta_i (2 eta_i - 1) cos^2 phi_i / (2J)."""
    sites = derive_sites(params, state)
    eta = sites.eta
    return float(np.mean(params.Omega ** 2 * eta * (2 * eta - 1) * np.cos(sites.phi) ** 2
                         / (2 * params.J)))
