"""Variational energy, residual terms and TDVP equations of motion.

The equations of motion solve  sum_j mu_dot_j Im G_ij = -Re <d_i Psi|H|Psi>_c.
Because G_theta,theta and G_phi,phi are real, only the Im G_theta,phi block
enters, and with the residuals R, I defined below

    theta_dot_i = sum_j (Im G_tp)^-1_ji R_phi_j
    phi_dot_i   = F_i - sum_j (Im G_tp)^-1_ij R_theta_j

where F_i = (Omega_i h_i + Delta_i (1 - cos theta_i)) / (J (1 - cos theta_i)).
Residuals are densities (L/K stripped), matching :mod:`zktdvp.gram`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gram import gram_blocks, inverse_im_g_thetaphi
from .model import (POLE_TOL, ModelError, ModelParams, PoleError, Sites, VariationalState,
                    WrongSpinError, derive_sites, one_minus_cell_product)

__all__ = [
    "Velocity",
    "Residuals",
    "SeriesConvergenceError",
    "ONE_MINUS_COS_TOL",
    "check_poles",
    "hx_tilde",
    "phi_source",
    "variational_energy",
    "residuals",
    "r_theta_tilde",
    "dpsi_h",
    "eom_exact",
    "eom_series",
    "eom_spin_half",
    "eom_large_j",
    "semiclassical_energy",
]

ONE_MINUS_COS_TOL = 1e-12


class SeriesConvergenceError(ModelError):
    """|prod ctilde| >= 1 over a period, so the unrolled series diverges."""


@dataclass(frozen=True)
class Velocity:
    theta_dot: np.ndarray
    phi_dot: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta_dot, self.phi_dot])


@dataclass(frozen=True)
class Residuals:
    R_theta: np.ndarray
    R_phi: np.ndarray
    I_theta: np.ndarray
    I_phi: np.ndarray


def _nxt(v, n=1):
    """v[i + n] aligned at position i (cyclic)."""
    n %= len(v)
    return np.concatenate((v[n:], v[:n])) if n else v


def _prv(v):
    return np.concatenate((v[-1:], v[:-1]))


def check_poles(sites: Sites) -> None:
    """Refuse states where 1/sin(theta) or 1/(1 - cos(theta)) blows up."""
    th = sites.theta
    sin = np.abs(np.sin(th))
    omc = 1.0 - np.cos(th)
    if sin.min() < POLE_TOL:
        i = int(np.argmin(sin))
        raise PoleError(f"theta_{i} = {float(th[i])!r} is at a pole (|sin theta| = {sin[i]:.3e})")
    if omc.min() < ONE_MINUS_COS_TOL:
        i = int(np.argmin(omc))
        raise PoleError(f"theta_{i} = {float(th[i])!r} is at a pole (1 - cos theta = {omc[i]:.3e})")


def _cos_pow(sites: Sites, n: int) -> np.ndarray:
    return np.cos(sites.theta / 2) ** n


def hx_tilde(sites: Sites) -> np.ndarray:
    """h~ of s^x on every site: sin th cos ph (1 + cos^(4J-2)(th/2) (x_{i+1} - 1))."""
    two_j = int(round(2 * sites.J))
    return (np.sin(sites.theta) * np.cos(sites.phi)
            * (1.0 + _cos_pow(sites, 2 * two_j - 2) * (_nxt(sites.x) - 1.0)))


def phi_source(params: ModelParams, sites: Sites) -> np.ndarray:
    """F_i, the local part of phi_dot (also the factor multiplying G_phi,phi everywhere)."""
    omc = 1.0 - np.cos(sites.theta)
    return (params.Omega * hx_tilde(sites) + params.Delta * omc) / (sites.J * omc)


def variational_energy(params: ModelParams, state: VariationalState,
                       sites: Sites | None = None) -> float:
    """<H> per unit cell."""
    sites = derive_sites(params, state) if sites is None else sites
    th = sites.theta
    return float(np.sum(-params.Delta + sites.eta * (params.Delta * (1 - np.cos(th))
                                                   + params.Omega * hx_tilde(sites))))


def semiclassical_energy(params: ModelParams, state: VariationalState,
                         eta=None) -> float:
    """E_sc = sum_i -Delta_i + eta_i (Omega_i sin th cos ph + Delta_i (1 - cos th)).

    ``eta`` defaults to the manifold's eta; the large-J limit freezes it.
    """
    th, ph = np.asarray(state.theta), np.asarray(state.phi)
    if eta is None:
        eta = derive_sites(params, state).eta
    return float(np.sum(-params.Delta + eta * (params.Omega * np.sin(th) * np.cos(ph)
                                               + params.Delta * (1 - np.cos(th)))))


def _neighbour_term(params: ModelParams, sites: Sites, trig) -> np.ndarray:
    """J Om_{j-1} tan(th_j/2) x_{j-1}^2 tan(th_{j-1}/2) trig(ph_{j-1}) x_j eta_{j-1}."""
    two_j = int(round(2 * sites.J))
    # x^2 tan(th/2) = cos^(4J-1)(th/2) sin(th/2), finite at th = pi
    x2_tan = _cos_pow(sites, 2 * two_j - 1) * np.sin(sites.theta / 2)
    return (sites.J * _prv(params.Omega) * np.tan(sites.theta / 2) * _prv(x2_tan)
            * trig(_prv(sites.phi)) * sites.x * _prv(sites.eta))


def residuals(params: ModelParams, sites: Sites) -> Residuals:
    """R_theta, R_phi, I_theta, I_phi (densities)."""
    J = sites.J
    two_j = int(round(2 * J))
    th, ph = sites.theta, sites.phi
    eta, Om = sites.eta, params.Omega
    sin, cos = np.sin(th), np.cos(th)
    x2_tan = _cos_pow(sites, 2 * two_j - 1) * np.sin(th / 2)
    dx = _nxt(sites.x) - 1.0
    h_core = sin + 2 * x2_tan * dx  # h~_sx / cos(phi)

    # x^2 (4J-1) / (2 cos^2(th/2)) kept finite at th = pi
    bracket = 0.5 + dx * ((1 - 2 * J) * sites.x ** 2
                          + (4 * J - 1) / 2 * _cos_pow(sites, 2 * two_j - 2))
    R_theta = -_neighbour_term(params, sites, np.cos) - eta * Om * np.cos(ph) * bracket
    R_phi = -eta * np.sin(ph) / 2 * Om * h_core
    # h_core / sin = 1 + cos^(4J-2)(th/2) dx, finite at the poles
    I_theta = (_neighbour_term(params, sites, np.sin)
               + eta * np.sin(ph) / 2 * Om * (1 + _cos_pow(sites, 2 * two_j - 2) * dx))
    I_phi = -eta / 2 * Om * np.cos(ph) * (sin + (cos + 2 * J * (1 - cos)) * 2 * x2_tan * dx)
    return Residuals(R_theta, R_phi, I_theta, I_phi)


def r_theta_tilde(params: ModelParams, sites: Sites) -> np.ndarray:
    """The R~_theta combination used by the unrolled phi_dot series.

    Algebraically R~_theta = -R_theta; it is evaluated from its own expression so
    that the identity can be checked.
    """
    J = sites.J
    two_j = int(round(2 * J))
    th = sites.theta
    x2_tan = _cos_pow(sites, 2 * two_j - 1) * np.sin(th / 2)
    dx = _nxt(sites.x) - 1.0
    extra = (2 * np.cos(sites.phi) * (2 * J - 1) * (1 - np.cos(th))
             * sites.x ** 2 * dx * np.tan(th / 2))
    return (_neighbour_term(params, sites, np.cos)
            + sites.eta * params.Omega / (2 * np.sin(th)) * (hx_tilde(sites) + extra))


def dpsi_h(params: ModelParams, sites: Sites, gram=None, res: Residuals | None = None) -> np.ndarray:
    """<d_mu Psi|H|Psi>_c density in the order (theta_1..theta_K, phi_1..phi_K)."""
    gram = gram_blocks(params, sites) if gram is None else gram
    res = residuals(params, sites) if res is None else res
    F = phi_source(params, sites)
    re_t = res.R_theta - gram.g_tp.imag @ F
    im_p = gram.g_pp.real @ F + res.I_phi
    return np.concatenate([re_t + 1j * res.I_theta, res.R_phi + 1j * im_p])


def eom_exact(params: ModelParams, state: VariationalState) -> Velocity:
    """Closed-form TDVP velocity (all 1/(1 - beta) factors kept when retain_beta)."""
    sites = derive_sites(params, state)
    check_poles(sites)
    inv = inverse_im_g_thetaphi(params, sites)
    res = residuals(params, sites)
    return Velocity(inv.T @ res.R_phi, phi_source(params, sites) - inv @ res.R_theta)


def eom_series(params: ModelParams, state: VariationalState,
               trunc_eps: float = 1e-14) -> Velocity:
    """Unrolled-series form of the equations of motion.

    Cross-site sums walk away from site i multiplying ctilde factors; the walk
    stops once the running product drops below ``trunc_eps``, and a sum that
    survives a full period is resummed by 1/(1 - prod ctilde).
    """
    sites = derive_sites(params, state)
    check_poles(sites)
    K, J = sites.K, sites.J
    ct = sites.ctilde
    if not np.any(sites.ctilde_gap > 0):
        raise SeriesConvergenceError("|prod ctilde| = 1: the cross-site series does not converge")
    one_minus_cell = one_minus_cell_product(sites.ctilde_gap)
    two_j = int(round(2 * J))
    th, ph, eta, Om = sites.theta, sites.phi, sites.eta, params.Omega
    h = hx_tilde(sites)
    c42 = _cos_pow(sites, 2 * two_j - 2)
    t = np.tan(th / 2)
    tphi = np.tan(ph)
    rt = r_theta_tilde(params, sites)

    def walk(term, step):
        # sum_{n>=1} term(n) prod ctilde over the n-1 sites strictly between
        total, run = 0.0, 1.0
        for n in range(1, K + 1):
            total += term(n) * run
            run *= ct[step(n) % K]
            if abs(run) < trunc_eps:
                return total
        return total / one_minus_cell

    theta_dot = np.empty(K)
    phi_dot = np.empty(K)
    for i in range(K):
        def back(n, i=i):
            j = (i - n) % K
            return eta[j] * Om[j] * c42[j] * tphi[j] * t[i] / eta[i] * h[j]

        def fwd(n, i=i):
            j = (i + n) % K
            return 2 * c42[i] * t[j] / eta[j] * rt[j]

        theta_dot[i] = Om[i] * tphi[i] / (J * np.sin(th[i])) * h[i] + walk(back, lambda n, i=i: i - n)
        omc = 1 - np.cos(th[i])
        phi_dot[i] = ((Om[i] * h[i] + params.Delta[i] * omc) / (J * omc)
                      - 2 / (J * eta[i] * np.sin(th[i])) * rt[i]
                      - walk(fwd, lambda n, i=i: i + n))
    return Velocity(theta_dot, phi_dot)


def eom_spin_half(params: ModelParams, state: VariationalState) -> Velocity:
    """Compact J = 1/2 equations of motion."""
    if params.two_j != 1:
        raise WrongSpinError(f"eom_spin_half needs J = 1/2, got J = {params.J}")
    sites = derive_sites(params, state)
    check_poles(sites)
    th, ph, eta = sites.theta, sites.phi, sites.eta
    Om, De = params.Omega, params.Delta
    c_half = np.cos(th / 2)
    theta_dot = (2 * Om * np.sin(ph) * _nxt(c_half)
                 + _prv(Om) * _prv(eta) * np.sin(th / 2) * np.sin(_prv(ph)) * np.sin(_prv(th)) / eta)
    phi_dot = (2 * Om * _nxt(c_half) * np.cos(ph) / np.tan(th) + 2 * De
               - _prv(Om) * np.cos(_prv(ph)) / c_half * np.sin(_prv(th)) * _prv(eta) / (2 * eta)
               - Om * np.cos(ph) * np.sin(th) * np.sin(_nxt(th) / 2) * eta * np.tan(_nxt(th) / 2)
               / (2 * _nxt(eta))
               - _nxt(Om) * _nxt(c_half, 2) * np.cos(_nxt(ph)) * np.tan(_nxt(th) / 2))
    return Velocity(theta_dot, phi_dot)


def eom_large_j(params: ModelParams, state: VariationalState) -> Velocity:
    """J theta_dot = Omega sin phi,  J phi_dot = Delta + Omega cos phi cot theta."""
    validate_sin = np.abs(np.sin(state.theta))
    if validate_sin.min() < POLE_TOL:
        i = int(np.argmin(validate_sin))
        raise PoleError(f"theta_{i} = {float(state.theta[i])!r} is at a pole")
    J = params.J
    th, ph = np.asarray(state.theta), np.asarray(state.phi)
    return Velocity(params.Omega * np.sin(ph) / J,
                    (params.Delta + params.Omega * np.cos(ph) / np.tan(th)) / J)
