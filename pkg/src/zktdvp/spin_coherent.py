"""Closed-form spin-coherent-state expectation values.

Conventions: the reference state |0> = |J,-J> sits at the south pole,
|theta, phi> = exp(xi S+ - xi* S-)|0> with xi = theta/2 exp(-i phi), and
spin operators are normalised, s^a = S^a / J.  The tangent operator

    B_mu = J (cot(theta) d theta - i d phi) + J (d theta / sin(theta) - i d phi) s^z

is diagonal, so it commutes with P = |0><0|, and B_mu |theta,phi> = d_mu |theta,phi>.

Every expectation below is given as the triple
(<Omega|O|Omega>, <0|O|Omega>, <0|O|0>).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "coherent_coefficients",
    "BmuCoefficients",
    "b_coefficients",
    "ExpectationBundle",
    "expectations",
    "bdag_b",
    "h_tilde",
    "OPERATORS",
]

OPERATORS = ("P", "sz", "sp", "sm", "sx", "B", "sxsx", "sxsz", "szsx", "szsz",
             "sxB", "szB", "BdB")


def coherent_coefficients(theta: float, phi: float, J: float) -> np.ndarray:
    """Amplitudes c_sigma, sigma = -J..J, of |theta, phi> in the S^z basis.

    c_sigma = sqrt(binom(2J, sigma+J)) tau^(sigma+J) cos^(2J)(theta/2); powers
    are expanded as sin^n cos^(2J-n) so that theta = pi stays finite.
    """
    two_j = int(round(2 * J))
    n = np.arange(two_j + 1)
    binom = np.sqrt(np.array([comb(two_j, k) for k in n], dtype=float))
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    return binom * np.exp(-1j * n * phi) * s ** n * c ** (two_j - n)


@dataclass(frozen=True)
class BmuCoefficients:
    """B_mu = scalar + zcoef * s^z for a derivative direction (d theta, d phi)."""

    scalar: complex
    zcoef: complex
    direction: tuple = (1.0, 0.0)

    def on_ground(self) -> complex:
        """Eigenvalue of B_mu on |0> (s^z = -1)."""
        return self.scalar - self.zcoef

    def dagger(self) -> "BmuCoefficients":
        return BmuCoefficients(np.conj(self.scalar), np.conj(self.zcoef), self.direction)


def b_coefficients(theta: float, J: float, dtheta: float, dphi: float) -> BmuCoefficients:
    sin = np.sin(theta)
    return BmuCoefficients(J * (np.cos(theta) / sin * dtheta - 1j * dphi),
                           J * (dtheta / sin - 1j * dphi), (dtheta, dphi))


@dataclass(frozen=True)
class ExpectationBundle:
    """Table of (<Omega|O|Omega>, <0|O|Omega>, <0|O|0>) for the operators in ``OPERATORS``."""

    theta: float
    phi: float
    J: float
    x: float
    tau: complex
    values: dict

    def __getitem__(self, name: str) -> tuple[complex, complex, complex]:
        return self.values[name]

    def omega(self, name: str) -> complex:
        return self.values[name][0]

    def ground_omega(self, name: str) -> complex:
        return self.values[name][1]

    def ground(self, name: str) -> complex:
        return self.values[name][2]

    def q_sandwich(self, name: str) -> tuple[complex, complex]:
        """(<0|O Q|Omega>, <Omega|Q O|0>) with Q = 1 - P, for Hermitian O."""
        _, g_o, g_g = self.values[name]
        left = g_o - self.x * g_g
        return left, np.conj(g_o) - self.x * np.conj(g_g)


def _one_site(theta, phi, J, x, tau):
    sin, cos = np.sin(theta), np.cos(theta)
    e = np.exp(1j * phi)
    return {
        "P": (x * x, x, 1.0),
        "sz": (-cos, -x, -1.0),
        "sp": (sin * e, 0.0, 0.0),
        "sm": (sin / e, 2 * x * tau, 0.0),
        "sx": (sin * np.cos(phi), x * tau, 0.0),
    }


def bdag_b(theta: float, phi: float, J: float, mu, nu) -> tuple[complex, complex, complex]:
    """(<Omega|B_mu^+ B_nu|Omega>, <0|B_mu^+ B_nu|Omega>, <0|B_mu^+ B_nu|0>)."""
    (dt_m, dp_m), (dt_n, dp_n) = mu, nu
    sin, cos = np.sin(theta), np.cos(theta)
    t2 = np.tan(theta / 2)
    x = np.cos(theta / 2) ** int(round(2 * J))
    omega = (J / 2 * dt_m * dt_n
             - 1j * J * sin / 2 * dt_m * dp_n
             + 1j * J * sin / 2 * dp_m * dt_n
             + J * (1 + 6 * J - 8 * J * cos + (2 * J - 1) * np.cos(2 * theta)) / 4 * dp_m * dp_n)
    return omega, J * J * x * t2 * t2 * dt_m * dt_n, J * J * t2 * t2 * dt_m * dt_n


def expectations(theta: float, phi: float, J: float, dtheta: float = 1.0,
                 dphi: float = 0.0) -> ExpectationBundle:
    """Closed-form one- and two-operator expectations at (theta, phi).

    (dtheta, dphi) is the direction of the tangent operator B_mu; B_mu^+ B_nu
    uses the same direction for both factors (use :func:`bdag_b` for mixed ones).
    """
    two_j = int(round(2 * J))
    x = np.cos(theta / 2) ** two_j
    tau = np.tan(theta / 2) * np.exp(-1j * phi)
    sin, cos = np.sin(theta), np.cos(theta)
    sphi, cphi = np.sin(phi), np.cos(phi)
    t2 = np.tan(theta / 2)
    vals = _one_site(theta, phi, J, x, tau)
    vals["B"] = (1j * J * (cos - 1) * dphi, -J * x * t2 * dtheta, -J * t2 * dtheta)
    vals["sxsx"] = ((1 + (2 * J - 1) * cphi ** 2 * sin ** 2) / (2 * J),
                    (2 * J - 1) / (2 * J) * x * tau ** 2 + x / (2 * J),
                    1 / (2 * J))
    vals["sxsz"] = (sin / (2 * J) * ((1 - 2 * J) * cos * cphi - 1j * sphi),
                    (1 - J) / J * x * tau, 0.0)
    vals["szsx"] = (sin / (2 * J) * ((1 - 2 * J) * cos * cphi + 1j * sphi),
                    -x * tau, 0.0)
    vals["szsz"] = (((2 * J - 1) * cos ** 2 + 1) / (2 * J), x, 1.0)
    vals["sxB"] = ((cos * cphi - 1j * sphi) / 2 * dtheta
                   + (-sphi + 1j * cphi * (-2 * J + (2 * J - 1) * cos)) / 2 * sin * dphi,
                   -1j * x * tau * dphi
                   # tau / sin theta = e^(-i phi) / (2 cos^2(theta/2)), finite at theta = 0
                   + (1 - J + J * cos) * x * np.exp(-1j * phi) / (2 * np.cos(theta / 2) ** 2) * dtheta,
                   0.0)
    vals["szB"] = (1j * (-1 + (2 * J - 1) * cos) * np.sin(theta / 2) ** 2 * dphi
                   + sin / 2 * dtheta,
                   J * x * t2 * dtheta,
                   J * t2 * dtheta)
    vals["BdB"] = bdag_b(theta, phi, J, (dtheta, dphi), (dtheta, dphi))
    vals = {k: tuple(complex(v) for v in triple) for k, triple in vals.items()}
    return ExpectationBundle(theta, phi, float(J), float(x), complex(tau), vals)


def h_tilde(op: str, bundle: ExpectationBundle, x_i: float, x_next: float) -> complex:
    """x_i (-1 + x_next) (<0|qQ|Omega> + <Omega|Qq|0>) + <Omega|q|Omega> - <0|q|0>."""
    left, right = bundle.q_sandwich(op)
    return x_i * (-1 + x_next) * (left + right) + bundle.omega(op) - bundle.ground(op)
