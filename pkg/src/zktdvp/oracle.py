"""Independent numerical references for the closed forms.

Three routes, none of which uses the analytic transfer-matrix results:

* dense (2J+1)-dimensional spin algebra and coherent states built by matrix
  exponentiation;
* an infinite-chain environment contraction with the literal bond-dimension-2
  MPS tensors, dominant eigenvectors found by repeated squaring of the
  unit-cell transfer matrix and connected sums accumulated as explicit
  geometric series;
* exact diagonalisation in the blockade-constrained Hilbert space at finite L.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .model import (
    DegenerateManifoldError,
    ModelParams,
    VariationalState,
    validate,
)

__all__ = [
    "OracleError",
    "spin_matrices",
    "dense_coherent_state",
    "dense_b_operator",
    "site_tensor",
    "site_tensor_derivative",
    "InfiniteMPS",
    "EnvironmentReport",
    "numeric_environment",
    "ConstrainedBasis",
    "build_basis",
    "constrained_dimension",
    "build_hamiltonian",
    "mps_to_statevector",
    "mps_tangent_vectors",
    "exact_report",
    "DIMENSION_CAP",
]

DIMENSION_CAP = 2_000_000


class OracleError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# dense single-site algebra

def spin_matrices(J: float):
    """Return (Sx, Sy, Sz, Sp, Sm) in the basis |J,-J>, ..., |J,J> (unnormalised)."""
    two_j = int(round(2 * J))
    m = -J + np.arange(two_j + 1)
    sz = np.diag(m).astype(complex)
    sp_ = np.zeros((two_j + 1, two_j + 1), dtype=complex)
    for k in range(two_j):
        sp_[k + 1, k] = np.sqrt(J * (J + 1) - m[k] * (m[k] + 1))
    sm = sp_.conj().T
    sx = (sp_ + sm) / 2
    sy = (sp_ - sm) / 2j
    return sx, sy, sz, sp_, sm


def dense_coherent_state(theta: float, phi: float, J: float) -> np.ndarray:
    """exp(xi S+ - xi* S-)|J,-J> with xi = theta/2 exp(-i phi), by matrix exponential."""
    *_, sp_, sm = spin_matrices(J)
    xi = theta / 2 * np.exp(-1j * phi)
    ref = np.zeros(sp_.shape[0], dtype=complex)
    ref[0] = 1.0
    return scipy.linalg.expm(xi * sp_ - np.conj(xi) * sm) @ ref


def dense_b_operator(theta: float, phi: float, J: float, dtheta: float, dphi: float):
    """Dense form of the diagonal tangent operator B_mu with B_mu|Omega> = d_mu|Omega>."""
    *_, sz, _, _ = spin_matrices(J)
    scalar = J * (np.cos(theta) / np.sin(theta) * dtheta - 1j * dphi)
    zcoef = J * (dtheta / np.sin(theta) - 1j * dphi)
    return scalar * np.eye(sz.shape[0]) + zcoef * sz / J


def _coherent_amplitudes(theta, phi, J):
    """Analytic coherent amplitudes and their theta/phi derivatives."""
    two_j = int(round(2 * J))
    n = np.arange(two_j + 1)
    from math import comb
    binom = np.sqrt(np.array([comb(two_j, k) for k in n], dtype=float))
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    phase = np.exp(-1j * n * phi)
    amp = binom * phase * s ** n * c ** (two_j - n)
    # d/dtheta of s^n c^(2J-n)
    ds = np.where(n > 0, n * s ** np.maximum(n - 1, 0) * c ** (two_j - n + 1), 0.0)
    dc = np.where(n < two_j, (two_j - n) * s ** (n + 1) * c ** np.maximum(two_j - n - 1, 0), 0.0)
    damp_theta = binom * phase * 0.5 * (ds - dc)
    damp_phi = -1j * n * amp
    return amp, damp_theta, damp_phi


def site_tensor(theta: float, phi: float, J: float) -> np.ndarray:
    """MPS tensor A[sigma] (shape (2J+1, 2, 2)) of the blockade ansatz."""
    amp, _, _ = _coherent_amplitudes(theta, phi, J)
    d = amp.size
    A = np.zeros((d, 2, 2), dtype=complex)
    A[0, 0, 0] = amp[0]
    A[1:, 0, 1] = amp[1:]
    A[0, 1, 0] = 1.0
    return A


def site_tensor_derivative(theta: float, phi: float, J: float, which: str) -> np.ndarray:
    """Analytic derivative of :func:`site_tensor` w.r.t. ``'theta'`` or ``'phi'``."""
    _, dth, dph = _coherent_amplitudes(theta, phi, J)
    damp = dth if which == "theta" else dph
    A = np.zeros((damp.size, 2, 2), dtype=complex)
    A[0, 0, 0] = damp[0]
    A[1:, 0, 1] = damp[1:]
    return A


# --------------------------------------------------------------------------
# infinite-chain environment

def _transfer(bra: np.ndarray, op: np.ndarray | None, ket: np.ndarray) -> np.ndarray:
    if op is None:
        E = np.einsum("sab,scd->acbd", bra.conj(), ket)
    else:
        E = np.einsum("sab,st,tcd->acbd", bra.conj(), op, ket)
    return E.reshape(4, 4)


@dataclass(frozen=True)
class Decoration:
    """What sits on one site of a bra-ket sandwich: bra tensor kind, operator, ket tensor kind."""

    bra: str | None = None  # None, 'theta' or 'phi' (derivative of the bra tensor)
    op: np.ndarray | None = None
    ket: str | None = None

    def combine(self, other: "Decoration") -> "Decoration":
        if (self.bra and other.bra) or (self.ket and other.ket):
            raise ValueError("two derivatives on the same layer of one site")
        if self.op is None:
            op = other.op
        elif other.op is None:
            op = self.op
        else:
            op = self.op @ other.op
        return Decoration(self.bra or other.bra, op, self.ket or other.ket)


class InfiniteMPS:
    """Thermodynamic-limit contraction engine for a K-periodic bond-dimension-2 MPS.

    Strings are dicts ``{absolute_site: Decoration}``; sites are integers and
    tensors repeat with period K.
    """

    def __init__(self, params: ModelParams, state: VariationalState,
                 power_tol: float = 1e-13, series_tol: float = 1e-14):
        validate(params, state)
        self.K = params.K
        self.J = params.J
        self.theta = np.asarray(state.theta, float)
        self.phi = np.asarray(state.phi, float)
        self.series_tol = series_tol
        self.A = [site_tensor(t, p, self.J) for t, p in zip(self.theta, self.phi)]
        self.dA = {
            w: [site_tensor_derivative(t, p, self.J, w) for t, p in zip(self.theta, self.phi)]
            for w in ("theta", "phi")
        }
        self.T = [_transfer(a, None, a) for a in self.A]
        self._cell = []
        for s in range(self.K):
            M = np.eye(4, dtype=complex)
            for k in range(s, s + self.K):
                M = M @ self.T[k % self.K]
            self._cell.append(M)
        self.ratio = self._subdominant_ratio()
        if self.ratio > 1 - 1e-9:
            raise DegenerateManifoldError(
                f"power iteration cannot converge: |lambda2/lambda1| = {self.ratio:.12g}")
        proj = self._dominant_projector(self._cell[0], power_tol)
        r0 = proj[:, np.argmax(np.abs(proj).sum(axis=0))].copy()
        l0 = proj[np.argmax(np.abs(proj).sum(axis=1)), :].copy()
        l0 = l0 / (l0 @ r0)
        self.l = [l0]
        self.r = [r0]
        for s in range(1, self.K):
            self.l.append(self.l[-1] @ self.T[s - 1])
        for s in range(1, self.K):
            # r_s = T_s ... T_{K-1} r_0
            v = r0
            for k in range(self.K - 1, s - 1, -1):
                v = self.T[k] @ v
            self.r.append(v)
        self._series = {}

    def _subdominant_ratio(self) -> float:
        ev = np.sort(np.abs(np.linalg.eigvals(self._cell[0])))[::-1]
        return float(ev[1] / ev[0])

    @staticmethod
    def _dominant_projector(M: np.ndarray, tol: float) -> np.ndarray:
        """Power iteration by repeated squaring: M^(2^n) -> |r)(l| for a unit dominant eigenvalue."""
        P = M.copy()
        for _ in range(200):
            Q = P @ P
            # renormalise so rounding in the unit eigenvalue cannot compound
            Q = Q / np.trace(Q)
            if np.max(np.abs(Q - P)) < tol:
                # deflate: the remaining part must be the rank-1 dominant projector
                return Q
            P = Q
        raise OracleError("power iteration did not converge")

    # -- contraction helpers
    def _site_matrix(self, site: int, deco: Decoration | None) -> np.ndarray:
        k = site % self.K
        if deco is None:
            return self.T[k]
        bra = self.A[k] if deco.bra is None else self.dA[deco.bra][k]
        ket = self.A[k] if deco.ket is None else self.dA[deco.ket][k]
        return _transfer(bra, deco.op, ket)

    def left(self, site: int) -> np.ndarray:
        return self.l[site % self.K]

    def right(self, site: int) -> np.ndarray:
        return self.r[site % self.K]

    def expect(self, string: dict) -> complex:
        """(l| ... |r) over the window of ``string``."""
        if not string:
            return 1.0
        s0, s1 = min(string), max(string)
        v = self.left(s0)
        for k in range(s0, s1 + 1):
            v = v @ self._site_matrix(k, string.get(k))
        return complex(v @ self.right(s1 + 1))

    def _geometric(self, start: int) -> np.ndarray:
        """sum_{m>=0} (T_cell - Pi)^m - Pi for the cell starting at ``start``."""
        s = start % self.K
        if s not in self._series:
            Pi = np.outer(self.r[s], self.l[s])
            D = self._cell[s] - Pi
            # doubling: S_2n = S_n + D^n S_n with S_1 = I, D^1 = D
            total = np.eye(4, dtype=complex)
            power = D.copy()
            for _ in range(64):
                total = total + power @ total
                power = power @ power
                if np.max(np.abs(power)) < self.series_tol:
                    break
            else:
                raise OracleError("geometric series did not converge")
            self._series[s] = total - Pi
        return self._series[s]

    def _far_sum(self, first: dict, second: dict) -> complex:
        """sum_{n>=0} <first second_{+nK}>_c for ``second`` entirely to the right of ``first``."""
        a0, a1 = min(first), max(first)
        b0, b1 = min(second), max(second)
        assert b0 > a1
        v = self.left(a0)
        for k in range(a0, a1 + 1):
            v = v @ self._site_matrix(k, first.get(k))
        for k in range(a1 + 1, b0):
            v = v @ self.T[k % self.K]
        v = v @ self._geometric(b0)
        for k in range(b0, b1 + 1):
            v = v @ self._site_matrix(k, second.get(k))
        return complex(v @ self.right(b1 + 1))

    @staticmethod
    def _shift(string: dict, n: int) -> dict:
        return {k + n: d for k, d in string.items()}

    @staticmethod
    def _merge(a: dict, b: dict) -> dict:
        out = dict(a)
        for k, d in b.items():
            out[k] = out[k].combine(d) if k in out else d
        return out

    def connected_sum(self, a: dict, b: dict) -> complex:
        """sum over all translates b_{+nK} of <a b_n> - <a><b_n>."""
        K = self.K
        a0, a1 = min(a), max(a)
        b0, b1 = min(b), max(b)
        ea, eb = self.expect(a), self.expect(b)
        # overlapping or touching translates are contracted directly
        n_lo = int(np.floor((a0 - b1 - 1) / K)) - 1
        n_hi = int(np.ceil((a1 - b0 + 1) / K)) + 1
        total = 0.0 + 0.0j
        for n in range(n_lo, n_hi + 1):
            bn = self._shift(b, n * K)
            total += self.expect(self._merge(a, bn)) - ea * eb
        # translates strictly to the right: n > n_hi
        total += self._far_sum(a, self._shift(b, (n_hi + 1) * K))
        # translates strictly to the left: n < n_lo, i.e. a shifted right relative to b
        total += self._far_sum(self._shift(b, (n_lo - 1) * K), a)
        return total

    # -- physical building blocks
    def local_terms(self, site: int, Omega: float, Delta: float):
        """Terms of h_site = Omega P_{i-1} s^x_i P_{i+1} + Delta s^z_i as (coeff, string) pairs."""
        sx, _, sz, _, _ = spin_matrices(self.J)
        sx, sz = sx / self.J, sz / self.J
        P = np.zeros_like(sx)
        P[0, 0] = 1.0
        return [
            (Omega, {site - 1: Decoration(op=P), site: Decoration(op=sx),
                     site + 1: Decoration(op=P)}),
            (Delta, {site: Decoration(op=sz)}),
        ]


@dataclass
class EnvironmentReport:
    """Per-unit-cell densities from :func:`numeric_environment` (L/K factor stripped).

    Gram blocks are indexed [mu_i, nu_j] with parameter order (theta_1..theta_K, phi_1..phi_K).
    """

    gram: np.ndarray  # 2K x 2K complex connected Gram density
    dpsi_h: np.ndarray  # 2K complex <d_mu Psi|H|Psi>_c density
    variance: float  # <H^2>_c per unit cell
    energy: float  # <H> per unit cell
    velocity: np.ndarray  # solution of Im G mu_dot = -Re <dH>
    gamma2: float  # leakage per site
    ratio: float  # |lambda2 / lambda1|

    @property
    def K(self) -> int:
        return self.dpsi_h.size // 2


def numeric_environment(params: ModelParams, state: VariationalState,
                        velocity: np.ndarray | None = None) -> EnvironmentReport:
    """Thermodynamic-limit Gram matrix, <dPsi|H|Psi>_c, variance and leakage by direct contraction.

    ``velocity`` (theta_dot then phi_dot) defaults to the TDVP solution of the
    numerically assembled Gram system; pass one to evaluate the leakage of any
    other velocity field.
    """
    mps = InfiniteMPS(params, state)
    K = params.K
    names = ["theta"] * K + ["phi"] * K
    sites = list(range(K)) * 2

    gram = np.zeros((2 * K, 2 * K), dtype=complex)
    for a in range(2 * K):
        for b in range(2 * K):
            bra = {sites[a]: Decoration(bra=names[a])}
            ket = {sites[b]: Decoration(ket=names[b])}
            gram[a, b] = mps.connected_sum(bra, ket)

    terms_cell = [mps.local_terms(i, params.Omega[i], params.Delta[i]) for i in range(K)]
    dpsi_h = np.zeros(2 * K, dtype=complex)
    for a in range(2 * K):
        bra = {sites[a]: Decoration(bra=names[a])}
        for j in range(K):
            for coef, string in terms_cell[j]:
                if coef != 0:
                    dpsi_h[a] += coef * mps.connected_sum(bra, string)

    energy = 0.0
    for i in range(K):
        for coef, string in terms_cell[i]:
            energy += coef * mps.expect(string).real

    variance = 0.0 + 0.0j
    for i in range(K):
        for ca, sa in terms_cell[i]:
            for j in range(K):
                for cb, sb in terms_cell[j]:
                    if ca != 0 and cb != 0:
                        variance += ca * cb * mps.connected_sum(sa, sb)

    if velocity is None:
        velocity = np.linalg.solve(gram.imag, -dpsi_h.real)
    velocity = np.asarray(velocity, dtype=float)
    gamma2 = (variance.real - 2 * velocity @ dpsi_h.imag + velocity @ gram.real @ velocity) / K
    return EnvironmentReport(gram=gram, dpsi_h=dpsi_h, variance=float(variance.real),
                             energy=float(energy), velocity=velocity, gamma2=float(gamma2),
                             ratio=mps.ratio)


# --------------------------------------------------------------------------
# exact diagonalisation at finite L

def constrained_dimension(L: int, J: float) -> int:
    """tr(M^L) with the weighted blockade transfer matrix M = [[1, 2J], [1, 0]]."""
    M = np.array([[1, int(round(2 * J))], [1, 0]], dtype=object)
    R = np.array([[1, 0], [0, 1]], dtype=object)
    for _ in range(L):
        R = R.dot(M)
    return int(R[0, 0] + R[1, 1])


@dataclass(frozen=True)
class ConstrainedBasis:
    """Occupation words (0 = ground, 1..2J excited levels) with no two cyclic neighbours excited."""

    L: int
    J: float
    states: np.ndarray  # (dim, L) int8, lexicographic order

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def index(self) -> dict:
        return {tuple(w): k for k, w in enumerate(self.states.tolist())}


def build_basis(L: int, J: float, cap: int = DIMENSION_CAP) -> ConstrainedBasis:
    if L < 3:
        raise ValueError("L must be at least 3")
    dim = constrained_dimension(L, J)
    if dim > cap:
        raise OracleError(f"constrained dimension {dim} exceeds cap {cap}")
    two_j = int(round(2 * J))
    words = []

    def grow(prefix):
        if len(prefix) == L:
            if not (prefix[0] and prefix[-1]):
                words.append(tuple(prefix))
            return
        choices = [0] if (prefix and prefix[-1]) else range(two_j + 1)
        for c in choices:
            grow(prefix + [c])

    grow([])
    return ConstrainedBasis(L, float(J), np.array(words, dtype=np.int8).reshape(-1, L))


def build_hamiltonian(basis: ConstrainedBasis, params: ModelParams) -> sp.csr_matrix:
    """Sparse H = sum_i Omega_i P s^x_i P + Delta_i s^z_i on the constrained space."""
    L, J, K = basis.L, basis.J, params.K
    if L % K:
        raise ValueError("L must be a multiple of K")
    sx, _, _, _, _ = spin_matrices(J)
    sx = (sx / J).real
    lookup = basis.index()
    rows, cols, vals = [], [], []
    words = basis.states
    diag = ((words.astype(float) - J) / J) @ np.tile(params.Delta, L // K)
    rows.extend(range(basis.dim))
    cols.extend(range(basis.dim))
    vals.extend(diag)
    omega = np.tile(params.Omega, L // K)
    for col, w in enumerate(words.tolist()):
        for i in range(L):
            if omega[i] == 0:
                continue
            for new in range(sx.shape[0]):
                amp = sx[new, w[i]]
                if amp == 0:
                    continue
                if new and (w[(i - 1) % L] or w[(i + 1) % L]):
                    continue
                v = list(w)
                v[i] = new
                rows.append(lookup[tuple(v)])
                cols.append(col)
                vals.append(omega[i] * amp)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def _word_amplitudes(tensors, basis: ConstrainedBasis) -> np.ndarray:
    L = basis.L
    out = np.empty(basis.dim, dtype=complex)
    for k, w in enumerate(basis.states.tolist()):
        M = np.eye(2, dtype=complex)
        for i in range(L):
            M = M @ tensors[i][w[i]]
        out[k] = np.trace(M)
    return out


def mps_to_statevector(state: VariationalState, params: ModelParams, L: int,
                       basis: ConstrainedBasis | None = None) -> np.ndarray:
    """Amplitudes tr(A^{s1} ... A^{sL}) on the constrained basis (not normalised)."""
    if L % params.K:
        raise ValueError("L must be a multiple of K")
    basis = basis or build_basis(L, params.J)
    A = [site_tensor(state.theta[i % params.K], state.phi[i % params.K], params.J)
         for i in range(L)]
    return _word_amplitudes(A, basis)


def unconstrained_weight(state: VariationalState, params: ModelParams, L: int) -> float:
    """Total |amplitude|^2 on words violating the blockade (exactly zero for the ansatz)."""
    two_j = params.two_j
    A = [site_tensor(state.theta[i % params.K], state.phi[i % params.K], params.J)
         for i in range(L)]
    total = 0.0
    for w in itertools.product(range(two_j + 1), repeat=L):
        if any(w[i] and w[(i + 1) % L] for i in range(L)):
            M = np.eye(2, dtype=complex)
            for i in range(L):
                M = M @ A[i][w[i]]
            total += abs(np.trace(M)) ** 2
    return total


def mps_tangent_vectors(state: VariationalState, params: ModelParams, L: int,
                        basis: ConstrainedBasis | None = None) -> np.ndarray:
    """d|Psi>/d(theta_1..theta_K, phi_1..phi_K) by the product rule over all sites."""
    K = params.K
    basis = basis or build_basis(L, params.J)
    A = [site_tensor(state.theta[i % K], state.phi[i % K], params.J) for i in range(L)]
    out = np.zeros((2 * K, basis.dim), dtype=complex)
    for p, which in enumerate(("theta", "phi")):
        for c in range(K):
            dA = site_tensor_derivative(state.theta[c], state.phi[c], params.J, which)
            for site in range(c, L, K):
                tensors = list(A)
                tensors[site] = dA
                out[p * K + c] += _word_amplitudes(tensors, basis)
    return out


def exact_report(state: VariationalState, params: ModelParams, L: int,
                 velocity: np.ndarray) -> tuple[float, float, float]:
    """(<H>/L, <H^2>_c/L, leakage) for the finite-L MPS by exact linear algebra.

    The leakage is ||(d/dt + iH)|psi>||^2 / L for the normalised state with the
    component along |psi> projected out (normalisation and gauge phase).
    """
    basis = build_basis(L, params.J)
    H = build_hamiltonian(basis, params)
    psi = mps_to_statevector(state, params, L, basis)
    norm = np.linalg.norm(psi)
    psi_n = psi / norm
    Hpsi = H @ psi_n
    e = np.vdot(psi_n, Hpsi).real
    var = np.vdot(Hpsi, Hpsi).real - e ** 2
    tangents = mps_tangent_vectors(state, params, L, basis) / norm
    v = np.asarray(velocity, float) @ tangents + 1j * Hpsi
    v = v - np.vdot(psi_n, v) * psi_n
    gamma2 = np.vdot(v, v).real / L
    return e / L, var / L, gamma2
