"""Parameter and state records for the Z_K variational ansatz of the spin-J PXP chain.

Everything here is an immutable value.  Per-site derived quantities
(``x``, ``tau``, ``eta``, ``ctilde``) are computed once by :func:`derive_sites`
and then shared by the transfer, gram, dynamics and leakage modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelError",
    "ParameterError",
    "DegenerateManifoldError",
    "PoleError",
    "ResonanceError",
    "WrongSpinError",
    "ModelParams",
    "VariationalState",
    "DerivedSite",
    "Sites",
    "validate",
    "reduce_theta",
    "derive_sites",
    "one_minus_cell_product",
    "POLE_TOL",
]

#: |sin theta| below this is treated as a pole (coordinate singularity).
POLE_TOL = 1e-9
#: |cos(theta/2)| below this counts as theta = pi (rounding leaves ~1e-16)
DEGENERATE_COS_TOL = 1e-14


class ModelError(ValueError):
    """Base class for all model-level failures."""


class ParameterError(ModelError):
    """A ModelParams / VariationalState invariant is violated."""


class DegenerateManifoldError(ModelError):
    """The unit-cell transfer matrix has no unique dominant eigenvalue (all theta = pi)."""


class PoleError(ModelError):
    """Evaluation requested at a coordinate pole (sin theta = 0)."""


class ResonanceError(ModelError):
    """The product of ctilde over a period equals one; the Gram inverse does not exist."""


class WrongSpinError(ModelError):
    """A specialised formula was called with a spin it does not cover."""


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters of one Z_K unit cell.

    ``Omega`` and ``Delta`` are the Rabi frequency and detuning of each site
    in the cell; they repeat with period ``K``.  ``retain_beta`` keeps the
    ``1/(1 - beta_[1,K])`` resummation factors (exact for any K); switching it
    off drops them, which is the large-K approximation.
    """

    K: int
    J: float
    Omega: np.ndarray
    Delta: np.ndarray
    retain_beta: bool = True

    def __post_init__(self):
        object.__setattr__(self, "Omega", _as_vector(self.Omega, "Omega"))
        object.__setattr__(self, "Delta", _as_vector(self.Delta, "Delta"))
        object.__setattr__(self, "J", float(self.J))

    @property
    def two_j(self) -> int:
        return int(round(2 * self.J))

    @property
    def half_integer(self) -> bool:
        return self.two_j % 2 == 1

    @property
    def theta_period(self) -> float:
        return 4 * np.pi if self.half_integer else 2 * np.pi

    def replace(self, **changes) -> "ModelParams":
        kw = dict(K=self.K, J=self.J, Omega=self.Omega, Delta=self.Delta,
                  retain_beta=self.retain_beta)
        kw.update(changes)
        return ModelParams(**kw)

    def shifted(self, n: int = 1) -> "ModelParams":
        """Cyclically relabel the cell so that old site ``n`` becomes site 0."""
        return self.replace(Omega=np.roll(self.Omega, -n), Delta=np.roll(self.Delta, -n))


@dataclass(frozen=True)
class VariationalState:
    """Angles (theta_i, phi_i) of the coherent state on each site of the cell."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _as_vector(self.theta, "theta"))
        object.__setattr__(self, "phi", _as_vector(self.phi, "phi"))
        if self.theta.shape != self.phi.shape:
            raise ParameterError(
                f"theta and phi lengths differ ({self.theta.size} vs {self.phi.size})")
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.phi))):
            raise ParameterError("state angles must be finite")

    @property
    def K(self) -> int:
        return self.theta.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.phi])

    @classmethod
    def from_vector(cls, y) -> "VariationalState":
        y = np.asarray(y, dtype=float)
        k = y.size // 2
        return cls(y[:k], y[k:])

    def shifted(self, n: int = 1) -> "VariationalState":
        return VariationalState(np.roll(self.theta, -n), np.roll(self.phi, -n))


def validate(params: ModelParams, state: VariationalState | None = None) -> None:
    """Raise :class:`ParameterError` naming the first violated invariant."""
    if not isinstance(params.K, (int, np.integer)) or params.K < 1:
        raise ParameterError(f"K must be a positive integer, got {params.K!r}")
    two_j = 2 * params.J
    if not np.isfinite(two_j) or two_j < 1 or abs(two_j - round(two_j)) > 1e-12:
        raise ParameterError(f"2J must be a positive integer, got J={params.J!r}")
    if params.Omega.size != params.K:
        raise ParameterError(
            f"Omega has length {params.Omega.size}, expected K={params.K}")
    if params.Delta.size != params.K:
        raise ParameterError(
            f"Delta has length {params.Delta.size}, expected K={params.K}")
    if not (np.all(np.isfinite(params.Omega)) and np.all(np.isfinite(params.Delta))):
        raise ParameterError("Omega and Delta must be finite")
    if state is not None and state.K != params.K:
        raise ParameterError(f"state has {state.K} sites, params have K={params.K}")


def reduce_theta(theta, J: float) -> np.ndarray:
    """Map theta into [0, period) where the period is 2pi (integer J) or 4pi (half-integer J)."""
    period = 4 * np.pi if int(round(2 * J)) % 2 else 2 * np.pi
    return np.mod(np.asarray(theta, dtype=float), period)


@dataclass(frozen=True)
class DerivedSite:
    x: float
    tau: complex
    eta: float
    ctilde: float


@dataclass(frozen=True)
class Sites:
    """Per-site derived arrays for one unit cell (index 0..K-1, cyclic).

    Attributes
    ----------
    theta, phi : reduced angles actually used in the closed forms
    x : cos(theta/2)**(2J), the overlap <0|theta,phi>
    tau : tan(theta/2) exp(-i phi)
    eta : left-environment weight of each site
    beta_cell : beta_[1,K], the product of (-1 + x_i^2) around the cell
    ctilde : contraction factor controlling the Gram-inverse band decay
    one_minus_beta, ctilde_gap : 1 - beta_[1,K] and 1 + ctilde, kept separately
        because at large J both are far below machine epsilon
    """

    J: float
    theta: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    eta: np.ndarray
    beta_cell: float
    ctilde: np.ndarray
    retain_beta: bool = True
    one_minus_beta: float | None = None
    ctilde_gap: np.ndarray | None = None
    _records: tuple = field(default=(), repr=False, compare=False)

    def __len__(self) -> int:
        return self.x.size

    def __getitem__(self, i) -> DerivedSite:
        return DerivedSite(float(self.x[i]), complex(self.tau[i]), float(self.eta[i]),
                           float(self.ctilde[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def K(self) -> int:
        return self.x.size

    @property
    def resum(self) -> float:
        """1/(1 - beta_[1,K]) when retaining beta, else 1."""
        if not self.retain_beta:
            return 1.0
        omb = self.one_minus_beta if self.one_minus_beta is not None else 1.0 - self.beta_cell
        return 1.0 / omb

    def span_beta(self, i: int, j: int) -> float:
        """beta_[i,j] = prod_{k=i}^{j} (-1 + x_k^2), cyclic indices; 1 for an empty span."""
        out = 1.0
        z = self.x ** 2 - 1.0
        for k in range(i, j + 1):
            out *= z[k % self.K]
        return out


def one_minus_cell_product(gap) -> float:
    """1 - prod_k (-(1 - gap_k)) for gaps in [0, 1], free of cancellation.

    Both beta_[1,K] (gap = x^2) and prod ctilde (gap = 1 + ctilde) have this
    shape; when every gap is tiny and K is even the naive 1 - prod loses all
    digits.
    """
    p, q = 1.0, 0.0  # p = prod (1 - gap), q = 1 - p, both accumulated without subtraction
    for g in np.asarray(gap, dtype=float):
        q = q + g * p
        p = p * (1.0 - g)
    return q if len(gap) % 2 == 0 else 1.0 + p


def _eta(x: np.ndarray, retain_beta: bool) -> tuple[np.ndarray, float, float]:
    K = x.size
    w = x ** 2
    z = w - 1.0
    beta = float(np.prod(z))
    one_minus_beta = one_minus_cell_product(w)
    if not np.any(w > 0):
        raise DegenerateManifoldError(
            "unit-cell transfer matrix has |beta_[1,K]| = 1 (all theta = pi); "
            "the dominant eigenvalue is not unique")
    eta = np.empty(K)
    for i in range(K):
        # 1 + alpha_[i, i+K-1] = 1 + z_{i-1}(1 + z_{i-2}(1 + ...)) by Horner from the far end;
        # with z = w - 1, h -> 1 + z h = g + w h and g = 1 - h -> h (1 - w) keep every term >= 0
        h, g = 1.0, 0.0
        for m in range(K - 1, 0, -1):
            wm = w[(i - m) % K]
            h, g = g + wm * h, h * (1.0 - wm)
        eta[i] = h / one_minus_beta if retain_beta else h
    return eta, beta, one_minus_beta


def derive_sites(params: ModelParams, state: VariationalState) -> Sites:
    """Compute x, tau, eta and ctilde for every site of the cell."""
    validate(params, state)
    J = params.J
    theta = reduce_theta(state.theta, J)
    phi = np.asarray(state.phi, dtype=float)
    half = theta / 2
    x = np.cos(half) ** params.two_j
    tau = np.tan(half) * np.exp(-1j * phi)
    if np.all(np.abs(np.cos(half)) < DEGENERATE_COS_TOL):
        raise DegenerateManifoldError(
            "every theta is at pi: the unit-cell transfer matrix has |beta_[1,K]| = 1 "
            "and its dominant eigenvalue is not unique")
    eta, beta, one_minus_beta = _eta(x, params.retain_beta)
    # ctilde = -1 + (2J tan^2 + 1) x^2, written with sin/cos to stay finite at theta = pi;
    # the cell resummation cancels out of it, so it is the same in both beta modes
    x2_tan2 = np.cos(half) ** (2 * params.two_j - 2) * np.sin(half) ** 2
    ctilde_gap = 2 * J * x2_tan2 + x ** 2
    if params.two_j == 1:
        ctilde_gap = np.ones_like(x)  # sin^2 + cos^2: exactly zero ctilde, not rounding noise
    return Sites(J=J, theta=theta, phi=phi, x=x, tau=tau, eta=eta, beta_cell=beta,
                 ctilde=ctilde_gap - 1.0, retain_beta=params.retain_beta,
                 one_minus_beta=one_minus_beta, ctilde_gap=ctilde_gap)
