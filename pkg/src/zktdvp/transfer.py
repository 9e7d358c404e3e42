"""Transfer-matrix algebra of the bond-dimension-2 blockade MPS.

Index convention for the 4x4 matrices: row (a, c) and column (b, d) with
a, b the bra bond indices and c, d the ket bond indices, flattened as
0 = (0,0), 1 = (0,1), 2 = (1,0), 3 = (1,1).  Undecorated matrices are real;
decorated ones (operator or derivative insertions) are complex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spin_coherent import BmuCoefficients, ExpectationBundle, bdag_b

__all__ = [
    "TransferBlock",
    "DominantPair",
    "site_transfer",
    "block_transfer",
    "ordered_product",
    "dominant_pair",
    "reduction_check",
    "matrix_elements",
    "operator_transfer",
    "derivative_transfer",
]


@dataclass(frozen=True)
class TransferBlock:
    mat: np.ndarray
    alpha: float
    beta: float
    span: tuple[int, int]

    def eigenvalues(self) -> np.ndarray:
        return np.array([1.0, self.beta, 0.0, 0.0])


@dataclass(frozen=True)
class DominantPair:
    r: np.ndarray
    l: np.ndarray


def _block_matrix(x_first: float, alpha: float, beta: float) -> np.ndarray:
    return np.array([
        [1 + alpha + beta, 0, 0, -alpha - beta],
        [x_first * (1 + alpha), 0, 0, -x_first * alpha],
        [x_first * (1 + alpha), 0, 0, -x_first * alpha],
        [1 + alpha, 0, 0, -alpha],
    ], dtype=float)


def site_transfer(x: float) -> TransferBlock:
    """Single-site transfer matrix sum_sigma conj(A^sigma) (x) A^sigma."""
    mat = np.array([
        [x * x, 0, 0, 1 - x * x],
        [x, 0, 0, 0],
        [x, 0, 0, 0],
        [1, 0, 0, 0],
    ], dtype=float)
    return TransferBlock(mat, 0.0, x * x - 1.0, (0, 0))


def block_transfer(xs, start: int = 0) -> TransferBlock:
    """Closed-form product T_i T_{i+1} ... T_j over the sites with overlaps ``xs``.

    alpha_[i,j] = sum_{m=i+1}^{j} prod_{k=m}^{j} (-1 + x_k^2) and
    beta_[i,j] = prod_{k=i}^{j} (-1 + x_k^2), accumulated left to right.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("empty span")
    suffix = 0.0  # sum_{m=i}^{k} prod_{t=m}^{k} z_t
    beta = 1.0
    for x in xs:
        z = x * x - 1.0
        suffix = z * (suffix + 1.0)
        beta *= z
    alpha = suffix - beta
    return TransferBlock(_block_matrix(xs[0], alpha, beta), alpha, beta,
                         (start, start + xs.size - 1))


def ordered_product(xs) -> np.ndarray:
    """Literal left-to-right product of single-site matrices (test reference only)."""
    out = np.eye(4)
    for x in np.asarray(xs, dtype=float):
        out = out @ site_transfer(x).mat
    return out


def dominant_pair(x_i: float, eta_i: float) -> DominantPair:
    """|r_i) = (1, x_i, x_i, 1), (l_i| = (eta_i, 0, 0, 1 - eta_i)."""
    return DominantPair(np.array([1.0, x_i, x_i, 1.0]),
                        np.array([eta_i, 0.0, 0.0, 1.0 - eta_i]))


def reduction_check(l_i, block: TransferBlock, r_next) -> tuple[np.ndarray, np.ndarray]:
    """Return ((l_i| T_[i,j], T_[i,j] |r_{j+1})); these equal (l_{j+1}| and |r_i)."""
    return np.asarray(l_i) @ block.mat, block.mat @ np.asarray(r_next)


_ADJOINT = {"P": "P", "sz": "sz", "sx": "sx", "sp": "sm", "sm": "sp", "sxsx": "sxsx",
            "szsz": "szsz", "sxsz": "szsx", "szsx": "sxsz"}


def matrix_elements(bundle: ExpectationBundle, name: str,
                    b: BmuCoefficients | None = None) -> tuple[complex, complex, complex, complex]:
    """(<W|O|W>, <0|O|W>, <W|O|0>, <0|O|0>) with |W> the coherent state.

    ``name`` is an entry of the bundle, ``'I'``, or a tangent combination:
    ``'B'``, ``'sxB'``, ``'szB'`` (ket derivative), ``'Bd'``, ``'Bdsx'``, ``'Bdsz'``
    (bra derivative) and ``'BdB'``.  Tangent entries use the ground-state
    eigenvalue of ``b`` for the <W|..|0> elements.
    """
    x = bundle.x
    if name == "I":
        return 1.0, x, x, 1.0
    if name in _ADJOINT:
        ww, gw, gg = bundle[name]
        return ww, gw, np.conj(bundle.ground_omega(_ADJOINT[name])), gg
    b0 = b.on_ground()
    if name in ("B", "sxB", "szB"):
        ww, gw, gg = bundle[name]
        q = {"B": None, "sxB": "sx", "szB": "sz"}[name]
        wg = b0 * (x if q is None else np.conj(bundle.ground_omega(q)))
        return ww, gw, wg, gg
    if name in ("Bd", "Bdsx", "Bdsz"):
        src = {"Bd": "B", "Bdsx": "sxB", "Bdsz": "szB"}[name]
        ww, gw, wg, gg = matrix_elements(bundle, src, b)
        return np.conj(ww), np.conj(wg), np.conj(gw), np.conj(gg)
    if name == "BdB":
        # same direction on both layers; see derivative_transfer for mixed pairs
        ww, gw, gg = bundle["BdB"]
        return ww, gw, abs(b0) ** 2 * x, gg
    raise KeyError(name)


def operator_transfer(bundle: ExpectationBundle, op: str, x: float | None = None,
                      b: BmuCoefficients | None = None) -> np.ndarray:
    """Transfer matrix with the one-site operator ``op`` between bra and ket layers."""
    x = bundle.x if x is None else x
    ww, gw, wg, gg = matrix_elements(bundle, op, b)
    # P/Q sandwiches: <W|P = x<0|, P|W> = x|0>
    pp = x * x * gg
    pq = x * (gw - x * gg)
    qp = x * (wg - x * gg)
    qq = ww - x * gw - x * wg + x * x * gg
    return np.array([
        [pp, pq, qp, qq],
        [x * gg, 0, wg - x * gg, 0],
        [x * gg, gw - x * gg, 0, 0],
        [gg, 0, 0, 0],
    ], dtype=complex)


_KET_BOTTOM = [1, 3]
_BRA_BOTTOM = [2, 3]


def derivative_transfer(kind: str, bundle: ExpectationBundle, b: BmuCoefficients,
                        x: float | None = None, op: str | None = None,
                        b_nu: BmuCoefficients | None = None) -> np.ndarray:
    """Derivative-decorated transfer matrices.

    kind:
      ``'d'``     ket derivative,                sum conj(A) (x) dA
      ``'dbar'``  bra derivative,                sum conj(dA) (x) A
      ``'dbard'`` both layers (B_mu^+ ... B_nu),  sum conj(dA) (x) dA
      ``'dq'``    ket derivative with ``op``,    sum conj(A) (x) q dA
    The derivative kills the constant bottom row of A, hence the zero rows.
    For ``'dbard'`` with two different directions pass ``b_nu``.
    """
    if kind == "d":
        M = operator_transfer(bundle, "B", x, b)
        M[_KET_BOTTOM] = 0
    elif kind == "dbar":
        M = operator_transfer(bundle, "Bd", x, b)
        M[_BRA_BOTTOM] = 0
    elif kind == "dbard":
        x = bundle.x if x is None else x
        b_nu = b_nu or b
        ww = bdag_b(bundle.theta, bundle.phi, bundle.J, b.direction, b_nu.direction)[0]
        gg = np.conj(b.on_ground()) * b_nu.on_ground()
        # B's are diagonal, so the P-Q cross sandwiches vanish
        M = np.zeros((4, 4), dtype=complex)
        M[0, 0] = x * x * gg
        M[0, 3] = ww - x * x * gg
    elif kind == "dq":
        if op not in ("sx", "sz"):
            raise ValueError("dq needs op in {'sx', 'sz'}")
        M = operator_transfer(bundle, op + "B", x, b)
        M[_KET_BOTTOM] = 0
    else:
        raise ValueError(f"unknown derivative kind {kind!r}")
    return M
