"""Acceptance checks: closed forms against literal products, oracles and limits.

Each ``check_*`` function runs one criterion and returns a :class:`CheckResult`
with the measured figure and the tolerance it was held to.  ``run_all`` is
what ``zktdvp validate`` executes.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .dynamics import dpsi_h, eom_exact, eom_series, eom_spin_half, variational_energy
from .gram import gram_blocks, inverse_im_g_thetaphi
from .integrator import evolve, step
from .leakage import leakage_large_j, leakage_rate
from .model import ModelParams, VariationalState, derive_sites
from .oracle import exact_report, numeric_environment
from .transfer import block_transfer, dominant_pair, ordered_product

__all__ = ["CheckResult", "CHECKS", "run_all", "random_state"]

SPINS = (0.5, 1.0, 1.5, 2.0)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.number:2d} {verdict}  {self.name}: measured {self.measured:.3e} "
                f"(tolerance {self.tolerance:.1e}, {self.seconds:.2f} s){'  ' + self.detail if self.detail else ''}")

    def as_dict(self) -> dict:
        return asdict(self)


def _theta_away_from_poles(rng, size, min_sin=0.05):
    """Uniform theta in [0, 4pi) with |sin theta| >= min_sin."""
    out = np.empty(size)
    for k in range(size):
        while True:
            t = rng.uniform(0, 4 * np.pi)
            if abs(np.sin(t)) >= min_sin:
                out[k] = t
                break
    return out


def random_state(rng, K, J, min_sin=0.05, retain_beta=True):
    params = ModelParams(K, J, rng.normal(size=K), rng.normal(size=K), retain_beta=retain_beta)
    state = VariationalState(_theta_away_from_poles(rng, K, min_sin), rng.uniform(0, 2 * np.pi, K))
    return params, state


def _result(number, name, measured, tolerance, t0, detail="", passed=None):
    if passed is None:
        passed = bool(measured < tolerance)
    return CheckResult(number, name, bool(passed), float(measured), float(tolerance),
                       time.perf_counter() - t0, detail)


def check_transfer(seed=0, cases=500):
    """Closed-form block transfer matrix against the ordered 4x4 product."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        K = int(rng.integers(1, 9))
        J = float(rng.choice(SPINS))
        x = np.cos(rng.uniform(0, 2 * np.pi, K) / 2) ** int(round(2 * J))
        start = int(rng.integers(K))
        span = int(rng.integers(1, 13))
        xs = x[(start + np.arange(span)) % K]
        worst = max(worst, np.max(np.abs(block_transfer(xs).mat - ordered_product(xs))))
    elapsed = time.perf_counter() - t0
    return _result(1, "transfer closed form", worst, 1e-12, t0,
                   detail=f"runtime {elapsed:.2f} s (limit 1 s)",
                   passed=worst < 1e-12 and elapsed < 1.0)


def check_reduction(seed=1, cells=100):
    """(l_i| T_[i,j] = (l_{j+1}| and T_[i,j] |r_{j+1}) = |r_i) on every sub-span."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cells):
        K = int(rng.integers(1, 9))
        J = float(rng.choice(SPINS))
        params, state = random_state(rng, K, J, min_sin=0.0)
        sites = derive_sites(params, state)
        x, eta = sites.x, sites.eta
        for i in range(K):
            for length in range(1, K + 1):
                j = i + length - 1
                block = block_transfer(x[(i + np.arange(length)) % K])
                li = dominant_pair(x[i], eta[i]).l
                nxt = dominant_pair(x[(j + 1) % K], eta[(j + 1) % K])
                worst = max(worst, np.max(np.abs(li @ block.mat - nxt.l)),
                            np.max(np.abs(block.mat @ nxt.r - dominant_pair(x[i], eta[i]).r)))
    return _result(2, "transfer reduction", worst, 1e-12, t0)


def _eta_small_k(x):
    """Closed rows of eta for K = 1, 2, 3 (site i, with i-1, i-2 cyclic).

    Evaluated in exact rational arithmetic on the given floats: the rows
    subtract nearly equal numbers when x is small, so a float evaluation
    would be a noisier reference than the formula under test.
    """
    K = x.size
    w = [Fraction(float(v)) ** 2 for v in x]
    out = np.empty(K)
    for i in range(K):
        if K == 1:
            out[i] = float(1 / (2 - w[i]))
        elif K == 2:
            a = w[i - 1]
            out[i] = float(a / (1 - (-1 + a) * (-1 + w[i])))
        else:
            a, b = w[i - 1], w[i - 2]
            out[i] = float((1 + (-1 + a) * b) / (1 - (-1 + a) * (-1 + b) * (-1 + w[i])))
    return out


def check_eta(seed=2, cases=300):
    """General eta against the K = 1, 2, 3 rows, plus the recursion closing around the cell."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_rows = worst_closure = 0.0
    for n in range(cases):
        K = 1 + n % 3
        params, state = random_state(rng, K, float(rng.choice(SPINS)), min_sin=0.0)
        sites = derive_sites(params, state)
        worst_rows = max(worst_rows, np.max(np.abs(sites.eta - _eta_small_k(sites.x))))
        for K2 in (int(rng.integers(1, 9)),):
            p2, s2 = random_state(rng, K2, float(rng.choice(SPINS)), min_sin=0.0)
            st = derive_sites(p2, s2)
            nxt = 1 + (st.x ** 2 - 1) * st.eta
            worst_closure = max(worst_closure, np.max(np.abs(np.roll(st.eta, -1) - nxt)))
    worst = max(worst_rows, worst_closure)
    return _result(3, "eta consistency", worst, 1e-12, t0,
                   detail=f"rows {worst_rows:.1e}, closure {worst_closure:.1e}")


def check_gram_inverse(seed=3, states=200):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(states):
        K = 1 + n % 8
        params, state = random_state(rng, K, float(rng.choice(SPINS)))
        sites = derive_sites(params, state)
        inv = inverse_im_g_thetaphi(params, sites)
        im = gram_blocks(params, sites).g_tp.imag
        worst = max(worst, np.max(np.abs(inv @ im - np.eye(K))))
    return _result(4, "Gram inverse", worst, 1e-10, t0)


def _rel(a, b):
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / scale)


def check_environment(seed=4, states=100, max_ratio=0.995):
    """Closed forms against the numeric thermodynamic-limit contraction.

    States whose subdominant transfer eigenvalue exceeds ``max_ratio`` are
    redrawn: they are near-degenerate and the oracle's own series converges
    too slowly to serve as a 1e-9 reference.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = {"gram": 0.0, "dpsi_h": 0.0, "variance": 0.0, "gamma2": 0.0}
    strict = 0.0
    done = 0
    while done < states:
        K = 1 + done % 5
        params, state = random_state(rng, K, float(rng.choice(SPINS)))
        sites = derive_sites(params, state)
        if abs(sites.beta_cell) > max_ratio:
            continue
        ref = numeric_environment(params, state)
        g = gram_blocks(params, sites).full()
        dh = dpsi_h(params, sites)
        rep = leakage_rate(params, state)
        worst["gram"] = max(worst["gram"], _rel(g, ref.gram))
        worst["dpsi_h"] = max(worst["dpsi_h"], _rel(dh, ref.dpsi_h))
        worst["variance"] = max(worst["variance"], _rel(rep.total * K, ref.variance))
        # Gamma^2 = variance - (captured part): measure against the operands' scale
        dg = abs(rep.gamma2 - ref.gamma2)
        worst["gamma2"] = max(worst["gamma2"], dg / max(abs(ref.gamma2), ref.variance / K))
        strict = max(strict, dg / abs(ref.gamma2)) if ref.gamma2 != 0 else strict
        done += 1
    elapsed = time.perf_counter() - t0
    measured = max(worst.values())
    detail = (", ".join(f"{k} {v:.1e}" for k, v in worst.items())
              + f" (gamma2 relative to itself {strict:.1e}); runtime {elapsed:.1f} s (limit 30 s)")
    return _result(5, "environment oracle", measured, 1e-9, t0, detail=detail,
                   passed=measured < 1e-9 and elapsed < 30.0)


def check_eom_forms(seed=5, states=100):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_series = worst_half = 0.0
    for n in range(states):
        params, state = random_state(rng, 1 + n % 6, float(rng.choice(SPINS)))
        exact = eom_exact(params, state).as_vector()
        worst_series = max(worst_series,
                           np.max(np.abs(exact - eom_series(params, state, 1e-14).as_vector())))
        p_half, s_half = random_state(rng, 1 + n % 6, 0.5)
        worst_half = max(worst_half, np.max(np.abs(eom_exact(p_half, s_half).as_vector()
                                                   - eom_spin_half(p_half, s_half).as_vector())))
    return _result(6, "EOM cross-forms", max(worst_series, worst_half), 1e-10, t0,
                   detail=f"series {worst_series:.1e}, spin-1/2 {worst_half:.1e}")


def check_ed(L=12):
    """Closed-form energy and leakage densities against exact diagonalisation."""
    t0 = time.perf_counter()
    params = ModelParams(2, 0.5, [1.0, 1.0], [0.5, -0.5])
    state = VariationalState([np.pi / 2, np.pi / 2], [0.3, -0.2])
    tol = 5 * 0.25 ** (L // 2)
    velocity = eom_exact(params, state).as_vector()
    e_ed, _, g_ed = exact_report(state, params, L, velocity)
    e_cf = variational_energy(params, state) / params.K
    g_cf = leakage_rate(params, state).gamma2
    de = abs(e_cf - e_ed)
    dg = abs(g_cf - g_ed) / abs(g_cf)
    elapsed = time.perf_counter() - t0
    return _result(7, "ED cross-check", max(de, dg), tol, t0,
                   detail=f"energy {de:.2e}, gamma2 (relative) {dg:.2e}; runtime {elapsed:.1f} s",
                   passed=de <= tol and dg <= tol and elapsed < 10.0)


def check_detuning(seed=8, states=100):
    """Gamma^2 under two independent detuning draws.

    The reduced closed form carries no Delta at all, so the gated figure is
    zero up to rounding; the detail line also reports the defining
    expression, where Delta cancels numerically between variance and flow.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_def = 0.0
    for n in range(states):
        params, state = random_state(rng, 1 + n % 5, float(rng.choice(SPINS)))
        r1 = leakage_rate(params.replace(Delta=rng.normal(size=params.K)), state)
        r2 = leakage_rate(params.replace(Delta=rng.normal(size=params.K)), state)
        worst = max(worst, abs(r1.gamma2 - r2.gamma2))
        scale = max(r1.total, r2.total, abs(r1.gamma2))
        worst_def = max(worst_def, abs(r1.gamma2_definition - r2.gamma2_definition) / scale)
    return _result(8, "detuning independence", worst, 1e-12, t0,
                   detail=f"defining expression {worst_def:.1e} relative to the variance")


def check_nonnegative(seed=9, states=10_000, probe_every=10):
    """Gamma^2 >= -1e-12; every ``probe_every``-th state has one site at |sin theta| = 0.05."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    probe = np.arcsin(0.05)
    lowest = np.inf
    for n in range(states):
        K = 1 + n % 5
        params, state = random_state(rng, K, float(rng.choice(SPINS + (2.5, 3.0))))
        if n % probe_every == 0:
            theta = state.theta.copy()
            theta[n % K] = rng.choice([probe, np.pi - probe, np.pi + probe, 2 * np.pi - probe])
            state = VariationalState(theta, state.phi)
        lowest = min(lowest, leakage_rate(params, state, cross_check=False).gamma2)
    return _result(9, "non-negativity", -lowest, 1e-12, t0, detail=f"min gamma2 {lowest:.2e}")


def check_conservation(t_end=10.0, dt=1e-3):
    t0 = time.perf_counter()
    params = ModelParams(2, 0.5, [1.0, 1.0], [0.0, 0.0])
    state0 = VariationalState([3.0, 0.2], [0.0, 0.0])
    traj = evolve(state0, params, t_end, dt, rhs="exact", record_every=100)
    drift = traj.max_energy_drift

    def run(h, T=1.0):
        s = state0
        for _ in range(int(round(T / h))):
            s = step(s, params, h)
        return s.as_vector()

    a, b, c = run(0.04), run(0.02), run(0.01)
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    ok = traj.termination == "completed" and drift < 1e-6 and 12 <= ratio <= 20
    return _result(10, "conservation", drift, 1e-6, t0,
                   detail=f"Richardson ratio {ratio:.2f} (band [12, 20]), termination {traj.termination}",
                   passed=ok)


LARGE_J = (25, 50, 100, 200)
ODD_CELL = (3, (0.5, 0.7, 0.6), (0.3, 0.5, -0.4), (1.0, 0.8, 0.6), (0.2, -0.1, 0.3))
EVEN_CELL = (2, (0.5, 0.7), (0.3, 0.5), (1.0, 0.8), (0.2, -0.1))


def large_j_series(cell, spins=LARGE_J):
    """(J, Gamma^2, large-J limit formula) along the J sequence for one fixed cell."""
    K, th, ph, om, de = cell
    rows = []
    for J in spins:
        params = ModelParams(K, J, om, de)
        state = VariationalState(th, ph)
        rows.append((J, leakage_rate(params, state, cross_check=False).gamma2,
                     leakage_large_j(params, state)))
    return rows


def check_large_j():
    t0 = time.perf_counter()
    odd = large_j_series(ODD_CELL)
    # super-1/J: J * Gamma^2 strictly decreasing along the doubling sequence
    jg = [J * g for J, g, _ in odd]
    odd_ok = all(g > 0 for _, g, _ in odd) and all(b < a for a, b in zip(jg, jg[1:]))
    even = large_j_series(EVEN_CELL)
    J, g, lim = even[-1]
    ratio = g / lim
    even_err = abs(ratio - 1)
    return _result(11, "large-J asymptotics", even_err, 0.05, t0,
                   detail=(f"odd K J*Gamma^2 {', '.join(f'{v:.2e}' for v in jg)} "
                           f"({'decreasing' if odd_ok else 'NOT decreasing'}); "
                           f"even K Gamma^2*2J / limit at J={J:g}: {ratio:.3e}"),
                   passed=odd_ok and even_err < 0.05)


def check_symmetries(seed=12, states=100):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(states):
        J = float(rng.choice(SPINS))
        params, state = random_state(rng, 1 + n % 5, J)
        v = eom_exact(params, state).as_vector()
        period = params.theta_period
        shifted = VariationalState(state.theta + period, state.phi)
        worst = max(worst, np.max(np.abs(eom_exact(params, shifted).as_vector() - v)))
        p_half, s_half = random_state(rng, 1 + n % 5, 0.5)
        v = eom_exact(p_half, s_half).as_vector()
        joint = VariationalState(s_half.theta + 2 * np.pi, s_half.phi + np.pi)
        worst = max(worst, np.max(np.abs(eom_exact(p_half, joint).as_vector() - v)))
    return _result(12, "symmetries", worst, 1e-10, t0)


CHECKS = {
    1: check_transfer,
    2: check_reduction,
    3: check_eta,
    4: check_gram_inverse,
    5: check_environment,
    6: check_eom_forms,
    7: check_ed,
    8: check_detuning,
    9: check_nonnegative,
    10: check_conservation,
    11: check_large_j,
    12: check_symmetries,
}


def run_all(seed: int = 0, only=None) -> list[CheckResult]:
    """Run the checks (all by default).  ``seed`` offsets every randomised check."""
    out = []
    for number, fn in CHECKS.items():
        if only and number not in only:
            continue
        kwargs = {}
        if "seed" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
            kwargs["seed"] = seed + number
        out.append(fn(**kwargs))
    return out
