"""Fixed-step RK4 integration of the variational equations of motion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import eom_exact, eom_large_j, eom_series, eom_spin_half, variational_energy
from .leakage import leakage_rate
from .model import ModelError, ModelParams, PoleError, VariationalState

__all__ = ["RHS", "Trajectory", "rhs_function", "step", "evolve", "TERMINATIONS"]

TERMINATIONS = ("completed", "pole_event", "degenerate_event", "nonfinite_event")

RHS = {
    "exact": eom_exact,
    "series": eom_series,
    "spin_half": eom_spin_half,
    "large_j": eom_large_j,
}


def rhs_function(name: str, trunc_eps: float = 1e-14) -> Callable:
    """Map a right-hand-side name to f(params, state) -> Velocity."""
    if name not in RHS:
        raise ValueError(f"unknown rhs {name!r}; choose from {sorted(RHS)}")
    if name == "series":
        return lambda params, state: eom_series(params, state, trunc_eps)
    return RHS[name]


def step(state: VariationalState, params: ModelParams, dt: float, rhs="exact",
         trunc_eps: float = 1e-14) -> VariationalState:
    """One classical RK4 step.

    A failing right-hand side re-raises its ModelError with ``substep`` (1-4)
    set to the RK stage at which it happened.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    f = rhs_function(rhs, trunc_eps) if isinstance(rhs, str) else rhs
    y = state.as_vector()
    ks = []
    for stage, frac in enumerate((0.0, 0.5, 0.5, 1.0), start=1):
        probe = y if stage == 1 else y + frac * dt * ks[-1]
        if not np.all(np.isfinite(probe)):
            raise FloatingPointError(f"non-finite state at substep {stage}")
        try:
            ks.append(f(params, VariationalState.from_vector(probe)).as_vector())
        except ModelError as err:
            err.substep = stage
            raise
    y_new = y + dt / 6 * (ks[0] + 2 * ks[1] + 2 * ks[2] + ks[3])
    if not np.all(np.isfinite(y_new)):
        raise FloatingPointError("non-finite state after RK4 update")
    return VariationalState.from_vector(y_new)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    gamma2: list = field(default_factory=list)
    accumulated_leakage: list = field(default_factory=list)
    termination: str = "completed"
    message: str = ""
    event_state: VariationalState | None = None
    drift_flagged: bool = False

    def __len__(self) -> int:
        return len(self.times)

    def as_array(self) -> np.ndarray:
        """Rows of (t, theta_1..theta_K, phi_1..phi_K, energy, gamma2, accumulated_leakage)."""
        rows = [np.concatenate([[t], s.theta, s.phi, [e, g, a]])
                for t, s, e, g, a in zip(self.times, self.states, self.energy, self.gamma2,
                                         self.accumulated_leakage)]
        return np.array(rows)

    @property
    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(np.asarray(self.energy) - self.energy[0]))) if self.energy else 0.0


def _energy(params, state):
    energy = variational_energy(params, state) / params.K
    if not math.isfinite(energy):
        raise FloatingPointError("non-finite energy")
    return energy


def _gamma2(params, state):
    g2 = leakage_rate(params, state, cross_check=False).gamma2
    if not math.isfinite(g2):
        raise FloatingPointError("non-finite leakage")
    return g2


def evolve(state0: VariationalState, params: ModelParams, t_end: float, dt: float,
           rhs="exact", record_every: int = 1, trunc_eps: float = 1e-14,
           drift_tol: float = 1e-6) -> Trajectory:
    """Integrate from t = 0 to ``t_end`` and record every ``record_every`` steps.

    Energy is per site and is checked against ``drift_tol`` after every step.
    Gamma^2 is evaluated at record points and ``accumulated_leakage`` is the
    trapezoid integral of Gamma over those points, so it sharpens as
    ``record_every`` goes to 1.  A numeric event ends the run and the partial
    trajectory is returned.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    f = rhs_function(rhs, trunc_eps) if isinstance(rhs, str) else rhs
    traj = Trajectory()
    n_steps = int(round(t_end / dt)) if t_end > 0 else 0

    def stop(kind, msg, state):
        traj.termination, traj.message, traj.event_state = kind, msg, state
        return traj

    def record(t, state, energy):
        g2 = _gamma2(params, state)
        leak = 0.0
        if traj.times:
            gamma_prev = math.sqrt(max(traj.gamma2[-1], 0.0))
            leak = traj.accumulated_leakage[-1] + 0.5 * (t - traj.times[-1]) * (
                math.sqrt(max(g2, 0.0)) + gamma_prev)
        traj.times.append(t)
        traj.states.append(state)
        traj.energy.append(energy)
        traj.gamma2.append(g2)
        traj.accumulated_leakage.append(leak)

    state = state0
    t = 0.0
    n = 0
    try:
        e0 = _energy(params, state)
        record(0.0, state, e0)
        for n in range(1, n_steps + 1):
            state = step(state, params, dt, f)
            t = n * dt
            energy = _energy(params, state)
            if abs(energy - e0) > drift_tol:
                traj.drift_flagged = True
            if n % record_every == 0 or n == n_steps:
                record(t, state, energy)
    except PoleError as err:
        return stop("pole_event", _where(n, dt, err), state)
    except ModelError as err:
        return stop("degenerate_event", _where(n, dt, err), state)
    except (FloatingPointError, ValueError) as err:
        return stop("nonfinite_event", _where(n, dt, err), state)
    return traj


def _where(n, dt, err):
    sub = getattr(err, "substep", None)
    return f"step {n} (t={n * dt:.17g})" + (f" substep {sub}" if sub else "") + f": {err}"
