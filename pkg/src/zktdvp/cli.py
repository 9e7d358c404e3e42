"""Command-line driver: evolve, leakage, validate and sweep.

The config is a flat text file of ``dotted.key = value`` lines; ``#`` starts a
comment and arrays are comma lists::

    model.K = 2
    model.J = 0.5
    model.Omega = 1, 1
    model.Delta = 0, 0
    state.theta = 3.0, 0.2
    state.phi = 0, 0
    run.t_end = 10
    run.dt = 1e-3
    output.path = traj.csv

Exit status: 0 success, 1 validation check failed, 2 config error,
3 numeric event (evolve/leakage only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import variational_energy
from .integrator import RHS, Trajectory, evolve
from .leakage import BREAKDOWN_LABELS, leakage_rate
from .model import ModelError, ModelParams, ParameterError, VariationalState, validate

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "run", "main",
           "read_trajectory_csv", "EXIT_OK", "EXIT_CHECK_FAILED", "EXIT_CONFIG", "EXIT_NUMERIC"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MODES = ("evolve", "leakage", "validate", "sweep")

KNOWN_KEYS = {
    "mode", "model.K", "model.J", "model.Omega", "model.Delta", "model.retain_beta",
    "state.theta", "state.phi", "run.t_end", "run.dt", "run.record_every", "run.rhs",
    "run.trunc_eps", "run.drift_tol", "output.path", "output.format", "validate.seed",
    "validate.only",
}
AXIS_FIELDS = ("name", "start", "stop", "count")
# sweepable names; a trailing ".i" picks a single site, otherwise every site gets the value
SWEEPABLE = ("model.J", "model.Omega", "model.Delta", "state.theta", "state.phi")


class ConfigError(ValueError):
    pass


@dataclass
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class RunConfig:
    mode: str
    params: ModelParams | None = None
    state: VariationalState | None = None
    t_end: float = 0.0
    dt: float = 1e-3
    record_every: int = 1
    rhs: str = "exact"
    trunc_eps: float = 1e-14
    drift_tol: float = 1e-6
    axes: list = field(default_factory=list)
    output: str | None = None
    fmt: str = "csv"
    seed: int = 0
    only: tuple = ()
    raw: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        """Flat key -> string map of every effective setting (echoed into outputs)."""
        out = {"mode": self.mode}
        if self.params is not None:
            out.update({
                "model.K": str(self.params.K), "model.J": _fmt(self.params.J),
                "model.Omega": _join(self.params.Omega), "model.Delta": _join(self.params.Delta),
                "model.retain_beta": str(self.params.retain_beta).lower(),
            })
        if self.state is not None:
            out.update({"state.theta": _join(self.state.theta), "state.phi": _join(self.state.phi)})
        out.update({
            "run.t_end": _fmt(self.t_end), "run.dt": _fmt(self.dt),
            "run.record_every": str(self.record_every), "run.rhs": self.rhs,
            "run.trunc_eps": _fmt(self.trunc_eps), "run.drift_tol": _fmt(self.drift_tol),
            "output.format": self.fmt,
        })
        if self.output:
            out["output.path"] = self.output
        if self.mode == "validate":
            out["validate.seed"] = str(self.seed)
            if self.only:
                out["validate.only"] = ",".join(map(str, self.only))
        for n, ax in enumerate(self.axes, start=1):
            out.update({f"sweep.axis{n}.name": ax.name, f"sweep.axis{n}.start": _fmt(ax.start),
                        f"sweep.axis{n}.stop": _fmt(ax.stop), f"sweep.axis{n}.count": str(ax.count)})
        return out


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _join(values) -> str:
    return ",".join(_fmt(v) for v in values)


# ---------------------------------------------------------------------------
# parsing

def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into {key: (value, line_number)}."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} "
                              f"(first set on line {entries[key][1]})")
        entries[key] = (value, lineno)
    return entries


class _Reader:
    def __init__(self, entries: dict, source: str):
        self.entries = entries
        self.source = source

    def where(self, key):
        line = self.entries[key][1] if key in self.entries else None
        return f"{self.source}:{line}: {key}" if line else f"{self.source}: {key}"

    def has(self, key):
        return key in self.entries

    def get(self, key, cast, default=None, required=False):
        if key not in self.entries:
            if required:
                raise ConfigError(f"{self.source}: missing required field {key!r}")
            return default
        raw = self.entries[key][0]
        try:
            return cast(raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{self.where(key)}: cannot parse {raw!r} ({err})") from None

    def floats(self, key, required=False):
        return self.get(key, lambda s: [float(v) for v in s.split(",") if v.strip()],
                        required=required)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError("expected true/false")


def build_config(entries: dict, mode: str | None = None, source: str = "<config>") -> RunConfig:
    r = _Reader(entries, source)
    for key in entries:
        if key not in KNOWN_KEYS and not key.startswith("sweep."):
            raise ConfigError(f"{r.where(key)}: unknown key")
    cfg_mode = r.get("mode", str)
    mode = mode or cfg_mode
    if mode is None:
        raise ConfigError(f"{source}: no mode given (subcommand or 'mode = ...')")
    if mode not in MODES:
        raise ConfigError(f"{r.where('mode')}: unknown mode {mode!r}")
    cfg = RunConfig(mode=mode, raw={k: v for k, (v, _) in entries.items()})

    cfg.output = r.get("output.path", str)
    cfg.fmt = r.get("output.format", str, "json" if mode in ("leakage", "validate") else "csv")
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"{r.where('output.format')}: must be csv or json")
    cfg.seed = r.get("validate.seed", int, 0)
    cfg.only = tuple(r.get("validate.only", lambda s: [int(v) for v in s.split(",")], []))
    if mode == "validate":
        return cfg

    K = r.get("model.K", int, required=True)
    J = r.get("model.J", float, required=True)
    omega = r.floats("model.Omega", required=True)
    delta = r.floats("model.Delta", required=True)
    params = ModelParams(K, J, omega, delta, retain_beta=r.get("model.retain_beta", _bool, True))
    state = VariationalState(r.floats("state.theta", required=True),
                             r.floats("state.phi", required=True))
    try:
        validate(params, state)
    except ParameterError as err:
        raise ConfigError(f"{source}: {err}") from None
    cfg.params, cfg.state = params, state

    cfg.t_end = r.get("run.t_end", float, 0.0)
    cfg.dt = r.get("run.dt", float, 1e-3)
    cfg.record_every = r.get("run.record_every", int, 1)
    cfg.rhs = r.get("run.rhs", str, "exact")
    cfg.trunc_eps = r.get("run.trunc_eps", float, 1e-14)
    cfg.drift_tol = r.get("run.drift_tol", float, 1e-6)
    if not cfg.dt > 0:
        raise ConfigError(f"{r.where('run.dt')}: dt must be > 0")
    if cfg.t_end < 0:
        raise ConfigError(f"{r.where('run.t_end')}: t_end must be >= 0")
    if cfg.record_every < 1:
        raise ConfigError(f"{r.where('run.record_every')}: must be >= 1")
    if cfg.rhs not in RHS:
        raise ConfigError(f"{r.where('run.rhs')}: unknown rhs {cfg.rhs!r}; choose from {sorted(RHS)}")

    if mode == "sweep":
        cfg.axes = _axes(r, K)
        if not cfg.axes:
            raise ConfigError(f"{source}: sweep needs at least sweep.axis1.name/start/stop/count")
    return cfg


def _axes(r: _Reader, K: int) -> list:
    numbers = set()
    for key in r.entries:
        if not key.startswith("sweep."):
            continue
        parts = key.split(".")
        if len(parts) != 3 or not parts[1].startswith("axis") or not parts[1][4:].isdigit() \
                or parts[2] not in AXIS_FIELDS:
            raise ConfigError(f"{r.where(key)}: expected sweep.axisN.(name|start|stop|count)")
        numbers.add(int(parts[1][4:]))
    axes = []
    for n in sorted(numbers):
        base = f"sweep.axis{n}."
        name = r.get(base + "name", str, required=True)
        _check_axis_name(r, base + "name", name, K)
        count = r.get(base + "count", int, required=True)
        if count < 1:
            raise ConfigError(f"{r.where(base + 'count')}: must be >= 1")
        axes.append(SweepAxis(name, r.get(base + "start", float, required=True),
                              r.get(base + "stop", float, required=True), count))
    return axes


def _check_axis_name(r, key, name, K):
    head, _, site = name.rpartition(".")
    if name in SWEEPABLE:
        return
    if head in SWEEPABLE and head != "model.J" and site.isdigit() and int(site) < K:
        return
    raise ConfigError(f"{r.where(key)}: {name!r} is not a sweepable parameter "
                      f"(use one of {', '.join(SWEEPABLE)}, optionally with a site suffix .0..{K - 1})")


def load_config(path: str, mode: str | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"{path}: cannot read config ({err.strerror})") from None
    return build_config(parse_config(text, path), mode, path)


# ---------------------------------------------------------------------------
# serialisation

def _config_comment(cfg: RunConfig) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in cfg.resolved().items())


def trajectory_csv(traj: Trajectory, cfg: RunConfig) -> str:
    K = cfg.params.K
    buf = io.StringIO()
    buf.write(_config_comment(cfg))
    buf.write(f"# termination = {traj.termination}\n")
    if traj.message:
        buf.write(f"# message = {traj.message}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"theta_{i + 1}" for i in range(K)] + [f"phi_{i + 1}" for i in range(K)]
                    + ["energy", "gamma2", "accumulated_leakage"])
    for row in traj.as_array() if len(traj) else []:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_trajectory_csv(path: str) -> tuple[list, np.ndarray, dict]:
    """Return (header, data rows, echoed config) from a trajectory CSV."""
    meta = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                rows.append([float(c) for c in cells])
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header or [])), meta


def trajectory_json(traj: Trajectory, cfg: RunConfig) -> dict:
    return {
        "config": cfg.resolved(),
        "termination": traj.termination,
        "message": traj.message,
        "drift_flagged": traj.drift_flagged,
        "event_state": _state_dict(traj.event_state),
        "t": traj.times,
        "theta": [s.theta.tolist() for s in traj.states],
        "phi": [s.phi.tolist() for s in traj.states],
        "energy": traj.energy,
        "gamma2": traj.gamma2,
        "accumulated_leakage": traj.accumulated_leakage,
    }


def _state_dict(state):
    if state is None:
        return None
    return {"theta": state.theta.tolist(), "phi": state.phi.tolist()}


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    # json writes floats with repr, which round-trips exactly (17 significant digits at most)
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# modes

def _event(kind, message, state) -> str:
    snap = _state_dict(state)
    return f"numeric event ({kind}): {message}\n  state: {json.dumps(snap)}\n"


def run_evolve(cfg: RunConfig) -> int:
    traj = evolve(cfg.state, cfg.params, cfg.t_end, cfg.dt, rhs=cfg.rhs,
                  record_every=cfg.record_every, trunc_eps=cfg.trunc_eps, drift_tol=cfg.drift_tol)
    text = trajectory_csv(traj, cfg) if cfg.fmt == "csv" else _dump_json(trajectory_json(traj, cfg))
    _write(cfg.output, text)
    if traj.drift_flagged:
        sys.stderr.write(f"warning: energy drift {traj.max_energy_drift:.3e} exceeds "
                         f"run.drift_tol = {cfg.drift_tol:g}\n")
    if traj.termination != "completed":
        sys.stderr.write(_event(traj.termination, traj.message, traj.event_state))
        return EXIT_NUMERIC
    return EXIT_OK


def leakage_report(params: ModelParams, state: VariationalState) -> dict:
    rep = leakage_rate(params, state)
    return {
        "energy": variational_energy(params, state) / params.K,
        "variance": rep.total,
        "var_zz": rep.var_zz,
        "var_zxxz": rep.var_zxxz,
        "var_xx": rep.var_xx,
        "gamma2": rep.gamma2,
        "gamma2_definition": rep.gamma2_definition,
        "gamma2_breakdown": rep.breakdown(),
    }


def run_leakage(cfg: RunConfig) -> int:
    try:
        report = leakage_report(cfg.params, cfg.state)
    except ModelError as err:
        sys.stderr.write(_event(type(err).__name__, str(err), cfg.state))
        return EXIT_NUMERIC
    if cfg.fmt == "json":
        text = _dump_json({"config": cfg.resolved(), "report": report})
    else:
        buf = io.StringIO()
        buf.write(_config_comment(cfg))
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "value"])
        for key, value in report.items():
            if isinstance(value, dict):
                for sub in BREAKDOWN_LABELS:
                    writer.writerow([f"gamma2_breakdown.{sub}", _fmt(value[sub])])
            else:
                writer.writerow([key, _fmt(value)])
        text = buf.getvalue()
    _write(cfg.output, text)
    return EXIT_OK


def run_validate(cfg: RunConfig) -> int:
    from .validation import run_all

    results = []
    for res in run_all(seed=cfg.seed, only=cfg.only or None):
        sys.stderr.write(res.line() + "\n")
        results.append(res)
    if cfg.fmt == "json":
        text = _dump_json({"config": cfg.resolved(), "checks": [r.as_dict() for r in results]})
    else:
        buf = io.StringIO()
        buf.write(_config_comment(cfg))
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["criterion", "name", "passed", "measured", "tolerance", "seconds", "detail"])
        for r in results:
            writer.writerow([r.number, r.name, str(r.passed).lower(), _fmt(r.measured),
                             _fmt(r.tolerance), f"{r.seconds:.3f}", r.detail])
        text = buf.getvalue()
    _write(cfg.output, text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def grid_points(cfg: RunConfig) -> list[dict]:
    """Cartesian product of the sweep axes, last axis fastest."""
    grids = np.meshgrid(*[ax.values() for ax in cfg.axes], indexing="ij")
    flat = [g.reshape(-1) for g in grids]
    return [{ax.name: float(f[n]) for ax, f in zip(cfg.axes, flat)} for n in range(flat[0].size)]


def _apply(cfg: RunConfig, point: dict) -> tuple[ModelParams, VariationalState]:
    p, s = cfg.params, cfg.state
    arrays = {"model.Omega": p.Omega.copy(), "model.Delta": p.Delta.copy(),
              "state.theta": s.theta.copy(), "state.phi": s.phi.copy()}
    J = p.J
    for name, value in point.items():
        if name == "model.J":
            J = value
            continue
        head, _, site = name.rpartition(".")
        if name in arrays:
            arrays[name][:] = value
        else:
            arrays[head][int(site)] = value
    return (ModelParams(p.K, J, arrays["model.Omega"], arrays["model.Delta"], p.retain_beta),
            VariationalState(arrays["state.theta"], arrays["state.phi"]))


def _sweep_point(args):
    cfg, point = args
    try:
        params, state = _apply(cfg, point)
        validate(params, state)
    except ModelError as err:
        return dict(point, energy=float("nan"), gamma2=float("nan"), accumulated_leakage=float("nan"),
                    termination="invalid_parameters", message=str(err))
    traj = evolve(state, params, cfg.t_end, cfg.dt, rhs=cfg.rhs, record_every=cfg.record_every,
                  trunc_eps=cfg.trunc_eps, drift_tol=cfg.drift_tol)
    last = len(traj) - 1
    nan = float("nan")
    return dict(point,
                energy=traj.energy[last] if last >= 0 else nan,
                gamma2=traj.gamma2[last] if last >= 0 else nan,
                accumulated_leakage=traj.accumulated_leakage[last] if last >= 0 else nan,
                termination=traj.termination, message=traj.message)


def run_sweep(cfg: RunConfig, threads: int = 1) -> int:
    points = grid_points(cfg)
    jobs = [(cfg, pt) for pt in points]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_point, jobs))  # map keeps input order
    else:
        rows = [_sweep_point(job) for job in jobs]
    names = [ax.name for ax in cfg.axes]
    cols = names + ["energy", "gamma2", "accumulated_leakage", "termination", "message"]
    if cfg.fmt == "json":
        text = _dump_json({"config": cfg.resolved(), "rows": rows})
    else:
        buf = io.StringIO()
        buf.write(_config_comment(cfg))
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
        text = buf.getvalue()
    _write(cfg.output, text)
    return EXIT_OK


def run(cfg: RunConfig, threads: int = 1) -> int:
    if cfg.mode == "evolve":
        return run_evolve(cfg)
    if cfg.mode == "leakage":
        return run_leakage(cfg)
    if cfg.mode == "validate":
        return run_validate(cfg)
    return run_sweep(cfg, threads)


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zktdvp",
        description="Variational dynamics and quantum leakage of the spin-J blockade chain.")
    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "evolve": "integrate a trajectory and write t, angles, energy, gamma2, accumulated leakage",
        "leakage": "single-point energy, variance and gamma2 with its breakdown",
        "validate": "run the acceptance checks and report measured deltas",
        "sweep": "evaluate a parameter grid (optionally in parallel)",
    }
    for mode in MODES:
        p = sub.add_parser(mode, help=helps[mode])
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--output", help="output path (overrides output.path; default stdout)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.mode)
    except (ConfigError, ParameterError) as err:
        sys.stderr.write(f"config error: {err}\n")
        return EXIT_CONFIG
    if args.output:
        cfg.output = args.output
    if args.threads < 1:
        sys.stderr.write("config error: --threads must be >= 1\n")
        return EXIT_CONFIG
    return run(cfg, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
