"""Experiment configuration, single runs, parameter sweeps and figure data.

A run is described by a TOML file::

    schema_version = 1
    seed = 0

    [problem]
    kind = "skew_toy"        # skew_toy | l1_ball_toy | beckmann_ot | geometric_median
    d = 10
    tau = 0.1

    [solver]
    name = "fast_km"         # km | fast_km | ohm | fast_km_cooled
    alpha = 4.0
    eta = 0.5
    sigma = 4.0
    iterations = 1000

    [output]
    path = "skew.csv"

Every run writes one CSV trace and a JSON sidecar next to it
(``<path>.json``) echoing the configuration.

For ``geometric_median`` the optional ``Z`` key holds the ``N x (N-1)``
graph matrix as a nested list; the path graph is used when it is absent.
"""

import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError, ParameterWarning
from .iteration import ScheduleParams, run_fast_km, run_km
from .precond import build_graph_drs, build_pdhg, run_fast_ppp
from .problems import gen_beckmann, gen_median, l1_ball_toy, skew_toy

__all__ = [
    "SCHEMA_VERSION",
    "ProblemSpec",
    "RunConfig",
    "load_config",
    "parse_config",
    "build_schedule",
    "run_experiment",
    "sweep",
    "parse_range",
    "plotdata",
]

SCHEMA_VERSION = 1
PROBLEM_KEYS = {
    "skew_toy": {"d": 10, "tau": 0.1},
    "l1_ball_toy": {"weight": 1e-3},
    "beckmann_ot": {"p": 20, "mu_mode": "two_points", "tau1": 1e-3, "tau2": None},
    "geometric_median": {"N": 20, "d": 10, "Z": None},
}
SOLVERS = ("km", "fast_km", "ohm", "fast_km_cooled")
SOLVER_KEYS = {
    "name", "alpha", "sigma", "eta", "theta", "s", "iterations", "cooling", "alpha_max", "maxit", "energy",
}
OUTPUT_KEYS = {"path", "snapshot_every"}
TOP_KEYS = {"schema_version", "seed", "problem", "solver", "output"}


@dataclass(frozen=True)
class ProblemSpec:
    """Problem kind with its parameters and the solver settings."""

    kind: str
    params: dict
    solver: str = "fast_km"
    solver_params: dict = field(default_factory=dict)
    iterations: int = 1000


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    output: str
    snapshot_every: int = 0
    seed: int = 0

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "problem": {"kind": self.problem.kind, **self.problem.params},
            "solver": {"name": self.problem.solver, "iterations": self.problem.iterations,
                       **self.problem.solver_params},
            "output": {"path": str(self.output), "snapshot_every": self.snapshot_every},
        }


def _check_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}", key=key)


def parse_config(raw: dict, base_dir=None) -> RunConfig:
    """Validate a decoded configuration mapping and build a :class:`RunConfig`."""
    _check_keys(raw, TOP_KEYS, "top level")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", key="schema_version")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer", key="seed")
    prob = dict(raw.get("problem", {}))
    kind = prob.pop("kind", "skew_toy")
    if kind not in PROBLEM_KEYS:
        raise ConfigError(f"unknown problem kind {kind!r}", key="kind")
    _check_keys(prob, PROBLEM_KEYS[kind], f"[problem] for kind {kind!r}")
    params = {**PROBLEM_KEYS[kind], **prob}

    solver = dict(raw.get("solver", {}))
    _check_keys(solver, SOLVER_KEYS, "[solver]")
    name = solver.pop("name", "fast_km")
    if name not in SOLVERS:
        raise ConfigError(f"unknown solver {name!r}", key="name")
    iterations = solver.pop("iterations", 1000)
    if not isinstance(iterations, int) or iterations < 0:
        raise ConfigError("iterations must be a nonnegative integer", key="iterations")

    out = dict(raw.get("output", {}))
    _check_keys(out, OUTPUT_KEYS, "[output]")
    path = out.get("path", f"{kind}_{name}.csv")
    if base_dir is not None and not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    spec = ProblemSpec(kind, params, name, solver, iterations)
    cfg = RunConfig(spec, path, int(out.get("snapshot_every", 0)), seed)
    build_schedule(cfg)
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a TOML configuration. Relative output paths follow the file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", key=None) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw, base_dir=str(path.parent))


def build_schedule(cfg: RunConfig):
    """Schedule parameters of the configured solver, or None for plain KM."""
    sp = dict(cfg.problem.solver_params)
    sp.pop("energy", None)
    name = cfg.problem.solver
    try:
        if name == "km":
            theta = sp.get("theta", 0.5)
            if not 0 < theta < 1:
                raise ConfigError("km needs theta in (0, 1)", key="theta")
            return None
        if name == "ohm":
            return ScheduleParams(alpha=2.0, sigma=1.0, eta=0.5)
        alpha = float(sp.get("alpha", 4.0))
        kwargs = dict(alpha=alpha, sigma=float(sp.get("sigma", alpha)), s=float(sp.get("s", 1.0)))
        if "eta" in sp:
            kwargs["eta"] = float(sp["eta"])
        elif "theta" in sp:
            kwargs["theta"] = float(sp["theta"])
        else:
            kwargs["eta"] = 0.5
        if name == "fast_km_cooled":
            kwargs["cooling"] = sp.get("cooling", "linear")
            kwargs["maxit"] = int(sp.get("maxit", max(cfg.problem.iterations, 2)))
            if "alpha_max" in sp:
                kwargs["alpha_max"] = float(sp["alpha_max"])
        elif "cooling" in sp and sp["cooling"] != "none":
            raise ConfigError("cooling needs solver name 'fast_km_cooled'", key="cooling")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParameterWarning)
            return ScheduleParams(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid solver parameters: {exc}", key="solver") from exc


def _instance(cfg: RunConfig):
    """Return ``(kind, operator or system, x0, z_star)`` for the configured problem."""
    kind = cfg.problem.kind
    pp = cfg.problem.params
    if kind == "skew_toy":
        T = skew_toy(int(pp["d"]), float(pp["tau"]))
        return T, None, np.ones(T.dim), np.zeros(T.dim)
    if kind == "l1_ball_toy":
        sysd = l1_ball_toy(float(pp["weight"]))
        return None, sysd, np.zeros(2), sysd.known_solution
    if kind == "beckmann_ot":
        pb = gen_beckmann(int(pp["p"]), pp["mu_mode"], seed=cfg.seed, tau1=float(pp["tau1"]),
                          tau2=None if pp["tau2"] is None else float(pp["tau2"]))
        sysb = build_pdhg(pb)
        return None, sysb, np.zeros(sysb.reduced_dim), None
    try:
        Z = None if pp["Z"] is None else np.array(pp["Z"], dtype=float)
        spec, _ = gen_median(int(pp["N"]), int(pp["d"]), seed=cfg.seed, Z=Z)
    except ValueError as exc:
        raise ConfigError(f"invalid graph matrix: {exc}", key="Z") from exc
    sysg = build_graph_drs(spec)
    return None, sysg, np.zeros((int(pp["N"]) - 1, int(pp["d"]))), None


def execute(cfg: RunConfig):
    """Run the configured solver and return its trace without writing files."""
    T, system, x0, z_star = _instance(cfg)
    p = build_schedule(cfg)
    n = cfg.problem.iterations
    sp = cfg.problem.solver_params
    want_energy = sp.get("energy", True) and z_star is not None and p is not None
    lam = None
    if want_energy and p.cooling == "none" and p.eta is not None and 0 < p.eta < 1:
        lam = p.alpha - 1.0
    if p is None:
        theta = float(sp.get("theta", 0.5))
        if system is None:
            trace = run_km(T, x0, theta, n, z_star=z_star, snapshot_every=cfg.snapshot_every)
        else:
            trace = run_km(system.J, x0, theta, n, z_star=z_star, inner=system.inner,
                           snapshot_every=cfg.snapshot_every)
    elif system is None:
        trace = run_fast_km(T, x0, x0, p, n, z_star=z_star, energy_lambda=lam,
                            snapshot_every=cfg.snapshot_every)
    else:
        trace = run_fast_ppp(system, p, x0, x0, n, z_star=z_star, energy_lambda=lam,
                             snapshot_every=cfg.snapshot_every)
    if p is not None and p.cooling != "none":
        trace.metadata["alpha_schedule"] = [p.alpha_at(k) for k in range(n)]
    return trace


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def run_experiment(cfg: RunConfig):
    """Run one configuration, write ``<output>`` and ``<output>.json``, return both paths."""
    trace = execute(cfg)
    out = Path(cfg.output)
    meta = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "rng": "numpy.random.default_rng",
        "schedule": None,
        "T_evaluations": trace.metadata.get("T_evaluations"),
        "wall_time": trace.metadata.get("wall_time"),
    }
    p = build_schedule(cfg)
    if p is not None:
        meta["schedule"] = p.as_dict()
    if "alpha_schedule" in trace.metadata:
        meta["alpha_schedule"] = trace.metadata["alpha_schedule"]
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        trace.to_csv(out)
        side = out.with_name(out.name + ".json")
        with open(side, "w") as fh:
            json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return out, side


def parse_range(text):
    """``"a:b:n"`` gives ``n`` evenly spaced values from ``a`` to ``b``; commas list values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be a:b:n, got {text!r}", key="range")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.round(np.linspace(a, b, n), 12)]
    return [float(v) for v in text.split(",") if v]


def _fmt_num(v):
    return f"{v:g}"


def _run_to_path(cfg):
    return str(run_experiment(cfg)[0])


def sweep(base: RunConfig, etas, alphas, sigmas, out_dir, workers=1):
    """Grid over ``(sigma, alpha, eta)``; one CSV per point, named by its parameters.

    Runs are independent and produce the same files whether executed
    serially or on a process pool.
    """
    out_dir = Path(out_dir)
    cfgs = []
    for sigma in sigmas:
        for alpha in alphas:
            for eta in etas:
                sp = dict(base.problem.solver_params)
                sp.pop("theta", None)
                sp.update(alpha=float(alpha), sigma=float(sigma), eta=float(eta))
                solver = base.problem.solver if base.problem.solver in ("fast_km", "fast_km_cooled") else "fast_km"
                prob = replace(base.problem, solver=solver, solver_params=sp)
                name = (f"{prob.kind}_{solver}_alpha{_fmt_num(alpha)}_sigma{_fmt_num(sigma)}"
                        f"_eta{_fmt_num(eta)}.csv")
                cfg = replace(base, problem=prob, output=str(out_dir / name))
                build_schedule(cfg)
                cfgs.append(cfg)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_to_path, cfgs))
    return [_run_to_path(c) for c in cfgs]


def plotdata(csv_paths, out_path):
    """Stack traces into long format ``run,k,quantity,value`` (empty values skipped)."""
    rows = []
    for path in csv_paths:
        path = Path(path)
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                for q, v in rec.items():
                    if q == "k" or v == "":
                        continue
                    rows.append((path.stem, rec["k"], q, v))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("run", "k", "quantity", "value"))
        w.writerows(rows)
    return out_path
