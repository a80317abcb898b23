"""Command line entry point: ``python -m fastkm {run,sweep,dynamics,plotdata}``.

Exit codes: 0 on success, 1 on runtime failures, 2 on configuration errors
(unknown keys, missing files, bad flags).
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dynamics import (
    ConstantBeta,
    DynamicsSpec,
    PowerBeta,
    integrate_rk4,
    integrate_tikhonov_flow,
    rotation_closed_form,
    rotation_closed_form_velocity,
    rotation_map,
    tikhonov_anchor,
)
from .exceptions import ConfigError
from .experiment import load_config, parse_config, parse_range, plotdata, run_experiment, sweep

DYNAMICS_EXPERIMENTS = ("edge", "interior", "tikhonov", "bigo")


def _dynamics_runs(name, t_end, h, sample_every):
    """Yield ``(label, Trajectory)`` pairs for a named planar experiment."""
    Q = rotation_map()
    if name == "edge":
        for mode, eta in (("theta_one", 0.0), ("theta_alpha_minus_one", 1.0)):
            spec = DynamicsSpec(Q, 3.0, eta, ConstantBeta(1.0), 1.0,
                                rotation_closed_form(mode, 1.0, 1.0, 1.0),
                                rotation_closed_form_velocity(mode, 1.0, 1.0, 1.0))
            yield mode, integrate_rk4(spec, t_end, h, sample_every)
    elif name == "interior":
        spec = DynamicsSpec(Q, 3.0, 0.5, ConstantBeta(1.0), 1.0, np.array([1.0, 0.0]), np.zeros(2))
        yield "eta_0.5", integrate_rk4(spec, t_end, h, sample_every)
    elif name == "tikhonov":
        x0, v0 = np.array([1.0, 0.0]), np.zeros(2)
        spec = DynamicsSpec(Q, 3.0, 0.5, PowerBeta(1.0, 0.0), 1.0, x0, v0)
        yield "second_order", integrate_rk4(spec, t_end, h, sample_every)
        anchor = tikhonov_anchor(Q, 3.0, 1.0, 1.0, x0, v0)
        yield "first_order", integrate_tikhonov_flow(Q, 3.0, 1.0, 1.0, anchor, x0, t_end, h, sample_every)
    elif name == "bigo":
        spec = DynamicsSpec(Q, 4.0, 0.5, PowerBeta(1.0, 0.5), 1.0, np.array([1.0, 0.0]), np.zeros(2))
        yield "power_eps_0.5", integrate_rk4(spec, t_end, h, sample_every)
    else:
        raise ConfigError(f"unknown dynamics experiment {name!r}", key="experiment")


def _cmd_run(args):
    cfg = load_config(args.config)
    csv_path, side = run_experiment(cfg)
    print(f"wrote {csv_path} and {side}")
    return 0


def _cmd_sweep(args):
    if args.config:
        base = load_config(args.config)
    else:
        base = parse_config({"problem": {"kind": "skew_toy"}, "solver": {"name": "fast_km"}})
    if args.iterations is not None:
        base = replace(base, problem=replace(base.problem, iterations=args.iterations))
    etas = parse_range(args.eta)
    alphas = [v for a in args.alpha for v in parse_range(a)]
    sigmas = [v for s in args.sigma for v in parse_range(s)] if args.sigma else [None]
    if sigmas == [None]:
        paths = []
        for a in alphas:
            paths += sweep(base, etas, [a], [a], args.out, args.workers)
    else:
        paths = sweep(base, etas, alphas, sigmas, args.out, args.workers)
    print(f"wrote {len(paths)} traces to {args.out}")
    return 0


def _cmd_dynamics(args):
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("run", "t", "x1", "x2", "q_norm", "t_q_norm"))
        for label, traj in _dynamics_runs(args.experiment, args.t_end, args.h, args.sample_every):
            for t, x, q in zip(traj.t, traj.x, traj.q_norm):
                w.writerow((label, repr(float(t)), repr(float(x[0])), repr(float(x[1])),
                            repr(float(q)), repr(float(t * q))))
    print(f"wrote {out}")
    return 0


def _cmd_plotdata(args):
    out = plotdata(args.csv, args.out)
    print(f"wrote {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fastkm", description="Fast Krasnoselskii-Mann benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a single TOML configuration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="grid over eta, alpha and sigma")
    p.add_argument("--config", help="base configuration (default: skew toy)")
    p.add_argument("--eta", default="0.1:0.9:9", help="a:b:n range or comma list")
    p.add_argument("--alpha", nargs="+", default=["4"])
    p.add_argument("--sigma", nargs="+", help="defaults to sigma = alpha")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("dynamics", help="integrate a planar continuous-time experiment")
    p.add_argument("--experiment", choices=DYNAMICS_EXPERIMENTS, default="edge")
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--sample-every", type=int, default=100)
    p.add_argument("--out", default="dynamics.csv")
    p.set_defaults(func=_cmd_dynamics)

    p = sub.add_parser("plotdata", help="stack trace CSVs into long format")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default="plotdata.csv")
    p.set_defaults(func=_cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced as a runtime failure with context
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
