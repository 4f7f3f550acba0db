"""Command line front end.

::

    delay-esc simulate CONFIG [--seed N] [--out DIR]
    delay-esc batch CONFIG --seeds 0,1,2 [--out DIR] [--jobs J] [--y-tol X]
    delay-esc averaged CONFIG [--c VALUE] [--sweep-c LO:HI:STEP] [--out DIR]
    delay-esc calibrate CONFIG --seeds 0:50 [--write PATH]
    delay-esc presets list
    delay-esc presets show NAME

``CONFIG`` is a TOML scenario file or the name of a shipped preset. Output
goes to ``--out`` or, by default, ``$DELAY_ESC_OUT/<scenario name>``
(``DELAY_ESC_OUT`` defaults to ``./esc_out``).
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import metrics
from .averaged import c_star, sandwich_bounds, simulate_averaged
from ._validation import InvalidInputError
from .config import ConfigError, load_config, preset_names, preset_text
from .controller import run
from .svgplot import line_plot, trajectory_plot

log = logging.getLogger("delay_esc")

OUT_ENV = "DELAY_ESC_OUT"


def default_out(config):
    return Path(os.environ.get(OUT_ENV, "esc_out")) / (config.name or "scenario")


def parse_seeds(text):
    """``"0,3,7"`` or a half-open range ``"0:20"``; duplicates are rejected."""
    text = text.strip()
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":", 1))
        seeds = list(range(lo, hi))
    else:
        seeds = [int(v) for v in text.split(",") if v.strip()]
    if not seeds:
        raise ConfigError([("--seeds", "no seeds given")])
    if len(set(seeds)) != len(seeds):
        raise ConfigError([("--seeds", f"duplicate seeds in {text!r}")])
    if any(s < 0 for s in seeds):
        raise ConfigError([("--seeds", "seeds must be nonnegative")])
    return seeds


def parse_sweep(text):
    lo, hi, step = (float(v) for v in text.split(":"))
    if step <= 0 or hi < lo:
        raise ConfigError([("--sweep-c", f"bad range {text!r}")])
    return np.arange(lo, hi + 0.5 * step, step)


def _summary(config, traj, report, seed):
    d = {
        "scenario": config.name,
        "seed": seed,
        "mode": config.controller.mode,
        "status": report.status,
        "t_stop": float(traj.t_stop),
        "records": len(traj),
        "dt": config.sim.dt,
        "decimation": config.sim.decimation,
    }
    rd = report.as_dict()
    rd.pop("status")
    rd.pop("t_stop")
    d.update(rd)
    d["U_attenuation"] = report.U_residual / report.U_peak if report.U_peak > 0 else 0.0
    for i, v in enumerate(traj.theta_hat[-1] if len(traj) else []):
        d[f"final_theta_hat_{i + 1}"] = float(v)
    if config.qmap.is_maximum:
        d["c_star"] = c_star(config.qmap.hessian, config.controller.K)
    return d


def run_scenario(config, out_dir, seed=None):
    """Simulate one scenario and write ``trajectory.csv``, ``summary.txt`` and plots."""
    seed = config.seed if seed is None else seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    traj = run(config, seed=seed)
    log.info("seed %d: %s after %.1f s wall", seed, traj.status, time.perf_counter() - t0)
    report = metrics.residuals(traj, config.qmap, config.sim.window_fraction)
    traj.to_csv(out / "trajectory.csv")
    (out / "summary.txt").write_text(metrics.format_report(_summary(config, traj, report, seed)))
    for signal in config.plots:
        (out / f"{signal}.svg").write_text(trajectory_plot(traj, signal))
    return 0, report


def _aggregate(config, seeds, reports, y_tol):
    conv = metrics.success_probability(config, seeds, metrics.converged_within(y_tol), reports=reports)
    div = metrics.success_probability(config, seeds, metrics.diverged, reports=reports)
    ys = [r.y_residual for r in reports]
    ths = [r.theta_residual for r in reports]
    return {
        "scenario": config.name,
        "seeds": ",".join(str(s) for s in seeds),
        "trials": conv.trials,
        "y_tolerance": y_tol,
        "converged": conv.successes,
        "converged_fraction": conv.fraction,
        "converged_ci95_low": conv.ci_low,
        "converged_ci95_high": conv.ci_high,
        "diverged": div.successes,
        "diverged_fraction": div.fraction,
        "diverged_ci95_low": div.ci_low,
        "diverged_ci95_high": div.ci_high,
        "median_y_residual": float(np.median(ys)),
        "median_theta_residual": float(np.median(ths)),
        "calibrated_y_threshold": metrics.calibrate_threshold(ys),
        "calibrated_theta_threshold": metrics.calibrate_threshold(ths),
    }


def _batch_worker(args):
    config, seed, out = args
    _, report = run_scenario(config, out, seed)
    return report


def run_batch(config, seeds, out_dir, jobs=1, y_tol=0.25):
    """Per-seed artifacts under ``seed_<N>/`` plus ``aggregate.txt``."""
    if isinstance(seeds, str):
        seeds = parse_seeds(seeds)
    else:
        seeds = parse_seeds(",".join(str(s) for s in seeds))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    work = [(config, s, out / f"seed_{s}") for s in seeds]
    if jobs == 1:
        reports = [_batch_worker(w) for w in work]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_batch_worker, work))
    agg = _aggregate(config, seeds, reports, y_tol)
    (out / "aggregate.txt").write_text(metrics.format_report(agg))
    return 0, agg


def run_averaged(config, out_dir, c=None, sweep=None, sandwich=False):
    """Averaged-loop analysis; one run at ``c`` or a sweep over ``sweep`` values."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    q = config.qmap
    K = config.controller.K
    D = config.delays
    a = config.averaged
    theta0 = np.asarray(config.sim.theta_hat0) - q.theta_star
    cs = c_star(q.hessian, K)

    def one(cval):
        return simulate_averaged(q.hessian, K, cval, D, theta0, m=a.m, dt=a.dt, t_final=a.t_final, record_every=a.record_every)

    if sweep is not None:
        lines = ["c,c_star,above_threshold,decay_rate_V,decay_rate_Psi,monotone_violation"]
        for cval in map(float, sweep):
            tr = one(cval)
            lines.append(
                f"{cval!r},{cs!r},{int(cval > cs)},{tr.decay_rate('V')!r},{tr.decay_rate('Psi')!r},{tr.monotone_violation()!r}"
            )
        (out / "sweep.csv").write_text("\n".join(lines) + "\n")
        return 0, lines
    cval = config.controller.c if c is None else float(c)
    tr = one(cval)
    tr.to_csv(out / "averaged.csv")
    summary = {
        "scenario": config.name,
        "c": cval,
        "c_star": cs,
        "above_threshold": cval > cs,
        "m": a.m,
        "dt": a.dt,
        "t_final": a.t_final,
        "V_initial": float(tr.V[0]),
        "V_final": float(tr.V[-1]),
        "decay_rate_V": tr.decay_rate("V"),
        "decay_rate_Psi": tr.decay_rate("Psi"),
        "monotone_violation": tr.monotone_violation(),
    }
    if sandwich:
        lo, hi = sandwich_bounds(q.hessian, K, D, a.m)
        summary["sandwich_low"] = lo
        summary["sandwich_high"] = hi
    (out / "summary.txt").write_text(metrics.format_report(summary))
    (out / "V.svg").write_text(line_plot(tr.t, tr.V, "Lyapunov functional", ["V"]))
    (out / "theta_tilde.svg").write_text(
        line_plot(tr.t, tr.theta_tilde, "averaged estimation error", [f"theta_tilde_{i + 1}" for i in range(q.n)])
    )
    return 0, summary


def build_parser():
    p = argparse.ArgumentParser(prog="delay-esc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")

    b = sub.add_parser("batch", help="run a scenario over several seeds")
    b.add_argument("config")
    b.add_argument("--seeds", required=True, help="comma list or LO:HI range")
    b.add_argument("--out")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--y-tol", type=float, default=0.25, help="convergence criterion on the y residual")

    a = sub.add_parser("averaged", help="analyze the averaged loop")
    a.add_argument("config")
    a.add_argument("--c", type=float)
    a.add_argument("--sweep-c", help="LO:HI:STEP")
    a.add_argument("--sandwich", action="store_true", help="also compute V/norm ratio bounds")
    a.add_argument("--out")

    cal = sub.add_parser("calibrate", help="median + 3 MAD residual thresholds over seeds")
    cal.add_argument("config")
    cal.add_argument("--seeds", required=True)
    cal.add_argument("--jobs", type=int, default=1)
    cal.add_argument("--write", help="append results to this key = value file")

    pr = sub.add_parser("presets", help="list or show shipped scenarios")
    pr.add_argument("action", choices=("list", "show"))
    pr.add_argument("name", nargs="?")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args):
    if args.command == "presets":
        if args.action == "list":
            for name in preset_names():
                print(name)
            return 0
        if not args.name:
            raise ConfigError([("name", "presets show needs a preset name")])
        print(preset_text(args.name), end="")
        return 0

    config = load_config(args.config)
    if args.command == "simulate":
        out = Path(args.out) if args.out else default_out(config)
        code, report = run_scenario(config, out, args.seed)
        print(f"{config.name or args.config}: status={report.status} y_residual={report.y_residual:.4g} "
              f"theta_residual={report.theta_residual:.4g} -> {out}")
        return code
    if args.command == "batch":
        out = Path(args.out) if args.out else default_out(config)
        code, agg = run_batch(config, parse_seeds(args.seeds), out, jobs=args.jobs, y_tol=args.y_tol)
        print(metrics.format_report(agg), end="")
        return code
    if args.command == "averaged":
        out = Path(args.out) if args.out else default_out(config) / "averaged"
        sweep = parse_sweep(args.sweep_c) if args.sweep_c else None
        code, result = run_averaged(config, out, c=args.c, sweep=sweep, sandwich=args.sandwich)
        if sweep is not None:
            print("\n".join(result))
        else:
            print(metrics.format_report(result), end="")
        return code
    if args.command == "calibrate":
        seeds = parse_seeds(args.seeds)
        reports = metrics.run_reports(config, seeds, jobs=args.jobs)
        ys = [r.y_residual for r in reports]
        ths = [r.theta_residual for r in reports]
        res = {
            f"{config.name}.seeds": args.seeds,
            f"{config.name}.median_y_residual": float(np.median(ys)),
            f"{config.name}.median_theta_residual": float(np.median(ths)),
            f"{config.name}.y_threshold": metrics.calibrate_threshold(ys),
            f"{config.name}.theta_threshold": metrics.calibrate_threshold(ths),
            f"{config.name}.diverged": sum(r.status == "diverged" for r in reports),
        }
        text = metrics.format_report(res)
        if args.write:
            with open(args.write, "a") as fh:
                fh.write(text)
        print(text, end="")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
