"""Post-processing of closed-loop trajectories and Monte Carlo batches."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from ._validation import InvalidInputError
from .averaged import fit_decay_rate


@dataclass
class ConvergenceReport:
    theta_residual: float
    y_residual: float
    U_residual: float
    U_peak: float
    H_hat_tail_average: np.ndarray
    fitted_decay_rate: float
    window_fraction: float
    status: str
    t_stop: float = None

    def as_dict(self):
        d = asdict(self)
        H = np.asarray(self.H_hat_tail_average)
        d.pop("H_hat_tail_average")
        n = H.shape[0]
        for i in range(n):
            for j in range(n):
                d[f"H_hat_tail_average_{i + 1}{j + 1}"] = float(H[i, j])
        return d


def _tail(traj, window_fraction):
    if not 0 < window_fraction <= 1:
        raise InvalidInputError(f"window_fraction must lie in (0, 1], got {window_fraction}")
    R = len(traj)
    start = int(np.floor((1.0 - window_fraction) * (R - 1)))
    if R == 0 or start >= R:
        raise InvalidInputError("trajectory window is empty")
    return slice(start, R)


def residuals(traj, qmap, window_fraction=0.2, y_tol=None):
    """Final-window residuals of a trajectory.

    ``theta_residual`` and ``y_residual`` are window means of
    ``|theta(t) - theta_star|`` and ``|y(t) - y_star|``. When ``y_tol`` is
    given a completed run with ``y_residual <= y_tol`` is labelled
    ``"converged"``.
    """
    w = _tail(traj, window_fraction)
    th_err = np.linalg.norm(traj.theta[w] - qmap.theta_star, axis=1)
    y_err = np.abs(traj.y[w] - qmap.y_star)
    Unorm = np.linalg.norm(traj.U, axis=1)
    # decay of the slow error |theta_hat - theta_star|, NaN when undefined
    e = np.linalg.norm(traj.theta_hat - qmap.theta_star, axis=1)
    try:
        rate = fit_decay_rate(traj.t, e, start_fraction=0.0) if len(traj) > 2 else float("nan")
    except InvalidInputError:
        rate = float("nan")
    status = traj.status
    y_res = float(np.mean(y_err))
    if y_tol is not None and status == "completed" and y_res <= y_tol:
        status = "converged"
    return ConvergenceReport(
        theta_residual=float(np.mean(th_err)),
        y_residual=y_res,
        U_residual=float(np.mean(Unorm[w])),
        U_peak=float(np.max(Unorm)),
        H_hat_tail_average=traj.H_hat[w].mean(axis=0),
        fitted_decay_rate=rate,
        window_fraction=window_fraction,
        status=status,
        t_stop=traj.t_stop,
    )


@dataclass
class SuccessEstimate:
    fraction: float
    successes: int
    trials: int
    ci_low: float
    ci_high: float
    reports: list

    def __float__(self):
        return self.fraction


def converged_within(y_tol):
    """Criterion: run completed and ``y_residual <= y_tol``."""

    def criterion(report):
        return report.status != "diverged" and report.y_residual <= y_tol

    return criterion


def diverged(report):
    return report.status == "diverged"


def _run_one(args):
    from .controller import run

    scenario, seed = args
    traj = run(scenario, seed=seed)
    return residuals(traj, scenario.qmap, scenario.sim.window_fraction)


def run_reports(scenario, seeds, jobs=1):
    """Residual reports for each seed, in seed order."""
    seeds = list(seeds)
    if not seeds:
        raise InvalidInputError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise InvalidInputError(f"duplicate seeds in {seeds}")
    work = [(scenario, s) for s in seeds]
    if jobs == 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))


def success_probability(scenario, seeds, criterion, jobs=1, reports=None):
    """Fraction of seeds whose report satisfies ``criterion``.

    Carries an exact (Clopper-Pearson) 95% binomial interval. Pass
    ``reports`` to reuse runs already made for the same seeds.
    """
    if reports is None:
        reports = run_reports(scenario, seeds, jobs)
    k = int(sum(bool(criterion(r)) for r in reports))
    n = len(reports)
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95, method="exact")
    return SuccessEstimate(k / n, k, n, float(ci.low), float(ci.high), reports)


def calibrate_threshold(values):
    """Pass threshold ``median + 3 * MAD`` of a calibration sample."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise InvalidInputError("no finite calibration values")
    med = float(np.median(v))
    mad = float(np.median(np.abs(v - med)))
    return med + 3.0 * mad


def format_report(mapping):
    """Flat ``key = value`` text, one entry per line, keys in insertion order."""
    lines = []
    for key, value in mapping.items():
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_report(text):
    out = {}
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
