"""scikit-learn style front ends.

The estimators keep hyperparameters in ``__init__`` and results in trailing
underscore attributes, so ``get_params``/``set_params``/``clone`` and
``ParameterGrid`` sweeps work as usual::

    from sklearn.model_selection import ParameterGrid
    for params in ParameterGrid({"c": [5.0, 20.0], "seed": [0, 1]}):
        esc = ExtremumSeeker(delays=(50.0, 100.0), t_final=5000.0, **params).fit(qmap)
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .averaged import simulate_averaged
from .controller import ControllerConfig, SimSettings, simulate
from .dither import DitherParams
from .metrics import residuals
from .quadmap import StaticQuadraticMap


class ExtremumSeeker(BaseEstimator):
    """Stochastic gradient extremum seeker for a map behind input delays.

    Parameters
    ----------
    mode : {"predictor", "classic"}
    a : sequence of float
        Dither amplitudes, one per input.
    omega : float
        Dither frequency.
    K : sequence of float
        Diagonal integrator gains.
    c : float
        Predictor filter gain (ignored in classic mode).
    delays : sequence of float
        Per-input delays, ascending, multiples of ``dt``.
    dt, t_final : float
        Step and horizon.
    theta_hat0 : sequence of float
        Initial estimate.
    decimation : int
        Keep every ``decimation``-th step in ``trajectory_``.
    divergence_factor : float
        Stop when ``|y| > divergence_factor * (|y_star| + 1)``.
    window_fraction : float
        Final fraction of the horizon used by ``report_``.
    seed : int

    Attributes
    ----------
    trajectory_ : Trajectory
    report_ : ConvergenceReport
    theta_hat_ : ndarray
        Final estimate of the optimizer.
    hessian_ : ndarray
        Tail average of the Hessian estimate.
    status_ : str
    """

    def __init__(
        self,
        mode="predictor",
        a=(0.22, 0.22),
        omega=5.0,
        K=(0.005, 0.005),
        c=20.0,
        delays=(0.0, 0.0),
        dt=1e-3,
        t_final=500.0,
        theta_hat0=(1.0, 0.0),
        decimation=100,
        divergence_factor=100.0,
        window_fraction=0.2,
        seed=0,
    ):
        self.mode = mode
        self.a = a
        self.omega = omega
        self.K = K
        self.c = c
        self.delays = delays
        self.dt = dt
        self.t_final = t_final
        self.theta_hat0 = theta_hat0
        self.decimation = decimation
        self.divergence_factor = divergence_factor
        self.window_fraction = window_fraction
        self.seed = seed

    @classmethod
    def from_scenario(cls, scenario):
        s = scenario.sim
        return cls(
            mode=scenario.controller.mode,
            a=tuple(scenario.dither.a),
            omega=scenario.dither.omega,
            K=tuple(scenario.controller.K),
            c=scenario.controller.c,
            delays=tuple(scenario.delays),
            dt=s.dt,
            t_final=s.t_final,
            theta_hat0=s.theta_hat0,
            decimation=s.decimation,
            divergence_factor=s.divergence_factor,
            window_fraction=s.window_fraction,
            seed=scenario.seed,
        )

    def fit(self, qmap, y=None):
        """Run the closed loop against ``qmap`` (a :class:`StaticQuadraticMap`)."""
        if not isinstance(qmap, StaticQuadraticMap):
            raise TypeError(f"fit expects a StaticQuadraticMap, got {type(qmap).__name__}")
        dparams = DitherParams(self.a, self.omega)
        ctrl = ControllerConfig(self.K, self.c, self.mode)
        sim = SimSettings(
            dt=self.dt,
            t_final=self.t_final,
            theta_hat0=self.theta_hat0,
            decimation=self.decimation,
            divergence_factor=self.divergence_factor,
            window_fraction=self.window_fraction,
        )
        traj = simulate(qmap, dparams, ctrl, self.delays, sim, self.seed)
        self.trajectory_ = traj
        self.report_ = residuals(traj, qmap, self.window_fraction)
        self.theta_hat_ = traj.theta_hat[-1].copy()
        self.hessian_ = self.report_.H_hat_tail_average
        self.status_ = traj.status
        self.n_features_in_ = qmap.n
        return self

    def score(self, qmap, y=None):
        """Negative final-window mean of ``|y - y_star|`` (higher is better)."""
        check_is_fitted(self, "report_")
        return -residuals(self.trajectory_, qmap, self.window_fraction).y_residual


class AveragedAnalyzer(BaseEstimator):
    """Averaged predictor loop and its stability certificate.

    ``fit(H, theta_tilde0)`` integrates the averaged loop and stores
    ``trajectory_``, ``c_star_``, ``decay_rate_`` (slope of ``log V`` over the
    second half) and ``monotone_violation_`` (largest record-to-record
    increase of ``V``).
    """

    def __init__(self, K=(0.005, 0.005), c=20.0, delays=(50.0, 100.0), m=200, dt=0.01, t_final=2000.0, record_every=1.0):
        self.K = K
        self.c = c
        self.delays = delays
        self.m = m
        self.dt = dt
        self.t_final = t_final
        self.record_every = record_every

    def fit(self, H, theta_tilde0):
        traj = simulate_averaged(
            np.asarray(H, dtype=float), np.asarray(self.K, dtype=float), self.c, np.asarray(self.delays, dtype=float),
            theta_tilde0, m=self.m, dt=self.dt, t_final=self.t_final, record_every=self.record_every,
        )
        self.trajectory_ = traj
        self.c_star_ = traj.c_star
        self.decay_rate_ = traj.decay_rate("V")
        self.monotone_violation_ = traj.monotone_violation()
        return self
