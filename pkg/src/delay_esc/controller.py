"""Closed-loop gradient extremum seeking with per-channel input delays.

Two loops share the same measurement and demodulation chain:

* ``classic``: ``d theta_hat / dt = K G_hat``.
* ``predictor``: ``d theta_hat / dt = U`` with the filtered predictor law
  ``dU/dt = -c U + c K (G_hat + H_hat @ I)``, where ``I_i`` is the integral of
  ``U_i`` over its own delay window ``[t - D_i, t]``.

Both demodulate with the phase delayed per channel, ``eta_i(t - D_i)``, so
the demodulation lines up with the delayed plant input.

Each step measures first (``y`` comes from the histories *before* the new
plant input is pushed), then integrates with explicit Euler, then advances
the dither and pushes the new samples.
"""

from dataclasses import dataclass, field

import numpy as np

from . import dither as dz
from ._validation import InvalidInputError, check_positive_scalar, check_vector
from .delayline import DelayLine, check_delays
from .quadmap import evaluate

MODES = ("classic", "predictor")


@dataclass(frozen=True)
class ControllerConfig:
    K: np.ndarray
    c: float = 0.0
    mode: str = "predictor"

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim == 2:
            if np.any(K != np.diag(np.diag(K))):
                raise InvalidInputError("K must be diagonal")
            K = np.diag(K)
        K = check_vector(K, "K")
        if not np.all(K > 0):
            raise InvalidInputError(f"K entries must be > 0, got {K}")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        c = float(self.c)
        if self.mode == "predictor":
            c = check_positive_scalar(self.c, "c")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class SimSettings:
    dt: float = 1e-3
    t_final: float = 500.0
    theta_hat0: tuple = (1.0, 0.0)
    decimation: int = 1
    divergence_factor: float = 100.0
    window_fraction: float = 0.2

    def __post_init__(self):
        check_positive_scalar(self.dt, "dt")
        check_positive_scalar(self.t_final, "t_final", allow_zero=True)
        if not isinstance(self.decimation, (int, np.integer)) or self.decimation < 1:
            raise InvalidInputError(f"decimation must be an integer >= 1, got {self.decimation!r}")
        check_positive_scalar(self.divergence_factor, "divergence_factor")
        if not 0 < self.window_fraction <= 1:
            raise InvalidInputError(f"window_fraction must lie in (0, 1], got {self.window_fraction}")
        object.__setattr__(self, "theta_hat0", tuple(float(v) for v in self.theta_hat0))

    @property
    def steps(self):
        from ._validation import steps_for

        return steps_for(self.t_final, self.dt, "t_final")


@dataclass
class ControllerState:
    theta_hat: np.ndarray
    U: np.ndarray
    theta_history: list
    eta_history: list
    U_history: list
    dither: dz.DitherState
    G_hat: np.ndarray = None
    H_hat: np.ndarray = None
    y: float = np.nan
    k: int = 0
    status: str = "running"
    delays: np.ndarray = field(default=None, repr=False)

    @property
    def t(self):
        return self.dither.t

    @property
    def theta(self):
        """Current (undelayed) plant input ``theta_hat + S(eta)``."""
        return np.array([h.value_at_delay(0.0) for h in self.theta_history])


def init_state(qmap, dparams, delays, dt, theta_hat0, seed):
    """Loop state at ``t = 0`` with pre-filled histories.

    For ``t < 0`` the histories hold ``theta(0)``, ``eta(0)`` and ``U = 0``.
    """
    n = qmap.n
    if dparams.n != n:
        raise InvalidInputError(f"dither has {dparams.n} channels, map has {n}")
    D = check_vector(delays, "delays", n, nonnegative=True)
    check_delays(D, dt)
    theta_hat0 = check_vector(theta_hat0, "theta_hat0", n)
    dstate = dz.initial_state(dparams, seed)
    theta0 = theta_hat0 + dz.signal_S(dstate.eta, dparams)
    Dmax = float(D.max())
    return ControllerState(
        theta_hat=theta_hat0.copy(),
        U=np.zeros(n),
        theta_history=[DelayLine(dt, Dmax, theta0[i]) for i in range(n)],
        eta_history=[DelayLine(dt, Dmax, dstate.eta[i]) for i in range(n)],
        U_history=[DelayLine(dt, Dmax, 0.0) for i in range(n)],
        dither=dstate,
        delays=D,
    )


def plant_output(qmap, theta_history, D):
    """Map output at the channelwise-delayed input ``[theta_i(t - D_i)]``."""
    thD = np.array([h.value_at_delay(d) for h, d in zip(theta_history, D)])
    return evaluate(qmap, thD)


def estimates(y, eta_delayed, params):
    """Gradient and Hessian estimates ``M(eta^D) y`` and ``N(eta^D) y``."""
    return dz.signal_M(eta_delayed, params) * y, dz.signal_N(eta_delayed, params) * y


def _measure(state, qmap, dparams, D):
    y = plant_output(qmap, state.theta_history, D)
    etaD = np.array([h.value_at_delay(d) for h, d in zip(state.eta_history, D)])
    state.y = y
    state.G_hat, state.H_hat = estimates(y, etaD, dparams)


def _push(state, dparams, dt):
    state.dither = dz.advance(state.dither, dparams, dt)
    theta = state.theta_hat + dz.signal_S(state.dither.eta, dparams)
    for i in range(len(theta)):
        state.theta_history[i].push(theta[i])
        state.eta_history[i].push(state.dither.eta[i])
        state.U_history[i].push(state.U[i])
    state.k += 1


def step_classic(state, config, qmap, dparams, D, dt):
    """One explicit-Euler step of ``d theta_hat/dt = K G_hat``.

    On return ``y``, ``G_hat``, ``H_hat`` and ``U = K G_hat`` are the values
    measured at the start of the step; ``theta_hat`` and the histories have
    moved to the next grid time.
    """
    if config.mode != "classic":
        raise InvalidInputError("step_classic needs mode='classic'")
    _measure(state, qmap, dparams, D)
    state.U = config.K * state.G_hat
    state.theta_hat = state.theta_hat + dt * state.U
    _push(state, dparams, dt)
    return state


def step_predictor(state, config, qmap, dparams, D, dt):
    """One explicit-Euler step of the predictor loop.

    ``U`` and ``theta_hat`` on return are the values at the next grid time;
    ``y``, ``G_hat``, ``H_hat`` are the measurements taken at the start.
    A non-finite state sets ``status = "diverged"`` instead of raising.
    """
    if config.mode != "predictor":
        raise InvalidInputError("step_predictor needs mode='predictor'")
    _measure(state, qmap, dparams, D)
    integ = np.array([h.window_integral(d) for h, d in zip(state.U_history, D)])
    Udot = -config.c * state.U + config.c * config.K * (state.G_hat + state.H_hat @ integ)
    state.theta_hat = state.theta_hat + dt * state.U
    state.U = state.U + dt * Udot
    if not (np.all(np.isfinite(state.U)) and np.all(np.isfinite(state.theta_hat))):
        state.status = "diverged"
        return state
    _push(state, dparams, dt)
    return state


STEPPERS = {"classic": step_classic, "predictor": step_predictor}


@dataclass
class Trajectory:
    """Decimated time record of one closed-loop run.

    Arrays are indexed by record; ``theta`` is the plant input before delay,
    ``H_hat`` has shape ``(records, n, n)``.
    """

    t: np.ndarray
    theta: np.ndarray
    theta_hat: np.ndarray
    y: np.ndarray
    U: np.ndarray
    G_hat: np.ndarray
    H_hat: np.ndarray
    eta: np.ndarray
    status: str
    dt: float
    decimation: int
    seed: int = None
    t_stop: float = None

    @property
    def n(self):
        return self.theta.shape[1]

    def __len__(self):
        return self.t.shape[0]

    def columns(self):
        n = self.n
        idx = range(1, n + 1)
        return (
            ["t"]
            + [f"theta_{i}" for i in idx]
            + [f"theta_hat_{i}" for i in idx]
            + ["y"]
            + [f"U_{i}" for i in idx]
            + [f"Ghat_{i}" for i in idx]
            + [f"Hhat_{i}{j}" for i in idx for j in idx]
            + [f"eta_{i}" for i in idx]
        )

    def as_array(self):
        R = len(self)
        return np.column_stack(
            [
                self.t,
                self.theta,
                self.theta_hat,
                self.y,
                self.U,
                self.G_hat,
                self.H_hat.reshape(R, -1),
                self.eta,
            ]
        )

    def to_csv(self, path):
        header = ",".join(self.columns())
        np.savetxt(path, self.as_array(), delimiter=",", header=header, comments="", fmt="%.17g")


CHUNK = 1 << 16


def simulate(qmap, dparams, config, delays, sim, seed):
    """Run the closed loop on the compiled kernel and return its :class:`Trajectory`."""
    from ._kernel import DIVERGED, advance_loop

    state = init_state(qmap, dparams, delays, sim.dt, sim.theta_hat0, seed)
    n = qmap.n
    dt = sim.dt
    steps = sim.steps
    dsteps = check_delays(state.delays, dt)
    cap = int(dsteps.max()) + 1
    capU = cap + 1
    theta_buf = np.empty((cap, n))
    eta_buf = np.empty((cap, n))
    theta_buf[:] = state.theta
    eta_buf[:] = state.dither.eta
    U_buf = np.zeros((capU, n))
    ptr = np.zeros(2, dtype=np.int64)

    R = steps // sim.decimation + 1
    rec = dict(
        t=np.empty(R), theta=np.empty((R, n)), theta_hat=np.empty((R, n)), y=np.empty(R),
        U=np.empty((R, n)), G_hat=np.empty((R, n)), H_hat=np.empty((R, n, n)), eta=np.empty((R, n)),
    )
    theta_hat = state.theta_hat.copy()
    U = np.zeros(n)
    wiener = state.dither.wiener.copy()
    integ = np.zeros(n)
    y_limit = sim.divergence_factor * (abs(qmap.y_star) + 1.0)
    predictor = config.mode == "predictor"
    H = np.ascontiguousarray(qmap.hessian)
    ts = np.ascontiguousarray(qmap.theta_star)

    k = 0
    r = 0
    status = 0
    while k <= steps:
        updates = min(CHUNK, steps - k)
        k1 = k + updates if k + updates < steps else steps + 1
        dW = dz.wiener_increments(state.dither, dparams, dt, updates) if updates else np.zeros((1, n))
        k, status, r = advance_loop(
            k, k1, steps, dW, dt, dparams.omega, dparams.a, config.K, config.c, predictor,
            qmap.y_star, ts, H, dsteps, y_limit,
            theta_hat, U, wiener, integ, theta_buf, eta_buf, U_buf, ptr,
            sim.decimation, r, rec["t"], rec["theta"], rec["theta_hat"], rec["y"],
            rec["U"], rec["G_hat"], rec["H_hat"], rec["eta"],
        )
        if status == DIVERGED:
            break
    diverged = status == DIVERGED
    return Trajectory(
        **{key: v[:r] for key, v in rec.items()},
        status="diverged" if diverged else "completed",
        dt=dt,
        decimation=sim.decimation,
        seed=seed,
        t_stop=min(k, steps) * dt,
    )


def run(scenario, seed=None):
    """Simulate a :class:`~delay_esc.config.ScenarioConfig`.

    ``seed`` overrides the scenario's dither seed.
    """
    seed = scenario.seed if seed is None else seed
    return simulate(scenario.qmap, scenario.dither, scenario.controller, scenario.delays, scenario.sim, seed)
