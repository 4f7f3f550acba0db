"""Stochastic dither: circle-Wiener phases and the S, M, N signals.

Each channel ``i`` carries a Wiener process ``W^i`` run on the scaled clock
``omega * t`` and a phase ``eta_i = omega * pi * (1 + sin(W^i))``. Wiener
increments are drawn with Euler-Maruyama, ``dW ~ Normal(0, omega * dt)``.

Randomness comes from numpy's PCG64 bit generator. The master seed is split
into one child stream per channel with ``SeedSequence(seed).spawn(n)``, so a
given ``(seed, dt)`` reproduces the phase trajectories bit for bit whether
increments are drawn one at a time or in blocks.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import InvalidInputError, check_positive_scalar, check_vector


@dataclass(frozen=True)
class DitherParams:
    a: np.ndarray
    omega: float

    def __post_init__(self):
        a = check_vector(self.a, "a")
        if not np.all(a > 0):
            raise InvalidInputError(f"dither amplitudes must be > 0, got {a}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "omega", check_positive_scalar(self.omega, "omega"))

    @property
    def n(self):
        return self.a.shape[0]


@dataclass
class DitherState:
    """Current Wiener values, phases and the per-channel generators.

    The generators are shared (not copied) by the state returned from
    :func:`advance`; one state lineage belongs to one simulation run.
    """

    wiener: np.ndarray
    eta: np.ndarray
    streams: list = field(repr=False)
    t: float = 0.0


def make_streams(seed, n):
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def phase(wiener, omega):
    return omega * np.pi * (1.0 + np.sin(wiener))


def initial_state(params, seed):
    """Dither state at ``t = 0`` with ``W = 0``, hence ``eta = omega * pi``."""
    w = np.zeros(params.n)
    return DitherState(wiener=w, eta=phase(w, params.omega), streams=make_streams(seed, params.n))


def wiener_increments(state, params, dt, steps):
    """Draw ``steps`` increments per channel, shape ``(steps, n)``.

    Consumes the same random numbers, in the same order, as ``steps`` calls
    to :func:`advance`.
    """
    scale = np.sqrt(params.omega * dt)
    out = np.empty((steps, params.n))
    for i, g in enumerate(state.streams):
        out[:, i] = g.standard_normal(steps)
    out *= scale
    return out


def advance(state, params, dt):
    dt = check_positive_scalar(dt, "dt")
    if len(state.streams) != params.n:
        raise InvalidInputError("dither state and params disagree on channel count")
    dw = wiener_increments(state, params, dt, 1)[0]
    w = state.wiener + dw
    return replace(state, wiener=w, eta=phase(w, params.omega), t=state.t + dt)


def _eta(eta, params):
    return check_vector(eta, "eta", params.n)


def signal_S(eta, params):
    return params.a * np.sin(_eta(eta, params))


def signal_M(eta, params):
    return (2.0 / params.a) * np.sin(_eta(eta, params))


def signal_N(eta, params):
    """Hessian demodulation matrix.

    Diagonal ``16/a_i^2 (sin^2 eta_i - 1/2)``, off-diagonal
    ``4/(a_i a_j) sin eta_i sin eta_j``.
    """
    s = np.sin(_eta(eta, params))
    a = params.a
    N = 4.0 * np.outer(s / a, s / a)
    np.fill_diagonal(N, 16.0 / a**2 * (s**2 - 0.5))
    return N


def invariant_moments(omega):
    """``E[sin^2 eta]`` and ``E[sin^4 eta]`` under the stationary law of ``eta``.

    ``W mod 2 pi`` is uniform in the long run, so the expectations are
    Bessel-function closed forms. For a deterministic sinusoidal phase the
    values would be exactly 1/2 and 3/8.
    """
    from scipy.special import j0

    x = 2.0 * np.pi * omega
    c2 = np.cos(x) * j0(x)
    c4 = np.cos(2 * x) * j0(2 * x)
    return 0.5 - 0.5 * c2, 0.375 - 0.5 * c2 + 0.125 * c4
