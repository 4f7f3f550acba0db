"""Deterministic averaged loop on a discretized transport grid.

With the demodulated signals replaced by their averages the predictor loop
becomes

    d theta_tilde / dt = u(0, t)
    u_t = D^{-1} u_x on (0, 1),  u(1, t) = U(t)
    dU/dt = -c U + c K H (theta_tilde + integral_0^1 D u dx)

Each channel's transport state lives on ``m + 1`` uniform nodes and moves
toward ``x = 0``; it is advanced with first-order upwinding and explicit
Euler. Channels with zero delay have no transport state: their row is held
equal to ``U``.

Stability quantities: the reduction variable
``vartheta = H (theta_tilde + integral D u)``, ``U_tilde = U - K vartheta``,
the Lyapunov functional ``V`` and the sufficient gain threshold ``c_star``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import (
    InvalidInputError,
    check_negative_definite,
    check_positive_scalar,
    check_square,
    check_vector,
)


@dataclass
class AveragedState:
    theta_tilde_av: np.ndarray
    U_av: np.ndarray
    u_grid: np.ndarray

    @property
    def m(self):
        return self.u_grid.shape[1] - 1

    def copy(self):
        return AveragedState(self.theta_tilde_av.copy(), self.U_av.copy(), self.u_grid.copy())


def initial_state(theta_tilde0, m):
    """State with zero control history: ``U = 0`` and ``u = 0``."""
    theta_tilde0 = check_vector(theta_tilde0, "theta_tilde0")
    if m < 1:
        raise InvalidInputError(f"grid size m must be >= 1, got {m}")
    n = theta_tilde0.shape[0]
    return AveragedState(theta_tilde0.copy(), np.zeros(n), np.zeros((n, m + 1)))


def _trapezoid_weights(m):
    w = np.full(m + 1, 1.0 / m)
    w[0] = w[-1] = 0.5 / m
    return w


def spatial_integral(u_grid, D):
    """``integral_0^1 D u dx`` per channel (trapezoid)."""
    return D * (u_grid @ _trapezoid_weights(u_grid.shape[1] - 1))


def check_cfl(D, dt, m):
    positive = D[D > 0]
    if positive.size and dt > positive.min() / m * (1 + 1e-12):
        raise InvalidInputError(
            f"dt={dt} violates the upwind CFL limit min(D)/m={positive.min() / m}"
        )


def step_averaged(state, H, K, c, D, dt):
    """One explicit step of the averaged loop; returns a new state."""
    n = state.theta_tilde_av.shape[0]
    H = check_square(H, "H", n)
    K = check_vector(np.diag(K) if np.ndim(K) == 2 else K, "K", n)
    D = check_vector(D, "D", n, nonnegative=True)
    check_cfl(D, dt, state.m)
    return _step(state, H, K, c, D, dt, _trapezoid_weights(state.m))


def _step(state, H, K, c, D, dt, w):
    m = state.m
    u = state.u_grid
    integ = D * (u @ w)
    Udot = -c * state.U_av + c * K * (H @ (state.theta_tilde_av + integ))
    theta_new = state.theta_tilde_av + dt * u[:, 0]
    U_new = state.U_av + dt * Udot
    moving = D > 0
    nu = np.where(moving, dt * m / np.where(moving, D, 1.0), 0.0)
    u_new = np.empty_like(u)
    u_new[:, :m] = u[:, :m] + nu[:, None] * (u[:, 1:] - u[:, :m])
    u_new[~moving, :m] = U_new[~moving, None]
    u_new[:, m] = U_new
    return AveragedState(theta_new, U_new, u_new)


def c_star(H, K):
    """Sufficient filter gain ``1 + lambda_max(-HKHKH) / lambda_min(-H)``."""
    H = check_negative_definite(H, "H")
    K = np.asarray(K, dtype=float)
    if K.ndim == 1:
        K = np.diag(K)
    K = check_square(K, "K", H.shape[0])
    if np.any(K != np.diag(np.diag(K))) or np.any(np.diag(K) <= 0):
        raise InvalidInputError("K must be diagonal with positive entries")
    P = -H @ K @ H @ K @ H
    P = 0.5 * (P + P.T)
    lam_max = _eigh_checked(P)[-1]
    lam_min = _eigh_checked(-H)[0]
    return float(1.0 + lam_max / lam_min)


def _eigh_checked(A, tol=1e-10):
    w, v = np.linalg.eigh(A)
    resid = np.max(np.abs(A @ v - v * w)) if A.size else 0.0
    if resid > tol * max(1.0, np.max(np.abs(w))):
        raise ArithmeticError(f"eigendecomposition residual {resid:.3e} exceeds tolerance")
    return w


def reduction_transform(theta_tilde_av, u_grid, H, D):
    """``vartheta = H (theta_tilde + integral_0^1 D u dx)``."""
    return np.asarray(H) @ (np.asarray(theta_tilde_av) + spatial_integral(np.asarray(u_grid), np.asarray(D)))


def auxiliary_U(U_av, vartheta, K):
    K = np.diag(K) if np.ndim(K) == 2 else np.asarray(K)
    return np.asarray(U_av) - K * np.asarray(vartheta)


def lyapunov_V(state, H, K, D):
    """Lyapunov functional of the averaged loop.

    ``V = vartheta^T K vartheta
    + lambda_min(-H)/4 * integral_0^1 (1 + x) u^T D u dx
    + 1/2 U_tilde^T (-H) U_tilde``.
    """
    H = check_negative_definite(H, "H")
    Kv = np.diag(K) if np.ndim(K) == 2 else np.asarray(K, dtype=float)
    D = np.asarray(D, dtype=float)
    vt = reduction_transform(state.theta_tilde_av, state.u_grid, H, D)
    Ut = auxiliary_U(state.U_av, vt, Kv)
    lam = np.linalg.eigvalsh(-H)[0]
    m = state.m
    x = np.linspace(0.0, 1.0, m + 1)
    wx = _trapezoid_weights(m) * (1.0 + x)
    transport = float(np.sum(D[:, None] * state.u_grid**2 * wx))
    return float(vt @ (Kv * vt)) + 0.25 * lam * transport + 0.5 * float(Ut @ (-H) @ Ut)


def psi(state, D):
    """Norm ``sum_i theta_i^2 + integral_{t-D_i}^t U_i^2 + U_i^2`` on the grid."""
    D = np.asarray(D, dtype=float)
    w = _trapezoid_weights(state.m)
    window = D * ((state.u_grid**2) @ w)
    return float(np.sum(state.theta_tilde_av**2) + np.sum(window) + np.sum(state.U_av**2))


def sandwich_norm(state, H, K, D):
    """``|theta_tilde|^2 + integral_0^1 |u|^2 dx + |U_tilde|^2``."""
    vt = reduction_transform(state.theta_tilde_av, state.u_grid, H, D)
    Ut = auxiliary_U(state.U_av, vt, K)
    w = _trapezoid_weights(state.m)
    return float(
        state.theta_tilde_av @ state.theta_tilde_av + np.sum((state.u_grid**2) @ w) + Ut @ Ut
    )


def _state_from_vector(z, n, m):
    theta = z[:n]
    interior = z[n : n + n * m].reshape(n, m)
    U = z[n + n * m :]
    u = np.concatenate([interior, U[:, None]], axis=1)
    return AveragedState(theta, U, u)


def sandwich_bounds(H, K, D, m):
    """Extreme ratios ``V / sandwich_norm`` over all discrete states.

    Both are quadratic forms in ``z = (theta_tilde, interior u nodes, U)``, so
    the ratio range is the generalized eigenvalue range of the pair.
    """
    H = check_negative_definite(H, "H")
    n = H.shape[0]
    D = check_vector(D, "D", n, nonnegative=True)
    dim = n + n * m + n
    E = np.eye(dim)
    P = np.empty((dim, dim))
    B = np.empty((dim, dim))
    # columns of the forms via polarization on basis vectors
    qv = np.array([lyapunov_V(_state_from_vector(E[i], n, m), H, K, D) for i in range(dim)])
    qb = np.array([sandwich_norm(_state_from_vector(E[i], n, m), H, K, D) for i in range(dim)])
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                P[i, i], B[i, i] = qv[i], qb[i]
            else:
                s = _state_from_vector(E[i] + E[j], n, m)
                P[i, j] = P[j, i] = 0.5 * (lyapunov_V(s, H, K, D) - qv[i] - qv[j])
                B[i, j] = B[j, i] = 0.5 * (sandwich_norm(s, H, K, D) - qb[i] - qb[j])
    w = linalg.eigh(P, B, eigvals_only=True)
    return float(w[0]), float(w[-1])


@dataclass
class AveragedTrajectory:
    t: np.ndarray
    theta_tilde: np.ndarray
    U: np.ndarray
    vartheta: np.ndarray
    U_tilde: np.ndarray
    V: np.ndarray
    Psi: np.ndarray
    c: float
    c_star: float

    def decay_rate(self, quantity="V"):
        return fit_decay_rate(self.t, getattr(self, quantity))

    def monotone_violation(self):
        """Largest increase of ``V`` between consecutive records."""
        if self.V.shape[0] < 2:
            return 0.0
        return float(max(0.0, np.max(np.diff(self.V))))

    def columns(self):
        n = self.theta_tilde.shape[1]
        idx = range(1, n + 1)
        return (
            ["t"]
            + [f"theta_tilde_{i}" for i in idx]
            + [f"U_{i}" for i in idx]
            + [f"vartheta_{i}" for i in idx]
            + [f"U_tilde_{i}" for i in idx]
            + ["V", "Psi"]
        )

    def to_csv(self, path):
        data = np.column_stack([self.t, self.theta_tilde, self.U, self.vartheta, self.U_tilde, self.V, self.Psi])
        np.savetxt(path, data, delimiter=",", header=",".join(self.columns()), comments="", fmt="%.17g")


def fit_decay_rate(t, values, start_fraction=0.5):
    """Least-squares slope of ``log(values)`` over the tail of the horizon.

    Returns the slope (negative for decay).
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = t >= t[0] + start_fraction * (t[-1] - t[0])
    sel &= v > 0
    if sel.sum() < 2:
        raise InvalidInputError("not enough positive samples to fit a decay rate")
    slope, _ = np.polyfit(t[sel], np.log(v[sel]), 1)
    return float(slope)


def simulate_averaged(H, K, c, D, theta_tilde0, m=200, dt=None, t_final=2000.0, record_every=None):
    """Integrate the averaged loop and record the stability quantities.

    ``dt`` defaults to the smaller of the CFL limit and ``0.1 / c``; an
    explicit ``dt`` must satisfy the CFL limit and ``c * dt < 2``.
    ``record_every`` is a time interval; by default about 2000 records.
    """
    H = check_negative_definite(H, "H")
    n = H.shape[0]
    Kv = np.diag(K) if np.ndim(K) == 2 else check_vector(K, "K", n, positive=True)
    D = check_vector(D, "D", n, nonnegative=True)
    c = check_positive_scalar(c, "c")
    if dt is None:
        limits = [0.1 / c]
        if np.any(D > 0):
            limits.append(D[D > 0].min() / m)
        dt = min(limits)
    dt = check_positive_scalar(dt, "dt")
    check_cfl(D, dt, m)
    if c * dt >= 2.0:
        raise InvalidInputError(f"c * dt = {c * dt} must be < 2 for a stable explicit filter update")
    steps = int(round(t_final / dt))
    every = max(1, int(round((record_every if record_every else t_final / 2000) / dt)))
    state = initial_state(theta_tilde0, m)
    cs = c_star(H, Kv)

    rows = []

    def record(k, s):
        vt = reduction_transform(s.theta_tilde_av, s.u_grid, H, D)
        rows.append((k * dt, s.theta_tilde_av.copy(), s.U_av.copy(), vt, auxiliary_U(s.U_av, vt, Kv),
                     lyapunov_V(s, H, Kv, D), psi(s, D)))

    record(0, state)
    w = _trapezoid_weights(m)
    for k in range(1, steps + 1):
        state = _step(state, H, Kv, c, D, dt, w)
        if k % every == 0:
            record(k, state)
    t, th, U, vt, Ut, V, P = zip(*rows)
    return AveragedTrajectory(
        t=np.array(t), theta_tilde=np.array(th), U=np.array(U), vartheta=np.array(vt),
        U_tilde=np.array(Ut), V=np.array(V), Psi=np.array(P), c=c, c_star=cs,
    )
