"""Compiled inner loop for long closed-loop runs.

Mirrors ``controller.step_classic`` / ``controller.step_predictor`` operation
for operation; ``tests/test_controller.py`` checks the two paths agree.
"""

import numpy as np
from numba import njit

RUNNING = 0
DIVERGED = 1


@njit(cache=True)
def _measure(theta_buf, eta_buf, head, cap, dsteps, y_star, theta_star, H, a, thD, etaD, G, Hh):
    n = thD.shape[0]
    for i in range(n):
        j = (head - dsteps[i]) % cap
        thD[i] = theta_buf[j, i] - theta_star[i]
        etaD[i] = eta_buf[j, i]
    q = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += H[i, j] * thD[j]
        q += thD[i] * s
    y = y_star + 0.5 * q
    for i in range(n):
        si = np.sin(etaD[i])
        G[i] = 2.0 / a[i] * si * y
        for j in range(n):
            if i == j:
                Hh[i, i] = 16.0 / a[i] ** 2 * (si * si - 0.5) * y
            else:
                Hh[i, j] = 4.0 / (a[i] * a[j]) * si * np.sin(etaD[j]) * y
    return y


@njit(cache=True)
def advance_loop(
    k0, k1, total_steps, dW, dt, omega, a, K, c, predictor,
    y_star, theta_star, H, dsteps, y_limit,
    theta_hat, U, wiener, integ,
    theta_buf, eta_buf, U_buf, ptr,
    decimation, rec_idx, rec_t, rec_theta, rec_theta_hat, rec_y, rec_U, rec_G, rec_H, rec_eta,
):
    """Advance the loop over global steps ``k0 <= k < k1``.

    ``ptr[0]`` is the ring head shared by all buffers. Step ``k`` measures at
    ``t_k``, records if ``k % decimation == 0`` and, when ``k < total_steps``,
    integrates to ``t_{k+1}`` using ``dW[k - k0]``. Returns ``(k_reached,
    status, records_written)``.
    """
    n = a.shape[0]
    cap = theta_buf.shape[0]
    capU = U_buf.shape[0]
    thD = np.empty(n)
    etaD = np.empty(n)
    G = np.empty(n)
    Hh = np.empty((n, n))
    Udot = np.empty(n)
    r = rec_idx
    for k in range(k0, k1):
        head = ptr[0]
        y = _measure(theta_buf, eta_buf, head, cap, dsteps, y_star, theta_star, H, a, thD, etaD, G, Hh)
        if not predictor:
            for i in range(n):
                U[i] = K[i] * G[i]
        finite = np.isfinite(y)
        for i in range(n):
            if not (np.isfinite(U[i]) and np.isfinite(theta_hat[i])):
                finite = False
        if (not finite) or abs(y) > y_limit:
            return k, DIVERGED, r
        if k % decimation == 0:
            rec_t[r] = k * dt
            for i in range(n):
                rec_theta[r, i] = theta_buf[head, i]
                rec_theta_hat[r, i] = theta_hat[i]
                rec_U[r, i] = U[i]
                rec_G[r, i] = G[i]
                rec_eta[r, i] = eta_buf[head, i]
                for j in range(n):
                    rec_H[r, i, j] = Hh[i, j]
            rec_y[r] = y
            r += 1
        if k >= total_steps:
            continue
        if predictor:
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += Hh[i, j] * integ[j]
                Udot[i] = -c * U[i] + c * K[i] * (G[i] + s)
            for i in range(n):
                theta_hat[i] += dt * U[i]
                U[i] += dt * Udot[i]
        else:
            for i in range(n):
                theta_hat[i] += dt * U[i]
        new = (head + 1) % cap
        hu = ptr[1]
        newu = (hu + 1) % capU
        for i in range(n):
            wiener[i] += dW[k - k0, i]
            eta = omega * np.pi * (1.0 + np.sin(wiener[i]))
            eta_buf[new, i] = eta
            theta_buf[new, i] = theta_hat[i] + a[i] * np.sin(eta)
            if predictor:
                U_buf[newu, i] = U[i]
                d = dsteps[i]
                if d > 0:
                    integ[i] += 0.5 * dt * (U[i] + U_buf[hu, i]) - 0.5 * dt * (
                        U_buf[(newu - d) % capU, i] + U_buf[(hu - d) % capU, i]
                    )
        ptr[0] = new
        ptr[1] = newu
    return k1, RUNNING, r
