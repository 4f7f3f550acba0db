"""Sampled delay lines.

A :class:`DelayLine` keeps the last ``D_max / dt + 1`` samples of a scalar
signal. It answers two questions about the stored history: the value
``D_i`` time units ago, and the trapezoidal integral over the most recent
``D_i`` time units. Read as a transport equation on ``x in [0, 1]`` with
inflow at ``x = 1``, the stored samples are the state
``u(x, t) = U(t - D_i (1 - x))`` on the grid ``x_j = j / k``,
``k = D_i / dt``.
"""

import numpy as np

from ._validation import InvalidInputError, check_positive_scalar, check_vector, steps_for


def check_delays(delays, dt):
    """Validate a delay vector against ``dt`` and return the step counts.

    Delays must be nonnegative, sorted ascending and integer multiples of
    ``dt``; off-grid values are rejected rather than rounded.
    """
    D = check_vector(delays, "delays", nonnegative=True)
    if np.any(np.diff(D) < 0):
        raise InvalidInputError(f"delays must be sorted ascending, got {D.tolist()}")
    return np.array([steps_for(d, dt, f"delays[{i}]") for i, d in enumerate(D)], dtype=np.int64)


def _trapezoid(values, width):
    if values.shape[0] < 2:
        return 0.0
    return width * (float(np.sum(values)) - 0.5 * (values[0] + values[-1]))


class DelayLine:
    """Ring buffer of scalar samples, newest last.

    Parameters
    ----------
    dt : float
        Sample spacing.
    max_delay : float
        Longest delay that will be queried; must be a multiple of ``dt``.
    fill : float
        Value reported for times before the first push.
    """

    def __init__(self, dt, max_delay, fill=0.0):
        self.dt = check_positive_scalar(dt, "dt")
        max_delay = check_positive_scalar(max_delay, "max_delay", allow_zero=True)
        self.max_delay = max_delay
        self.capacity = steps_for(max_delay, self.dt, "max_delay") + 1
        self._buf = np.full(self.capacity, float(fill))
        self._head = self.capacity - 1
        self.count = 0

    def __len__(self):
        return self.capacity

    def push(self, sample):
        self._head = (self._head + 1) % self.capacity
        self._buf[self._head] = sample
        self.count += 1
        return self

    def _steps(self, delay):
        if delay < 0:
            raise InvalidInputError(f"delay must be >= 0, got {delay}")
        k = steps_for(delay, self.dt, "delay")
        if k > self.capacity - 1:
            raise InvalidInputError(f"delay {delay} exceeds buffer span {self.max_delay}")
        return k

    def value_at_delay(self, delay):
        k = self._steps(delay)
        return float(self._buf[(self._head - k) % self.capacity])

    def window(self, delay):
        """Samples covering ``[t - delay, t]`` in time order."""
        k = self._steps(delay)
        idx = np.arange(self._head - k, self._head + 1) % self.capacity
        return self._buf[idx]

    def window_integral(self, delay):
        """Trapezoidal integral of the signal over the last ``delay`` time units."""
        k = self._steps(delay)
        if k == 0:
            return 0.0
        return _trapezoid(self.window(delay), delay / k)

    def transport_profile(self, delay):
        """Transport state ``u(x_j)`` on ``x_j = j / k``, ``j = 0..k``."""
        k = self._steps(delay)
        # node j lags the inflow boundary by (k - j) samples
        lags = k - np.arange(k + 1)
        return self._buf[(self._head - lags) % self.capacity]

    def transport_integral(self, delay):
        """``integral_0^1 delay * u(x) dx`` on the transport grid.

        Uses spacing ``1/k`` on ``x``, so each trapezoid weight times ``delay``
        equals ``delay / k``.
        """
        k = self._steps(delay)
        if k == 0:
            return 0.0
        return _trapezoid(self.transport_profile(delay), delay / k)
