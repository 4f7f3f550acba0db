import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delay_esc.delayline import DelayLine, check_delays
from delay_esc._validation import InvalidInputError


def filled(dt, max_delay, f, t_end):
    """Line holding samples ``f(k dt)`` up to ``t_end``."""
    line = DelayLine(dt, max_delay)
    for k in range(int(round(t_end / dt)) + 1):
        line.push(f(k * dt))
    return line


def test_constant_history():
    line = filled(0.01, 2.0, lambda t: 1.0, 3.0)
    assert line.value_at_delay(2.0) == 1.0
    assert line.window_integral(2.0) == pytest.approx(2.0, abs=1e-13)


def test_fill_value_before_push():
    line = DelayLine(0.1, 1.0, fill=-3.5)
    assert line.value_at_delay(0.0) == -3.5
    assert line.value_at_delay(1.0) == -3.5
    assert line.window_integral(1.0) == pytest.approx(-3.5, abs=1e-14)


def test_ramp_integral_exact():
    # U(tau) = tau sampled up to t = 3; window [1, 3]
    line = filled(0.01, 2.0, lambda t: t, 3.0)
    assert line.window_integral(2.0) == pytest.approx(4.0, abs=1e-12)


def test_ramp_shift():
    dt, delta = 0.5, 0.25
    line = DelayLine(dt, 3.0)
    for k in range(20):
        line.push(k * delta)
    k = 19
    assert line.value_at_delay(3.0) == (k - 3.0 / dt) * delta
    assert line.value_at_delay(0.0) == k * delta


def test_sinusoid_shift_exact_on_grid():
    dt = 1e-3
    line = DelayLine(dt, 2.0)
    for k in range(5000):
        line.push(np.sin(k * dt))
        if k >= 2000:
            assert line.value_at_delay(2.0) == np.sin((k - 2000) * dt)


def _quad_error(dt):
    line = filled(dt, 1.0, lambda t: t * t, 2.0)
    return abs(line.window_integral(1.0) - 7.0 / 3.0) / (7.0 / 3.0)


def test_quadratic_integral_second_order():
    errs = [_quad_error(dt) for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3)]
    assert _quad_error(1e-3) < 1e-6
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


@pytest.mark.parametrize("delay, msg", [(-0.1, ">= 0"), (0.15, "multiple"), (1.1, "exceeds")])
def test_bad_delay_queries(delay, msg):
    line = DelayLine(0.1, 1.0)
    with pytest.raises(InvalidInputError, match=msg):
        line.value_at_delay(delay)
    with pytest.raises(InvalidInputError):
        line.window_integral(delay)


def test_capacity_and_zero_delay():
    line = DelayLine(1e-3, 0.05)
    assert len(line) == 51
    line.push(2.0)
    assert line.window_integral(0.0) == 0.0
    assert DelayLine(1e-3, 0.0).capacity == 1


@pytest.mark.parametrize(
    "delays, msg",
    [((50.0, 100.0005), "multiple"), ((100.0, 50.0), "ascending"), ((-1.0, 2.0), "nonnegative")],
)
def test_check_delays_rejects(delays, msg):
    with pytest.raises(InvalidInputError, match=msg):
        check_delays(delays, 1e-3)


def test_check_delays_steps():
    np.testing.assert_array_equal(check_delays((0.0, 50.0, 100.0), 1e-3), [0, 50000, 100000])


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=120)


@settings(max_examples=60)
@given(samples, st.integers(0, 40))
def test_transport_integral_identity(values, k):
    line = DelayLine(0.01, 0.4)
    for v in values:
        line.push(v)
    delay = k * 0.01
    assert line.transport_integral(delay) == line.window_integral(delay)
    prof = line.transport_profile(delay)
    assert prof[-1] == line.value_at_delay(0.0)
    assert prof[0] == line.value_at_delay(delay)


@settings(max_examples=60)
@given(samples, st.integers(0, 40))
def test_transport_property(values, k):
    line = DelayLine(0.01, 0.4)
    history = []
    for v in values:
        line.push(v)
        history.append(v)
        if len(history) > k:
            assert line.value_at_delay(k * 0.01) == history[-1 - k]
        assert line.capacity == 41
