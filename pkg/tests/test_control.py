import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.signal import firwin

from autoaim.control import (AxisPair, FirFilter, GimbalCommand, PidFfController, aim_to_command,
                             design_lowpass, fir_step, identity_fir, offset_to_angle, pid_step)
from autoaim.geometry import CameraModel
from autoaim.simharness import GimbalPlant, settling_time, step_response


# -- FIR ----------------------------------------------------------------------

@given(st.lists(st.floats(-1e6, 1e6), max_size=50))
def test_identity_filter_passes_input(xs):
    f = identity_fir()
    assert [fir_step(f, x) for x in xs] == xs


def test_two_tap_average():
    y = FirFilter([0.5, 0.5]).run([1, 1, 1, 1])
    assert y.tolist() == [0.5, 1.0, 1.0, 1.0]


def test_zero_in_zero_out():
    f = design_lowpass()
    assert not np.any(f.run(np.zeros(100)))


def test_reset_clears_delay_line():
    f = FirFilter([0.5, 0.5])
    f.step(4.0)
    f.reset()
    assert f.step(0.0) == 0.0


def test_fir_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        FirFilter([])
    with pytest.raises(ValueError):
        FirFilter([1.0, math.nan])


@pytest.mark.parametrize("order,cutoff", [(2, 0.1), (8, 0.1), (8, 0.15), (16, 0.3), (30, 0.05)])
def test_design_matches_reference_window_method(order, cutoff):
    # scipy expresses the cutoff relative to Nyquist (0.5 cycles/sample)
    ref = firwin(order + 1, 2 * cutoff, window="hamming")
    assert np.allclose(design_lowpass(order, cutoff).h, ref, atol=1e-12)


@given(st.integers(1, 20).map(lambda k: 2 * k), st.floats(0.01, 0.49))
def test_design_symmetric_unit_dc(order, cutoff):
    h = design_lowpass(order, cutoff).h
    assert h.size == order + 1
    assert np.array_equal(h, h[::-1])
    assert abs(h.sum() - 1.0) <= 1e-9


def test_design_rejects_invalid():
    for order, cutoff in [(3, 0.1), (0, 0.1), (8, 0.0), (8, 0.5)]:
        with pytest.raises(ValueError):
            design_lowpass(order, cutoff)


def _amplitude(freq, order=8, cutoff=0.1):
    f = design_lowpass(order, cutoff)
    y = f.run(np.sin(2 * np.pi * freq * np.arange(600)))
    return np.max(np.abs(y[100:]))


def test_lowpass_attenuates_high_frequency():
    assert _amplitude(0.02) / _amplitude(0.4) >= 10.0


seqs = arrays(float, 40, elements=st.floats(-100, 100))


@given(seqs, seqs, st.floats(-10, 10), st.floats(-10, 10))
def test_fir_linearity(x, z, a, b):
    h = design_lowpass(8, 0.15).h
    lhs = FirFilter(h).run(a * x + b * z)
    rhs = a * FirFilter(h).run(x) + b * FirFilter(h).run(z)
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(seqs, st.lists(st.floats(-2, 2), min_size=1, max_size=12))
def test_fir_bounded_input_bounded_output(x, h):
    M = float(np.max(np.abs(x))) if x.size else 0.0
    y = FirFilter(h).run(x)
    assert np.all(np.abs(y) <= M * np.sum(np.abs(h)) + 1e-9)


# -- PID ----------------------------------------------------------------------

def test_zero_gains_zero_output():
    c = PidFfController(0, 0, 0, 0)
    rng = np.random.default_rng(0)
    for sp, m, F in rng.normal(0, 5, size=(50, 3)):
        assert pid_step(c, sp, m, F, 0.02) == 0.0


def test_proportional_increment():
    c = PidFfController(1, 0, 0, 0)
    assert pid_step(c, 0, 0, 0, 0.02) == 0.0
    assert pid_step(c, 1, 0, 0, 0.02) == 1.0


def test_rate_limit_clamps():
    c = PidFfController(10, 0, 0, 0, rate_limit=5)
    pid_step(c, 0, 0, 0, 1.0)
    assert pid_step(c, 100, 0, 0, 1.0) == 5.0
    assert c.output == 5.0


def test_discrete_terms():
    c = PidFfController(Kp=2, Ki=3, Kd=0.5, Kf=0, rate_limit=1e9)
    dt = 0.1
    es = [1.0, 3.0, 2.0]
    prev = [0.0, 0.0]
    for e in es:
        du = c.step(e, 0.0, 0.0, dt)
        want = 2 * (e - prev[-1]) + 3 * e * dt + 0.5 * (e - 2 * prev[-1] + prev[-2]) / dt
        assert du == pytest.approx(want, rel=1e-12)
        prev.append(e)


def test_feedforward_uses_second_difference_above_threshold():
    c = PidFfController(0, 0, 0, Kf=2.0, rate_limit=1e9, enhancement_threshold=0.05)
    dt = 0.1
    assert c.step(0, 0, 1.0, dt) == 0.0          # history primed with the first value
    assert c.step(0, 0, 1.0, dt) == 0.0
    assert c.step(0, 0, 1.04, dt) == 0.0         # |ddF| = 0.04 below threshold
    # F history now 1.0, 1.04; next 1.2 gives ddF = 1.2 - 2.08 + 1.0 = 0.12
    assert c.step(0, 0, 1.2, dt) == pytest.approx(2.0 * 0.12 / dt)


@given(st.floats(-100, 100), st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_constant_feedforward_contributes_nothing(F, errs):
    with_ff = PidFfController(1, 0.5, 0.1, Kf=5, rate_limit=1e9)
    without = PidFfController(1, 0.5, 0.1, Kf=0, rate_limit=1e9)
    for e in errs:
        assert with_ff.step(e, 0, F, 0.02) == without.step(e, 0, 0, 0.02)


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3),
                          st.floats(1e-4, 1.0)), min_size=1, max_size=30),
       st.tuples(*[st.floats(0, 100)] * 4), st.floats(0.01, 100))
def test_increment_never_exceeds_rate_limit(steps, gains, rate):
    c = PidFfController(*gains, rate_limit=rate)
    for sp, m, F, dt in steps:
        assert abs(c.step(sp, m, F, dt)) <= rate * dt * (1 + 1e-12)
        assert abs(c.integral) <= c.integral_limit


def test_integral_anti_windup():
    c = PidFfController(0, Ki=2.0, Kd=0, Kf=0, rate_limit=1.0)
    for _ in range(10_000):
        c.step(1000.0, 0.0, 0.0, 0.1)
    assert c.integral == pytest.approx(c.integral_limit) == pytest.approx(0.5)


def test_output_limit():
    c = PidFfController(1, 0, 0, 0, rate_limit=1e9, output_limit=2.0)
    for e in (1, 5, 9):
        c.step(e, 0, 0, 0.02)
    assert c.output == 2.0


def test_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        pid_step(PidFfController(), 1, 0, 0, 0.0)


def test_reset():
    c = PidFfController()
    c.step(1, 0, 0.5, 0.02)
    c.reset()
    assert (c.integral, c.e1, c.e2, c.output, c.primed) == (0, 0, 0, 0, False)


# -- command composition --------------------------------------------------------

def _axes(**kw):
    return AxisPair(PidFfController(**kw), PidFfController(**kw))


def test_zero_error_zero_command():
    cmd = aim_to_command(0, 0, 0, _axes(), design_lowpass(), design_lowpass(), 0.02)
    assert cmd == GimbalCommand(0.0, 0.0)


def test_constant_error_kp_only_settles_to_zero_increment():
    ctr = _axes(Kp=2, Ki=0, Kd=0, Kf=0)
    fx, fy = identity_fir(), identity_fir()
    first = aim_to_command(0.3, 0, 0, ctr, fx, fy, 0.02)
    assert first.d_yaw == pytest.approx(0.6)
    for _ in range(5):
        assert aim_to_command(0.3, 0, 0, ctr, fx, fy, 0.02).d_yaw == 0.0


def test_pitch_compensation_enters_setpoint():
    ctr = _axes(Kp=1, Ki=0, Kd=0, Kf=0)
    cmd = aim_to_command(0, 0, 0.05, ctr, identity_fir(), identity_fir(), 0.02)
    assert cmd.d_pitch == pytest.approx(0.05) and cmd.d_yaw == 0.0


def test_camera_converts_offsets_to_angles():
    cam = CameraModel()
    ctr = _axes(Kp=1, Ki=0, Kd=0, Kf=0)
    cmd = aim_to_command(1.0, 0.5, 0, ctr, identity_fir(), identity_fir(), 0.02, cam=cam)
    assert cmd.d_yaw == pytest.approx(math.pi / 4)
    assert cmd.d_pitch == pytest.approx(offset_to_angle(0.5, 240, 320))
    with pytest.raises(ValueError):
        aim_to_command(0, 0, 0, ctr, identity_fir(), identity_fir(), 0.0)


def test_integral_action_grows_until_error_removed():
    ctr = PidFfController(0, Ki=4.0, Kd=0, Kf=0)
    plant = GimbalPlant()
    target, dt, outputs = 0.1, 0.02, []
    while target - plant.yaw > 0 and len(outputs) < 1000:
        du = ctr.step(target, plant.yaw, 0.0, dt)
        plant.apply(GimbalCommand(du, 0.0))
        plant.step(dt)
        outputs.append(ctr.output)
    assert len(outputs) < 1000
    assert all(b >= a for a, b in zip(outputs, outputs[1:]))


def test_default_step_response_settles_without_oscillation():
    ts, yaw = step_response(0.2, duration=6.0)
    settle = settling_time(ts, yaw, 0.2)
    assert settle is not None and settle <= 3.0
    err = yaw[ts > settle] - 0.2
    crossings = np.count_nonzero(np.diff(np.sign(err[np.abs(err) > 1e-9])))
    assert crossings <= 2
    assert np.max(np.abs(err)) <= 0.02 * 0.2
