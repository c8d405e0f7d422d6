import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pllsync import (CurrentRef, GridParams, PllDesign, PllKind, PllMode, RocofDetector,
                     SwitchThresholds, check_thresholds, fault_scenario, freeze_pll_phase,
                     integrate, mode_switch, rocof1_upper_bound, rocof_step)
from pllsync.dynamics import MODE_CODES

H = 5e-5


def test_rocof_ramp_response():
    det = RocofDetector(0.2)
    n = int(round(0.01 / H))
    for k in range(1, n + 1):
        out = det.step(2 * math.pi * 1.43 * k / n, H)
    assert out == pytest.approx(143 * (1 - (1 - H / 0.2) ** n), rel=1e-9)
    assert out == pytest.approx(143 * (1 - math.exp(-0.05)), rel=1e-3)
    assert out == pytest.approx(7.0, abs=0.05)


def test_rocof_constant_input_decays():
    det = RocofDetector(0.2, prev_abs_domega=3.0, lpf_state=10.0)
    for _ in range(int(0.2 / H)):
        out = det.step(3.0, H)
    assert out == pytest.approx(10.0 * math.exp(-1.0), rel=1e-3)


def _filter_gain(freq):
    det = RocofDetector(0.2)
    t = np.arange(0, 3.0, H)
    sig = 2.0 + np.sin(2 * math.pi * freq * t)
    det.reset(sig[0])
    out = np.array([det.step(x, H) for x in sig[1:]])
    tail = out[len(out) // 2:]
    raw_amp = freq  # d/dt of sin(2 pi f t) / (2 pi)
    return 0.5 * (tail.max() - tail.min()) / raw_amp


def test_rocof_filter_attenuation():
    low, high = _filter_gain(1.0), _filter_gain(1000.0)
    assert low == pytest.approx(1 / math.hypot(1, 2 * math.pi * 0.2), rel=0.02)
    assert low / high > 40


def test_rocof_step_is_functional():
    det = RocofDetector(0.2)
    new, r = rocof_step(det, 1.0, H)
    assert det.lpf_state == 0.0 and det.prev_abs_domega == 0.0
    assert new.lpf_state == r and r > 0


def test_rocof_uses_magnitude():
    a, b = RocofDetector(0.2, 1.0), RocofDetector(0.2, 1.0)
    assert a.step(-1.5, H) == b.step(1.5, H)


@pytest.mark.parametrize("mode,rocof,expected", [
    (PllMode.SECOND_ORDER, 6.0, PllMode.FIRST_ORDER),
    (PllMode.FIRST_ORDER, 0.3, PllMode.SECOND_ORDER),
    (PllMode.FIRST_ORDER, 2.0, PllMode.FIRST_ORDER),
    (PllMode.SECOND_ORDER, 2.0, PllMode.SECOND_ORDER),
    (PllMode.SECOND_ORDER, -6.0, PllMode.FIRST_ORDER),
    (PllMode.SECOND_ORDER, 5.0, PllMode.FIRST_ORDER),
    (PllMode.FIRST_ORDER, 0.5, PllMode.FIRST_ORDER),
])
def test_mode_switch(mode, rocof, expected):
    assert mode_switch(mode, rocof, SwitchThresholds()) is expected


def test_thresholds_ordering():
    with pytest.raises(ValueError):
        SwitchThresholds(0.5, 5.0)
    with pytest.raises(ValueError):
        SwitchThresholds(5.0, 0.0)


def test_bound_value():
    grid = GridParams(r_line=0.02)
    b = rocof1_upper_bound(PllDesign.from_design(1.0, 0.1), grid, 1.0, 0.01, 0.2)
    assert b == pytest.approx(9.2 * 0.02 / (0.1 * 0.01) * (1 - math.exp(-0.05)), rel=1e-12)
    assert 8.5 <= b <= 9.2
    assert b == pytest.approx(8.97, abs=0.01)


def test_bound_limits():
    grid = GridParams(r_line=0.02)
    pll = PllDesign.from_design(1.0, 0.1)
    tiny = rocof1_upper_bound(pll, grid, 1.0, 1e-9, 0.2)
    assert tiny == pytest.approx(9.2 * 0.02 / (0.1 * 0.2), rel=1e-6)
    slow = PllDesign.from_design(1.0, 0.2)
    assert rocof1_upper_bound(slow, grid) == pytest.approx(0.5 * rocof1_upper_bound(pll, grid),
                                                           rel=1e-12)
    with pytest.raises(ValueError):
        rocof1_upper_bound(pll, grid, delta_t=0.02)


def test_check_thresholds_warns():
    pll = PllDesign.from_design(1.0, 0.1)
    with pytest.warns(UserWarning, match="bound"):
        check_thresholds(SwitchThresholds(20.0, 0.5), pll, GridParams(r_line=0.02))
    with pytest.warns(UserWarning, match="floor"):
        check_thresholds(SwitchThresholds(2.0, 0.5), pll, GridParams())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_thresholds(SwitchThresholds(), pll, GridParams()) == []


def test_freeze_phase():
    assert freeze_pll_phase(0.0, 0.3, 100 * math.pi) == 0.3
    assert freeze_pll_phase(0.02, 0.3, 2 * math.pi * 50) == pytest.approx(0.3 + 2 * math.pi,
                                                                            abs=1e-12)


def sample_adaptive_runs():
    out = []
    for v in (0.14, 0.10, 0.3):
        scn = fault_scenario(v, PllDesign.from_design(1.5, 0.1, PllKind.ADAPTIVE),
                             pre=CurrentRef(1.0, 0.0), during=CurrentRef(0.0, -1.0),
                             t_fault=0.5, t_clear=1.1, t_max=2.0)
        out.append((scn, integrate(scn)))
    return out


@pytest.fixture(scope="module")
def adaptive_runs():
    return sample_adaptive_runs()


def test_adaptive_ki_two_valued(adaptive_runs):
    check_ki_two_valued(adaptive_runs)


def test_adaptive_integrator_hold_is_exact(adaptive_runs):
    check_integrator_hold(adaptive_runs)


def check_ki_two_valued(runs):
    for scn, traj in runs:
        assert set(np.unique(traj.ki_active)) <= {0.0, scn.pll.ki0}
        first = traj.mode == MODE_CODES[PllMode.FIRST_ORDER]
        assert first.any()
        assert np.all(traj.ki_active[first] == 0.0)
        assert np.all(traj.ki_active[~first] == scn.pll.ki0)


def check_integrator_hold(runs):
    for _, traj in runs:
        held = traj.mode[:-1] == MODE_CODES[PllMode.FIRST_ORDER]
        assert np.array_equal(traj.xi[1:][held], traj.xi[:-1][held])


def test_freeze_holds_frequency():
    scn = fault_scenario(0.14, PllDesign.from_design(1.5, 0.1, PllKind.FREEZE),
                         pre=CurrentRef(1.0, 0.0), during=CurrentRef(0.0, -1.0),
                         t_fault=0.5, t_clear=1.1, t_max=2.0)
    traj = integrate(scn)
    frozen = traj.mode == MODE_CODES[PllMode.FROZEN]
    assert frozen.any()
    assert np.all(traj.t[frozen] >= 0.5 - 1e-12) and np.all(traj.t[frozen] < 1.1 - 1e-12)
    assert np.all(traj.omega_dev[frozen] == traj.omega_dev[frozen][0])
    idx = np.nonzero(frozen)[0]
    assert np.all(traj.xi[idx[0]:idx[-1] + 2] == traj.xi[idx[0]])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=50), st.floats(0.5, 10))
def test_mode_switch_hysteresis_property(seq, r1):
    thr = SwitchThresholds(r1, r1 / 10)
    mode = PllMode.SECOND_ORDER
    for r in seq:
        new = mode_switch(mode, r, thr)
        if abs(r) >= r1:
            assert new is PllMode.FIRST_ORDER
        elif abs(r) < r1 / 10:
            assert new is PllMode.SECOND_ORDER
        else:
            assert new is mode
        mode = new
