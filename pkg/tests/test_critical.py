import math

import pytest

from pllsync import (Classification, CurrentRef, critical_zeta, critical_zeta_curve,
                     fault_scenario, integrate, ratio_scenario)
from pllsync.critical import AT_INIT, CONVERGED, NO_CONVERGENCE, _Trial


def _verdict(ratio, zeta):
    trial = _Trial(ratio_scenario(ratio), 0.1, None, 5.0, False)
    return integrate(trial.scenario, trial.pll(zeta), None, 5.0, init=trial.init).classification


def test_ratio_scenario_voltage():
    scn = ratio_scenario(0.5)
    fault = scn.timeline[scn.fault_index()]
    assert fault.v_gcp == pytest.approx(0.2, abs=1e-12)
    assert fault.current_ref() == CurrentRef(0.0, -1.0)
    assert scn.timeline[0].current_ref() == CurrentRef(1.0, 0.0)


@pytest.mark.parametrize("ratio", [0.0, -0.1, 1.01])
def test_ratio_domain(ratio):
    with pytest.raises(ValueError):
        critical_zeta_curve([ratio])
    with pytest.raises(ValueError):
        ratio_scenario(ratio)


def test_empty_curve():
    assert critical_zeta_curve([]) == []


def test_no_equilibrium_is_rejected():
    with pytest.raises(ValueError, match="inevitable"):
        critical_zeta(fault_scenario(0.09, during=CurrentRef(0.0, -1.0), t_clear=None))


def test_no_voltage_drop_is_rejected():
    with pytest.raises(ValueError):
        critical_zeta(fault_scenario(1.0, t_clear=None))


def test_single_equilibrium_never_converges():
    r = critical_zeta(ratio_scenario(1.0))
    assert r.status == NO_CONVERGENCE and r.zeta_crit is None


def test_mild_ratio_converges_with_light_damping():
    r = critical_zeta(ratio_scenario(0.2))
    assert r.zeta_crit is not None and r.zeta_crit <= 0.3
    assert r.status == AT_INIT


def test_bracket_and_verdicts():
    r = critical_zeta(ratio_scenario(0.71))
    assert r.status == CONVERGED
    lo, hi = r.bracket
    assert hi == r.zeta_crit and hi - lo <= 1e-3
    assert _verdict(0.71, r.zeta_crit) is Classification.CONVERGED
    assert _verdict(0.71, r.zeta_crit - 1e-3) is Classification.LOST_SYNCHRONISM


def test_zeta_max_reached_without_convergence():
    r = critical_zeta(ratio_scenario(0.71), zeta_max=0.2)
    assert r.status == NO_CONVERGENCE and r.zeta_crit is None


def test_search_is_deterministic():
    a = critical_zeta(ratio_scenario(0.6))
    b = critical_zeta(ratio_scenario(0.6))
    assert a == b


@pytest.mark.slow
def test_curve_shape():
    ratios = [0.3, 0.5, 0.71, 0.9, 1.0]
    res = critical_zeta_curve(ratios, workers=2)
    assert [r.ratio for r in res] == ratios
    values = [r.zeta_crit for r in res[:-1]]
    assert all(v is not None for v in values)
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert res[-1].status == NO_CONVERGENCE


def test_anchor_ratio():
    # reference critical damping at |v_zq| / v_gcp = 0.71
    (r,) = critical_zeta_curve([0.71])
    assert r.zeta_crit is not None
    assert math.isclose(r.zeta_crit, 0.695, abs_tol=0.05), f"zeta_crit = {r.zeta_crit:.4f}"
