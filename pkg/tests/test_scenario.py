import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pllsync import (CurrentRef, Event, GridParams, PllDesign, PllKind, Scenario, ScenarioError,
                     parse_scenario, serialize_scenario)


def test_empty_file_is_default_no_fault():
    scn = parse_scenario("")
    assert scn.t_max == 5.0
    assert scn.timeline == (Event(0.0, 1.0),)
    assert scn.fault_index() is None


def test_minimal_event_gets_table_defaults():
    scn = parse_scenario("[event]\nt=2.5 v_gcp=0.14\n")
    assert [ev.t for ev in scn.timeline] == [0.0, 2.5]
    g = scn.grid
    assert (g.x_line_nom, g.r_line, g.v_gn) == (0.28, 0.1, 1.0)
    assert g.omega_gn == pytest.approx(2 * math.pi * 50)
    assert scn.pll.kp == pytest.approx(92.0)
    assert scn.pll.zeta() == pytest.approx(1.5)
    assert scn.h == 5e-5
    assert scn.timeline[1].current_ref() == CurrentRef(0.0, -1.0)


def test_design_keys_convert_to_gains():
    scn = parse_scenario("[pll]\nzeta = 0.5\nt_s = 0.1\n")
    assert scn.pll.kp == pytest.approx(92.0, rel=1e-12)
    assert scn.pll.ki == pytest.approx(8464.0, rel=1e-12)


def test_explicit_gains_and_comments():
    text = """
    # comment line
    [pll]
    kind = adaptive   # trailing comment
    kp = 92 ki = 940.4444
    [event]
    t = 2.5 v_gcp = 0.14 i_d = 0 i_q = -1
    """
    scn = parse_scenario(text)
    assert scn.pll.kind is PllKind.ADAPTIVE
    assert scn.pll.ki == 940.4444
    assert scn.timeline[1].current == CurrentRef(0.0, -1.0)


@pytest.mark.parametrize("text,line,match", [
    ("[grid]\nfoo = 1\n", 2, "unknown key"),
    ("[pll]\nzeta = 1\nkp = 92\n", 2, "either"),
    ("[event]\nt = 2 v_gcp = 0.5\n[event]\nt = 1 v_gcp = 1\n", 4, "increasing"),
    ("[event]\nt = 2 v_gcp = 0.5\n[event]\nt = 2 v_gcp = 1\n", 4, "increasing"),
    ("[bogus]\n", 1, "unknown section"),
    ("[grid]\n[grid]\n", 2, "duplicate section"),
    ("[grid]\nr_line = 0.1 r_line = 0.2\n", 2, "duplicate key"),
    ("[grid]\nr_line = abc\n", 2, "number"),
    ("\n\nv_gn = 1\n", 3, "outside"),
    ("[event]\nt = 1 v_gcp = 0.5 i_d = 0\n", 2, "i_d and i_q"),
    ("[pll]\nki = 10\n", 2, "without kp"),
    ("[pll]\nkind = magic\n", 2, "kind"),
    ("[event]\nt = 1\n", 1, "missing"),
    ("[grid]\nthis is not a pair\n", 2, "cannot parse"),
])
def test_parse_errors_carry_line_numbers(text, line, match):
    with pytest.raises(ScenarioError, match=match) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_adaptive_threshold_warning():
    with pytest.warns(UserWarning):
        parse_scenario("[grid]\nr_line = 0.02\n[pll]\nkind = adaptive\n[adaptive]\nrocof_1 = 12\n")


def test_timeline_validation():
    with pytest.raises(ScenarioError):
        Scenario(timeline=(Event(0.0, 1.0), Event(1.0, 0.5), Event(0.5, 1.0)))


_kinds = st.sampled_from([PllKind.SRF, PllKind.ADAPTIVE, PllKind.FREEZE, PllKind.FIRST_ORDER])
_num = st.floats(0.01, 10.0, allow_nan=False)


@st.composite
def scenarios(draw):
    kind = draw(_kinds)
    ki = 0.0 if kind is PllKind.FIRST_ORDER else draw(st.floats(0.0, 1e4))
    pll = PllDesign(draw(st.floats(1.0, 500.0)), ki, kind, draw(st.floats(1.0, 60.0)))
    grid = GridParams(v_gn=draw(st.floats(0.5, 2.0)), x_line_nom=draw(st.floats(0.0, 1.0)),
                      r_line=draw(st.floats(0.0, 0.5)),
                      omega_g=2 * math.pi * draw(st.floats(45.0, 55.0)))
    times = sorted(set(draw(st.lists(st.floats(0.001, 10.0), max_size=4))))
    events = []
    for t in times:
        v = draw(st.floats(0.0, 1.2))
        if draw(st.booleans()):
            a = draw(st.floats(-math.pi, 0.0))
            cur = CurrentRef(max(math.cos(a), 0.0), math.sin(a))
        else:
            cur = None
        events.append(Event(t, v, cur))
    return Scenario(grid=grid, pll=pll, timeline=tuple(events), h=draw(st.floats(1e-6, 1e-3)),
                    t_max=draw(_num), freq_dependent=draw(st.booleans()))


@settings(max_examples=150, deadline=None)
@given(scenarios())
def test_parse_serialize_fixed_point(scn):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        once = parse_scenario(serialize_scenario(scn))
        text = serialize_scenario(once)
        twice = parse_scenario(text)
    assert twice == once
    assert serialize_scenario(twice) == text
    assert once.pll.kp == scn.pll.kp and once.pll.ki == scn.pll.ki
    assert once.timeline == scn.timeline
    assert once.grid.omega_g == pytest.approx(scn.grid.omega_g, rel=1e-14)
