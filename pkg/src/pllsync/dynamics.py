"""Nonlinear phase-swing dynamics of the PLL-synchronized converter.

The simulated state is ``(delta, xi)``: the angle of the PLL frame ahead of the
grid voltage and the PI integrator output. The PLL frequency deviation is
algebraic in that state because the line reactance depends on it:

    dw = kp * v_pccq + xi
    v_pccq = i_d * (omega_gn + dw) * L + i_q * R - v_gcp * sin(delta)

which is solved in closed form, limited to +-delta_omega_max, and gives
``d(delta)/dt = dw - (omega_g - omega_gn)``. The second-order form in
``(delta, d delta/dt)`` is kept as :func:`second_order_rhs` for cross-checks.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import PllMode, RocofDetector, mode_switch
from .scenario import Event, Scenario
from .system import (CurrentRef, EquilibriumKind, EquilibriumSet, GridParams, PllDesign,
                     PllKind, equilibria, first_order_equilibrium)

CONVERGED_ANGLE_TOL = 1e-2
CONVERGED_RATE_TOL = 5e-2
CONVERGED_WINDOW = 0.5
UEP_MARGIN = 0.05
FREEZE_VOLTAGE = 0.9

MODE_CODES = {PllMode.SECOND_ORDER: 0, PllMode.FIRST_ORDER: 1, PllMode.FROZEN: 2}
MODE_NAMES = {v: k for k, v in MODE_CODES.items()}


class ModelValidityError(ValueError):
    """The reactance feedback loop gain ``kp * i_d * L`` reached 1."""


class IntegrationDivergedError(RuntimeError):
    def __init__(self, msg: str, trajectory: "Trajectory | None" = None):
        super().__init__(msg)
        self.trajectory = trajectory


class Classification(str, enum.Enum):
    CONVERGED = "converged"
    LOST_SYNCHRONISM = "lost_synchronism"
    UNDETERMINED = "undetermined"


@dataclass
class SwingState:
    delta: float
    xi: float
    theta_gcp: float = 0.0

    @property
    def theta_pll(self) -> float:
        return self.theta_gcp + self.delta


@dataclass
class Segment:
    """One constant-condition piece of a run, ``samples[start:stop]``."""

    t_start: float
    start: int
    stop: int
    event: Event
    current: CurrentRef
    eq: EquilibriumSet
    classification: Classification = Classification.UNDETERMINED
    metrics: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    t: np.ndarray
    delta: np.ndarray
    delta_dot: np.ndarray
    omega_dev: np.ndarray
    xi: np.ndarray
    v_pccq: np.ndarray
    mode: np.ndarray
    ki_active: np.ndarray
    rocof: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    v_gcp: np.ndarray
    saturated: np.ndarray
    h: float
    segments: list[Segment] = field(default_factory=list)
    classification: Classification = Classification.UNDETERMINED
    metrics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def mode_names(self) -> list[str]:
        return [MODE_NAMES[int(c)].value for c in self.mode]

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask for ``t0 <= t < t1``."""
        return (self.t >= t0 - 1e-12) & (self.t < t1 - 1e-12)


def _loop_terms(ref: CurrentRef, v_gcp: float, grid: GridParams, kp: float,
                freq_dependent: bool) -> tuple[float, float, float]:
    """Constant line drop ``a``, reactance slope ``b`` and loop denominator."""
    if freq_dependent:
        a = ref.i_d * grid.omega_gn * grid.l_line + ref.i_q * grid.r_line
        b = ref.i_d * grid.l_line
    else:
        a = ref.i_d * grid.x_line_nom + ref.i_q * grid.r_line
        b = 0.0
    den = 1.0 - kp * b
    if den <= 0:
        raise ModelValidityError(
            f"positive-feedback loop gain kp*i_d*L = {kp * b:.3g} >= 1; model invalid")
    return a, b, den


def delta_dot(state: SwingState, ref: CurrentRef, v_gcp: float, grid: GridParams,
              pll: PllDesign, freq_dependent: bool = True) -> tuple[float, float, bool]:
    """``(d delta/dt, v_pccq, saturated)`` for the given state."""
    a, b, den = _loop_terms(ref, v_gcp, grid, pll.kp, freq_dependent)
    s = v_gcp * math.sin(state.delta)
    dw = (pll.kp * (a - s) + state.xi) / den
    sat = abs(dw) > pll.delta_omega_max
    if sat:
        dw = math.copysign(pll.delta_omega_max, dw)
    v_pccq = a + b * dw - s
    return dw - grid.delta_omega_grid, v_pccq, sat


def second_order_rhs(delta: float, ddelta: float, ref: CurrentRef, v_gcp: float,
                     grid: GridParams, pll: PllDesign, ki: float | None = None) -> float:
    """Angular acceleration of the unlimited loop at nominal grid frequency."""
    ki = pll.ki if ki is None else ki
    L = grid.l_line
    den = 1.0 - pll.kp * ref.i_d * L
    if den <= 0:
        raise ModelValidityError("1 - kp*i_d*L must be positive")
    drop = ref.i_d * (grid.omega_gn + ddelta) * L + ref.i_q * grid.r_line - v_gcp * math.sin(delta)
    return (ki * drop - pll.kp * v_gcp * math.cos(delta) * ddelta) / den


def state_from_rate(delta: float, ddelta: float, ref: CurrentRef, v_gcp: float,
                    grid: GridParams, pll: PllDesign, freq_dependent: bool = True) -> float:
    """Integrator value that produces ``d delta/dt = ddelta`` (limiter ignored)."""
    a, _, den = _loop_terms(ref, v_gcp, grid, pll.kp, freq_dependent)
    dw = ddelta + grid.delta_omega_grid
    return dw * den - pll.kp * (a - v_gcp * math.sin(delta))


def _make_rhs(kp, ki, a, b, den, v, dw_max, dwg):
    sin = math.sin

    def rhs(d, xi):
        s = v * sin(d)
        dw = (kp * (a - s) + xi) / den
        if dw > dw_max:
            return dw_max - dwg, 0.0
        if dw < -dw_max:
            return -dw_max - dwg, 0.0
        return dw - dwg, ki * (a + b * dw - s)

    return rhs


def _make_frozen_rhs(rate):
    def rhs(d, xi):
        return rate, 0.0

    return rhs


def rk4_step(rhs, d: float, xi: float, h: float) -> tuple[float, float]:
    """Classical fourth-order Runge-Kutta step for the two-state system."""
    k1d, k1x = rhs(d, xi)
    hh = 0.5 * h
    k2d, k2x = rhs(d + hh * k1d, xi + hh * k1x)
    k3d, k3x = rhs(d + hh * k2d, xi + hh * k2x)
    k4d, k4x = rhs(d + h * k3d, xi + h * k3x)
    h6 = h / 6.0
    return (d + h6 * (k1d + 2.0 * (k2d + k3d) + k4d),
            xi + h6 * (k1x + 2.0 * (k2x + k3x) + k4x))


def initial_state(scenario: Scenario, pll: PllDesign) -> tuple[float, float]:
    """Steady operating point of the first timeline segment."""
    ev = scenario.timeline[0]
    ref = ev.current_ref()
    grid = scenario.grid
    if pll.kind is PllKind.FIRST_ORDER:
        d = first_order_equilibrium(ref, ev.v_gcp, grid, pll.kp, scenario.freq_dependent)
        if d is None:
            raise ValueError("initial segment has no first-order equilibrium")
        return d, 0.0
    eq = equilibria(ref, ev.v_gcp, grid, scenario.freq_dependent)
    if not eq.exists:
        raise ValueError("initial segment has no equilibrium")
    return eq.sep, grid.delta_omega_grid


def integrate(scenario: Scenario, pll: PllDesign | None = None, h: float | None = None,
              t_max: float | None = None, *, init: tuple[float, float] | None = None,
              stop_on_los: bool = False) -> Trajectory:
    """Fixed-step RK4 run of the hybrid loop over the scenario timeline.

    Events (voltage and current changes), mode switches and the freeze trigger
    are applied at step boundaries. ``init`` overrides the starting
    ``(delta, xi)``; by default the run starts at the first segment's SEP. With
    ``stop_on_los`` the run ends at the first recorded UEP crossing.
    """
    pll = pll or scenario.pll
    h = scenario.h if h is None else h
    t_max = scenario.t_max if t_max is None else t_max
    if not (h > 0 and t_max > 0):
        raise ValueError("h and t_max must be positive")
    grid = scenario.grid
    fd = scenario.freq_dependent
    dwg = grid.delta_omega_grid
    kind = pll.kind

    n_steps = int(round(t_max / h))
    event_at = {}
    for ev in scenario.timeline:
        k = int(round(ev.t / h))
        if k <= n_steps:
            event_at[k] = ev

    d, xi = init if init is not None else initial_state(scenario, pll)
    theta_gcp = 0.0
    mode = PllMode.FIRST_ORDER if kind is PllKind.FIRST_ORDER else PllMode.SECOND_ORDER
    det = RocofDetector(scenario.t_filter, abs(dwg) if init is not None else 0.0)
    det_ready = init is not None
    thr = scenario.thresholds
    frozen_rate = None
    last_dw = dwg

    cols = {name: [] for name in ("t", "delta", "delta_dot", "omega_dev", "xi", "v_pccq",
                                  "mode", "ki_active", "rocof", "i_d", "i_q", "v_gcp",
                                  "saturated")}
    ap = {k: v.append for k, v in cols.items()}
    segments: list[Segment] = []
    seg = None
    ref = v = None
    a = b = den = 0.0
    rhs = None

    def active_ki():
        if mode is PllMode.SECOND_ORDER:
            return pll.ki
        return 0.0

    def build_rhs():
        if mode is PllMode.FROZEN:
            return _make_frozen_rhs(frozen_rate - dwg)
        return _make_rhs(pll.kp, active_ki(), a, b, den, v, pll.delta_omega_max, dwg)

    def algebraic(d, xi):
        s = v * math.sin(d)
        if mode is PllMode.FROZEN:
            dw = frozen_rate
            sat = False
        else:
            dw = (pll.kp * (a - s) + xi) / den
            sat = abs(dw) > pll.delta_omega_max
            if sat:
                dw = math.copysign(pll.delta_omega_max, dw)
        return dw, a + b * dw - s, sat

    n = 0
    while True:
        t = n * h
        ev = event_at.get(n)
        if ev is not None:
            prev_v = v
            ref = ev.current_ref()
            v = ev.v_gcp
            a, b, den = _loop_terms(ref, v, grid, pll.kp, fd)
            if kind is PllKind.FREEZE:
                if v < FREEZE_VOLTAGE and (prev_v is None or prev_v >= FREEZE_VOLTAGE):
                    if prev_v is not None:
                        frozen_rate = last_dw
                        mode = PllMode.FROZEN
                elif v >= FREEZE_VOLTAGE and mode is PllMode.FROZEN:
                    mode = PllMode.SECOND_ORDER
            if seg is not None:
                seg.stop = n
            seg = Segment(t, n, n, ev, ref, equilibria(ref, v, grid, fd))
            segments.append(seg)
            rhs = build_rhs()

        dw, vq, sat = algebraic(d, xi)
        rocof = 0.0
        if kind is PllKind.ADAPTIVE:
            if not det_ready:
                det.reset(dw)
                det_ready = True
            rocof = det.step(dw, h) if (n > 0 or init is not None) else det.lpf_state
            new_mode = mode_switch(mode, rocof, thr)
            if new_mode is not mode:
                mode = new_mode
                rhs = build_rhs()
                dw, vq, sat = algebraic(d, xi)
        last_dw = dw

        if not (math.isfinite(d) and math.isfinite(xi)):
            traj = _finish(cols, h, segments, n)
            raise IntegrationDivergedError(f"non-finite state at t={t:.6g}", traj)

        ap["t"](t)
        ap["delta"](d)
        ap["delta_dot"](dw - dwg)
        ap["omega_dev"](dw)
        ap["xi"](xi)
        ap["v_pccq"](vq)
        ap["mode"](MODE_CODES[mode])
        ap["ki_active"](active_ki() if mode is not PllMode.FROZEN else 0.0)
        ap["rocof"](rocof)
        ap["i_d"](ref.i_d)
        ap["i_q"](ref.i_q)
        ap["v_gcp"](v)
        ap["saturated"](sat)

        if stop_on_los and _crossed(seg.eq, d, dw - dwg):
            n += 1
            break
        if n >= n_steps:
            n += 1
            break
        d, xi = rk4_step(rhs, d, xi, h)
        theta_gcp += grid.omega_g * h
        n += 1

    traj = _finish(cols, h, segments, n)
    _classify_all(traj)
    return traj


def _finish(cols, h, segments, n) -> Trajectory:
    arrays = {k: np.asarray(v, dtype=bool if k == "saturated" else
                            (np.int8 if k == "mode" else float)) for k, v in cols.items()}
    count = len(arrays["t"])
    for seg in segments:
        seg.stop = min(seg.stop, count) if seg is not segments[-1] else count
    return Trajectory(h=h, segments=segments, **arrays)


def _crossed(eq: EquilibriumSet, d: float, dd: float) -> bool:
    if eq.kind is EquilibriumKind.NONE:
        return False
    if eq.uep_below:
        return d < eq.uep - UEP_MARGIN and dd < 0
    return d > eq.uep + UEP_MARGIN and dd > 0


def classify(traj: Trajectory, eq: EquilibriumSet, start: int = 0,
             stop: int | None = None) -> tuple[Classification, dict]:
    """Verdict for ``traj[start:stop]`` against the equilibria ``eq``.

    Converged: within 1e-2 rad of the SEP with |d delta/dt| < 5e-2 rad/s over
    the final 0.5 s. Lost synchronism: the UEP (or the single equilibrium) is
    passed by more than 0.05 rad while moving away from the SEP.
    """
    stop = len(traj) if stop is None else stop
    dl = traj.delta[start:stop]
    dd = traj.delta_dot[start:stop]
    tt = traj.t[start:stop]
    metrics = {"peak_rate": float(np.max(np.abs(dd))) if len(dd) else 0.0,
               "uep_crossing_t": None, "final_error": None}
    if eq.kind is EquilibriumKind.NONE:
        return Classification.LOST_SYNCHRONISM, metrics
    if eq.uep_below:
        hit = np.nonzero((dl < eq.uep - UEP_MARGIN) & (dd < 0))[0]
    else:
        hit = np.nonzero((dl > eq.uep + UEP_MARGIN) & (dd > 0))[0]
    if len(dl):
        metrics["final_error"] = float(abs(dl[-1] - eq.sep))
    if len(hit):
        metrics["uep_crossing_t"] = float(tt[hit[0]])
        return Classification.LOST_SYNCHRONISM, metrics
    if len(tt) and tt[-1] - tt[0] >= CONVERGED_WINDOW - 1e-12:
        win = tt >= tt[-1] - CONVERGED_WINDOW + 1e-12
        if (np.all(np.abs(dl[win] - eq.sep) < CONVERGED_ANGLE_TOL)
                and np.all(np.abs(dd[win]) < CONVERGED_RATE_TOL)):
            return Classification.CONVERGED, metrics
    return Classification.UNDETERMINED, metrics


def _classify_all(traj: Trajectory):
    for seg in traj.segments:
        seg.classification, seg.metrics = classify(traj, seg.eq, seg.start, seg.stop)
    if not traj.segments:
        return
    if any(s.classification is Classification.LOST_SYNCHRONISM for s in traj.segments):
        traj.classification = Classification.LOST_SYNCHRONISM
        first = next(s for s in traj.segments
                     if s.classification is Classification.LOST_SYNCHRONISM)
        traj.metrics = dict(first.metrics)
    else:
        last = traj.segments[-1]
        traj.classification = last.classification
        traj.metrics = dict(last.metrics)
    traj.metrics["peak_rate"] = float(np.max(np.abs(traj.delta_dot)))


def fault_on_scenario(scenario: Scenario) -> tuple[Scenario, tuple[float, float]]:
    """Timeline shifted to start at the first voltage drop, plus the pre-fault state.

    The returned initial ``(delta, xi)`` is the pre-fault operating point, so the
    first sample sits on the fault-on jump of the angle rate.
    """
    k = scenario.fault_index()
    if k is None:
        return scenario, initial_state(scenario, scenario.pll)
    pre = scenario.replace(timeline=scenario.timeline[:k])
    init = initial_state(pre, scenario.pll)
    t0 = scenario.timeline[k].t
    shifted = tuple(Event(ev.t - t0, ev.v_gcp, ev.current, ev.i_max)
                    for ev in scenario.timeline[k:])
    return scenario.replace(timeline=shifted, t_max=max(scenario.t_max - t0, scenario.h)), init


def phase_portrait(scenario: Scenario, pll: PllDesign | None = None,
                   init_points: list[tuple[float, float]] | None = None,
                   h: float | None = None, t_max: float | None = None) -> list[Trajectory]:
    """One fault-on trajectory per ``(delta, d delta/dt)`` initial point.

    Without ``init_points`` the single pre-fault operating point is used.
    """
    pll = pll or scenario.pll
    fault, pre_state = fault_on_scenario(scenario.with_pll(pll))
    if not init_points:
        return [integrate(fault, pll, h, t_max, init=pre_state)]
    ev = fault.timeline[0]
    out = []
    for d0, dd0 in init_points:
        xi0 = state_from_rate(d0, dd0, ev.current_ref(), ev.v_gcp, fault.grid, pll,
                              fault.freq_dependent)
        out.append(integrate(fault, pll, h, t_max, init=(d0, xi0)))
    return out
