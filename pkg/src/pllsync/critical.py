"""Critical damping ratio search over simulated fault responses."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .dynamics import Classification, fault_on_scenario, integrate
from .scenario import Scenario, fault_scenario
from .system import CurrentRef, EquilibriumKind, GridParams, PllDesign, PllKind, equilibria

CONVERGED = "converged"
AT_INIT = "at_init"
NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True)
class CriticalZetaResult:
    ratio: float
    zeta_crit: float | None
    bracket: tuple[float | None, float | None]
    status: str
    trials: int = 0

    @property
    def converges(self) -> bool:
        return self.zeta_crit is not None


class _Trial:
    """Runs the sustained-fault response for one damping ratio."""

    def __init__(self, base: Scenario, t_s: float, h, t_trial: float, limit_frequency: bool):
        fault, self.init = fault_on_scenario(base)
        self.scenario = fault.replace(timeline=fault.timeline[:1])
        self.t_s = t_s
        self.h = h
        self.t_trial = t_trial
        self.dw_max = base.pll.delta_omega_max if limit_frequency else math.inf
        self.count = 0

    def pll(self, zeta: float) -> PllDesign:
        return PllDesign.from_design(zeta, self.t_s, PllKind.SRF, self.scenario.grid.v_gn,
                                     self.dw_max)

    def __call__(self, zeta: float) -> bool:
        self.count += 1
        traj = integrate(self.scenario, self.pll(zeta), self.h, self.t_trial,
                         init=self.init, stop_on_los=True)
        return traj.classification is Classification.CONVERGED


def _fault_ratio(base: Scenario) -> float:
    k = base.fault_index()
    ev = base.timeline[k]
    eq = equilibria(ev.current_ref(), ev.v_gcp, base.grid, base.freq_dependent)
    return abs(eq.v_zq) / ev.v_gcp if ev.v_gcp > 0 else math.inf


def critical_zeta(base_scenario: Scenario, t_s: float = 0.1, zeta_init: float = 0.1,
                  coarse_step: float = 0.05, tol: float = 1e-3, zeta_max: float = 10.0, *,
                  h: float | None = None, t_trial: float = 5.0,
                  limit_frequency: bool = False) -> CriticalZetaResult:
    """Smallest damping ratio whose sustained-fault response converges.

    Ascends from ``zeta_init`` in ``coarse_step`` increments, then bisects the
    last (diverging, converging) pair down to ``tol``. If ``zeta_max`` itself
    does not converge the result carries no critical value. Each trial starts at the
    pre-fault operating point with the fault applied and held for ``t_trial``
    seconds; an undetermined trial counts as not converged. The frequency
    limiter is off unless ``limit_frequency`` is set.
    """
    if not (zeta_init > 0 and coarse_step > 0 and tol > 0 and zeta_max >= zeta_init):
        raise ValueError("need zeta_init > 0, coarse_step > 0, tol > 0, zeta_max >= zeta_init")
    k = base_scenario.fault_index()
    if k is None:
        raise ValueError("scenario has no voltage drop")
    ev = base_scenario.timeline[k]
    eq = equilibria(ev.current_ref(), ev.v_gcp, base_scenario.grid, base_scenario.freq_dependent)
    if not eq.exists:
        raise ValueError("no equilibrium during the fault: loss of synchronism is inevitable")
    ratio = _fault_ratio(base_scenario)

    if eq.kind is EquilibriumKind.SINGLE:
        # any integral action carries the angle through a merged SEP/UEP
        return CriticalZetaResult(ratio, None, (zeta_max, None), NO_CONVERGENCE, 0)

    trial = _Trial(base_scenario, t_s, h, t_trial, limit_frequency)
    lo = None
    hi = None
    i = 0
    while True:
        zeta = min(zeta_init + i * coarse_step, zeta_max)
        if trial(zeta):
            hi = zeta
            break
        lo = zeta
        if zeta >= zeta_max:
            return CriticalZetaResult(ratio, None, (lo, None), NO_CONVERGENCE, trial.count)
        i += 1
    if lo is None:
        return CriticalZetaResult(ratio, hi, (None, hi), AT_INIT, trial.count)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if trial(mid):
            hi = mid
        else:
            lo = mid
    return CriticalZetaResult(ratio, hi, (lo, hi), CONVERGED, trial.count)


def ratio_scenario(ratio: float, grid: GridParams | None = None, i_max: float = 1.0) -> Scenario:
    """Full-reactive-current fault whose depth gives ``|v_zq| / v_gcp = ratio``."""
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    grid = grid or GridParams()
    v_fault = i_max * grid.r_line / ratio
    return fault_scenario(v_fault, t_fault=0.5, t_clear=None, grid=grid,
                          pre=CurrentRef(i_max, 0.0, i_max),
                          during=CurrentRef(0.0, -i_max, i_max))


def _curve_point(args) -> CriticalZetaResult:
    ratio, grid, t_s, kw = args
    return critical_zeta(ratio_scenario(ratio, grid), t_s, **kw)


def critical_zeta_curve(ratios, grid: GridParams | None = None, t_s: float = 0.1,
                        workers: int = 1, **kw) -> list[CriticalZetaResult]:
    """:func:`critical_zeta` at each line-drop-to-voltage ratio.

    Pre-fault injection is unity power factor at 1 pu; the fault draws full
    reactive current, so ``v_fault = i_max * r_line / ratio``.
    """
    ratios = list(ratios)
    for r in ratios:
        if not 0 < r <= 1:
            raise ValueError(f"ratio must lie in (0, 1], got {r}")
    grid = grid or GridParams()
    jobs = [(r, grid, t_s, kw) for r in ratios]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_curve_point, jobs))
    return [_curve_point(j) for j in jobs]
