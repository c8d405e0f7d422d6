"""ROCOF-switched adaptive PLL, its threshold bounds, and the freeze baseline."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .system import SETTLING_CONSTANT, GridParams, PllDesign

TWO_PI = 2 * math.pi
ROCOF_WITHSTAND_FLOOR = 2.5


class PllMode(str, enum.Enum):
    SECOND_ORDER = "second_order"
    FIRST_ORDER = "first_order"
    FROZEN = "frozen"


@dataclass
class RocofDetector:
    """Derivative of |delta_omega| followed by a first-order low-pass filter.

    State is updated in place by :meth:`step`; ``lpf_state`` is in Hz/s.
    """

    t_filter: float = 0.2
    prev_abs_domega: float = 0.0
    lpf_state: float = 0.0

    def __post_init__(self):
        if not self.t_filter > 0:
            raise ValueError("t_filter must be positive")

    def step(self, delta_omega: float, h: float) -> float:
        if not h > 0:
            raise ValueError("h must be positive")
        a = abs(delta_omega)
        raw = (a - self.prev_abs_domega) / (TWO_PI * h)
        self.lpf_state += (h / self.t_filter) * (raw - self.lpf_state)
        self.prev_abs_domega = a
        return self.lpf_state

    def reset(self, delta_omega: float = 0.0):
        self.prev_abs_domega = abs(delta_omega)
        self.lpf_state = 0.0


def rocof_step(det: RocofDetector, delta_omega: float, h: float) -> tuple[RocofDetector, float]:
    """Functional form of :meth:`RocofDetector.step`; ``det`` is left untouched."""
    new = RocofDetector(det.t_filter, det.prev_abs_domega, det.lpf_state)
    rocof = new.step(delta_omega, h)
    return new, rocof


@dataclass(frozen=True)
class SwitchThresholds:
    rocof_1: float = 5.0
    rocof_2: float = 0.5

    def __post_init__(self):
        if not 0 < self.rocof_2 < self.rocof_1:
            raise ValueError(
                f"need 0 < rocof_2 < rocof_1, got {self.rocof_2}, {self.rocof_1}")


def mode_switch(mode: PllMode, rocof: float, thr: SwitchThresholds) -> PllMode:
    """Hysteresis switching between the second- and first-order loop."""
    r = abs(rocof)
    if r >= thr.rocof_1:
        return PllMode.FIRST_ORDER
    if r < thr.rocof_2:
        return PllMode.SECOND_ORDER
    return mode


def rocof1_upper_bound(pll: PllDesign, grid: GridParams, i_max: float = 1.0,
                       delta_t: float = 0.01, t_filter: float = 0.2) -> float:
    """Largest switch-to-first-order threshold that still trips at a fault.

    ``9.2 i_max r_line / (v_gn t_s delta_t) * (1 - exp(-delta_t / t_filter))``
    with ``t_s`` taken from the design's proportional gain. The number is
    returned unconverted, in the same convention as the ROCOF thresholds.
    """
    if not 0 < delta_t <= 0.01:
        raise ValueError("delta_t must lie in (0, 0.01] s")
    if not t_filter > 0:
        raise ValueError("t_filter must be positive")
    t_s = pll.settling_time(grid.v_gn)
    scale = SETTLING_CONSTANT * i_max * grid.r_line / (grid.v_gn * t_s * delta_t)
    return scale * -math.expm1(-delta_t / t_filter)


def check_thresholds(thr: SwitchThresholds, pll: PllDesign, grid: GridParams,
                     i_max: float = 1.0, t_filter: float = 0.2,
                     delta_t: float = 0.01) -> list[str]:
    """Warn (never raise) when ``rocof_1`` sits outside its recommended range."""
    problems = []
    bound = rocof1_upper_bound(pll, grid, i_max, delta_t, t_filter)
    if thr.rocof_1 > bound:
        problems.append(f"rocof_1={thr.rocof_1} exceeds the fault-detection bound {bound:.3g}")
    if thr.rocof_1 < ROCOF_WITHSTAND_FLOOR:
        problems.append(
            f"rocof_1={thr.rocof_1} is below the {ROCOF_WITHSTAND_FLOOR} Hz/s withstand floor")
    if not 0.18 <= t_filter <= 0.24:
        problems.append(f"t_filter={t_filter} s is outside the recommended 0.18-0.24 s")
    for msg in problems:
        warnings.warn(msg, stacklevel=2)
    return problems


def freeze_pll_phase(t_since_freeze: float, theta_prefreeze: float,
                     omega_prefreeze: float) -> float:
    return theta_prefreeze + omega_prefreeze * t_since_freeze
