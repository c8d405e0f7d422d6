"""Per-unit system model: grid and PLL parameters, current policies, equilibria.

Conventions: voltages and currents in per unit, angles in rad, frequencies in
rad/s. The line inductance is kept on a seconds scale (``x_line_nom / omega_gn``)
so the reactance seen by the converter current follows the PLL frequency.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

SETTLING_CONSTANT = 9.2
SINGLE_EP_TOL = 1e-9


class PllKind(str, enum.Enum):
    SRF = "srf"
    FIRST_ORDER = "first_order"
    ADAPTIVE = "adaptive"
    FREEZE = "freeze"


class EquilibriumKind(str, enum.Enum):
    NONE = "none"
    SINGLE = "single"
    PAIR = "pair"


@dataclass(frozen=True)
class GridParams:
    v_gn: float = 1.0
    omega_gn: float = 2 * math.pi * 50.0
    omega_g: float | None = None
    x_line_nom: float = 0.28
    r_line: float = 0.1

    def __post_init__(self):
        if self.omega_g is None:
            object.__setattr__(self, "omega_g", self.omega_gn)
        if self.x_line_nom < 0 or self.r_line < 0:
            raise ValueError("line impedance must be non-negative")
        if self.v_gn <= 0 or self.omega_gn <= 0:
            raise ValueError("v_gn and omega_gn must be positive")

    @property
    def l_line(self) -> float:
        return self.x_line_nom / self.omega_gn

    @property
    def theta_line(self) -> float:
        return math.atan2(self.x_line_nom, self.r_line)

    @property
    def z_line(self) -> float:
        return math.hypot(self.x_line_nom, self.r_line)

    @property
    def delta_omega_grid(self) -> float:
        return self.omega_g - self.omega_gn

    def x_line(self, omega: float | None = None) -> float:
        """Line reactance at angular frequency ``omega`` (default: actual grid)."""
        if omega is None:
            omega = self.omega_g
        return omega * self.l_line

    def with_frequency_offset(self, delta_omega: float) -> "GridParams":
        return replace(self, omega_g=self.omega_gn + delta_omega)


@dataclass(frozen=True)
class PllDesign:
    """PI gains of the synchronous-reference-frame loop.

    ``ki`` is the designed steady-state integral gain; the adaptive controller
    toggles its active integral gain between ``ki`` (exposed as ``ki0``) and 0.
    """

    kp: float
    ki: float
    kind: PllKind = PllKind.SRF
    delta_omega_max: float = 2 * math.pi * 5.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PllKind(self.kind))
        if not self.kp > 0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        if self.ki < 0:
            raise ValueError(f"ki must be non-negative, got {self.ki}")
        if self.kind is PllKind.FIRST_ORDER and self.ki != 0:
            raise ValueError("a first-order PLL has ki = 0")
        if not self.delta_omega_max > 0:
            raise ValueError("delta_omega_max must be positive")

    @classmethod
    def from_design(cls, zeta: float, t_s: float, kind: PllKind = PllKind.SRF,
                    v_gn: float = 1.0, delta_omega_max: float = 2 * math.pi * 5.0) -> "PllDesign":
        kp, ki = gains_from_design(zeta, t_s, v_gn)
        if PllKind(kind) is PllKind.FIRST_ORDER:
            ki = 0.0
        return cls(kp, ki, kind, delta_omega_max)

    @property
    def ki0(self) -> float:
        return self.ki

    def zeta(self, v_gn: float = 1.0) -> float:
        if self.ki == 0:
            return math.inf
        return design_from_gains(self.kp, self.ki, v_gn)[0]

    def settling_time(self, v_gn: float = 1.0) -> float:
        return SETTLING_CONSTANT / (v_gn * self.kp)

    def replace(self, **changes) -> "PllDesign":
        return replace(self, **changes)


@dataclass(frozen=True)
class CurrentRef:
    i_d: float
    i_q: float
    i_max: float = 1.0

    def __post_init__(self):
        if math.hypot(self.i_d, self.i_q) > self.i_max + 1e-9:
            raise ValueError(
                f"current ({self.i_d}, {self.i_q}) exceeds the rating {self.i_max}")

    @property
    def magnitude(self) -> float:
        return math.hypot(self.i_d, self.i_q)


@dataclass(frozen=True)
class EquilibriumSet:
    kind: EquilibriumKind
    v_zq: float
    v_gcp: float
    sep: float | None = None
    uep: float | None = None

    @property
    def exists(self) -> bool:
        return self.kind is not EquilibriumKind.NONE

    @property
    def uep_below(self) -> bool:
        """True when the relevant unstable point lies at smaller angles than the SEP."""
        return self.v_zq < 0


def gains_from_design(zeta: float, t_s: float, v_gn: float = 1.0) -> tuple[float, float]:
    """PI gains from damping ratio and settling time.

    kp = 9.2 / (v_gn t_s) and ki = v_gn kp^2 / (4 zeta^2).
    """
    if not (zeta > 0 and t_s > 0 and v_gn > 0):
        raise ValueError("zeta, t_s and v_gn must all be positive")
    kp = SETTLING_CONSTANT / (v_gn * t_s)
    ki = v_gn * kp * kp / (4.0 * zeta * zeta)
    return kp, ki


def design_from_gains(kp: float, ki: float, v_gn: float = 1.0) -> tuple[float, float]:
    """Inverse of :func:`gains_from_design`, returns ``(zeta, t_s)``."""
    if not (kp > 0 and ki > 0 and v_gn > 0):
        raise ValueError("kp, ki and v_gn must all be positive")
    zeta = 0.5 * kp * math.sqrt(v_gn / ki)
    t_s = SETTLING_CONSTANT / (v_gn * kp)
    return zeta, t_s


def grid_code_current(v_gcp: float, i_max: float = 1.0) -> CurrentRef:
    """Reactive-current priority during sags: 2% reactive current per % of drop.

    Full reactive current below half voltage, unity power factor at or above 0.9 pu.
    Active current takes whatever is left inside the rating circle.
    """
    if v_gcp < 0:
        raise ValueError("v_gcp must be non-negative")
    if v_gcp >= 0.9:
        return CurrentRef(i_max, 0.0, i_max)
    i_q = -min(1.0, 2.0 * (1.0 - v_gcp)) * i_max
    i_d = math.sqrt(max(0.0, i_max * i_max - i_q * i_q))
    return CurrentRef(i_d, i_q, i_max)


def v_zq(ref: CurrentRef, delta_omega_pll: float, grid: GridParams) -> float:
    """q-axis drop across the line with the reactance taken at the PLL frequency."""
    return ref.i_d * (grid.omega_gn + delta_omega_pll) * grid.l_line + ref.i_q * grid.r_line


def _line_drop(ref: CurrentRef, grid: GridParams, freq_dependent: bool) -> float:
    x = grid.x_line() if freq_dependent else grid.x_line_nom
    return ref.i_d * x + ref.i_q * grid.r_line


def equilibria(ref: CurrentRef, v_gcp: float, grid: GridParams,
               freq_dependent: bool = True) -> EquilibriumSet:
    """Solve ``v_zq = v_gcp sin(delta)`` at the actual grid frequency.

    The reported UEP is the one adjacent to the SEP on the side a fault trajectory
    travels toward: below the SEP when the line drop is negative, above otherwise.
    """
    if v_gcp < 0:
        raise ValueError("v_gcp must be non-negative")
    vz = _line_drop(ref, grid, freq_dependent)
    gap = abs(vz) - v_gcp
    if abs(gap) <= SINGLE_EP_TOL:
        angle = math.copysign(math.pi / 2, vz) if vz != 0 else math.pi / 2
        return EquilibriumSet(EquilibriumKind.SINGLE, vz, v_gcp, angle, angle)
    if gap > 0:
        return EquilibriumSet(EquilibriumKind.NONE, vz, v_gcp)
    sep = math.asin(vz / v_gcp)
    uep = -math.pi - sep if vz < 0 else math.pi - sep
    return EquilibriumSet(EquilibriumKind.PAIR, vz, v_gcp, sep, uep)


def min_fault_voltage(ref: CurrentRef, grid: GridParams, freq_dependent: bool = True) -> float:
    """Lowest GCP voltage that still admits an equilibrium for this injection."""
    return abs(_line_drop(ref, grid, freq_dependent))


def first_order_equilibrium(ref: CurrentRef, v_gcp: float, grid: GridParams, kp: float,
                            freq_dependent: bool = True) -> float | None:
    """Steady angle of a pure proportional loop under a grid-frequency offset.

    With no integrator the loop needs ``kp * v_pccq = delta_omega_grid``, so
    ``sin(delta) = (v_zq - delta_omega_grid / kp) / v_gcp``. Returns None when
    no solution exists.
    """
    vz = _line_drop(ref, grid, freq_dependent)
    s = (vz - grid.delta_omega_grid / kp) / v_gcp if v_gcp > 0 else math.inf
    if abs(s) > 1:
        return None
    return math.asin(s)


__all__ = [
    "PllKind", "EquilibriumKind", "GridParams", "PllDesign", "CurrentRef",
    "EquilibriumSet", "gains_from_design", "design_from_gains", "grid_code_current",
    "v_zq", "equilibria", "min_fault_voltage", "first_order_equilibrium",
    "SETTLING_CONSTANT", "SINGLE_EP_TOL",
]
