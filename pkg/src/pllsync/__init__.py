"""Phase-swing simulation of PLL-synchronized converters under grid faults."""
from .adaptive import (PllMode, RocofDetector, SwitchThresholds, check_thresholds,
                       freeze_pll_phase, mode_switch, rocof1_upper_bound, rocof_step)
from .critical import CriticalZetaResult, critical_zeta, critical_zeta_curve, ratio_scenario
from .dynamics import (Classification, IntegrationDivergedError, ModelValidityError,
                       SwingState, Trajectory, classify, delta_dot, integrate, phase_portrait,
                       second_order_rhs)
from .report import diagnostics, power_factor_angle, run_critical_zeta, run_portrait, run_simulate
from .scenario import Event, Scenario, ScenarioError, fault_scenario, parse_scenario, serialize_scenario
from .system import (CurrentRef, EquilibriumKind, EquilibriumSet, GridParams, PllDesign, PllKind,
                     design_from_gains, equilibria, gains_from_design, grid_code_current,
                     min_fault_voltage, v_zq)

__version__ = "0.1.0"
