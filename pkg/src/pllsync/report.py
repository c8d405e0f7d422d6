"""Diagnostics and file output for simulation runs.

CSV files carry a ``# schema=1`` line and a units line ahead of the header.
Floats are written with 9 significant digits so repeated runs are byte-identical.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .critical import CriticalZetaResult, critical_zeta, critical_zeta_curve
from .dynamics import Classification, Trajectory, fault_on_scenario, integrate, phase_portrait
from .scenario import Scenario
from .system import equilibria, min_fault_voltage

SCHEMA = "# schema=1"
FLOAT_FMT = "{:.9g}"
FAULT_VOLTAGE = 0.9
SETTLED_FRACTION = 0.2

EXIT_CODES = {
    Classification.CONVERGED: 0,
    Classification.LOST_SYNCHRONISM: 2,
    Classification.UNDETERMINED: 3,
}
EXIT_IO_ERROR = 1

TIMESERIES_COLUMNS = ("t_s", "delta_rad", "omega_dev_rad_s", "v_pccq_pu", "mode", "ki_active",
                      "rocof_hz_s", "i_d_pu", "i_q_pu", "v_gcp_pu", "phi_deg")


def power_factor_angle(traj: Trajectory, scenario: Scenario) -> np.ndarray:
    """Angle of the PCC voltage ahead of the injected current, in degrees.

    The PCC voltage is built in the PLL frame as ``v_gcp e^{-j delta}`` plus the
    drop of ``(r + j x)(i_d + j i_q)``. NaN where no current flows.
    """
    g = scenario.grid
    if scenario.freq_dependent:
        x = (g.omega_gn + traj.omega_dev) * g.l_line
    else:
        x = np.full_like(traj.t, g.x_line_nom)
    r = g.r_line
    vd = traj.v_gcp * np.cos(traj.delta) + r * traj.i_d - x * traj.i_q
    vq = -traj.v_gcp * np.sin(traj.delta) + r * traj.i_q + x * traj.i_d
    phi = np.arctan2(vq, vd) - np.arctan2(traj.i_q, traj.i_d)
    phi = (phi + np.pi) % (2 * np.pi) - np.pi
    phi = np.degrees(phi)
    phi[np.hypot(traj.i_d, traj.i_q) == 0] = np.nan
    return phi


def diagnostics(traj: Trajectory, scenario: Scenario) -> dict:
    """Per-fault-segment power-factor angle and reactive-injection accuracy.

    ``phi_mean_deg`` averages the whole segment, ``phi_settled_deg`` its final
    20 %. ``reactive_accuracy`` is the mean of ``sin(phi)``: the share of the
    injected current that is actually in quadrature with the PCC voltage.
    """
    phi = power_factor_angle(traj, scenario)
    out = {"phi_deg": phi, "fault_segments": []}
    for seg in traj.segments:
        if seg.event.v_gcp >= FAULT_VOLTAGE or seg.stop <= seg.start:
            continue
        p = phi[seg.start:seg.stop]
        n_settled = max(1, int(round(SETTLED_FRACTION * len(p))))
        tail = p[-n_settled:]
        entry = {"t_start": seg.t_start, "t_end": float(traj.t[seg.stop - 1]),
                 "phi_mean_deg": None, "phi_settled_deg": None, "reactive_accuracy": None}
        if np.all(np.isfinite(p)):
            entry["phi_mean_deg"] = float(np.mean(p))
            entry["phi_settled_deg"] = float(np.mean(tail))
            entry["reactive_accuracy"] = float(np.mean(np.sin(np.radians(p))))
        out["fault_segments"].append(entry)
    return out


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return "n/a"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return FLOAT_FMT.format(x)


def write_timeseries(path, traj: Trajectory, phi: np.ndarray):
    names = traj.mode_names
    with open(path, "w", newline="\n") as fh:
        fh.write(SCHEMA + "\n")
        fh.write("# units: angles rad, omega_dev rad/s, rocof Hz/s, voltages and currents pu, "
                 "phi deg\n")
        fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
        cols = (traj.t, traj.delta, traj.omega_dev, traj.v_pccq, names, traj.ki_active,
                traj.rocof, traj.i_d, traj.i_q, traj.v_gcp, phi)
        for row in zip(*cols):
            fh.write(",".join(_fmt(v if isinstance(v, str) else float(v)) for v in row) + "\n")


def _summary_lines(traj: Trajectory, scenario: Scenario, diag: dict) -> list[str]:
    lines = [f"classification: {traj.classification.value}",
             f"pll: kind={scenario.pll.kind.value} kp={_fmt(scenario.pll.kp)} "
             f"ki={_fmt(scenario.pll.ki)} zeta={_fmt(scenario.pll.zeta(scenario.grid.v_gn))}",
             f"peak_rate_rad_s: {_fmt(traj.metrics.get('peak_rate'))}", ""]
    faults = iter(diag["fault_segments"])
    for k, seg in enumerate(traj.segments):
        eq = seg.eq
        lines.append(f"[segment {k}] t={_fmt(seg.t_start)} v_gcp={_fmt(seg.event.v_gcp)} "
                     f"i_d={_fmt(seg.current.i_d)} i_q={_fmt(seg.current.i_q)}")
        lines.append(f"  equilibria: {eq.kind.value} v_zq={_fmt(eq.v_zq)} "
                     f"sep={_fmt(eq.sep)} uep={_fmt(eq.uep)}")
        lines.append(f"  min_fault_voltage: "
                     f"{_fmt(min_fault_voltage(seg.current, scenario.grid, scenario.freq_dependent))}")
        lines.append(f"  classification: {seg.classification.value}")
        lines.append(f"  final_error_rad: {_fmt(seg.metrics.get('final_error'))} "
                     f"uep_crossing_t: {_fmt(seg.metrics.get('uep_crossing_t'))}")
        if seg.event.v_gcp < FAULT_VOLTAGE:
            d = next(faults, None)
            if d is not None:
                def deg(x):
                    return "n/a" if x is None else _fmt(x)
                lines.append(f"  phi_mean_deg: {deg(d['phi_mean_deg'])} "
                             f"phi_settled_deg: {deg(d['phi_settled_deg'])} "
                             f"reactive_accuracy: {deg(d['reactive_accuracy'])}")
    return lines


def run_simulate(scenario: Scenario, out_dir) -> int:
    """Write ``timeseries.csv`` and ``summary.txt``; return the exit status."""
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        traj = integrate(scenario)
        diag = diagnostics(traj, scenario)
        write_timeseries(out / "timeseries.csv", traj, diag["phi_deg"])
        (out / "summary.txt").write_text("\n".join(_summary_lines(traj, scenario, diag)) + "\n")
    except OSError:
        return EXIT_IO_ERROR
    return EXIT_CODES[traj.classification]


def init_grid(scenario: Scenario, n: int = 5, span_delta: float = 0.5,
              span_rate: float = 10.0) -> list[tuple[float, float]]:
    """``n x n`` initial points centred on the fault-on SEP."""
    fault, _ = fault_on_scenario(scenario)
    ev = fault.timeline[0]
    eq = equilibria(ev.current_ref(), ev.v_gcp, fault.grid, fault.freq_dependent)
    if not eq.exists:
        raise ValueError("no equilibrium during the fault")
    ds = np.linspace(-span_delta, span_delta, n) + eq.sep
    rs = np.linspace(-span_rate, span_rate, n)
    return [(float(d), float(r)) for d in ds for r in rs]


def run_portrait(scenario: Scenario, init_points, out_dir, t_max: float | None = None) -> int:
    """``portrait_<k>.csv`` per initial point plus ``manifest.txt``."""
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trajs = phase_portrait(scenario, None, init_points, t_max=t_max)
        fault, _ = fault_on_scenario(scenario)
        ev = fault.timeline[0]
        eq = equilibria(ev.current_ref(), ev.v_gcp, fault.grid, fault.freq_dependent)
        manifest = [SCHEMA, f"equilibria: {eq.kind.value}", f"sep_rad: {_fmt(eq.sep)}",
                    f"uep_rad: {_fmt(eq.uep)}", "portrait,delta0_rad,delta_dot0_rad_s,classification"]
        for k, tr in enumerate(trajs):
            with open(out / f"portrait_{k}.csv", "w", newline="\n") as fh:
                fh.write(SCHEMA + "\n")
                fh.write("delta_rad,delta_dot_rad_s\n")
                for d, dd in zip(tr.delta, tr.delta_dot):
                    fh.write(f"{_fmt(float(d))},{_fmt(float(dd))}\n")
            manifest.append(f"{k},{_fmt(float(tr.delta[0]))},{_fmt(float(tr.delta_dot[0]))},"
                            f"{tr.classification.value}")
        (out / "manifest.txt").write_text("\n".join(manifest) + "\n")
    except OSError:
        return EXIT_IO_ERROR
    worst = max(trajs, key=lambda tr: EXIT_CODES[tr.classification])
    return EXIT_CODES[worst.classification]


def write_critical_zeta(path, results: list[CriticalZetaResult]):
    with open(path, "w", newline="\n") as fh:
        fh.write(SCHEMA + "\n")
        fh.write("ratio,zeta_crit,bracket_lo,bracket_hi,status\n")
        for r in results:
            lo, hi = r.bracket
            fh.write(",".join([_fmt(r.ratio), _fmt(r.zeta_crit), _fmt(lo), _fmt(hi), r.status])
                     + "\n")


def run_critical_zeta(out_dir, ratios=None, scenario: Scenario | None = None,
                      t_s: float = 0.1, workers: int = 1, **kw) -> list[CriticalZetaResult]:
    """Critical damping for a ratio list or a single scenario into ``critical_zeta.csv``."""
    if scenario is not None:
        results = [critical_zeta(scenario, t_s, **kw)]
    else:
        grid = kw.pop("grid", None)
        results = critical_zeta_curve(ratios or [], grid, t_s, workers=workers, **kw)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_critical_zeta(out / "critical_zeta.csv", results)
    return results

