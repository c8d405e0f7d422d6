"""Command-line entry point: ``pllsync <command> [options]``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .adaptive import rocof1_upper_bound
from .report import EXIT_IO_ERROR, init_grid, run_critical_zeta, run_portrait, run_simulate
from .scenario import Scenario, ScenarioError, parse_scenario
from .system import CurrentRef, GridParams, PllDesign, equilibria, min_fault_voltage


def _load(args) -> Scenario:
    text = Path(args.scenario).read_text() if args.scenario else ""
    scn = parse_scenario(text)
    changes = {}
    if getattr(args, "dt", None) is not None:
        changes["h"] = args.dt
    if getattr(args, "tmax", None) is not None:
        changes["t_max"] = args.tmax
    return scn.replace(**changes) if changes else scn


def _common(p: argparse.ArgumentParser, scenario_required=False):
    p.add_argument("--scenario", required=scenario_required, help="scenario file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--dt", type=float, help="integration step [s]")
    p.add_argument("--tmax", type=float, help="simulated time [s]")


def _parse_points(text: str) -> list[tuple[float, float]]:
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            d, dd = chunk.split(",")
            pts.append((float(d), float(dd)))
    return pts


def cmd_simulate(args) -> int:
    code = run_simulate(_load(args), args.out)
    print((Path(args.out) / "summary.txt").read_text() if code != EXIT_IO_ERROR
          else f"cannot write to {args.out}")
    return code


def cmd_portrait(args) -> int:
    scn = _load(args)
    if args.init:
        points = _parse_points(args.init)
    elif args.grid:
        points = init_grid(scn, args.grid)
    else:
        points = None
    code = run_portrait(scn, points, args.out, t_max=args.tmax)
    if code != EXIT_IO_ERROR:
        print((Path(args.out) / "manifest.txt").read_text())
    return code


def cmd_critical_zeta(args) -> int:
    kw = dict(zeta_init=args.zeta_init, coarse_step=args.step, tol=args.tol,
              zeta_max=args.zeta_max, limit_frequency=args.limit_frequency)
    if args.dt is not None:
        kw["h"] = args.dt
    if args.ratios:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
        results = run_critical_zeta(args.out, ratios=ratios, t_s=args.t_s,
                                    workers=args.workers, **kw)
    else:
        results = run_critical_zeta(args.out, scenario=_load(args), t_s=args.t_s, **kw)
    for r in results:
        z = "none" if r.zeta_crit is None else f"{r.zeta_crit:.4f}"
        print(f"ratio={r.ratio:.4f} zeta_crit={z} status={r.status}")
    return 0


def cmd_bound(args) -> int:
    grid = GridParams(v_gn=args.v_gn, r_line=args.r_line)
    pll = PllDesign.from_design(1.0, args.t_s, v_gn=args.v_gn)
    b = rocof1_upper_bound(pll, grid, args.i_max, args.delta_t, args.t_filter)
    print(f"rocof_1 upper bound: {b:.6g} Hz/s")
    return 0


def cmd_equilibria(args) -> int:
    scn = _load(args)
    for ev in scn.timeline:
        ref = ev.current_ref()
        eq = equilibria(ref, ev.v_gcp, scn.grid, scn.freq_dependent)
        vmin = min_fault_voltage(ref, scn.grid, scn.freq_dependent)
        line = (f"t={ev.t:g} v_gcp={ev.v_gcp:g} i_d={ref.i_d:.4g} i_q={ref.i_q:.4g} "
                f"kind={eq.kind.value} v_zq={eq.v_zq:.6g}")
        if eq.exists:
            line += (f" sep={eq.sep:.6f} uep={eq.uep:.6f}"
                     f" pf_angle_deg={math.degrees(_pf_at(eq, ref, scn.grid)):.3f}")
        print(f"{line} min_fault_voltage={vmin:.6g}")
    return 0


def _pf_at(eq, ref: CurrentRef, grid: GridParams) -> float:
    """Power-factor angle at the SEP (diagnostic only)."""
    if ref.magnitude == 0:
        return math.nan
    vd = eq.v_gcp * math.cos(eq.sep) + grid.r_line * ref.i_d - grid.x_line() * ref.i_q
    vq = -eq.v_gcp * math.sin(eq.sep) + grid.r_line * ref.i_q + grid.x_line() * ref.i_d
    phi = math.atan2(vq, vd) - math.atan2(ref.i_q, ref.i_d)
    return (phi + math.pi) % (2 * math.pi) - math.pi


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pllsync", description="Phase-swing simulation of PLL-synchronized converters.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario, write timeseries.csv and summary.txt")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("portrait", help="phase portraits from the fault instant")
    _common(p)
    p.add_argument("--init", help='initial points "delta,delta_dot;..." in rad, rad/s')
    p.add_argument("--grid", type=int, help="n x n initial points around the fault SEP")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("critical-zeta", help="critical damping ratio search")
    _common(p)
    p.add_argument("--ratios", help="comma-separated |v_zq|/v_gcp ratios in (0, 1]")
    p.add_argument("--t-s", dest="t_s", type=float, default=0.1, help="settling time [s]")
    p.add_argument("--zeta-init", type=float, default=0.1)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--zeta-max", type=float, default=10.0)
    p.add_argument("--limit-frequency", action="store_true",
                   help="keep the PLL frequency limiter active during trials")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_critical_zeta)

    p = sub.add_parser("bound", help="upper bound on the switch-to-first-order threshold")
    p.add_argument("--v-gn", type=float, default=1.0)
    p.add_argument("--i-max", type=float, default=1.0)
    p.add_argument("--r-line", type=float, default=0.1)
    p.add_argument("--t-s", dest="t_s", type=float, default=0.1)
    p.add_argument("--delta-t", type=float, default=0.01)
    p.add_argument("--t-filter", type=float, default=0.2)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("equilibria", help="equilibria of every timeline segment")
    _common(p)
    p.set_defaults(func=cmd_equilibria)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
