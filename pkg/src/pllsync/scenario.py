"""Fault scenarios and their plain-text file format.

A scenario file is a flat ``key = value`` document split into sections::

    # 0.28 + j0.1 pu line, zeta = 1.5 loop, 0.14 pu sag cleared after 0.6 s
    [grid]
    x_line = 0.28
    r_line = 0.1
    f_offset_hz = 0

    [pll]
    kind = srf          # srf | first_order | adaptive | freeze
    zeta = 1.5          # either zeta + t_s ...
    t_s = 0.1           # ... or kp + ki
    f_limit_hz = 5

    [event]
    t = 2.5 v_gcp = 0.14

    [event]
    t = 3.1 v_gcp = 1.0

Several pairs may share a line. ``[event]`` blocks repeat; each takes ``t``,
``v_gcp`` and optionally ``i_d`` + ``i_q`` (explicit current) and ``i_max``.
Without ``i_d``/``i_q`` the grid-code reactive-current policy applies. An event
at ``t = 0`` with ``v_gcp = 1`` is prepended when the first event is later.
Omitted keys take the defaults listed in ``SECTION_KEYS``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

from .adaptive import SwitchThresholds, check_thresholds
from .system import (CurrentRef, GridParams, PllDesign, PllKind, gains_from_design,
                     grid_code_current)

TWO_PI = 2 * math.pi

SECTION_KEYS = {
    "grid": {"v_gn": 1.0, "f_nom_hz": 50.0, "f_offset_hz": 0.0, "x_line": 0.28, "r_line": 0.1},
    "pll": {"kind": "srf", "zeta": 1.5, "t_s": 0.1, "kp": None, "ki": None, "f_limit_hz": 5.0},
    "adaptive": {"rocof_1": 5.0, "rocof_2": 0.5, "t_filter": 0.2},
    "sim": {"dt": 5e-5, "t_max": 5.0, "freq_dependent": True},
    "event": {"t": None, "v_gcp": None, "i_d": None, "i_q": None, "i_max": 1.0},
}

_PAIR = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^\s=]+)")


class ScenarioError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class Event:
    """Grid condition from time ``t`` on; ``current=None`` means grid-code policy."""

    t: float
    v_gcp: float
    current: CurrentRef | None = None
    i_max: float = 1.0

    def current_ref(self) -> CurrentRef:
        if self.current is not None:
            return self.current
        return grid_code_current(self.v_gcp, self.i_max)


def _default_pll() -> PllDesign:
    return PllDesign.from_design(1.5, 0.1)


@dataclass(frozen=True)
class Scenario:
    grid: GridParams = field(default_factory=GridParams)
    pll: PllDesign = field(default_factory=_default_pll)
    timeline: tuple[Event, ...] = (Event(0.0, 1.0),)
    thresholds: SwitchThresholds = field(default_factory=SwitchThresholds)
    t_filter: float = 0.2
    h: float = 5e-5
    t_max: float = 5.0
    freq_dependent: bool = True

    def __post_init__(self):
        tl = tuple(self.timeline)
        if not tl or tl[0].t > 0:
            tl = (Event(0.0, 1.0),) + tl
        if tl[0].t != 0:
            raise ScenarioError("the first event must be at t = 0")
        for a, b in zip(tl, tl[1:]):
            if not b.t > a.t:
                raise ScenarioError(f"events must be strictly increasing in t ({a.t} then {b.t})")
        for ev in tl:
            if ev.v_gcp < 0:
                raise ScenarioError(f"negative v_gcp at t={ev.t}")
        object.__setattr__(self, "timeline", tl)
        if not (self.h > 0 and self.t_max > 0):
            raise ScenarioError("dt and t_max must be positive")

    @property
    def grid_freq_offset(self) -> float:
        return self.grid.delta_omega_grid

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def with_pll(self, pll: PllDesign) -> "Scenario":
        return replace(self, pll=pll)

    def fault_index(self) -> int | None:
        """Index of the first event that lowers the voltage, if any."""
        for k in range(1, len(self.timeline)):
            if self.timeline[k].v_gcp < self.timeline[k - 1].v_gcp:
                return k
        return None


def fault_scenario(v_fault: float, pll: PllDesign | None = None, *, t_fault: float = 2.5,
                   t_clear: float | None = 3.1, grid: GridParams | None = None,
                   pre: CurrentRef | None = None, during: CurrentRef | None = None,
                   **kw) -> Scenario:
    """Symmetrical sag from 1 pu at ``t_fault``, optionally cleared at ``t_clear``.

    Currents default to the grid-code policy; pass ``pre``/``during`` to pin them.
    """
    events = [Event(0.0, 1.0, pre), Event(t_fault, v_fault, during)]
    if t_clear is not None:
        events.append(Event(t_clear, 1.0, pre))
    return Scenario(grid=grid or GridParams(), pll=pll or _default_pll(),
                    timeline=tuple(events), **kw)


def _coerce(section: str, key: str, raw: str, line: int):
    default = SECTION_KEYS[section][key]
    if key == "kind":
        try:
            return PllKind(raw.lower())
        except ValueError:
            raise ScenarioError(f"unknown PLL kind {raw!r}", line) from None
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ScenarioError(f"{key} expects a boolean, got {raw!r}", line)
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"{key} expects a number, got {raw!r}", line) from None


def _tokenize(text: str):
    """Yield ``(line_no, section_or_None, pairs)`` per meaningful line."""
    for no, full in enumerate(text.splitlines(), start=1):
        line = full.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
            if not m:
                raise ScenarioError(f"malformed section header {line!r}", no)
            yield no, m.group(1).lower(), None
            continue
        pairs = _PAIR.findall(line)
        if not pairs or _PAIR.sub("", line).strip():
            raise ScenarioError(f"cannot parse {line!r}", no)
        yield no, None, pairs


def parse_scenario(text: str) -> Scenario:
    sections: dict[str, dict] = {}
    events: list[tuple[int, dict]] = []
    current = None
    for no, header, pairs in _tokenize(text):
        if header is not None:
            if header not in SECTION_KEYS:
                raise ScenarioError(f"unknown section [{header}]", no)
            if header == "event":
                events.append((no, {}))
                current = events[-1][1]
            else:
                if header in sections:
                    raise ScenarioError(f"duplicate section [{header}]", no)
                current = sections.setdefault(header, {})
            current_name = header
            continue
        if current is None:
            raise ScenarioError("key outside of any section", no)
        for key, raw in pairs:
            if key not in SECTION_KEYS[current_name]:
                raise ScenarioError(f"unknown key {key!r} in [{current_name}]", no)
            if key in current:
                raise ScenarioError(f"duplicate key {key!r}", no)
            current[key] = (_coerce(current_name, key, raw, no), no)

    def get(sec, key):
        entry = sections.get(sec, {}).get(key)
        return SECTION_KEYS[sec][key] if entry is None else entry[0]

    g = GridParams(v_gn=get("grid", "v_gn"), omega_gn=TWO_PI * get("grid", "f_nom_hz"),
                   omega_g=TWO_PI * (get("grid", "f_nom_hz") + get("grid", "f_offset_hz")),
                   x_line_nom=get("grid", "x_line"), r_line=get("grid", "r_line"))

    pll_sec = sections.get("pll", {})
    has_gains = "kp" in pll_sec or "ki" in pll_sec
    has_design = "zeta" in pll_sec or "t_s" in pll_sec
    if has_gains and has_design:
        line = min(v[1] for k, v in pll_sec.items() if k in ("kp", "ki", "zeta", "t_s"))
        raise ScenarioError("give either kp/ki or zeta/t_s, not both", line)
    kind = get("pll", "kind")
    dw_max = TWO_PI * get("pll", "f_limit_hz")
    try:
        if has_gains:
            if "kp" not in pll_sec:
                raise ScenarioError("ki given without kp", pll_sec["ki"][1])
            ki = get("pll", "ki") if "ki" in pll_sec else 0.0
            pll = PllDesign(get("pll", "kp"), ki, kind, dw_max)
        else:
            pll = PllDesign.from_design(get("pll", "zeta"), get("pll", "t_s"), kind,
                                        g.v_gn, dw_max)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc), min((v[1] for v in pll_sec.values()), default=None)) from None

    try:
        thr = SwitchThresholds(get("adaptive", "rocof_1"), get("adaptive", "rocof_2"))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    t_filter = get("adaptive", "t_filter")

    timeline = []
    for no, ev in events:
        vals = {k: v[0] for k, v in ev.items()}
        for req in ("t", "v_gcp"):
            if req not in vals:
                raise ScenarioError(f"[event] is missing {req!r}", no)
        if ("i_d" in vals) != ("i_q" in vals):
            raise ScenarioError("give both i_d and i_q, or neither",
                                ev["i_d" if "i_d" in vals else "i_q"][1])
        i_max = vals.get("i_max", 1.0)
        try:
            cur = CurrentRef(vals["i_d"], vals["i_q"], i_max) if "i_d" in vals else None
        except ValueError as exc:
            raise ScenarioError(str(exc), no) from None
        if timeline and not vals["t"] > timeline[-1][1].t:
            raise ScenarioError("events must be strictly increasing in t", ev["t"][1])
        timeline.append((no, Event(vals["t"], vals["v_gcp"], cur, i_max)))
    if timeline and timeline[0][1].t < 0:
        raise ScenarioError("event time must be non-negative", timeline[0][0])

    try:
        scn = Scenario(grid=g, pll=pll, timeline=tuple(e for _, e in timeline),
                       thresholds=thr, t_filter=t_filter, h=get("sim", "dt"),
                       t_max=get("sim", "t_max"), freq_dependent=get("sim", "freq_dependent"))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if scn.pll.kind is PllKind.ADAPTIVE:
        check_thresholds(scn.thresholds, scn.pll, scn.grid, t_filter=scn.t_filter)
    return scn


def _hz(omega: float) -> float:
    """Frequency in Hz that converts back to exactly ``omega`` when one exists."""
    f = omega / TWO_PI
    for direction in (math.inf, -math.inf):
        g = f
        for _ in range(4):
            if TWO_PI * g == omega:
                return g
            g = math.nextafter(g, direction)
    return f


def serialize_scenario(scn: Scenario) -> str:
    """Inverse of :func:`parse_scenario`; gains are written as ``kp``/``ki``."""
    g = scn.grid
    f_nom = _hz(g.omega_gn)
    f_grid = _hz(g.omega_g)
    lines = [
        "[grid]",
        f"v_gn = {g.v_gn!r}",
        f"f_nom_hz = {f_nom!r}",
        f"f_offset_hz = {f_grid - f_nom!r}",
        f"x_line = {g.x_line_nom!r}",
        f"r_line = {g.r_line!r}",
        "",
        "[pll]",
        f"kind = {scn.pll.kind.value}",
        f"kp = {scn.pll.kp!r}",
        f"ki = {scn.pll.ki!r}",
        f"f_limit_hz = {_hz(scn.pll.delta_omega_max)!r}",
        "",
        "[adaptive]",
        f"rocof_1 = {scn.thresholds.rocof_1!r}",
        f"rocof_2 = {scn.thresholds.rocof_2!r}",
        f"t_filter = {scn.t_filter!r}",
        "",
        "[sim]",
        f"dt = {scn.h!r}",
        f"t_max = {scn.t_max!r}",
        f"freq_dependent = {'true' if scn.freq_dependent else 'false'}",
    ]
    for ev in scn.timeline:
        lines += ["", "[event]", f"t = {ev.t!r}", f"v_gcp = {ev.v_gcp!r}"]
        if ev.current is not None:
            lines += [f"i_d = {ev.current.i_d!r}", f"i_q = {ev.current.i_q!r}"]
        lines.append(f"i_max = {ev.i_max!r}")
    return "\n".join(lines) + "\n"
