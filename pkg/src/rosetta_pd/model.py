"""Canonical in-memory representation of designs and technologies.

All geometry is integer DBU (database units); microns appear only at I/O
boundaries. Designs are immutable once built: transformations return new
objects via :func:`dataclasses.replace`, so concurrent readers are safe.

Pin-direction convention: a ``NetPin.direction`` records the pin's *role on
the net* (OUTPUT = driver, INPUT = sink). Instance pins take the master pin
direction; an endpoint on a design-level IO pin takes the flipped IO
direction, because an INPUT pad drives internal logic. This is the convention
net-sanity rules (all-input / all-output detection) operate on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

from .errors import InvalidDesignError

# Pin directions.
INPUT = "INPUT"
OUTPUT = "OUTPUT"
INOUT = "INOUT"
DIRECTIONS = (INPUT, OUTPUT, INOUT)

# Master cell classes.
CORE = "CORE"
COVER = "COVER"

# Tier tags.
TIER_NONE = "NONE"
BOTTOM = "BOTTOM"
UPPER = "UPPER"
BOND = "BOND"

# Layer kinds.
ROUTING = "ROUTING"
CUT = "CUT"
MASTERSLICE = "MASTERSLICE"

# The eight canonical placement orientations.
ORIENTATIONS = ("N", "S", "E", "W", "FN", "FS", "FE", "FW")

Point = tuple[int, int]


def flip_direction(direction: str) -> str:
    """Map a design-level IO direction onto its role on a net."""
    if direction == INPUT:
        return OUTPUT
    if direction == OUTPUT:
        return INPUT
    return INOUT


class Rect(NamedTuple):
    lx: int
    ly: int
    ux: int
    uy: int

    @property
    def width(self) -> int:
        return self.ux - self.lx

    @property
    def height(self) -> int:
        return self.uy - self.ly

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, other: "Rect") -> bool:
        return (self.lx <= other.lx and self.ly <= other.ly
                and self.ux >= other.ux and self.uy >= other.uy)

    def overlaps(self, other: "Rect") -> bool:
        """True when interiors intersect (shared edges do not count)."""
        return (self.lx < other.ux and other.lx < self.ux
                and self.ly < other.uy and other.ly < self.uy)

    def union(self, other: "Rect") -> "Rect":
        return Rect(min(self.lx, other.lx), min(self.ly, other.ly),
                    max(self.ux, other.ux), max(self.uy, other.uy))


class PortRect(NamedTuple):
    layer: str
    rect: Rect


@dataclass(frozen=True)
class MasterPin:
    """A pin on a master. ``offset`` locates the pin relative to the cell
    origin and is derived from port geometry (bbox center) when present,
    otherwise it defaults to the cell center."""

    name: str
    direction: str = INOUT
    hidden: bool = False
    offset: Point = (0, 0)
    ports: tuple[PortRect, ...] = ()


@dataclass(frozen=True)
class Master:
    name: str
    width: int
    height: int
    area: int
    cell_class: str = CORE
    pins: tuple[MasterPin, ...] = ()
    site: str = ""
    tier_tag: str = TIER_NONE
    obs: tuple[PortRect, ...] = ()

    @cached_property
    def pin_by_name(self) -> dict[str, MasterPin]:
        return {p.name: p for p in self.pins}


@dataclass(frozen=True)
class Instance:
    name: str
    master: str
    location: Optional[Point] = None
    orientation: str = "N"
    fixed: bool = False
    tier: Optional[str] = None


@dataclass(frozen=True)
class NetPin:
    """One endpoint of a net. ``instance`` is None for IO-pin endpoints, in
    which case ``pin`` names the IoPin. ``offset`` (absolute, relative to the
    instance origin) overrides the master-pin offset when present."""

    instance: Optional[str]
    pin: str
    direction: str = INOUT
    offset: Optional[Point] = None


class RouteSeg(NamedTuple):
    layer: str
    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def length(self) -> int:
        return abs(self.x2 - self.x1) + abs(self.y2 - self.y1)


class RouteVia(NamedTuple):
    via: str
    x: int
    y: int


@dataclass(frozen=True)
class Net:
    name: str
    pins: tuple[NetPin, ...] = ()
    weight: float = 1
    route: Optional[tuple[RouteSeg, ...]] = None
    route_vias: tuple[RouteVia, ...] = ()


@dataclass(frozen=True)
class IoPin:
    name: str
    direction: str = INOUT
    location: Optional[Point] = None


@dataclass(frozen=True)
class Site:
    name: str
    width: int
    height: int


@dataclass(frozen=True)
class Layer:
    name: str
    kind: str
    pitch: int = 0
    width: int = 0
    spacing: int = 0
    direction: str = ""


@dataclass(frozen=True)
class ViaDef:
    name: str
    bottom: str
    cut: str
    top: str
    cut_rects: tuple[Rect, ...] = ()
    resistance: float = 0.0


@dataclass(frozen=True)
class Row:
    name: str
    site: str
    origin: Point
    num_sites: int
    step: int


@dataclass(frozen=True)
class TechStack:
    name: str
    units: int = 1000
    layers: tuple[Layer, ...] = ()
    sites: tuple[Site, ...] = ()
    vias: tuple[ViaDef, ...] = ()
    tiered: bool = False
    tier_of_layer: dict = field(default_factory=dict)

    @cached_property
    def layer_by_name(self) -> dict[str, Layer]:
        return {l.name: l for l in self.layers}

    def routing_layers(self) -> list[Layer]:
        return [l for l in self.layers if l.kind == ROUTING]


@dataclass(frozen=True)
class Design:
    name: str
    units: int = 1000
    die: Rect = Rect(0, 0, 0, 0)
    core: Rect = Rect(0, 0, 0, 0)
    masters: tuple[Master, ...] = ()
    instances: tuple[Instance, ...] = ()
    nets: tuple[Net, ...] = ()
    rows: tuple[Row, ...] = ()
    io_pins: tuple[IoPin, ...] = ()
    sites: tuple[Site, ...] = ()

    @cached_property
    def master_by_name(self) -> dict[str, Master]:
        return {m.name: m for m in self.masters}

    @cached_property
    def instance_by_name(self) -> dict[str, Instance]:
        return {i.name: i for i in self.instances}

    @cached_property
    def net_by_name(self) -> dict[str, Net]:
        return {n.name: n for n in self.nets}

    @cached_property
    def io_by_name(self) -> dict[str, IoPin]:
        return {p.name: p for p in self.io_pins}

    @cached_property
    def site_by_name(self) -> dict[str, Site]:
        return {s.name: s for s in self.sites}


@dataclass(frozen=True)
class Violation:
    code: str
    locus: str
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, locus: str, detail: str = "") -> None:
        self.violations.append(Violation(code, locus, detail))

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


@dataclass(frozen=True)
class StatsRecord:
    num_instances: int
    num_nets: int
    num_pins: int
    stdcell_area: int
    avg_net_degree: float


def instance_bbox(design: Design, inst: Instance) -> Optional[Rect]:
    """Bounding box of a placed instance, None when unplaced or master unknown."""
    if inst.location is None:
        return None
    master = design.master_by_name.get(inst.master)
    if master is None:
        return None
    x, y = inst.location
    return Rect(x, y, x + master.width, y + master.height)


def net_pin_location(design: Design, pin: NetPin) -> Optional[Point]:
    """Absolute location of a net endpoint; None when it cannot be placed."""
    if pin.instance is None:
        io = design.io_by_name.get(pin.pin)
        return io.location if io is not None else None
    inst = design.instance_by_name.get(pin.instance)
    if inst is None or inst.location is None:
        return None
    if pin.offset is not None:
        off = pin.offset
    else:
        master = design.master_by_name.get(inst.master)
        if master is None:
            return None
        mpin = master.pin_by_name.get(pin.pin)
        if mpin is None:
            return None
        off = mpin.offset
    return (inst.location[0] + off[0], inst.location[1] + off[1])


def _duplicates(names: list[str]) -> list[str]:
    seen: set[str] = set()
    dups = []
    for n in names:
        if n in seen:
            dups.append(n)
        seen.add(n)
    return dups


def validate_design(design: Design) -> ValidationReport:
    """Check every core-model invariant; violations are data, not failures."""
    rep = ValidationReport()

    if design.die.width < 0 or design.die.height < 0:
        rep.add("NEGATIVE_EXTENT", "die")
    if design.core.width < 0 or design.core.height < 0:
        rep.add("NEGATIVE_EXTENT", "core")
    if not design.die.contains(design.core):
        rep.add("CORE_OUTSIDE_DIE", "core")

    for m in design.masters:
        if m.area != m.width * m.height:
            rep.add("AREA_MISMATCH", m.name,
                    f"area {m.area} != {m.width}x{m.height}")

    for dup in _duplicates([i.name for i in design.instances]):
        rep.add("DUPLICATE_INSTANCE", dup)
    for dup in _duplicates([n.name for n in design.nets]):
        rep.add("DUPLICATE_NET", dup)

    masters = design.master_by_name
    for inst in design.instances:
        master = masters.get(inst.master)
        if master is None:
            rep.add("UNKNOWN_MASTER", inst.name, inst.master)
            continue
        if inst.orientation not in ORIENTATIONS:
            rep.add("BAD_ORIENTATION", inst.name, inst.orientation)
        if (inst.tier is not None and master.tier_tag != TIER_NONE
                and inst.tier != master.tier_tag):
            rep.add("TIER_MISMATCH", inst.name,
                    f"instance tier {inst.tier} vs master {master.tier_tag}")
        bbox = instance_bbox(design, inst)
        if bbox is not None and not design.die.contains(bbox):
            rep.add("INSTANCE_OUTSIDE_DIE", inst.name)

    instances = design.instance_by_name
    ios = design.io_by_name
    for net in design.nets:
        if net.weight < 0:
            rep.add("NEGATIVE_WEIGHT", net.name, str(net.weight))
        for pin in net.pins:
            if pin.instance is None:
                if pin.pin not in ios:
                    rep.add("DANGLING_PIN", net.name, f"io pin {pin.pin}")
                continue
            inst = instances.get(pin.instance)
            if inst is None:
                rep.add("DANGLING_PIN", net.name, f"instance {pin.instance}")
                continue
            master = masters.get(inst.master)
            if master is None:
                continue  # already reported as UNKNOWN_MASTER
            mpin = master.pin_by_name.get(pin.pin)
            if mpin is None:
                rep.add("DANGLING_PIN", net.name,
                        f"{pin.instance}.{pin.pin} not on {master.name}")
            elif mpin.hidden:
                rep.add("HIDDEN_PIN_IN_NET", net.name,
                        f"{pin.instance}.{pin.pin}")

    sites = design.site_by_name
    row_rects: list[tuple[str, Rect]] = []
    for row in design.rows:
        site = sites.get(row.site)
        if site is None:
            rep.add("ROW_UNKNOWN_SITE", row.name, row.site)
            continue
        if row.step != site.width:
            rep.add("ROW_STEP_MISMATCH", row.name,
                    f"step {row.step} != site width {site.width}")
        x, y = row.origin
        row_rects.append((row.name,
                          Rect(x, y, x + row.num_sites * row.step,
                               y + site.height)))
    for i, (name_a, ra) in enumerate(row_rects):
        for name_b, rb in row_rects[i + 1:]:
            if ra.overlaps(rb):
                rep.add("ROW_OVERLAP", name_a, name_b)

    return rep


def _fmt_num(value) -> str:
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def _fmt_point(p: Optional[Point]) -> str:
    return "-" if p is None else f"{p[0]},{p[1]}"


def _canonical_lines(design: Design, connectivity_only: bool = False,
                     with_pins: bool = True) -> list[str]:
    lines: list[str] = []
    if not connectivity_only:
        lines.append(f"design {design.name} units {design.units}")
        lines.append(f"die {design.die} core {design.core}")
        for s in sorted(design.sites, key=lambda s: s.name):
            lines.append(f"site {s.name} {s.width} {s.height}")
        for m in sorted(design.masters, key=lambda m: m.name):
            lines.append(f"master {m.name} {m.width} {m.height} {m.area} "
                         f"{m.cell_class} {m.site} {m.tier_tag}")
            for p in sorted(m.pins, key=lambda p: p.name):
                lines.append(f"  pin {p.name} {p.direction} {int(p.hidden)} "
                             f"{_fmt_point(p.offset)}")
                for port in sorted(p.ports):
                    lines.append(f"    port {port.layer} {port.rect}")
            for ob in sorted(m.obs):
                lines.append(f"  obs {ob.layer} {ob.rect}")
        for inst in sorted(design.instances, key=lambda i: i.name):
            lines.append(f"inst {inst.name} {inst.master} "
                         f"{_fmt_point(inst.location)} {inst.orientation} "
                         f"{int(inst.fixed)} {inst.tier or '-'}")
        for io in sorted(design.io_pins, key=lambda p: p.name):
            lines.append(f"io {io.name} {io.direction} "
                         f"{_fmt_point(io.location)}")
        for row in sorted(design.rows, key=lambda r: r.name):
            lines.append(f"row {row.name} {row.site} {_fmt_point(row.origin)} "
                         f"{row.num_sites} {row.step}")
    else:
        for name in sorted(i.name for i in design.instances):
            lines.append(f"inst {name}")
        for name in sorted(p.name for p in design.io_pins):
            lines.append(f"io {name}")

    for net in sorted(design.nets, key=lambda n: n.name):
        header = f"net {net.name}"
        if not connectivity_only:
            header += f" w {_fmt_num(net.weight)}"
        lines.append(header)
        if with_pins:
            keys = sorted((p.instance or "", p.pin, p.direction,
                           _fmt_point(p.offset) if not connectivity_only else "")
                          for p in net.pins)
        else:
            keys = sorted((p.instance or "", p.pin if p.instance is None else "",
                           p.direction, "") for p in net.pins)
        for inst, pin, direction, off in keys:
            lines.append(f"  p {inst}|{pin}|{direction}|{off}")
        if not connectivity_only and net.route is not None:
            for seg in sorted(net.route):
                lines.append(f"  seg {seg.layer} {seg.x1} {seg.y1} "
                             f"{seg.x2} {seg.y2}")
            for via in sorted(net.route_vias):
                lines.append(f"  via {via.via} {via.x} {via.y}")
    return lines


def canonical_digest(design: Design) -> str:
    """Order-independent SHA-256 over the design semantics.

    Storage order of masters/instances/nets never affects the digest; any
    semantic change (a location moved by 1 DBU, a pin added) does. Raises
    InvalidDesignError when the design fails validation.
    """
    report = validate_design(design)
    if not report.ok:
        raise InvalidDesignError(
            f"{design.name}: {len(report.violations)} violation(s), "
            f"first: {report.violations[0]}")
    text = "\n".join(_canonical_lines(design))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def connectivity_digest(design: Design, with_pins: bool = True) -> str:
    """Digest over names and net endpoints only (no geometry, no masters).

    ``with_pins=False`` additionally drops instance pin names, which is the
    projection preserved by formats without a pin concept (Bookshelf).
    """
    text = "\n".join(_canonical_lines(design, connectivity_only=True,
                                      with_pins=with_pins))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def design_stats(design: Design) -> StatsRecord:
    """Statically computable design statistics.

    Std-cell area excludes COVER-class masters and is exact integer
    arithmetic in DBU^2. Average net degree is 0 for net-less designs.
    """
    report = validate_design(design)
    if not report.ok:
        raise InvalidDesignError(
            f"{design.name}: {len(report.violations)} violation(s)")
    masters = design.master_by_name
    area = 0
    for inst in design.instances:
        m = masters[inst.master]
        if m.cell_class != COVER:
            area += m.area
    pin_count = sum(len(n.pins) for n in design.nets)
    nets = len(design.nets)
    return StatsRecord(
        num_instances=len(design.instances),
        num_nets=nets,
        num_pins=pin_count,
        stdcell_area=area,
        avg_net_degree=(pin_count / nets) if nets else 0.0,
    )


def validate_tech(stack: TechStack) -> list[str]:
    """Check TechStack invariants; returns human-readable problem strings."""
    problems = []
    prev_kind = None
    for layer in stack.layers:
        if layer.kind == CUT and prev_kind == CUT:
            problems.append(f"adjacent CUT layers at {layer.name}")
        prev_kind = layer.kind
    index = {l.name: i for i, l in enumerate(stack.layers)}
    for via in stack.vias:
        missing = [n for n in (via.bottom, via.cut, via.top) if n not in index]
        if missing:
            problems.append(f"via {via.name} references unknown {missing}")
            continue
        if not index[via.bottom] < index[via.cut] < index[via.top]:
            problems.append(f"via {via.name} layers not in stack order")
    if stack.tiered:
        for layer in stack.layers:
            if layer.name not in stack.tier_of_layer:
                problems.append(f"layer {layer.name} missing tier assignment")
    return problems
