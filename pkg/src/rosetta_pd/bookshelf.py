"""Bookshelf (.aux/.nodes/.nets/.pl/.scl/.wts) readers and writers.

The dialect follows the ISPD placement-contest convention: '#' starts a
comment, headers carry "NumNodes : N" style counts that must match the
record counts, and the .aux manifest names the member files. Bookshelf
coordinates are taken as DBU one-to-one; the ``units`` argument of
:func:`bundle_to_design` only declares the DBU resolution of the result.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from . import model
from .errors import (HeaderMismatchError, MissingFileError, ParseError,
                     ScaleOverflowError, UnknownNodeError)

MOVABLE = "movable"
TERMINAL = "terminal"
TERMINAL_NI = "terminal_NI"

# Largest coordinate magnitude representable by downstream fixed-width
# consumers (signed 64-bit DBU).
MAX_DBU = 2 ** 62

_ROLE_OF = {"I": model.INPUT, "O": model.OUTPUT, "B": model.INOUT}
_LETTER_OF = {model.INPUT: "I", model.OUTPUT: "O", model.INOUT: "B"}


@dataclass
class NodeRec:
    name: str
    width: float
    height: float
    movability: str = MOVABLE


@dataclass
class NetPinRec:
    node: str
    direction: str = ""  # I, O, B or empty
    offset: Optional[tuple[float, float]] = None  # relative to node center


@dataclass
class NetRec:
    name: str
    pins: list[NetPinRec] = field(default_factory=list)


@dataclass
class PlRec:
    name: str
    x: float
    y: float
    orientation: str = "N"
    fixed: bool = False


@dataclass
class RowRec:
    coordinate: float
    height: float
    sitewidth: float
    sitespacing: float
    siteorient: str = "N"
    sitesymmetry: str = "Y"
    subrow_origin: float = 0.0
    num_sites: int = 0


@dataclass
class BookshelfBundle:
    name: str
    nodes: list[NodeRec] = field(default_factory=list)
    nets: list[NetRec] = field(default_factory=list)
    pls: dict[str, PlRec] = field(default_factory=dict)
    rows: list[RowRec] = field(default_factory=list)
    wts: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def num_pins(self) -> int:
        return sum(len(n.pins) for n in self.nets)


@dataclass
class BookshelfManifest:
    aux: Path
    nodes: Path
    nets: Path
    wts: Path
    pl: Path
    scl: Path


def _content_lines(path: Path) -> Iterator[tuple[int, str]]:
    """Yield (lineno, line) skipping blank lines, comments, and the UCLA
    format banner."""
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].rstrip()
            if not line.strip():
                continue
            if line.lstrip().startswith("UCLA"):
                continue
            yield lineno, line


def _col_of(line: str, token: str) -> int:
    pos = line.find(token)
    return pos + 1 if pos >= 0 else 1


def _num(tok: str, path: Path, lineno: int, line: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", str(path),
                         lineno, _col_of(line, tok)) from None


def _header_count(tokens: list[str], path: Path, lineno: int,
                  line: str) -> int:
    # "NumNodes : 3" or "NumNodes:3"
    joined = " ".join(tokens)
    if ":" not in joined:
        raise ParseError("malformed header line", str(path), lineno, 1)
    value = joined.split(":", 1)[1].strip()
    if not value.split():
        raise ParseError("missing header count", str(path), lineno, 1)
    tok = value.split()[0]
    n = _num(tok, path, lineno, line)
    if n != int(n):
        raise ParseError("header count must be an integer", str(path),
                         lineno, _col_of(line, tok))
    return int(n)


def _check_trailing(tokens: list[str], expected: int, strict: bool,
                    warnings: list[str], path: Path, lineno: int,
                    line: str) -> None:
    if len(tokens) > expected:
        extra = " ".join(tokens[expected:])
        if strict:
            raise ParseError(f"unexpected trailing tokens: {extra!r}",
                             str(path), lineno, _col_of(line, tokens[expected]))
        warnings.append(f"{path}:{lineno}: ignored trailing tokens {extra!r}")


def _parse_nodes(path: Path, strict: bool, warnings: list[str]) -> list[NodeRec]:
    nodes: list[NodeRec] = []
    declared = declared_terms = None
    for lineno, line in _content_lines(path):
        tokens = line.split()
        if tokens[0] == "NumNodes":
            declared = _header_count(tokens, path, lineno, line)
            continue
        if tokens[0] == "NumTerminals":
            declared_terms = _header_count(tokens, path, lineno, line)
            continue
        if len(tokens) < 3:
            raise ParseError("node line needs name width height", str(path),
                             lineno, 1)
        name = tokens[0]
        width = _num(tokens[1], path, lineno, line)
        height = _num(tokens[2], path, lineno, line)
        movability = MOVABLE
        consumed = 3
        if len(tokens) > 3:
            tag = tokens[3].lower()
            if tag == "terminal":
                movability = TERMINAL
                consumed = 4
            elif tag == "terminal_ni":
                movability = TERMINAL_NI
                consumed = 4
        _check_trailing(tokens, consumed, strict, warnings, path, lineno, line)
        nodes.append(NodeRec(name, width, height, movability))
    if declared is not None and declared != len(nodes):
        raise HeaderMismatchError(
            f"{path}: NumNodes {declared} != {len(nodes)} records")
    terms = sum(1 for n in nodes if n.movability != MOVABLE)
    if declared_terms is not None and declared_terms != terms:
        raise HeaderMismatchError(
            f"{path}: NumTerminals {declared_terms} != {terms} records")
    return nodes


def _parse_nets(path: Path, strict: bool, warnings: list[str]) -> list[NetRec]:
    nets: list[NetRec] = []
    declared_nets = declared_pins = None
    current: Optional[NetRec] = None
    remaining = 0
    for lineno, line in _content_lines(path):
        tokens = line.split()
        if tokens[0] == "NumNets":
            declared_nets = _header_count(tokens, path, lineno, line)
            continue
        if tokens[0] == "NumPins":
            declared_pins = _header_count(tokens, path, lineno, line)
            continue
        if tokens[0] == "NetDegree":
            joined = " ".join(tokens)
            rest = joined.split(":", 1)
            if len(rest) < 2:
                raise ParseError("malformed NetDegree line", str(path),
                                 lineno, 1)
            parts = rest[1].split()
            if not parts:
                raise ParseError("NetDegree missing count", str(path),
                                 lineno, 1)
            degree = int(_num(parts[0], path, lineno, line))
            name = parts[1] if len(parts) > 1 else f"net_{len(nets)}"
            current = NetRec(name)
            nets.append(current)
            remaining = degree
            continue
        if current is None or remaining <= 0:
            raise ParseError("pin entry outside a NetDegree block", str(path),
                             lineno, 1)
        node = tokens[0]
        direction = ""
        offset = None
        idx = 1
        if idx < len(tokens) and tokens[idx] in ("I", "O", "B"):
            direction = tokens[idx]
            idx += 1
        if idx < len(tokens) and tokens[idx] == ":":
            if len(tokens) < idx + 3:
                raise ParseError("pin offset needs two coordinates",
                                 str(path), lineno, 1)
            offset = (_num(tokens[idx + 1], path, lineno, line),
                      _num(tokens[idx + 2], path, lineno, line))
            idx += 3
        _check_trailing(tokens, idx, strict, warnings, path, lineno, line)
        current.pins.append(NetPinRec(node, direction, offset))
        remaining -= 1
    for net in nets:
        pass  # degree consistency is covered by the NumPins check below
    if declared_nets is not None and declared_nets != len(nets):
        raise HeaderMismatchError(
            f"{path}: NumNets {declared_nets} != {len(nets)} records")
    total_pins = sum(len(n.pins) for n in nets)
    if declared_pins is not None and declared_pins != total_pins:
        raise HeaderMismatchError(
            f"{path}: NumPins {declared_pins} != {total_pins} records")
    return nets


def _parse_pl(path: Path, strict: bool, warnings: list[str]) -> dict[str, PlRec]:
    pls: dict[str, PlRec] = {}
    for lineno, line in _content_lines(path):
        tokens = line.split()
        if len(tokens) < 3:
            raise ParseError("placement line needs name x y", str(path),
                             lineno, 1)
        name = tokens[0]
        x = _num(tokens[1], path, lineno, line)
        y = _num(tokens[2], path, lineno, line)
        orientation = "N"
        fixed = False
        idx = 3
        if idx < len(tokens) and tokens[idx] == ":":
            if len(tokens) < idx + 2:
                raise ParseError("missing orientation after ':'", str(path),
                                 lineno, 1)
            orientation = tokens[idx + 1]
            if orientation not in model.ORIENTATIONS:
                raise ParseError(f"unknown orientation {orientation!r}",
                                 str(path), lineno,
                                 _col_of(line, orientation))
            idx += 2
        if idx < len(tokens) and tokens[idx].upper() in ("/FIXED",
                                                         "/FIXED_NI"):
            fixed = True
            idx += 1
        _check_trailing(tokens, idx, strict, warnings, path, lineno, line)
        pls[name] = PlRec(name, x, y, orientation, fixed)
    return pls


def _parse_scl(path: Path, strict: bool, warnings: list[str]) -> list[RowRec]:
    rows: list[RowRec] = []
    declared = None
    current: Optional[RowRec] = None
    for lineno, line in _content_lines(path):
        tokens = line.split()
        key = tokens[0]
        if key == "NumRows":
            declared = _header_count(tokens, path, lineno, line)
            continue
        if key == "CoreRow":
            current = RowRec(0, 0, 0, 0)
            continue
        if key == "End":
            if current is None:
                raise ParseError("End outside a CoreRow block", str(path),
                                 lineno, 1)
            rows.append(current)
            current = None
            continue
        if current is None:
            raise ParseError(f"unexpected token {key!r}", str(path), lineno,
                             _col_of(line, key))
        joined = " ".join(tokens)
        if key == "SubrowOrigin":
            # "SubrowOrigin : x  NumSites : n"
            try:
                after = joined.split(":", 1)[1]
                origin_tok = after.split()[0]
                current.subrow_origin = _num(origin_tok, path, lineno, line)
                if "NumSites" in after:
                    n_tok = after.split("NumSites", 1)[1].split(":", 1)[1].split()[0]
                    current.num_sites = int(_num(n_tok, path, lineno, line))
            except (IndexError, ValueError):
                raise ParseError("malformed SubrowOrigin line", str(path),
                                 lineno, 1) from None
            continue
        if ":" not in joined:
            raise ParseError(f"malformed row attribute {key!r}", str(path),
                             lineno, 1)
        value = joined.split(":", 1)[1].split()
        if not value:
            raise ParseError(f"missing value for {key!r}", str(path), lineno, 1)
        if key == "Coordinate":
            current.coordinate = _num(value[0], path, lineno, line)
        elif key == "Height":
            current.height = _num(value[0], path, lineno, line)
        elif key == "Sitewidth":
            current.sitewidth = _num(value[0], path, lineno, line)
        elif key == "Sitespacing":
            current.sitespacing = _num(value[0], path, lineno, line)
        elif key == "Siteorient":
            current.siteorient = value[0]
        elif key == "Sitesymmetry":
            current.sitesymmetry = value[0]
        else:
            if strict:
                raise ParseError(f"unknown row attribute {key!r}", str(path),
                                 lineno, _col_of(line, key))
            warnings.append(f"{path}:{lineno}: ignored row attribute {key!r}")
    if declared is not None and declared != len(rows):
        raise HeaderMismatchError(
            f"{path}: NumRows {declared} != {len(rows)} records")
    return rows


def _parse_wts(path: Path, strict: bool, warnings: list[str]) -> dict[str, float]:
    wts: dict[str, float] = {}
    for lineno, line in _content_lines(path):
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError("weight line needs name and value", str(path),
                             lineno, 1)
        _check_trailing(tokens, 2, strict, warnings, path, lineno, line)
        wts[tokens[0]] = _num(tokens[1], path, lineno, line)
    return wts


def parse_bookshelf(aux_path: str | os.PathLike, strict: bool = True) -> BookshelfBundle:
    """Parse a Bookshelf bundle starting from its .aux manifest."""
    aux = Path(aux_path)
    if not aux.is_file():
        raise MissingFileError(str(aux))
    members: dict[str, Path] = {}
    with open(aux, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ParseError("manifest line needs ':'", str(aux), lineno, 1)
            for name in line.split(":", 1)[1].split():
                ext = Path(name).suffix.lstrip(".")
                members[ext] = aux.parent / name
    bundle = BookshelfBundle(name=aux.stem)
    for ext in ("nodes", "nets", "pl", "scl"):
        if ext not in members:
            raise MissingFileError(f"{aux}: no .{ext} member in manifest")
    for ext, path in members.items():
        if not path.is_file():
            raise MissingFileError(str(path))

    bundle.nodes = _parse_nodes(members["nodes"], strict, bundle.warnings)
    bundle.nets = _parse_nets(members["nets"], strict, bundle.warnings)
    bundle.pls = _parse_pl(members["pl"], strict, bundle.warnings)
    bundle.rows = _parse_scl(members["scl"], strict, bundle.warnings)
    if "wts" in members:
        bundle.wts = _parse_wts(members["wts"], strict, bundle.warnings)

    known = {n.name for n in bundle.nodes}
    for net in bundle.nets:
        for pin in net.pins:
            if pin.node not in known:
                raise UnknownNodeError(f"net {net.name} references "
                                       f"undeclared node {pin.node}")
    return bundle


def _to_dbu(value: float) -> int:
    out = round(value)
    if abs(out) > MAX_DBU:
        raise ScaleOverflowError(f"coordinate {value} exceeds DBU range")
    return int(out)


def synthetic_master_name(width: int, height: int) -> str:
    return f"BKS_w{width}_h{height}_CORE"


def bundle_to_design(bundle: BookshelfBundle, units: int = 1000) -> model.Design:
    """Build a Design from a parsed bundle.

    Movable nodes become instances of synthesized one-pin masters keyed by
    (width, height); terminal nodes become IoPins at their raw .pl location
    (their dimensions are not representable in the core model and are
    dropped). Bookshelf numbers are taken as DBU one-to-one.
    """
    masters: dict[tuple[int, int], model.Master] = {}
    instances = []
    io_names: set[str] = set()
    node_by_name = {n.name: n for n in bundle.nodes}

    # Direction of an IO pin is recovered from its driving/sinking role.
    io_role: dict[str, str] = {}
    for net in bundle.nets:
        for pin in net.pins:
            node = node_by_name[pin.node]
            if node.movability != MOVABLE and pin.node not in io_role:
                if pin.direction in _ROLE_OF:
                    io_role[pin.node] = _ROLE_OF[pin.direction]

    for node in bundle.nodes:
        if node.movability != MOVABLE:
            io_names.add(node.name)
            continue
        w, h = _to_dbu(node.width), _to_dbu(node.height)
        key = (w, h)
        if key not in masters:
            masters[key] = model.Master(
                name=synthetic_master_name(w, h), width=w, height=h,
                area=w * h,
                pins=(model.MasterPin("PIN", model.INOUT,
                                      offset=(w // 2, h // 2)),),
                site=f"BKS_SITE_w{w}_h{h}" if False else "",
            )
        pl = bundle.pls.get(node.name)
        location = None
        orientation = "N"
        fixed = False
        if pl is not None:
            location = (_to_dbu(pl.x), _to_dbu(pl.y))
            orientation = pl.orientation
            fixed = pl.fixed
        instances.append(model.Instance(
            name=node.name, master=masters[key].name, location=location,
            orientation=orientation, fixed=fixed))

    io_pins = []
    for node in bundle.nodes:
        if node.movability == MOVABLE:
            continue
        pl = bundle.pls.get(node.name)
        location = (_to_dbu(pl.x), _to_dbu(pl.y)) if pl is not None else None
        role = io_role.get(node.name, model.INOUT)
        io_pins.append(model.IoPin(node.name,
                                   direction=model.flip_direction(role),
                                   location=location))

    nets = []
    for net in bundle.nets:
        pins = []
        for pin in net.pins:
            node = node_by_name[pin.node]
            role = _ROLE_OF.get(pin.direction, model.INOUT)
            if node.movability == MOVABLE:
                offset = None
                if pin.offset is not None:
                    w, h = _to_dbu(node.width), _to_dbu(node.height)
                    offset = (w // 2 + _to_dbu(pin.offset[0]),
                              h // 2 + _to_dbu(pin.offset[1]))
                pins.append(model.NetPin(node.name, "PIN", role, offset))
            else:
                pins.append(model.NetPin(None, node.name, role))
        weight = bundle.wts.get(net.name, 1)
        nets.append(model.Net(net.name, tuple(pins), weight=weight))

    sites: dict[tuple[int, int], model.Site] = {}
    rows = []
    for i, rec in enumerate(bundle.rows):
        sw, sh = _to_dbu(rec.sitewidth), _to_dbu(rec.height)
        key = (sw, sh)
        if key not in sites:
            sites[key] = model.Site(f"BKS_SITE_w{sw}_h{sh}", sw, sh)
        rows.append(model.Row(
            name=f"ROW_{i}", site=sites[key].name,
            origin=(_to_dbu(rec.subrow_origin), _to_dbu(rec.coordinate)),
            num_sites=rec.num_sites, step=_to_dbu(rec.sitespacing)))

    design = model.Design(
        name=bundle.name, units=units,
        masters=tuple(masters[k] for k in sorted(masters)),
        instances=tuple(instances), nets=tuple(nets), rows=tuple(rows),
        io_pins=tuple(io_pins), sites=tuple(sites[k] for k in sorted(sites)))

    core = _derive_core(design)
    die = core
    for inst in design.instances:
        bbox = model.instance_bbox(design, inst)
        if bbox is not None:
            die = die.union(bbox)
    object.__setattr__(design, "die", die)
    object.__setattr__(design, "core", core)
    return design


def _derive_core(design: model.Design) -> model.Rect:
    rects = []
    site_h = {s.name: s.height for s in design.sites}
    for row in design.rows:
        x, y = row.origin
        rects.append(model.Rect(x, y, x + row.num_sites * row.step,
                                y + site_h.get(row.site, 0)))
    if not rects:
        for inst in design.instances:
            bbox = model.instance_bbox(design, inst)
            if bbox is not None:
                rects.append(bbox)
    if not rects:
        return model.Rect(0, 0, 0, 0)
    out = rects[0]
    for r in rects[1:]:
        out = out.union(r)
    return out


def design_to_bundle(design: model.Design) -> BookshelfBundle:
    """Project a Design onto Bookshelf records (the inverse of
    :func:`bundle_to_design` up to information the format cannot carry)."""
    bundle = BookshelfBundle(name=design.name)
    masters = design.master_by_name
    for inst in design.instances:
        m = masters[inst.master]
        bundle.nodes.append(NodeRec(inst.name, m.width, m.height, MOVABLE))
        loc = inst.location if inst.location is not None else (0, 0)
        bundle.pls[inst.name] = PlRec(inst.name, loc[0], loc[1],
                                      inst.orientation, inst.fixed)
    for io in design.io_pins:
        bundle.nodes.append(NodeRec(io.name, 1, 1, TERMINAL))
        loc = io.location if io.location is not None else (0, 0)
        bundle.pls[io.name] = PlRec(io.name, loc[0], loc[1], "N", True)

    for net in design.nets:
        rec = NetRec(net.name)
        for pin in net.pins:
            letter = _LETTER_OF.get(pin.direction, "B")
            if pin.instance is None:
                rec.pins.append(NetPinRec(pin.pin, letter, None))
            else:
                offset = None
                if pin.offset is not None:
                    m = masters[design.instance_by_name[pin.instance].master]
                    offset = (pin.offset[0] - m.width // 2,
                              pin.offset[1] - m.height // 2)
                rec.pins.append(NetPinRec(pin.instance, letter, offset))
        bundle.nets.append(rec)
        bundle.wts[net.name] = net.weight

    site_by_name = design.site_by_name
    for row in design.rows:
        site = site_by_name[row.site]
        bundle.rows.append(RowRec(
            coordinate=row.origin[1], height=site.height,
            sitewidth=site.width, sitespacing=row.step,
            subrow_origin=row.origin[0], num_sites=row.num_sites))
    return bundle


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_bundle(bundle: BookshelfBundle, out_dir: str | os.PathLike) -> BookshelfManifest:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = bundle.name
    paths = BookshelfManifest(
        aux=out / f"{base}.aux", nodes=out / f"{base}.nodes",
        nets=out / f"{base}.nets", wts=out / f"{base}.wts",
        pl=out / f"{base}.pl", scl=out / f"{base}.scl")

    terminals = sum(1 for n in bundle.nodes if n.movability != MOVABLE)
    with open(paths.nodes, "w", encoding="utf-8") as f:
        f.write("UCLA nodes 1.0\n")
        f.write(f"NumNodes : {len(bundle.nodes)}\n")
        f.write(f"NumTerminals : {terminals}\n")
        for n in bundle.nodes:
            tag = ""
            if n.movability == TERMINAL:
                tag = " terminal"
            elif n.movability == TERMINAL_NI:
                tag = " terminal_NI"
            f.write(f"{n.name} {_fmt(n.width)} {_fmt(n.height)}{tag}\n")

    with open(paths.nets, "w", encoding="utf-8") as f:
        f.write("UCLA nets 1.0\n")
        f.write(f"NumNets : {len(bundle.nets)}\n")
        f.write(f"NumPins : {bundle.num_pins}\n")
        for net in bundle.nets:
            f.write(f"NetDegree : {len(net.pins)} {net.name}\n")
            for pin in net.pins:
                parts = [f"\t{pin.node}"]
                if pin.direction:
                    parts.append(pin.direction)
                if pin.offset is not None:
                    parts.append(f": {_fmt(pin.offset[0])} {_fmt(pin.offset[1])}")
                f.write(" ".join(parts) + "\n")

    with open(paths.wts, "w", encoding="utf-8") as f:
        f.write("UCLA wts 1.0\n")
        for net in bundle.nets:
            f.write(f"{net.name} {_fmt(bundle.wts.get(net.name, 1))}\n")

    with open(paths.pl, "w", encoding="utf-8") as f:
        f.write("UCLA pl 1.0\n")
        for node in bundle.nodes:
            pl = bundle.pls.get(node.name)
            if pl is None:
                pl = PlRec(node.name, 0, 0)
            fixed = " /FIXED" if pl.fixed else ""
            f.write(f"{pl.name} {_fmt(pl.x)} {_fmt(pl.y)} "
                    f": {pl.orientation}{fixed}\n")

    with open(paths.scl, "w", encoding="utf-8") as f:
        f.write("UCLA scl 1.0\n")
        f.write(f"NumRows : {len(bundle.rows)}\n")
        for row in bundle.rows:
            f.write("CoreRow Horizontal\n")
            f.write(f"  Coordinate   : {_fmt(row.coordinate)}\n")
            f.write(f"  Height       : {_fmt(row.height)}\n")
            f.write(f"  Sitewidth    : {_fmt(row.sitewidth)}\n")
            f.write(f"  Sitespacing  : {_fmt(row.sitespacing)}\n")
            f.write(f"  Siteorient   : {row.siteorient}\n")
            f.write(f"  Sitesymmetry : {row.sitesymmetry}\n")
            f.write(f"  SubrowOrigin : {_fmt(row.subrow_origin)}  "
                    f"NumSites : {row.num_sites}\n")
            f.write("End\n")

    with open(paths.aux, "w", encoding="utf-8") as f:
        f.write(f"RowBasedPlacement : {base}.nodes {base}.nets {base}.wts "
                f"{base}.pl {base}.scl\n")
    return paths


def write_bookshelf(design: model.Design, out_dir: str | os.PathLike) -> BookshelfManifest:
    """Write a Design as a Bookshelf bundle; headers always match the emitted
    record counts."""
    return write_bundle(design_to_bundle(design), out_dir)
