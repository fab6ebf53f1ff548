"""Interfaces, interconnection patterns and the operations on them.

A :class:`Pattern` is a wiring diagram: an outer interface, a set of
named boxes (each with its own interface and a fill class) and a list of
junctions.  A junction is a set of port references; a reference either
names a box port or, via the distinguished :data:`OUTER` token, a port of
the outer interface.

Patterns are immutable.  Construction canonicalizes ordering (boxes by
name, junction participants and junctions by smallest participant) so
that structural equality is plain ``==``.

Junction semantics used throughout: all state and power ports at a
junction share one state.  Efforts are identified and flows balanced
separately for each power-port kind present at the junction, so kinetic
(``k``), potential (``p``) and internal (``i``) exergy exchange through
the same state stay distinct.  A junction with a single kind reduces to
the usual three-equation rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (CyclicDefinition, InterfaceMismatch, InvalidPattern,
                     MissingDefinition, MultiportMismatch, NameCollision,
                     NotComposite, PatternError)

OUTER = "outer"

FILLS = ("storage", "reversible", "irreversible", "composite")
PORT_CLASSES = ("state", "power", "boundary")
KINDS = ("k", "p", "i")
SIDES = ("left", "right", "both")


@dataclass(frozen=True, order=True)
class Quantity:
    name: str
    placement: str  # node | cell | scalar

    def __str__(self):
        return f"{self.name}({self.placement})"


@dataclass(frozen=True)
class PortAttribute:
    quantity: Quantity
    port_class: str
    kind: str | None = None
    side: str | None = None
    tag: str | None = None

    def __post_init__(self):
        if self.port_class not in PORT_CLASSES:
            raise ValueError(f"unknown port class {self.port_class!r}")
        if self.port_class == "power" and self.kind not in KINDS:
            raise ValueError(f"power port needs a kind in {KINDS}, got {self.kind!r}")
        if self.port_class != "power" and self.kind is not None:
            raise ValueError("only power ports carry a kind")
        if self.port_class == "boundary":
            if self.side not in SIDES or not self.tag:
                raise ValueError("boundary ports need a side and a splitting tag")
        elif self.side is not None or self.tag is not None:
            raise ValueError("side/tag are only meaningful on boundary ports")

    @classmethod
    def state(cls, name: str, placement: str) -> "PortAttribute":
        return cls(Quantity(name, placement), "state")

    @classmethod
    def power(cls, kind: str, name: str, placement: str) -> "PortAttribute":
        return cls(Quantity(name, placement), "power", kind=kind)

    @classmethod
    def boundary(cls, side: str, tag: str, name: str,
                 placement: str = "scalar") -> "PortAttribute":
        return cls(Quantity(name, placement), "boundary", side=side, tag=tag)

    def __str__(self):
        if self.port_class == "power":
            head = f"power {self.kind}"
        elif self.port_class == "boundary":
            head = f"boundary({self.side}, {self.tag})"
        else:
            head = "state"
        return f"{head} {self.quantity}"


@dataclass(frozen=True)
class Interface:
    """Port names mapped to attributes, stored as a sorted tuple."""

    ports: tuple[tuple[str, PortAttribute], ...] = ()

    def __post_init__(self):
        items = tuple(sorted(self.ports, key=lambda kv: kv[0]))
        names = [k for k, _ in items]
        if len(set(names)) != len(names):
            raise NameCollision(f"duplicate port names in interface: {names}")
        object.__setattr__(self, "ports", items)

    @classmethod
    def of(cls, ports: Mapping[str, PortAttribute] | None = None) -> "Interface":
        return cls(tuple((ports or {}).items()))

    def __contains__(self, name) -> bool:
        return any(k == name for k, _ in self.ports)

    def __getitem__(self, name: str) -> PortAttribute:
        for k, v in self.ports:
            if k == name:
                return v
        raise KeyError(name)

    def __iter__(self):
        return (k for k, _ in self.ports)

    def __len__(self):
        return len(self.ports)

    def items(self):
        return iter(self.ports)

    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.ports)

    def as_dict(self) -> dict[str, PortAttribute]:
        return dict(self.ports)

    def multiport(self, prefix: str) -> tuple[str, ...]:
        """Sub-port suffixes grouped under ``prefix``, or () if none."""
        head = prefix + "."
        return tuple(k[len(head):] for k, _ in self.ports if k.startswith(head))


@dataclass(frozen=True, order=True)
class PortRef:
    box: str  # a box name or OUTER
    port: str

    @property
    def is_outer(self) -> bool:
        return self.box == OUTER

    def __str__(self):
        return f"{self.box}.{self.port}"


@dataclass(frozen=True)
class Box:
    interface: Interface
    fill: str
    ref: str | None = None  # library name for composite boxes

    def __post_init__(self):
        if self.fill not in FILLS:
            raise ValueError(f"unknown fill {self.fill!r}")
        if self.fill != "composite" and self.ref is not None:
            raise ValueError("only composite boxes reference a definition")


def _ref(r) -> PortRef:
    if isinstance(r, PortRef):
        return r
    if isinstance(r, tuple):
        return PortRef(*r)
    raise TypeError(f"cannot interpret {r!r} as a port reference")


@dataclass(frozen=True)
class Junction:
    refs: tuple[PortRef, ...]

    def __post_init__(self):
        refs = tuple(sorted({_ref(r) for r in self.refs}))
        object.__setattr__(self, "refs", refs)

    @classmethod
    def of(cls, *refs) -> "Junction":
        return cls(tuple(refs))

    def __iter__(self):
        return iter(self.refs)

    def __len__(self):
        return len(self.refs)

    def key(self):
        return self.refs[0] if self.refs else PortRef("", "")

    def __str__(self):
        return "{" + ", ".join(map(str, self.refs)) + "}"


@dataclass(frozen=True)
class Pattern:
    name: str
    outer: Interface = field(default_factory=Interface)
    boxes: tuple[tuple[str, Box], ...] = ()
    junctions: tuple[Junction, ...] = ()

    def __post_init__(self):
        boxes = self.boxes
        if isinstance(boxes, Mapping):
            boxes = tuple(boxes.items())
        boxes = tuple(sorted(boxes, key=lambda kv: kv[0]))
        names = [k for k, _ in boxes]
        if len(set(names)) != len(names):
            raise NameCollision(f"duplicate box names in pattern {self.name}")
        if OUTER in names:
            raise NameCollision(f"{OUTER!r} is reserved and cannot name a box")
        juncs = tuple(j if isinstance(j, Junction) else Junction(tuple(j))
                      for j in self.junctions)
        juncs = tuple(sorted((j for j in juncs if len(j)), key=lambda j: j.refs))
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "junctions", juncs)

    @property
    def box_map(self) -> dict[str, Box]:
        return dict(self.boxes)

    def box(self, name: str) -> Box:
        for k, b in self.boxes:
            if k == name:
                return b
        raise KeyError(name)

    def interface_of(self, box: str) -> Interface:
        return self.outer if box == OUTER else self.box(box).interface

    def attribute(self, ref: PortRef) -> PortAttribute:
        return self.interface_of(ref.box)[ref.port]

    def is_flat(self) -> bool:
        return all(b.fill != "composite" for _, b in self.boxes)

    def replace(self, **kw) -> "Pattern":
        data = dict(name=self.name, outer=self.outer, boxes=self.boxes,
                    junctions=self.junctions)
        data.update(kw)
        return Pattern(**data)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    refs: tuple[PortRef, ...] = ()

    def __str__(self):
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    def __bool__(self):
        return bool(self.issues)

    def __len__(self):
        return len(self.issues)

    def __iter__(self):
        return iter(self.issues)

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def __str__(self):
        return "\n".join(map(str, self.issues)) or "ok"


def _resolves(p: Pattern, r: PortRef) -> bool:
    if r.box != OUTER and r.box not in p.box_map:
        return False
    itf = p.interface_of(r.box)
    return r.port in itf or bool(itf.multiport(r.port))


def validate_pattern(p: Pattern) -> ValidationReport:
    """Collect every well-formedness violation of ``p``.

    Never raises; an empty report means the pattern is well-formed.
    Multiport references are checked after expansion.
    """
    issues: list[Issue] = []
    boxes = p.box_map

    for name, b in p.boxes:
        classes = {a.port_class for _, a in b.interface.items()}
        if b.fill == "storage":
            if classes - {"power"}:
                issues.append(Issue("fill-interface",
                                    f"storage box {name} may only have power ports"))
            if "power" not in classes:
                issues.append(Issue("fill-interface",
                                    f"storage box {name} has no power port"))
        if b.fill == "composite" and not b.ref:
            issues.append(Issue("fill-interface",
                                f"composite box {name} names no definition"))

    dangling = False
    for j in p.junctions:
        for r in j:
            if r.box != OUTER and r.box not in boxes:
                issues.append(Issue("dangling-reference",
                                    f"junction {j} references unknown box {r.box!r}", (r,)))
                dangling = True
            elif not _resolves(p, r):
                issues.append(Issue("dangling-reference",
                                    f"junction {j} references unknown port {r}", (r,)))
                dangling = True
    if dangling:
        return ValidationReport(tuple(issues))

    try:
        q = expand_multiports(p)
    except MultiportMismatch as exc:
        issues.append(Issue("multiport-mismatch", str(exc)))
        return ValidationReport(tuple(issues))

    seen: dict[PortRef, Junction] = {}
    for j in q.junctions:
        for r in j:
            if r in seen:
                issues.append(Issue("multiple-junctions",
                                    f"port {r} appears in {seen[r]} and {j}", (r,)))
            else:
                seen[r] = j
        attrs = [(r, q.attribute(r)) for r in j]
        bnd = [(r, a) for r, a in attrs if a.port_class == "boundary"]
        rest = [(r, a) for r, a in attrs if a.port_class != "boundary"]
        if bnd and rest:
            issues.append(Issue("boundary-mix",
                                f"junction {j} mixes boundary and state/power ports",
                                tuple(r for r, _ in attrs)))
        if len({a for _, a in bnd}) > 1:
            issues.append(Issue("boundary-mismatch",
                                f"boundary ports at {j} have different attributes",
                                tuple(r for r, _ in bnd)))
        qs = {a.quantity for _, a in rest}
        if len(qs) > 1:
            pretty = ", ".join(sorted(str(x) for x in qs))
            issues.append(Issue("quantity-mismatch",
                                f"junction {j} joins different quantities: {pretty}",
                                tuple(r for r, _ in rest)))

    for name in q.outer:
        if PortRef(OUTER, name) not in seen:
            issues.append(Issue("unconnected-outer",
                                f"outer port {name} is not attached to any junction",
                                (PortRef(OUTER, name),)))
    return ValidationReport(tuple(issues))


def require_valid(p: Pattern) -> Pattern:
    report = validate_pattern(p)
    if report:
        raise InvalidPattern(f"pattern {p.name} is ill-formed:\n{report}", report.issues)
    return p


# ---------------------------------------------------------------------------
# multiports


def expand_multiports(p: Pattern) -> Pattern:
    """Replace every junction on multiport prefixes by per-sub-port junctions."""
    out: list[Junction] = []
    changed = False
    for j in p.junctions:
        groups = {}
        exact = []
        for r in j:
            itf = p.interface_of(r.box) if (r.box == OUTER or r.box in p.box_map) else None
            if itf is not None and r.port not in itf and itf.multiport(r.port):
                groups[r] = frozenset(itf.multiport(r.port))
            else:
                exact.append(r)
        if not groups:
            out.append(j)
            continue
        changed = True
        if exact:
            raise MultiportMismatch(
                f"junction {j} mixes multiport prefixes with single ports "
                f"{', '.join(map(str, exact))}")
        subsets = set(groups.values())
        if len(subsets) != 1:
            detail = "; ".join(f"{r} -> {{{', '.join(sorted(s))}}}"
                               for r, s in sorted(groups.items()))
            raise MultiportMismatch(f"multiport junction {j} expands unequally: {detail}")
        for suffix in sorted(subsets.pop()):
            out.append(Junction(tuple(PortRef(r.box, f"{r.port}.{suffix}") for r in groups)))
    if not changed:
        return p
    return p.replace(junctions=tuple(out))


# ---------------------------------------------------------------------------
# composition and flattening


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def compose(host: Pattern, box: str, inner: Pattern,
            renaming: Mapping[str, str] | None = None) -> Pattern:
    """Substitute ``inner`` for the composite box ``box`` of ``host``.

    ``renaming`` maps the inner outer-port names to the host box's port
    names (identity when omitted).  Inner boxes are prefixed with
    ``box + "."``.  Junctions on both sides that meet at a renamed port
    are merged.
    """
    try:
        b = host.box(box)
    except KeyError:
        raise PatternError(f"pattern {host.name} has no box {box!r}") from None
    if b.fill != "composite":
        raise NotComposite(f"box {box} has fill {b.fill}, not composite")

    host = expand_multiports(host)
    inner = expand_multiports(inner)
    if renaming is None:
        renaming = {k: k for k in inner.outer}
    renaming = dict(renaming)
    if sorted(renaming) != sorted(inner.outer.names()):
        raise InterfaceMismatch(
            f"renaming domain {sorted(renaming)} differs from inner outer ports "
            f"{sorted(inner.outer.names())}")
    if sorted(renaming.values()) != sorted(b.interface.names()):
        raise InterfaceMismatch(
            f"renaming image {sorted(renaming.values())} differs from box {box} "
            f"ports {sorted(b.interface.names())}")
    for src, dst in renaming.items():
        if inner.outer[src] != b.interface[dst]:
            raise InterfaceMismatch(
                f"port {src} ({inner.outer[src]}) renamed to {box}.{dst} "
                f"({b.interface[dst]}) has different attributes")

    new_boxes = [(k, v) for k, v in host.boxes if k != box]
    taken = {k for k, _ in new_boxes}
    for k, v in inner.boxes:
        name = f"{box}.{k}"
        if name in taken:
            raise NameCollision(f"box name {name} already exists in {host.name}")
        clash = [t for t in taken if t.startswith(name + ".") or name.startswith(t + ".")]
        if clash:
            raise NameCollision(f"box name {name} is ambiguous next to {clash[0]}")
        new_boxes.append((name, v))

    uf = _UnionFind()
    members: dict[tuple, list[PortRef]] = {}
    exposed: dict[str, tuple] = {}  # host box port -> host junction id
    for idx, j in enumerate(host.junctions):
        node = ("h", idx)
        uf.add(node)
        members[node] = []
        for r in j:
            if r.box == box:
                exposed[r.port] = node
            else:
                members[node].append(r)
    for idx, j in enumerate(inner.junctions):
        node = ("i", idx)
        uf.add(node)
        members[node] = []
        for r in j:
            if r.is_outer:
                target = exposed.get(renaming[r.port])
                if target is not None:
                    uf.union(node, target)
            else:
                members[node].append(PortRef(f"{box}.{r.box}", r.port))

    merged: dict[tuple, list[PortRef]] = {}
    for node, refs in members.items():
        merged.setdefault(uf.find(node), []).extend(refs)
    juncs = tuple(Junction(tuple(refs)) for refs in merged.values() if refs)
    return Pattern(host.name, host.outer, tuple(new_boxes), juncs)


def _lookup(library: Mapping[str, Pattern], name: str, b: Box) -> tuple[str, Pattern]:
    key = b.ref or name
    if key in library:
        return key, library[key]
    if name in library:
        return name, library[name]
    raise MissingDefinition(f"no definition for composite box {name} (wants {key!r})")


def flatten(p: Pattern, library: Mapping[str, Pattern],
            order: Iterable[str] | None = None, _stack: tuple[str, ...] = ()) -> Pattern:
    """Recursively substitute library definitions for all composite boxes.

    Composite boxes are looked up by their declared definition name and,
    failing that, by box name.  ``order`` optionally fixes the sequence in
    which the top-level composite boxes are substituted; the result does
    not depend on it.
    """
    stack = _stack + (p.name,)
    composites = [k for k, b in p.boxes if b.fill == "composite"]
    if order is not None:
        order = list(order)
        if sorted(order) != sorted(composites):
            raise PatternError("substitution order must list every composite box once")
        composites = order
    result = p
    for name in composites:
        key, definition = _lookup(library, name, p.box(name))
        if key in stack or definition.name in stack:
            chain = " -> ".join(stack + (key,))
            raise CyclicDefinition(f"pattern definition cycle: {chain}")
        inner = flatten(definition, library, None, stack)
        result = compose(result, name, inner)
    return expand_multiports(result)


# ---------------------------------------------------------------------------
# junction equations


@dataclass(frozen=True)
class KindGroup:
    """Effort and flow equations among the power ports of one kind."""

    kind: str | None  # None for boundary junctions
    efforts: tuple[tuple[PortRef, PortRef], ...]
    inner: tuple[PortRef, ...]
    outer: tuple[PortRef, ...]

    def net_flow(self) -> str:
        lhs = " + ".join(f"{r}.f" for r in self.inner) or "0"
        rhs = " + ".join(f"{r}.f" for r in self.outer) or "0"
        return f"{lhs} = {rhs}"


@dataclass(frozen=True)
class JunctionEquations:
    junction: Junction
    states: tuple[tuple[PortRef, PortRef], ...]
    groups: tuple[KindGroup, ...]

    @property
    def effort_equalities(self):
        return tuple(e for g in self.groups for e in g.efforts)

    @property
    def net_flows(self):
        return tuple(g.net_flow() for g in self.groups)

    def lines(self) -> list[str]:
        out = []
        if self.states:
            chain = [self.states[0][0]] + [b for _, b in self.states]
            out.append(" = ".join(f"{r}.x" for r in chain))
        for g in self.groups:
            if g.efforts:
                chain = [g.efforts[0][0]] + [b for _, b in g.efforts]
                out.append(" = ".join(f"{r}.e" for r in chain))
            out.append(g.net_flow())
        return out


@dataclass(frozen=True)
class JunctionEquationSet:
    junctions: tuple[JunctionEquations, ...]
    stubs: tuple[PortRef, ...]  # unconnected inner power/boundary ports: f = 0

    def for_port(self, ref: PortRef) -> JunctionEquations:
        for je in self.junctions:
            if ref in je.junction.refs:
                return je
        raise KeyError(str(ref))

    def lines(self) -> list[str]:
        out = []
        for je in self.junctions:
            out.extend(je.lines())
        out.extend(f"{r}.f = 0" for r in self.stubs)
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _chain(refs):
    return tuple(zip(refs, refs[1:]))


def junction_equations(p: Pattern) -> JunctionEquationSet:
    p = require_valid(expand_multiports(p))
    if not p.is_flat():
        raise PatternError(f"junction equations need a flat pattern; {p.name} has composites")
    out = []
    connected = set()
    for j in p.junctions:
        connected.update(j.refs)
        attrs = {r: p.attribute(r) for r in j}
        bnd = [r for r in j if attrs[r].port_class == "boundary"]
        if bnd:
            inner = tuple(r for r in bnd if not r.is_outer)
            outer = tuple(r for r in bnd if r.is_outer)
            out.append(JunctionEquations(j, (), (KindGroup(None, _chain(bnd), inner, outer),)))
            continue
        states = _chain([r for r in j])
        groups = []
        for kind in KINDS:
            members = [r for r in j if attrs[r].kind == kind]
            if not members:
                continue
            groups.append(KindGroup(kind, _chain(members),
                                    tuple(r for r in members if not r.is_outer),
                                    tuple(r for r in members if r.is_outer)))
        out.append(JunctionEquations(j, states, tuple(groups)))
    stubs = []
    for name, b in p.boxes:
        for port, a in b.interface.items():
            r = PortRef(name, port)
            if a.port_class != "state" and r not in connected:
                stubs.append(r)
    return JunctionEquationSet(tuple(out), tuple(stubs))


def equation_counts(je: JunctionEquations) -> tuple[int, int, int]:
    """(state equalities, effort equalities, net-flow equations)."""
    return len(je.states), len(je.effort_equalities), len(je.groups)


def isomorphic_up_to_prefix(a: Pattern, b: Pattern) -> bool:
    """Equality after stripping the last dotted segment's prefixes.

    Box names are compared through their final segment only, which is how
    flattened patterns built with different hierarchies line up.  Returns
    False when that stripping is ambiguous.
    """
    def strip(p):
        short = {k: k.rsplit(".", 1)[-1] for k, _ in p.boxes}
        if len(set(short.values())) != len(short):
            return None
        boxes = tuple((short[k], v) for k, v in p.boxes)
        juncs = tuple(Junction(tuple(r if r.is_outer else PortRef(short[r.box], r.port)
                                     for r in j)) for j in p.junctions)
        return Pattern(p.name, p.outer, boxes, juncs)

    sa, sb = strip(a), strip(b)
    return sa is not None and sb is not None and \
        (sa.outer, sa.boxes, sa.junctions) == (sb.outer, sb.boxes, sb.junctions)


__all__ = [
    "OUTER", "Quantity", "PortAttribute", "Interface", "PortRef", "Box", "Junction",
    "Pattern", "Issue", "ValidationReport", "validate_pattern", "require_valid",
    "expand_multiports", "compose", "flatten", "junction_equations", "KindGroup",
    "JunctionEquations", "JunctionEquationSet", "equation_counts",
    "isomorphic_up_to_prefix",
]
