"""Text format for patterns and model files (``.ephs``).

A file is a sequence of items::

    quantity charge;                       # extend the quantity prelude

    pattern fluid {
      outer { boundary(both, sa) mass(scalar) b_k; }
      box ke: storage { power k mass(cell) m; power k specific_momentum(node) p_s; }
      ...
      junction { ke.m, sa.m }
    }

    bindings fluid { ke = ke; ie = ie.barotropic(K = 1.0, gamma = 2.0); }
    domain { L = 1.0; n = 128; periodic = true; }
    sim { t_end = 1.0; dt = 0.001; integrator = rk4; }
    init { ke.m = sine(mode = 1, amplitude = 0.01, offset = 1.0); }

Parsing never raises anything but :class:`~ephs.errors.DslError`
subclasses, whatever bytes it is handed.  :func:`serialize` produces a
canonical text that parses back to an equal document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from lark import Lark, Token, Transformer
from lark.exceptions import (LarkError, UnexpectedCharacters, UnexpectedEOF,
                             UnexpectedInput, UnexpectedToken, VisitError)

from .errors import DslError, DslSyntaxError, DuplicateName, EphsError, UnknownKeyword
from .pattern import (FILLS, KINDS, OUTER, SIDES, Box, Interface, Issue, Junction,
                      Pattern, PortAttribute, PortRef, Quantity, validate_pattern)
from .grid import PLACEMENTS

BUILTIN_QUANTITIES = (
    "mass", "entropy", "momentum", "specific_momentum",
    "electric_displacement", "magnetic_flux",
)

GRAMMAR = r"""
start: item*

?item: quantity | pattern | bindings | domain | sim | init

quantity: "quantity" IDENT ("," IDENT)* ";"

pattern: "pattern" IDENT "{" outer box* junction* "}"
outer: "outer" "{" port* "}"
box: "box" IDENT ":" fill "{" port* "}"
fill: IDENT                          -> fill_simple
    | "composite" ["(" IDENT ")"]    -> fill_composite
port: pclass IDENT "(" IDENT ")" IDENT ";"
pclass: "state"                              -> pc_state
      | "power" IDENT                        -> pc_power
      | "boundary" "(" IDENT "," IDENT ")"   -> pc_boundary
junction: "junction" "{" IDENT ("," IDENT)* "}"

bindings: "bindings" IDENT "{" binding* "}"
binding: IDENT "=" IDENT [args] ";"
args: "(" [arg ("," arg)*] ")"
arg: IDENT "=" value

domain: "domain" "{" setting* "}"
sim: "sim" "{" setting* "}"
setting: IDENT "=" value ";"

init: "init" "{" init_entry* "}"
init_entry: IDENT "=" IDENT args ";"   -> init_preset
          | IDENT "=" array ";"        -> init_array
array: "[" [NUMBER ("," NUMBER)*] "]"

value: NUMBER | IDENT

IDENT: /[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*/
NUMBER: /[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?/
COMMENT: /#[^\n]*/

%ignore COMMENT
%ignore /[ \t\r\n\f]+/
"""

_PARSER = Lark(GRAMMAR, parser="lalr", lexer="contextual", propagate_positions=True,
               maybe_placeholders=True)


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class BindingSpec:
    component: str
    params: tuple[tuple[str, Any], ...] = ()

    @property
    def param_map(self) -> dict[str, Any]:
        return dict(self.params)


@dataclass(frozen=True)
class InitSpec:
    preset: str | None = None
    params: tuple[tuple[str, Any], ...] = ()
    values: tuple[float, ...] | None = None

    @property
    def param_map(self) -> dict[str, Any]:
        return dict(self.params)


@dataclass
class ModelDocument:
    quantities: tuple[str, ...] = ()
    patterns: dict[str, Pattern] = field(default_factory=dict)
    root: str | None = None
    bindings: dict[str, BindingSpec] = field(default_factory=dict)
    domain: dict[str, Any] = field(default_factory=dict)
    sim: dict[str, Any] = field(default_factory=dict)
    init: dict[str, InitSpec] = field(default_factory=dict)
    spans: dict[tuple, Span] = field(default_factory=dict, compare=False, repr=False)

    def root_name(self) -> str:
        """The pattern a model is built from.

        That is the bindings target if there is one, otherwise the single
        pattern no other pattern references, otherwise the last defined.
        """
        if self.root is not None:
            return self.root
        if not self.patterns:
            raise DslError("document defines no pattern")
        used = {b.ref for p in self.patterns.values() for _, b in p.boxes
                if b.fill == "composite"}
        tops = [k for k in self.patterns if k not in used]
        if len(tops) == 1:
            return tops[0]
        return list(self.patterns)[-1]

    def validate(self) -> list[tuple[Issue, Span | None]]:
        """Pattern-level issues paired with the source span that caused them."""
        out = []
        for name, p in self.patterns.items():
            for issue in validate_pattern(p):
                span = None
                for r in issue.refs:
                    span = self.spans.get(("ref", name, r.box, r.port))
                    if span is not None:
                        break
                if span is None:
                    span = self.spans.get(("pattern", name))
                out.append((issue, span))
        if self.root is not None and self.root not in self.patterns:
            out.append((Issue("dangling-reference",
                              f"bindings target unknown pattern {self.root!r}"),
                        self.spans.get(("bindings",))))
        return out


def _span(meta_or_tok) -> Span:
    m = meta_or_tok
    return Span(getattr(m, "line", 0) or 0, getattr(m, "column", 0) or 0,
                getattr(m, "end_line", 0) or 0, getattr(m, "end_column", 0) or 0)


def _number(tok: str):
    if any(c in tok for c in ".eE"):
        x = float(tok)
    else:
        x = int(tok)
    if isinstance(x, float) and not math.isfinite(x):
        raise DslSyntaxError(f"number {tok} is out of range")
    return x


def _value(tok: Token):
    if tok.type == "NUMBER":
        return _number(str(tok))
    s = str(tok)
    if s == "true":
        return True
    if s == "false":
        return False
    return s


def _err(cls, msg, tok):
    return cls(msg, getattr(tok, "line", None), getattr(tok, "column", None),
               str(tok) if tok is not None else None)


class _Builder(Transformer):
    def __init__(self, quantities: set[str]):
        super().__init__()
        self.quantities = quantities
        self.spans: dict[tuple, Span] = {}

    def _plain(self, tok: Token, what: str) -> str:
        if "." in tok:
            raise _err(DslSyntaxError, f"{what} {tok} may not contain '.'", tok)
        return str(tok)

    # -- patterns -----------------------------------------------------------

    def pc_state(self, _):
        return ("state", None, None, None, None)

    def pc_power(self, items):
        (kind,) = items
        if kind not in KINDS:
            raise _err(UnknownKeyword, f"unknown power kind {kind!r} (use k, p or i)", kind)
        return ("power", str(kind), None, None, kind)

    def pc_boundary(self, items):
        side, tag = items
        if side not in SIDES:
            raise _err(UnknownKeyword, f"unknown boundary side {side!r}", side)
        return ("boundary", None, str(side), self._plain(tag, "boundary tag"), side)

    def port(self, items):
        (cls, kind, side, tag, _), qty, placement, name = items
        if str(qty) not in self.quantities:
            raise _err(UnknownKeyword, f"unknown quantity {qty!r}; declare it with "
                       f"'quantity {qty};'", qty)
        if str(placement) not in PLACEMENTS:
            raise _err(UnknownKeyword, f"unknown placement {placement!r}", placement)
        attr = PortAttribute(quantity=Quantity(str(qty), str(placement)), port_class=cls,
                             kind=kind, side=side, tag=tag)
        return (name, attr)

    def _interface(self, ports):
        seen = set()
        for name, _ in ports:
            if str(name) in seen:
                raise _err(DuplicateName, f"port {name} declared twice", name)
            seen.add(str(name))
        return Interface(tuple((str(n), a) for n, a in ports))

    def outer(self, ports):
        return ("outer", self._interface(ports))

    def fill_simple(self, items):
        (tok,) = items
        if tok not in FILLS or tok == "composite":
            raise _err(UnknownKeyword, f"unknown fill {tok!r}", tok)
        return (str(tok), None)

    def fill_composite(self, items):
        (tok,) = items
        return ("composite", None if tok is None else str(tok))

    def box(self, items):
        name, (fill, ref), *ports = items
        return ("box", name, Box(self._interface(ports), fill, ref))

    def junction(self, items):
        return ("junction", list(items))

    def pattern(self, items):
        name, (_, outer), *rest = items
        name = self._plain(name, "pattern name")
        boxes = {}
        raw_junctions = []
        for it in rest:
            if it[0] == "box":
                bname = str(it[1])
                if bname == OUTER:
                    raise _err(DuplicateName, "'outer' cannot name a box", it[1])
                if bname in boxes:
                    raise _err(DuplicateName, f"box {bname} declared twice", it[1])
                boxes[bname] = it[2]
            else:
                raw_junctions.append(it[1])
        names = sorted(boxes, key=len, reverse=True)
        junctions = []
        for toks in raw_junctions:
            refs = []
            for tok in toks:
                ref = _resolve(str(tok), names)
                if ref is None:
                    raise _err(DslSyntaxError,
                               f"port reference {tok} needs the form box.port", tok)
                if ref in refs:
                    raise _err(DuplicateName, f"{tok} listed twice in one junction", tok)
                refs.append(ref)
                self.spans[("ref", name, ref.box, ref.port)] = _span(tok)
            junctions.append(Junction(tuple(refs)))
        self.spans[("pattern", name)] = _span(items[0])
        return ("pattern", name, Pattern(name, outer, tuple(boxes.items()), tuple(junctions)),
                items[0])

    # -- sections -----------------------------------------------------------

    def arg(self, items):
        return (items[0], _value(items[1]))

    def value(self, items):
        return items[0]

    def args(self, items):
        items = [i for i in items if i is not None]
        return self._params(items)

    def _params(self, items):
        seen = {}
        for k, v in items:
            if str(k) in seen:
                raise _err(DuplicateName, f"parameter {k} given twice", k)
            seen[str(k)] = v
        return tuple(sorted(seen.items()))

    def binding(self, items):
        path, comp, args = items
        return (path, BindingSpec(str(comp), args or ()))

    def bindings(self, items):
        root, *entries = items
        out = {}
        for path, spec in entries:
            if str(path) in out:
                raise _err(DuplicateName, f"box {path} bound twice", path)
            out[str(path)] = spec
            self.spans[("binding", str(path))] = _span(path)
        self.spans[("bindings",)] = _span(root)
        return ("bindings", str(root), out, root)

    def setting(self, items):
        return (items[0], _value(items[1]))

    def domain(self, items):
        return ("domain", dict(self._params(items)), None)

    def sim(self, items):
        return ("sim", dict(self._params(items)), None)

    def array(self, items):
        return tuple(float(_number(str(t))) for t in items if t is not None)

    def init_preset(self, items):
        path, preset, args = items
        return (path, InitSpec(str(preset), args or ()))

    def init_array(self, items):
        path, values = items
        return (path, InitSpec(None, (), values))

    def init(self, items):
        out = {}
        for path, spec in items:
            if str(path) in out:
                raise _err(DuplicateName, f"initial condition for {path} given twice", path)
            out[str(path)] = spec
        return ("init", out, None)

    def quantity(self, items):
        return ("quantity", [self._plain(t, "quantity") for t in items], items[0])

    def start(self, items):
        return list(items)


def _resolve(text: str, box_names: list[str]) -> PortRef | None:
    for b in [OUTER] + box_names:
        if text.startswith(b + ".") and len(text) > len(b) + 1:
            return PortRef(b, text[len(b) + 1:])
    if "." not in text:
        return None
    head, tail = text.split(".", 1)
    return PortRef(head, tail)


def _declared_quantities(tree) -> tuple[list[str], set[str]]:
    declared = []
    for item in tree.children:
        if getattr(item, "data", None) == "quantity":
            declared.extend(str(t) for t in item.children)
    return declared, set(BUILTIN_QUANTITIES) | set(declared)


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse(text: str | bytes) -> ModelDocument:
    """Parse model text into a :class:`ModelDocument`.

    Raises :class:`DslSyntaxError` (with line, column, offending token and
    the expected token set), :class:`DuplicateName` or
    :class:`UnknownKeyword`.  Pattern-level problems such as dangling
    junction references are not parse errors; see
    :meth:`ModelDocument.validate`.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[:exc.start].decode("utf-8")
            line, col = _position(prefix, len(prefix))
            raise DslSyntaxError(f"input is not valid UTF-8 ({exc.reason})", line, col,
                                 repr(bytes(text)[exc.start:exc.end])) from None
    try:
        tree = _PARSER.parse(text)
    except UnexpectedCharacters as exc:
        raise DslSyntaxError(f"unexpected character {text[exc.pos_in_stream]!r}",
                             exc.line, exc.column, text[exc.pos_in_stream],
                             _names(exc.allowed)) from None
    except UnexpectedEOF as exc:
        line, col = _position(text, len(text))
        raise DslSyntaxError("unexpected end of input", line, col, "<eof>",
                             _names(exc.expected)) from None
    except UnexpectedToken as exc:
        tok = exc.token
        shown = "<eof>" if tok.type == "$END" else str(tok)
        line = exc.line if exc.line not in (None, -1) else _position(text, len(text))[0]
        col = exc.column if exc.column not in (None, -1) else _position(text, len(text))[1]
        raise DslSyntaxError(f"unexpected token {shown!r}", line, col, shown,
                             _names(exc.expected)) from None
    except (UnexpectedInput, LarkError) as exc:
        raise DslSyntaxError(str(exc).splitlines()[0] if str(exc) else "syntax error") from None
    except RecursionError:
        raise DslSyntaxError("input nests too deeply") from None

    declared, quantities = _declared_quantities(tree)
    builder = _Builder(quantities)
    try:
        items = builder.transform(tree)
    except VisitError as exc:
        inner = exc.orig_exc
        if isinstance(inner, DslError):
            raise inner from None
        if isinstance(inner, (EphsError, ValueError, OverflowError)):
            line = getattr(exc.obj, "meta", None)
            raise DslSyntaxError(str(inner), getattr(line, "line", None),
                                 getattr(line, "column", None)) from None
        raise

    doc = ModelDocument(spans=builder.spans)
    seen_q = set()
    for q in declared:
        if q in seen_q or q in BUILTIN_QUANTITIES:
            raise DuplicateName(f"quantity {q} declared twice")
        seen_q.add(q)
    doc.quantities = tuple(sorted(seen_q))
    sections = set()
    for item in items:
        kind = item[0]
        if kind == "quantity":
            continue
        if kind == "pattern":
            _, name, pat, tok = item
            if name in doc.patterns:
                raise _err(DuplicateName, f"pattern {name} defined twice", tok)
            doc.patterns[name] = pat
            continue
        if kind in sections:
            raise DuplicateName(f"section {kind} appears twice")
        sections.add(kind)
        if kind == "bindings":
            doc.root, doc.bindings = item[1], item[2]
        elif kind == "domain":
            doc.domain = item[1]
        elif kind == "sim":
            doc.sim = item[1]
        elif kind == "init":
            doc.init = item[1]
    return doc


def _names(terminals) -> frozenset[str]:
    out = set()
    for t in terminals or ():
        t = str(t)
        pretty = {"LBRACE": "{", "RBRACE": "}", "LPAR": "(", "RPAR": ")", "SEMICOLON": ";",
                  "COMMA": ",", "COLON": ":", "EQUAL": "=", "LSQB": "[", "RSQB": "]",
                  "$END": "<eof>"}.get(t)
        if pretty is None:
            term = next((x for x in _PARSER.terminals if x.name == t), None)
            if term is not None and term.pattern.type == "str":
                pretty = term.pattern.value
            else:
                pretty = t
        out.add(pretty)
    return frozenset(out)


# ---------------------------------------------------------------------------
# serialization


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        r = repr(v)
        return r if any(c in r for c in ".e") else r + ".0"
    return str(v)


def _ports(itf: Interface) -> str:
    if not len(itf):
        return "{}"
    return "{ " + " ".join(f"{a} {name};" for name, a in itf.items()) + " }"


def serialize_pattern(p: Pattern) -> str:
    lines = [f"pattern {p.name} {{", f"  outer {_ports(p.outer)}"]
    for name, b in p.boxes:
        fill = f"composite({b.ref})" if b.fill == "composite" and b.ref else b.fill
        lines.append(f"  box {name}: {fill} {_ports(b.interface)}")
    for j in p.junctions:
        lines.append("  junction { " + ", ".join(map(str, j.refs)) + " }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _call(name: str, params) -> str:
    inner = ", ".join(f"{k} = {format_value(v)}" for k, v in params)
    return f"{name}({inner})"


def serialize(doc: ModelDocument | Pattern) -> str:
    """Canonical text of a document (or of a single pattern)."""
    if isinstance(doc, Pattern):
        return serialize_pattern(doc)
    blocks = []
    if doc.quantities:
        blocks.append("".join(f"quantity {q};\n" for q in sorted(doc.quantities)))
    for name in sorted(doc.patterns):
        blocks.append(serialize_pattern(doc.patterns[name]))
    if doc.root is not None:
        lines = [f"bindings {doc.root} {{"]
        for path in sorted(doc.bindings):
            spec = doc.bindings[path]
            rhs = _call(spec.component, spec.params) if spec.params else spec.component
            lines.append(f"  {path} = {rhs};")
        lines.append("}")
        blocks.append("\n".join(lines) + "\n")
    for title, section in (("domain", doc.domain), ("sim", doc.sim)):
        if section:
            lines = [f"{title} {{"]
            lines += [f"  {k} = {format_value(section[k])};" for k in sorted(section)]
            lines.append("}")
            blocks.append("\n".join(lines) + "\n")
    if doc.init:
        lines = ["init {"]
        for path in sorted(doc.init):
            spec = doc.init[path]
            if spec.values is not None:
                rhs = "[" + ", ".join(format_value(float(v)) for v in spec.values) + "]"
            else:
                rhs = _call(spec.preset, spec.params)
            lines.append(f"  {path} = {rhs};")
        lines.append("}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def load(path) -> ModelDocument:
    with open(path, "rb") as fh:
        return parse(fh.read())
