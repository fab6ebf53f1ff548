import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ephs.dsl import load
from ephs.errors import (CyclicDefinition, InterfaceMismatch, InvalidPattern, MultiportMismatch,
                         NameCollision, NotComposite)
from ephs.model import bundled_path
from ephs.pattern import (OUTER, Box, Interface, Junction, Pattern, PortAttribute, PortRef,
                          compose, equation_counts, expand_multiports, flatten,
                          junction_equations, validate_pattern)

P = PortAttribute
MOM = P.power("k", "momentum", "node")
MASS_X = P.state("mass", "cell")


def doc(name):
    return load(bundled_path(name))


def fig1():
    return doc("ideal_fluid_1d").patterns["ideal_fluid"]


def codes(report):
    return [i.code for i in report.issues]


# -- validation ---------------------------------------------------------------

def test_ideal_fluid_is_valid():
    assert not validate_pattern(fig1())


def test_quantity_mismatch():
    p = fig1()
    bad = p.replace(junctions=p.junctions + (Junction.of(("ke", "m"), ("sa", "p_s")),))
    assert "quantity-mismatch" in codes(validate_pattern(bad))


def test_dangling_reference():
    p = fig1()
    bad = p.replace(junctions=p.junctions + (Junction.of(("xx", "m")),))
    assert "dangling-reference" in codes(validate_pattern(bad))


def test_port_in_two_junctions():
    p = fig1()
    bad = p.replace(junctions=p.junctions + (Junction.of(("ke", "p_s"), ("pps", "p_s")),))
    assert "multiple-junctions" in codes(validate_pattern(bad))


def test_unconnected_outer_port():
    p = Pattern("p", Interface.of({"q": MOM}), {"a": Box(Interface.of({"q": MOM}), "storage")})
    assert "unconnected-outer" in codes(validate_pattern(p))


def test_name_collisions():
    with pytest.raises(NameCollision):
        Pattern("p", boxes=(("a", Box(Interface(), "storage")), ("a", Box(Interface(), "storage"))))
    with pytest.raises(NameCollision):
        Pattern("p", boxes={OUTER: Box(Interface(), "storage")})


# -- multiports ----------------------------------------------------------------

def _fluid_host():
    return doc("ideal_fluid_hier_1d").patterns["ideal_fluid"]


def test_expand_multiport_junction():
    host = _fluid_host()
    assert Junction.of(("int", "f"), ("kin", "f")) in host.junctions
    out = expand_multiports(host)
    assert Junction.of(("int", "f.p"), ("kin", "f.p")) in out.junctions
    assert Junction.of(("int", "f.m"), ("kin", "f.m")) in out.junctions
    assert Junction.of(("int", "f"), ("kin", "f")) not in out.junctions


def test_expand_without_multiports_is_identity():
    assert expand_multiports(fig1()) == fig1()


def test_multiport_mismatch():
    a = Interface.of({"f.p": MOM, "f.m": MASS_X})
    b = Interface.of({"f.p": MOM})
    p = Pattern("p", boxes={"a": Box(a, "storage"), "b": Box(b, "storage")},
                junctions=[Junction.of(("a", "f"), ("b", "f"))])
    with pytest.raises(MultiportMismatch):
        expand_multiports(p)


# -- compose -------------------------------------------------------------------

def test_compose_kin_into_host():
    d = doc("ideal_fluid_hier_1d")
    out = compose(d.patterns["ideal_fluid"], "kin", d.patterns["kin"])
    assert sorted(k for k, _ in out.boxes) == ["int", "kin.ke", "kin.pps", "kin.sa"]
    assert not validate_pattern(out)
    assert any({PortRef("kin.pps", "p"), PortRef("int", "f.p")} <= set(j.refs)
               for j in out.junctions)


def test_compose_degenerate_inner():
    itf = Interface.of({"q": MOM})
    inner = Pattern("inner", itf, {"s": Box(itf, "storage")},
                    [Junction.of(("s", "q"), (OUTER, "q"))])
    host = Pattern("host", Interface(),
                   {"c": Box(itf, "composite", "inner"), "r": Box(itf, "reversible")},
                   [Junction.of(("c", "q"), ("r", "q"))])
    out = compose(host, "c", inner)
    assert sorted(k for k, _ in out.boxes) == ["c.s", "r"]
    assert len(out.junctions) == len(host.junctions)
    assert out.junctions[0] == Junction.of(("c.s", "q"), ("r", "q"))


def test_compose_errors():
    itf = Interface.of({"q": MOM})
    host = Pattern("host", Interface(), {"c": Box(itf, "composite"), "s": Box(itf, "storage")},
                   [Junction.of(("c", "q"), ("s", "q"))])
    inner = Pattern("inner", Interface.of({"x": MASS_X}), {"t": Box(
        Interface.of({"x": MASS_X}), "reversible")}, [Junction.of(("t", "x"), (OUTER, "x"))])
    with pytest.raises(InterfaceMismatch):
        compose(host, "c", inner, {"x": "q"})
    with pytest.raises(NotComposite):
        compose(host, "s", inner)


# -- flatten -------------------------------------------------------------------

def test_flatten_ideal_fluid_hierarchy():
    d = doc("ideal_fluid_hier_1d")
    flat = flatten(d.patterns["ideal_fluid"], d.patterns)
    assert sorted(k for k, _ in flat.boxes) == ["int.adv", "int.ie", "kin.ke", "kin.pps",
                                                "kin.sa"]
    assert flat.is_flat()
    assert not validate_pattern(flat)


def test_flatten_nsf_counts():
    d = doc("nsf_1d")
    flat = flatten(d.patterns["nsf"], d.patterns)
    assert len(flat.boxes) == 8
    assert {k for k, _ in flat.boxes} >= {"th", "vol", "shr"}


def test_flatten_flat_is_identity():
    p = fig1()
    assert flatten(p, {}) == p


def test_flatten_cycle(fixtures):
    d = load(fixtures / "cyclic.ephs")
    with pytest.raises(CyclicDefinition):
        flatten(d.patterns["a"], d.patterns)


# Random hierarchies: every pattern exposes one momentum port q, every box
# shares it through a single junction.  Leaves are storage boxes.

@st.composite
def hierarchies(draw):
    n_levels = draw(st.integers(1, 4))
    itf = Interface.of({"q": MOM})
    library = {}
    leaves = {}
    for level in range(n_levels):
        name = f"L{level}"
        n_leaf = draw(st.integers(0 if level else 1, 3))
        children = []
        if level:
            lower = draw(st.lists(st.integers(0, level - 1), min_size=1, max_size=3))
            children = [(f"c{i}", f"L{j}") for i, j in enumerate(lower)]
        boxes = {f"s{i}": Box(itf, "storage") for i in range(n_leaf)}
        boxes.update({b: Box(itf, "composite", ref) for b, ref in children})
        junction = Junction(tuple(PortRef(b, "q") for b in boxes) + (PortRef(OUTER, "q"),))
        library[name] = Pattern(name, itf, boxes, [junction])
        leaves[name] = n_leaf + sum(leaves[ref] for _, ref in children)
    root = f"L{n_levels - 1}"
    order = draw(st.permutations([b for b, bx in library[root].boxes if bx.fill == "composite"]))
    return library, root, leaves[root], order


@settings(max_examples=80, deadline=None)
@given(hierarchies())
def test_flatten_properties(h):
    library, root, n_leaves, order = h
    flat = flatten(library[root], library)
    assert flat.is_flat()
    assert len(flat.boxes) == n_leaves
    assert not validate_pattern(flat)
    # a single junction survives, holding every leaf and the outer port
    assert len(flat.junctions) == 1 and len(flat.junctions[0]) == n_leaves + 1
    assert flatten(library[root], library, order=order) == flat
    assert flatten(flat, library) == flat


@settings(max_examples=40, deadline=None)
@given(st.permutations(["if", "th", "vol", "shr"]))
def test_nsf_flatten_order_independent(order):
    d = doc("nsf_1d")
    composites = [b for b in order if d.patterns["nsf"].box(b).fill == "composite"]
    a = flatten(d.patterns["nsf"], d.patterns)
    b = flatten(d.patterns["nsf"], d.patterns, order=composites)
    assert a == b


def test_box_order_is_canonical():
    p = fig1()
    shuffled = Pattern(p.name, p.outer, tuple(reversed(p.boxes)), tuple(reversed(p.junctions)))
    assert shuffled == p


# -- junction equations -----------------------------------------------------------

def test_mass_junction_equations():
    eqs = junction_equations(fig1())
    je = eqs.for_port(PortRef("ke", "m"))
    lines = je.lines()
    assert lines[0] == "adv.m.x = ie.m.x = ke.m.x = pps.m.x = sa.m.x"
    assert "ke.m.e = sa.m.e" in lines
    assert "ke.m.f + sa.m.f = 0" in lines
    assert "adv.m.e = ie.m.e" in lines
    assert "adv.m.f + ie.m.f = 0" in lines
    assert equation_counts(je) == (4, 2, 2)


def test_exposed_boundary_port_closes_with_zero_flow():
    eqs = junction_equations(fig1())
    je = eqs.for_port(PortRef("sa", "b_k"))
    assert je.lines()[-1] == "sa.b_k.f = outer.b_k.f"
    # the outer side carries no input: isolated boundary
    d = doc("nsf_1d")
    flat = flatten(d.patterns["nsf"], d.patterns)
    lines = junction_equations(flat).lines()
    for port in ("if.kin.sa.b_k", "if.int.adv.b_m", "th.b_t", "vol.b_vv", "shr.b_sv"):
        assert f"{port}.f = 0" in lines


def test_state_only_junction():
    itf = Interface.of({"m": MASS_X})
    p = Pattern("p", Interface(), {"a": Box(itf, "reversible"), "b": Box(itf, "reversible")},
                [Junction.of(("a", "m"), ("b", "m"))])
    je = junction_equations(p).junctions[0]
    assert equation_counts(je) == (1, 0, 0)
    assert je.lines() == ["a.m.x = b.m.x"]


def test_invalid_pattern_refused():
    p = fig1()
    bad = p.replace(junctions=p.junctions + (Junction.of(("zz", "m")),))
    with pytest.raises(InvalidPattern):
        junction_equations(bad)
