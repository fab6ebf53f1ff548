import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ephs.errors import GridMismatch
from ephs.grid import Grid1D


def test_sizes_and_coordinates():
    g = Grid1D(2.0, 4)
    assert g.dz == 0.5
    assert g.n_nodes == 5
    np.testing.assert_allclose(g.nodes, [0, 0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(g.cells, [0.25, 0.75, 1.25, 1.75])
    p = Grid1D(2.0, 4, periodic=True)
    assert p.n_nodes == 4
    assert p.size("scalar") == 2


def test_bad_grid():
    with pytest.raises(ValueError):
        Grid1D(1.0, 0)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 4)


def test_d_nc_constant_and_linear():
    g = Grid1D(1.0, 4)
    np.testing.assert_array_equal(g.d_nc(np.full(5, 3.0)), np.zeros(4))
    np.testing.assert_allclose(g.d_nc(g.nodes), np.ones(4), rtol=0, atol=1e-15)


def test_d_nc_telescopes(rng):
    g = Grid1D(1.3, 17)
    v = rng.normal(size=g.n_nodes)
    assert g.dz * np.sum(g.d_nc(v)) == pytest.approx(v[-1] - v[0], abs=1e-13)


def test_d_cn_constant_and_linear():
    g = Grid1D(1.0, 4)
    np.testing.assert_array_equal(g.d_cn(np.full(4, 2.0), 2.0, 2.0), np.zeros(5))
    e = g.cells
    out = g.d_cn(e, e_left=0.0, e_right=1.0)
    np.testing.assert_allclose(out, np.ones(5), atol=1e-14)


def test_wrong_length_raises():
    g = Grid1D(1.0, 4)
    with pytest.raises(GridMismatch):
        g.d_nc(np.zeros(4))
    with pytest.raises(GridMismatch):
        g.d_cn(np.zeros(5))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**31), gl=st.floats(-5, 5),
       gr=st.floats(-5, 5))
def test_summation_by_parts(n, seed, gl, gr):
    """<e, d_nc g>_cell + <d_cn e, g>_node = eR g_n - eL g_0 for any ghosts."""
    rng = np.random.default_rng(seed)
    g = Grid1D(1.0 + rng.random(), n)
    e = rng.normal(size=n)
    v = rng.normal(size=n + 1)
    lhs = g.inner_cell(e, g.d_nc(v)) + g.inner_node(g.d_cn(e, gl, gr), v)
    rhs = gr * v[-1] - gl * v[0]
    scale = 1 + np.sum(np.abs(e)) * np.max(np.abs(v))
    assert abs(lhs - rhs) <= 1e-13 * scale


def test_summation_by_parts_default_ghosts(rng):
    g = Grid1D(1.0, 9)
    e = rng.normal(size=9)
    v = rng.normal(size=10)
    lhs = g.inner_cell(e, g.d_nc(v)) + g.inner_node(g.d_cn(e), v)
    assert lhs == pytest.approx(e[-1] * v[-1] - e[0] * v[0], abs=1e-13)


def test_periodic_adjoint(rng):
    g = Grid1D(1.0, 12, periodic=True)
    e = rng.normal(size=12)
    v = rng.normal(size=12)
    assert g.inner_cell(e, g.d_nc(v)) + g.inner_node(g.d_cn(e), v) == pytest.approx(0, abs=1e-13)


def test_averages():
    g = Grid1D(1.0, 4)
    np.testing.assert_array_equal(g.avg_cn(np.full(4, 1.5)), np.full(5, 1.5))
    np.testing.assert_array_equal(g.avg_nc(np.full(5, 1.5)), np.full(4, 1.5))
    np.testing.assert_allclose(g.avg_cn(g.cells)[1:-1], g.nodes[1:-1])
    np.testing.assert_allclose(g.avg_nc(g.nodes), g.cells)


def _mass_change(grid, rho):
    return abs(np.sum(grid.avg_nc(grid.avg_cn(rho))) - np.sum(rho))


def test_double_average_conserves_mass_search():
    """Exhaustive search on n=4 for a mass-changing input finds none.

    With end nodes copying their cell, the weighted sum is preserved on
    both bounded and periodic grids, so it can be relied on.
    """
    values = (0.1, 1.0, 2.5, 7.0)
    for periodic in (False, True):
        g = Grid1D(1.0, 4, periodic)
        worst = max(_mass_change(g, np.array(rho))
                    for rho in itertools.product(values, repeat=4))
        assert worst <= 1e-14


def test_inner_products():
    g = Grid1D(2.0, 5)
    assert g.inner_cell(np.ones(5), np.ones(5)) == pytest.approx(2.0)
    assert g.inner_node(np.ones(6), np.ones(6)) == pytest.approx(2.0)
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=6), rng.normal(size=6)
    assert g.inner_node(a, b) == g.inner_node(b, a)
    with pytest.raises(ValueError):
        g.inner("scalar", np.ones(2), np.ones(2))


def test_restrict_boundary():
    g = Grid1D(1.0, 3)
    np.testing.assert_array_equal(g.restrict_boundary(np.arange(4.0)), [0.0, 3.0])
    np.testing.assert_array_equal(g.boundary_cells(np.arange(3.0)), [0.0, 2.0])
    p = Grid1D(1.0, 3, periodic=True)
    assert p.boundary_pairing(np.ones(2), np.ones(2)) == 0.0


def test_pairing_converges_to_endpoint_difference():
    """Smooth samples with extrapolated ghosts: second-order agreement."""
    def err(n):
        g = Grid1D(1.0, n)
        f = np.cos(g.cells)
        v = np.exp(g.nodes)
        el = 1.5 * f[0] - 0.5 * f[1]
        er = 1.5 * f[-1] - 0.5 * f[-2]
        lhs = g.inner_cell(f, g.d_nc(v)) + g.inner_node(g.d_cn(f, el, er), v)
        return abs(lhs - (np.cos(1.0) * np.e - 1.0))

    ns = np.array([16, 32, 64, 128])
    errors = np.array([err(n) for n in ns])
    slope = -np.polyfit(np.log(ns), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)
