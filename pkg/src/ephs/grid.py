"""Staggered discrete calculus on an interval or a circle.

Straight 0-forms (velocity, temperature, electric field, ...) are sampled
at nodes; twisted top-forms are stored as densities per unit length on
cells.  Cell ``i`` sits between nodes ``i`` and ``i+1``.

The node-to-cell difference ``d_nc`` and the cell-to-node difference
``d_cn`` are adjoint up to an endpoint term::

    <e, d_nc g>_cell + <d_cn e, g>_node = e_right * g[n] - e_left * g[0]

where ``e_left`` / ``e_right`` are the ghost values handed to ``d_cn``.
The identity is exact for arbitrary ghosts because the two boundary
nodes carry half-cell weight in the node inner product and the boundary
difference is taken over a half cell.  With the default ghost policy
(copy the adjacent cell) ``d_cn`` vanishes at both end nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch

PLACEMENTS = ("node", "cell", "scalar")


@dataclass(frozen=True)
class Grid1D:
    L: float
    n: int
    periodic: bool = False

    def __post_init__(self):
        if not (self.L > 0):
            raise ValueError(f"grid length must be positive, got {self.L}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dz(self) -> float:
        return self.L / self.n

    @property
    def n_nodes(self) -> int:
        return self.n if self.periodic else self.n + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.dz

    @property
    def cells(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dz

    def size(self, placement: str) -> int:
        if placement == "node":
            return self.n_nodes
        if placement == "cell":
            return self.n
        if placement == "scalar":
            return 2
        raise ValueError(f"unknown placement {placement!r}")

    def coordinates(self, placement: str) -> np.ndarray:
        if placement == "node":
            return self.nodes
        if placement == "cell":
            return self.cells
        return np.array([0.0, self.L])

    @property
    def node_weights(self) -> np.ndarray:
        w = np.full(self.n_nodes, self.dz)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dz
        return w

    def weights(self, placement: str) -> np.ndarray:
        if placement == "node":
            return self.node_weights
        if placement == "cell":
            return np.full(self.n, self.dz)
        return np.ones(2)

    # -- checks -------------------------------------------------------------

    def _node(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.n_nodes,):
            raise GridMismatch(
                f"node field needs shape ({self.n_nodes},), got {g.shape}")
        return g

    def _cell(self, e) -> np.ndarray:
        e = np.asarray(e, dtype=float)
        if e.shape != (self.n,):
            raise GridMismatch(f"cell field needs shape ({self.n},), got {e.shape}")
        return e

    # -- operators ----------------------------------------------------------

    def d_nc(self, g) -> np.ndarray:
        """Difference of a node field, a density on cells."""
        g = self._node(g)
        if self.periodic:
            return (np.roll(g, -1) - g) / self.dz
        return (g[1:] - g[:-1]) / self.dz

    def ghosts(self, e) -> tuple[float, float]:
        """Default ghost values: copies of the two boundary cells."""
        e = self._cell(e)
        return float(e[0]), float(e[-1])

    def d_cn(self, e, e_left: float | None = None,
             e_right: float | None = None) -> np.ndarray:
        """Difference of a cell field, sampled at nodes.

        Ghost values are ignored on periodic grids.  Missing ghosts
        default to the adjacent cell value.
        """
        e = self._cell(e)
        if self.periodic:
            return (e - np.roll(e, 1)) / self.dz
        if e_left is None:
            e_left = e[0]
        if e_right is None:
            e_right = e[-1]
        out = np.empty(self.n + 1)
        out[1:-1] = (e[1:] - e[:-1]) / self.dz
        out[0] = 2.0 * (e[0] - e_left) / self.dz
        out[-1] = 2.0 * (e_right - e[-1]) / self.dz
        return out

    def avg_cn(self, e) -> np.ndarray:
        """Two-point mean of neighbouring cells; end nodes copy their cell."""
        e = self._cell(e)
        if self.periodic:
            return 0.5 * (e + np.roll(e, 1))
        out = np.empty(self.n + 1)
        out[1:-1] = 0.5 * (e[1:] + e[:-1])
        out[0] = e[0]
        out[-1] = e[-1]
        return out

    def avg_nc(self, g) -> np.ndarray:
        """Two-point mean of the nodes bounding each cell."""
        g = self._node(g)
        if self.periodic:
            return 0.5 * (g + np.roll(g, -1))
        return 0.5 * (g[1:] + g[:-1])

    def inner_cell(self, e, f) -> float:
        return float(self.dz * np.dot(self._cell(e), self._cell(f)))

    def inner_node(self, a, b) -> float:
        a = self._node(a)
        b = self._node(b)
        return float(np.dot(self.node_weights * a, b))

    def inner(self, placement: str, a, b) -> float:
        if placement == "node":
            return self.inner_node(a, b)
        if placement == "cell":
            return self.inner_cell(a, b)
        raise ValueError(f"no inner product for placement {placement!r}")

    def restrict_boundary(self, g) -> np.ndarray:
        """Endpoint samples ``(g(0), g(L))`` of a node field.

        On a periodic grid both entries are the value at z = 0, so any
        boundary pairing built from them cancels.
        """
        g = self._node(g)
        if self.periodic:
            return np.array([g[0], g[0]])
        return np.array([g[0], g[-1]])

    def boundary_cells(self, e) -> np.ndarray:
        """The two cells adjacent to the endpoints (ghost values by default)."""
        e = self._cell(e)
        if self.periodic:
            return np.array([e[0], e[0]])
        return np.array([e[0], e[-1]])

    def boundary_pairing(self, e, f) -> float:
        """Endpoint power ``(e f)(L) - (e f)(0)`` of two boundary pairs."""
        if self.periodic:
            return 0.0
        return float(e[1] * f[1] - e[0] * f[0])
