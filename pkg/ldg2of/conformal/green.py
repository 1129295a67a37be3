# -*- coding: utf-8 -*-

##
## Green's function pairs G_a = exp(g_a + i h_a): g_a is harmonic in the domain
## with g_a = log|x - a| on the boundary and h_a is its harmonic conjugate,
## normalized so that h_a(a) = 0. On the unit disk G_a(x) = 1 - conj(a) x.
##
## On other domains g_a is the discrete harmonic extension of the band data and
## h_a is integrated on the dual grid (cell centres). Crossing a primal edge
## (u, v) changes h by the difference g(v) - g(u), so the dual 1-form is closed
## around every interior node up to the residual of the Laplace solve, and any
## two dual paths between the same cells give the same value.
##

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.csgraph import breadth_first_order

from ldg2of.common.errors import PointOnBoundary, SolveFailed
from ldg2of.grid.domain import DomainGrid, contains

DISK_MARGIN = 1e-6
SOLVE_TOL = 1e-8


class GreenPair:
    """Evaluator of the holomorphic function G_a for one point a."""

    def __init__(self, a: complex):
        self.a = complex(a)

    def evaluate(self, points) -> np.ndarray:
        raise NotImplementedError

    def at_nodes(self, grid: DomainGrid) -> np.ndarray:
        """G_a at every node; exterior nodes are left at 1."""
        return np.where(grid.active, self.evaluate(grid.z), 1.0 + 0.0j)

    def at_boundary(self, grid: DomainGrid) -> np.ndarray:
        """G_a at the boundary points of the band nodes (row-major band order)."""
        return self.evaluate(grid.boundary_points)

    def boundary_residual(self, points) -> float:
        """max | |G_a(x)| - |x - a| | over the given boundary points."""
        points = np.asarray(points, dtype=complex)
        return float(np.max(np.abs(np.abs(self.evaluate(points)) - np.abs(points - self.a))))


class DiskGreenPair(GreenPair):

    def evaluate(self, points) -> np.ndarray:
        return 1.0 - np.conj(self.a) * np.asarray(points, dtype=complex)


def disk_green_pair(a: complex) -> DiskGreenPair:
    a = complex(a)
    if abs(a) >= 1.0 - DISK_MARGIN:
        raise PointOnBoundary(f"escape point {a} is not inside the unit disk")
    return DiskGreenPair(a)


def _extend(grid: DomainGrid, values: np.ndarray) -> np.ndarray:
    """Copy of node values with every exterior node set to its nearest active node."""
    _, nearest = ndimage.distance_transform_edt(~grid.active, return_indices=True)
    return values[tuple(nearest)]


class NumericGreenPair(GreenPair):
    """Node-sampled G_a. Off-node values are interpolated bilinearly in (g, h)
    after extending the node values to the exterior ring by nearest neighbour."""

    def __init__(self, grid: DomainGrid, a: complex, g: np.ndarray, h: np.ndarray, cells: np.ndarray):
        super().__init__(a)
        self.grid = grid
        self.g = g
        self.h = h
        self.cells = cells
        self._interp = [RegularGridInterpolator((grid.y, grid.x), _extend(grid, v),
                                                bounds_error=False, fill_value=None)
                        for v in (g, h)]

    def at_nodes(self, grid: DomainGrid) -> np.ndarray:
        if grid is not self.grid:
            return super().at_nodes(grid)
        return np.where(grid.active, np.exp(self.g + 1j * self.h), 1.0 + 0.0j)

    def at_boundary(self, grid: DomainGrid) -> np.ndarray:
        if grid is not self.grid:
            return super().at_boundary(grid)
        # Band values of g are exactly log|x_b - a|, so the boundary identity holds here
        return np.exp(self.g[grid.band] + 1j * self.h[grid.band])

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        yx = np.stack([points.imag.ravel(), points.real.ravel()], axis=-1)
        g = self._interp[0](yx).reshape(points.shape)
        h = self._interp[1](yx).reshape(points.shape)
        return np.exp(g + 1j * h)


def _cell_graph(grid: DomainGrid, g: np.ndarray) -> Tuple[np.ndarray, sparse.csr_matrix]:
    """Active cells (all four corners active), their adjacency and the increment
    of h across each dual edge, stored antisymmetrically as inc[u, v] = h(v) - h(u)."""
    act = grid.active
    cells = act[:-1, :-1] & act[:-1, 1:] & act[1:, :-1] & act[1:, 1:]
    ny, nx = cells.shape
    index = -np.ones(cells.shape, dtype=np.int64)
    index[cells] = np.arange(int(cells.sum()))

    rows, cols, vals = [], [], []
    # +x neighbour crosses the primal y-edge (r, c+1) -> (r+1, c+1): h_x = -g_y
    src, dst = index[:, :-1], index[:, 1:]
    pair = (src >= 0) & (dst >= 0)
    dg = -(g[1:, 1:nx] - g[:-1, 1:nx])[:, :nx - 1]
    rows.append(src[pair])
    cols.append(dst[pair])
    vals.append(dg[pair])
    # +y neighbour crosses the primal x-edge (r+1, c) -> (r+1, c+1): h_y = g_x
    src, dst = index[:-1, :], index[1:, :]
    pair = (src >= 0) & (dst >= 0)
    dg = (g[1:ny, 1:] - g[1:ny, :-1])[:ny - 1, :]
    rows.append(src[pair])
    cols.append(dst[pair])
    vals.append(dg[pair])

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    n = int(cells.sum())
    inc = sparse.csr_matrix((np.concatenate([v, -v]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                            shape=(n, n))
    return cells, inc


def _integrate_tree(inc: sparse.csr_matrix, anchor: int) -> Tuple[np.ndarray, np.ndarray]:
    """h on the BFS tree rooted at `anchor`, summed along predecessor chains by
    pointer jumping. Returns (h, reached)."""
    n = inc.shape[0]
    adjacency = inc.copy()
    adjacency.data = np.ones_like(adjacency.data)
    order, pred = breadth_first_order(adjacency, anchor, directed=False, return_predecessors=True)
    reached = np.zeros(n, dtype=bool)
    reached[order] = True
    ptr = np.where(pred >= 0, pred, np.arange(n))
    acc = np.zeros(n)
    tree = np.flatnonzero(pred >= 0)
    acc[tree] = np.asarray(inc[pred[tree], tree]).ravel()
    while np.any(ptr != ptr[ptr]):
        acc = acc + np.where(ptr != np.arange(n), acc[ptr], 0.0)
        ptr = ptr[ptr]
    return np.where(reached, acc, 0.0), reached


def _cells_to_nodes(grid: DomainGrid, cells: np.ndarray, hc: np.ndarray) -> np.ndarray:
    """Average of the surrounding active cells at every node; nodes without an
    active cell take the value of the nearest node that has one."""
    total = np.zeros(grid.shape)
    count = np.zeros(grid.shape)
    for dr in (0, 1):
        for dc in (0, 1):
            total[dr:dr + cells.shape[0], dc:dc + cells.shape[1]] += hc
            count[dr:dr + cells.shape[0], dc:dc + cells.shape[1]] += cells
    has = count > 0
    h = np.where(has, total / np.where(has, count, 1.0), 0.0)
    if not np.all(has[grid.active]):
        _, nearest = ndimage.distance_transform_edt(~has, return_indices=True)
        h = np.where(has, h, h[tuple(nearest)])
    return np.where(grid.active, h, 0.0)


def numeric_green_pair(grid: DomainGrid, a: complex) -> NumericGreenPair:
    logger = logging.getLogger(__name__)
    a = complex(a)
    if not contains(grid.descriptor, a.real, a.imag):
        raise PointOnBoundary(f"escape point {a} lies outside the domain")
    distance = float(np.min(np.abs(grid.boundary_points - a)))
    if distance < 2.0 * grid.h:
        raise PointOnBoundary(f"escape point {a} is {distance:.3e} from the boundary, need at least 2h")

    band_values = np.zeros(grid.shape)
    band_values[grid.band] = np.log(np.abs(grid.boundary_points - a))
    g, residual = grid.solve_laplace(band_values)
    scale = max(1.0, float(np.max(np.abs(band_values))))
    if not np.isfinite(residual) or residual > SOLVE_TOL * scale:
        raise SolveFailed(f"Laplace solve for escape point {a} left residual {residual:.3e}")

    cells, inc = _cell_graph(grid, g)
    # Anchor: the lowest-index active cell
    hc_flat, reached = _integrate_tree(inc, 0)
    if not np.all(reached):
        logger.warning(f"{int((~reached).sum())} cells are not connected to the anchor cell")
    hc = np.zeros(cells.shape)
    hc[cells] = hc_flat
    h = _cells_to_nodes(grid, cells, hc)
    shift = float(RegularGridInterpolator((grid.y, grid.x), _extend(grid, h))([[a.imag, a.real]])[0])
    h = np.where(grid.active, h - shift, 0.0)

    logger.debug(f"Green pair for a={a}: Laplace residual {residual:.2e}, {int(cells.sum())} cells")
    return NumericGreenPair(grid, a, g, h, cells)


def green_pair(grid: DomainGrid, a: complex) -> GreenPair:
    """Closed-form pair on the unit disk, numerical pair elsewhere."""
    if grid.descriptor.kind == "disk":
        return disk_green_pair(a)
    return numeric_green_pair(grid, a)


def conjugate_along_path(grid: DomainGrid, g: np.ndarray, path: Sequence[Tuple[int, int]]) -> float:
    """Change of the harmonic conjugate of g along a path of grid cells.

    Cells are named by their lower-left node (row, col); consecutive cells must
    share an edge and all four corners of every cell must be active."""
    g = np.asarray(g, dtype=float)
    act = grid.active
    total = 0.0
    for (r0, c0), (r1, c1) in zip(path[:-1], path[1:]):
        for r, c in ((r0, c0), (r1, c1)):
            if not (act[r, c] and act[r + 1, c] and act[r, c + 1] and act[r + 1, c + 1]):
                raise ValueError(f"cell {(r, c)} has an exterior corner")
        dr, dc = r1 - r0, c1 - c0
        if (dr, dc) == (0, 1):
            total -= g[r0 + 1, c0 + 1] - g[r0, c0 + 1]
        elif (dr, dc) == (0, -1):
            total += g[r0 + 1, c0] - g[r0, c0]
        elif (dr, dc) == (1, 0):
            total += g[r0 + 1, c0 + 1] - g[r0 + 1, c0]
        elif (dr, dc) == (-1, 0):
            total -= g[r0, c0 + 1] - g[r0, c0]
        else:
            raise ValueError(f"cells {(r0, c0)} and {(r1, c1)} are not adjacent")
    return total
