# -*- coding: utf-8 -*-

##
## Masked uniform Cartesian grid over a simply connected domain.
##
## Nodes are classified as exterior (0), boundary band (1) or interior (2). Interior
## nodes have all four stencil neighbours active; band nodes are active nodes next
## to the exterior and carry Dirichlet data sampled at a point of the boundary.
## Node weights are the area of the dual cell inside the domain, estimated with a
## 4x4 subsample; edges that touch an interior node carry the full weight h^2, so
## the gradient of dirichlet_energy() at interior nodes is exactly the 5-point
## Laplacian.
##

import functools
import logging
import math
from typing import Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import factorized

from ldg2of.common.errors import InactiveNode, UnsupportedDomain
from ldg2of.common.types import DomainDescriptor

EXTERIOR, BAND, INTERIOR = 0, 1, 2

MIN_RESOLUTION = 16

# Subsample offsets (in units of h) for cut-cell areas
_SUB = (np.arange(4) + 0.5) / 4.0 - 0.5


def check_descriptor(desc: DomainDescriptor) -> DomainDescriptor:
    if desc.kind not in ("disk", "square", "ellipse"):
        raise UnsupportedDomain(f"unsupported domain '{desc.kind}'")
    if desc.kind == "ellipse" and (desc.rx <= 0.0 or desc.ry <= 0.0):
        raise UnsupportedDomain(f"ellipse semi-axes must be positive, got {desc.rx}, {desc.ry}")
    return desc


def half_extent(desc: DomainDescriptor) -> Tuple[float, float]:
    if desc.kind == "disk":
        return 1.0, 1.0
    if desc.kind == "square":
        return 0.5, 0.5
    return desc.rx, desc.ry


def level(desc: DomainDescriptor, x, y) -> np.ndarray:
    """Gauge function of the domain: < 1 inside, 1 on the boundary."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if desc.kind == "disk":
        return np.hypot(x, y)
    if desc.kind == "square":
        return 2.0 * np.maximum(np.abs(x), np.abs(y))
    return np.hypot(x / desc.rx, y / desc.ry)


def contains(desc: DomainDescriptor, x, y, tol: float = 1e-12) -> np.ndarray:
    return level(desc, x, y) <= 1.0 + tol


def area(desc: DomainDescriptor) -> float:
    if desc.kind == "disk":
        return math.pi
    if desc.kind == "square":
        return 1.0
    return math.pi * desc.rx * desc.ry


def perimeter(desc: DomainDescriptor) -> float:
    if desc.kind == "disk":
        return 2.0 * math.pi
    if desc.kind == "square":
        return 4.0
    a, b = desc.rx, desc.ry
    hh = ((a - b) / (a + b)) ** 2
    return math.pi * (a + b) * (1.0 + 3.0 * hh / (10.0 + math.sqrt(4.0 - 3.0 * hh)))


def project_to_boundary(desc: DomainDescriptor, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Boundary point used for Dirichlet sampling of a node near the boundary.

    Nearest point for the disk and the square; radial projection for the ellipse."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if desc.kind == "square":
        d = np.stack([x + 0.5, 0.5 - x, y + 0.5, 0.5 - y])
        side = np.argmin(d, axis=0)
        bx = np.select([side == 0, side == 1], [np.full_like(x, -0.5), np.full_like(x, 0.5)], x)
        by = np.select([side == 2, side == 3], [np.full_like(y, -0.5), np.full_like(y, 0.5)], y)
        return np.clip(bx, -0.5, 0.5), np.clip(by, -0.5, 0.5)
    lev = level(desc, x, y)
    centre = lev == 0.0
    lev = np.where(centre, 1.0, lev)
    bx = np.where(centre, half_extent(desc)[0], x / lev)
    by = np.where(centre, 0.0, y / lev)
    return bx, by


def boundary_curve(desc: DomainDescriptor, t) -> Tuple[np.ndarray, np.ndarray]:
    """Boundary point in polar direction t, counter-clockwise in t."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t), np.sin(t)
    lev = level(desc, c, s)
    return c / lev, s / lev


class DomainGrid:
    """Uniform grid with spacing 1/resolution, covering the domain with one ring
    of exterior nodes on every side. Arrays are indexed [row, col] = [y, x]."""

    def __init__(self, descriptor: DomainDescriptor, resolution: int):
        self._logger = logging.getLogger(__name__)
        if resolution is None or int(resolution) < MIN_RESOLUTION:
            raise UnsupportedDomain(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
        self.descriptor = check_descriptor(descriptor)
        self.resolution = int(resolution)
        self.h = 1.0 / self.resolution

        hx, hy = half_extent(descriptor)
        kx = math.ceil(hx * self.resolution - 1e-9)
        ky = math.ceil(hy * self.resolution - 1e-9)
        self.nx = 2 * kx + 3
        self.ny = 2 * ky + 3
        self.x = (np.arange(self.nx) - (kx + 1)) * self.h
        self.y = (np.arange(self.ny) - (ky + 1)) * self.h
        self.origin = (float(self.x[0]), float(self.y[0]))
        self.X, self.Y = np.meshgrid(self.x, self.y)

        active = contains(descriptor, self.X, self.Y)
        interior = np.zeros_like(active)
        interior[1:-1, 1:-1] = (active[1:-1, 1:-1] & active[1:-1, 2:] & active[1:-1, :-2]
                                & active[2:, 1:-1] & active[:-2, 1:-1])
        self.mask = np.where(interior, INTERIOR, np.where(active, BAND, EXTERIOR)).astype(np.int8)
        self.mask.setflags(write=False)

        self.weights = self._cell_areas() * self.active
        self.weights.setflags(write=False)
        self.wx, self.wy = self._edge_weights()

        bx, by = project_to_boundary(descriptor, self.X, self.Y)
        self.boundary_x = np.where(self.band, bx, np.nan)
        self.boundary_y = np.where(self.band, by, np.nan)

        self._logger.debug(f"Grid {descriptor.kind} N={self.resolution}: {self.nx}x{self.ny} nodes, "
                           f"{int(self.interior.sum())} interior, {int(self.band.sum())} band")

    # Classification

    @property
    def active(self) -> np.ndarray:
        return self.mask != EXTERIOR

    @property
    def interior(self) -> np.ndarray:
        return self.mask == INTERIOR

    @property
    def band(self) -> np.ndarray:
        return self.mask == BAND

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def z(self) -> np.ndarray:
        """Node coordinates as complex numbers x + iy."""
        return self.X + 1j * self.Y

    @property
    def boundary_points(self) -> np.ndarray:
        """Boundary points of the band nodes (row-major order) as complex numbers."""
        return self.boundary_x[self.band] + 1j * self.boundary_y[self.band]

    @functools.cached_property
    def mass(self) -> np.ndarray:
        """Node weight relative to h^2; 1 at interior nodes of convex domains."""
        return self.weights / self.h ** 2

    def node_of(self, x: float, y: float) -> Tuple[int, int]:
        col = int(round((x - self.origin[0]) / self.h))
        row = int(round((y - self.origin[1]) / self.h))
        return row, col

    def deep_interior(self, layers: int = 3) -> np.ndarray:
        """Interior nodes at least `layers` grid steps away from the boundary band."""
        if layers <= 0:
            return self.interior
        return ndimage.binary_erosion(self.interior, iterations=layers)

    def boundary_order(self) -> np.ndarray:
        """Flat indices of the band nodes sorted counter-clockwise by the polar angle
        of their boundary points."""
        flat = np.flatnonzero(self.band.ravel())
        bx = self.boundary_x.ravel()[flat]
        by = self.boundary_y.ravel()[flat]
        order = np.lexsort((np.hypot(self.X.ravel()[flat], self.Y.ravel()[flat]), np.arctan2(by, bx)))
        return flat[order]

    # Quadrature

    def _cell_areas(self) -> np.ndarray:
        count = np.zeros(self.shape)
        for ox in _SUB:
            for oy in _SUB:
                count += contains(self.descriptor, self.X + ox * self.h, self.Y + oy * self.h)
        return count / 16.0 * self.h ** 2

    def _edge_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        h2 = self.h ** 2
        act = self.active
        inner = self.interior
        off = _SUB + 0.5

        ax = np.zeros((self.ny, self.nx - 1))
        ay = np.zeros((self.ny - 1, self.nx))
        for s in off:
            for oy in _SUB:
                ax += contains(self.descriptor, self.X[:, :-1] + s * self.h, self.Y[:, :-1] + oy * self.h)
                ay += contains(self.descriptor, self.X[:-1, :] + oy * self.h, self.Y[:-1, :] + s * self.h)
        ax *= h2 / 16.0
        ay *= h2 / 16.0

        wx = np.where(inner[:, :-1] | inner[:, 1:], h2, ax) * (act[:, :-1] & act[:, 1:])
        wy = np.where(inner[:-1, :] | inner[1:, :], h2, ay) * (act[:-1, :] & act[1:, :])
        wx.setflags(write=False)
        wy.setflags(write=False)
        return wx, wy

    def integrate(self, density) -> float:
        """Weighted sum of a per-node density over the active nodes. numpy's
        pairwise summation keeps the reduction order fixed."""
        density = np.asarray(density, dtype=float)
        w = self.weights.reshape(self.shape + (1,) * (density.ndim - 2))
        return float(np.sum(np.where(w > 0.0, density * w, 0.0)))

    def dirichlet_energy(self, values) -> float:
        """Edge-based approximation of the integral of |grad u|^2 (u scalar or vector)."""
        u = np.asarray(values, dtype=float)
        if u.ndim == 2:
            u = u[..., None]
        dx = u[:, 1:] - u[:, :-1]
        dy = u[1:, :] - u[:-1, :]
        ex = np.sum(dx * dx, axis=-1)
        ey = np.sum(dy * dy, axis=-1)
        return float(np.sum(self.wx * ex) + np.sum(self.wy * ey)) / self.h ** 2

    # Finite differences

    def gradient(self, values) -> np.ndarray:
        """Node-centred gradient: central differences where both neighbours are
        active, one-sided at band nodes, zero at exterior nodes.

        Returns shape (ny, nx, 2, C) for values of shape (ny, nx, C), or (ny, nx, 2)
        for scalar values."""
        u = np.asarray(values, dtype=float)
        scalar = u.ndim == 2
        if scalar:
            u = u[..., None]
        act = self.active
        out = np.zeros(self.shape + (2, u.shape[-1]))
        for axis, d in ((1, 0), (0, 1)):
            fwd = np.roll(act, -1, axis=axis)
            bwd = np.roll(act, 1, axis=axis)
            up = np.roll(u, -1, axis=axis)
            dn = np.roll(u, 1, axis=axis)
            both = (act & fwd & bwd)[..., None]
            only_f = (act & fwd & ~bwd)[..., None]
            only_b = (act & bwd & ~fwd)[..., None]
            out[:, :, d] = np.where(both, (up - dn) / (2.0 * self.h),
                                    np.where(only_f, (up - u) / self.h,
                                             np.where(only_b, (u - dn) / self.h, 0.0)))
        return out[..., 0] if scalar else out

    def laplacian(self, values) -> np.ndarray:
        """5-point Laplacian at interior nodes, zero elsewhere."""
        u = np.asarray(values, dtype=float)
        lap = np.zeros_like(u)
        lap[1:-1, 1:-1] = (u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1]
                           - 4.0 * u[1:-1, 1:-1]) / self.h ** 2
        inner = self.interior.reshape(self.shape + (1,) * (u.ndim - 2))
        return np.where(inner, lap, 0.0)

    def _check_interior(self, node: Tuple[int, int]):
        row, col = node
        if not (0 <= row < self.ny and 0 <= col < self.nx) or self.mask[row, col] != INTERIOR:
            raise InactiveNode(f"node {node} is not an interior node")

    def gradient_at(self, values, node: Tuple[int, int]) -> np.ndarray:
        self._check_interior(node)
        u = np.asarray(values, dtype=float)
        r, c = node
        return np.stack([(u[r, c + 1] - u[r, c - 1]), (u[r + 1, c] - u[r - 1, c])]) / (2.0 * self.h)

    def laplacian_at(self, values, node: Tuple[int, int]) -> np.ndarray:
        self._check_interior(node)
        u = np.asarray(values, dtype=float)
        r, c = node
        return (u[r, c + 1] + u[r, c - 1] + u[r + 1, c] + u[r - 1, c] - 4.0 * u[r, c]) / self.h ** 2

    # Discrete Laplace problem on the interior nodes

    @functools.cached_property
    def _interior_index(self) -> np.ndarray:
        index = -np.ones(self.shape, dtype=np.int64)
        index[self.interior] = np.arange(int(self.interior.sum()))
        return index

    @functools.cached_property
    def laplace_system(self):
        """(matrix, solve) for the 5-point Dirichlet Laplacian -h^2 Delta on interior
        nodes; solve() is a cached sparse LU factorization."""
        index = self._interior_index
        n = int(self.interior.sum())
        rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.full(n, 4.0)]
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            src = index[1:-1, 1:-1]
            dst = index[1 + dr:self.ny - 1 + dr, 1 + dc:self.nx - 1 + dc]
            pair = (src >= 0) & (dst >= 0)
            rows.append(src[pair])
            cols.append(dst[pair])
            vals.append(np.full(int(pair.sum()), -1.0))
        a = sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n, n))
        return a, factorized(a)

    def solve_laplace(self, boundary_values) -> Tuple[np.ndarray, float]:
        """Discrete harmonic extension of band values. Returns the node array and
        the max-norm residual of the linear system."""
        g = np.where(self.band, np.asarray(boundary_values, dtype=float), 0.0)
        rhs_full = np.zeros(self.shape)
        rhs_full[1:-1, 1:-1] = g[1:-1, 2:] + g[1:-1, :-2] + g[2:, 1:-1] + g[:-2, 1:-1]
        rhs = rhs_full[self.interior]
        a, solve = self.laplace_system
        sol = solve(rhs)
        residual = float(np.max(np.abs(a @ sol - rhs))) if rhs.size else 0.0
        g[self.interior] = sol
        return g, residual


@functools.lru_cache(maxsize=8)
def make_grid(descriptor: DomainDescriptor, resolution: int) -> DomainGrid:
    """Build (or reuse) the grid for a domain at `resolution` nodes per unit length."""
    return DomainGrid(descriptor, resolution)
