# -*- coding: utf-8 -*-

##
## Conformal director fields built from escape points.
##
## Every construction is written as a ratio w = num / den of two node arrays and
## projected with stereographic_ratio(), so zeros and poles of w are handled
## without dividing. Band nodes get planar boundary data evaluated at their
## boundary points, where |num| = |den| holds by the boundary identity of the
## Green's pairs.
##

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from ldg2of.common.errors import InvalidEscapeConfig, UnderSampled
from ldg2of.common.types import EscapeConfig
from ldg2of.conformal.green import GreenPair, disk_green_pair, green_pair
from ldg2of.conformal.stereo import stereographic_ratio
from ldg2of.grid.domain import DomainGrid, level, project_to_boundary
from ldg2of.grid.fields import DirectorField

logger = logging.getLogger(__name__)

# |w| on the boundary for the b^2 = 0 c-field. sqrt(3) gives c3 = -1/2, the
# height of a planar uniaxial tensor; the alternative gives c3 = -1/sqrt(3).
KAPPA_PLANAR = math.sqrt(3.0)
KAPPA_ALT = math.sqrt(2.0 + math.sqrt(3.0))


def boundary_height(kappa: float) -> float:
    """c3 on the boundary when |w| = kappa there (lower hemisphere convention)."""
    return (1.0 - kappa ** 2) / (1.0 + kappa ** 2)


def _pairs(grid: Optional[DomainGrid], points: Sequence[complex]) -> List[GreenPair]:
    if grid is None:
        return [disk_green_pair(a) for a in points]
    return [green_pair(grid, a) for a in points]


def _products(pairs: List[GreenPair], z: np.ndarray, g_values: List[np.ndarray]):
    """(prod (z - a_j), prod G_j) for node or boundary arrays."""
    zeros = np.ones_like(z, dtype=complex)
    greens = np.ones_like(z, dtype=complex)
    for pair, gv in zip(pairs, g_values):
        zeros = zeros * (z - pair.a)
        greens = greens * gv
    return zeros, greens


def _ratio(cfg: EscapeConfig, zeros: np.ndarray, greens: np.ndarray):
    """num, den of w = e^{i alpha} prod (z - a) / prod G, conjugated for m < 0 and
    inverted (w -> 1 / conj w) for the south orientation."""
    phase = np.exp(1j * cfg.alpha)
    num, den = phase * zeros, greens
    if cfg.m < 0:
        num, den = np.conj(num), np.conj(den)
    if cfg.orientation == "south":
        num, den = np.conj(den), np.conj(num)
    return num, den


def _planar(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    phi = np.angle(num * np.conj(den))
    return np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)


def _check_inside(grid: DomainGrid, points: Sequence[complex]):
    for a in points:
        if level(grid.descriptor, a.real, a.imag) >= 1.0:
            raise InvalidEscapeConfig(f"escape point {a} is not inside the {grid.descriptor.kind}")


def conformal_field(cfg: EscapeConfig, grid: DomainGrid, pairs: Optional[List[GreenPair]] = None) -> DirectorField:
    """n = stereographic(w), w = e^{i alpha} [prod (x - a_j) / G_{a_j}(x)]^{sgn m}.

    The escape points are exactly the nodes where n = e3 (north) or -e3 (south)."""
    points = cfg.complex_points
    _check_inside(grid, points)
    if pairs is None:
        pairs = _pairs(grid, points)

    zeros, greens = _products(pairs, grid.z, [p.at_nodes(grid) for p in pairs])
    num, den = _ratio(cfg, zeros, greens)
    values = stereographic_ratio(num, den)

    bz = grid.boundary_points
    zeros_b, greens_b = _products(pairs, bz, [p.at_boundary(grid) for p in pairs])
    values[grid.band] = _planar(*_ratio(cfg, zeros_b, greens_b))
    values[~grid.active] = 0.0
    logger.debug(f"Conformal field m={cfg.m} points={cfg.points_text()} orientation={cfg.orientation}")
    return DirectorField.normalized(grid, values)


def mixed_conformal_field(b_points: Sequence, c_points: Sequence, alpha: float, grid: DomainGrid) -> DirectorField:
    """w = e^{i alpha} prod (x - b) prod G_c / (prod G_b prod (x - c)): zeros at the
    b-points (n = e3), poles at the c-points (n = -e3)."""
    bz = [complex(p[0], p[1]) for p in b_points]
    cz = [complex(p[0], p[1]) for p in c_points]
    if not bz and not cz:
        raise InvalidEscapeConfig("a mixed field needs at least one zero or pole")
    _check_inside(grid, bz + cz)
    b_pairs = _pairs(grid, bz)
    c_pairs = _pairs(grid, cz)
    phase = np.exp(1j * alpha)

    def ratio(z, b_vals, c_vals):
        b_zeros, b_greens = _products(b_pairs, z, b_vals)
        c_zeros, c_greens = _products(c_pairs, z, c_vals)
        return phase * b_zeros * c_greens, b_greens * c_zeros

    num, den = ratio(grid.z, [p.at_nodes(grid) for p in b_pairs], [p.at_nodes(grid) for p in c_pairs])
    values = stereographic_ratio(num, den)
    values[grid.band] = _planar(*ratio(grid.boundary_points,
                                       [p.at_boundary(grid) for p in b_pairs],
                                       [p.at_boundary(grid) for p in c_pairs]))
    values[~grid.active] = 0.0
    return DirectorField.normalized(grid, values)


def boundary_director(cfg: EscapeConfig, points, grid: Optional[DomainGrid] = None) -> np.ndarray:
    """Planar boundary data cos(phi) e1 + sin(phi) e2, phi = arg w, at points of the
    boundary. Without a grid the unit disk is assumed."""
    points = np.asarray(points, dtype=complex)
    pairs = _pairs(grid, cfg.complex_points)
    zeros, greens = _products(pairs, points, [p.evaluate(points) for p in pairs])
    return _planar(*_ratio(cfg, zeros, greens))


def boundary_angle_of(cfg: EscapeConfig, grid: Optional[DomainGrid] = None) -> Callable[[np.ndarray], np.ndarray]:
    """The planar angle of boundary_director() as a function of boundary points."""
    def angle(points):
        v = boundary_director(cfg, points, grid)
        return np.arctan2(v[..., 1], v[..., 0])
    return angle


def control_boundary_angle(points) -> np.ndarray:
    """Non-conformal planar boundary data phi = theta + 0.5 sin(2 theta), degree 1."""
    theta = np.angle(np.asarray(points, dtype=complex))
    return theta + 0.5 * np.sin(2.0 * theta)


def _wrapped_steps(angles: np.ndarray) -> np.ndarray:
    d = np.diff(np.concatenate([angles, angles[:1]]))
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def degree_of_boundary(vectors) -> int:
    """Winding number of planar vectors sampled counter-clockwise along a closed
    boundary. The loop closes from the last sample back to the first."""
    v = np.asarray(vectors, dtype=float)
    steps = _wrapped_steps(np.arctan2(v[:, 1], v[:, 0]))
    worst = float(np.max(np.abs(steps))) if steps.size else 0.0
    if worst >= np.pi / 2.0:
        raise UnderSampled(f"consecutive boundary samples rotate by {worst:.3f} rad")
    return int(round(float(np.sum(steps)) / (2.0 * np.pi)))


def q_degree_of_boundary(vectors) -> int:
    """Degree of the Q-tensor map x -> n n^T of planar data: the winding of the
    doubled angle. A director turning by pi around the loop gives 1, so
    non-orientable data have a well-defined integer degree here."""
    v = np.asarray(vectors, dtype=float)
    steps = _wrapped_steps(2.0 * np.arctan2(v[:, 1], v[:, 0]))
    worst = float(np.max(np.abs(steps))) if steps.size else 0.0
    if worst >= np.pi / 2.0:
        raise UnderSampled(f"consecutive doubled boundary angles rotate by {worst:.3f} rad")
    return int(round(float(np.sum(steps)) / (2.0 * np.pi)))


def field_boundary_degree(n: DirectorField, q_level: bool = False) -> int:
    """Degree of the band values of a field, ordered by the polar angle of their boundary points."""
    flat = n.grid.boundary_order()
    vectors = n.values.reshape(-1, 3)[flat]
    return q_degree_of_boundary(vectors) if q_level else degree_of_boundary(vectors)


def b0_conformal_cfield(k: int, points: Sequence, grid: DomainGrid, kappa: float = KAPPA_PLANAR) -> DirectorField:
    """c = stereographic(w) with w = kappa conj(prod G / prod (x - a)) for k > 0
    and w = kappa prod G / prod (x - a) for k < 0.

    c = -e3 at the points, c3 = boundary_height(kappa) < 0 on the boundary, and
    the (c1, c2) winding along the boundary equals k."""
    cfg = EscapeConfig(m=k, points=list(points))
    az = cfg.complex_points
    _check_inside(grid, az)
    pairs = _pairs(grid, az)

    def ratio(zeros, greens):
        if k > 0:
            return kappa * np.conj(greens), np.conj(zeros)
        return kappa * greens, zeros

    zeros, greens = _products(pairs, grid.z, [p.at_nodes(grid) for p in pairs])
    values = stereographic_ratio(*ratio(zeros, greens))

    zeros_b, greens_b = _products(pairs, grid.boundary_points, [p.at_boundary(grid) for p in pairs])
    planar = _planar(*ratio(zeros_b, greens_b))
    c3 = boundary_height(kappa)
    values[grid.band] = planar * math.sqrt(1.0 - c3 * c3) + np.array([0.0, 0.0, c3])
    values[~grid.active] = 0.0
    return DirectorField.normalized(grid, values)


def signed_area(n: DirectorField) -> float:
    """Integral of n . (d1 n x d2 n): the oriented area covered on the sphere."""
    grad = n.grid.gradient(n.values)
    density = np.sum(n.values * np.cross(grad[:, :, 0], grad[:, :, 1]), axis=-1)
    return n.grid.integrate(density)


def vertical_lift(grid: DomainGrid, boundary_angle: Callable[[np.ndarray], np.ndarray],
                  orientation: str = "north") -> DirectorField:
    """(t cos phi, t sin phi, +-sqrt(1 - t^2)) with t the gauge radius of the node
    and phi the boundary angle at its boundary projection. Sign-definite inside,
    planar on the band."""
    sign = 1.0 if orientation == "north" else -1.0
    t = np.clip(level(grid.descriptor, grid.X, grid.Y), 0.0, 1.0)
    bx, by = project_to_boundary(grid.descriptor, grid.X, grid.Y)
    phi = boundary_angle(bx + 1j * by)
    band_phi = boundary_angle(grid.boundary_points)
    phi = np.array(phi, dtype=float)
    phi[grid.band] = band_phi
    t = np.where(grid.band, 1.0, t)
    values = np.stack([t * np.cos(phi), t * np.sin(phi), sign * np.sqrt(1.0 - t * t)], axis=-1)
    values[~grid.active] = 0.0
    return DirectorField.normalized(grid, values)


def stretched_field(grid: DomainGrid, stretch: float = 0.3) -> DirectorField:
    """stereographic(x + stretch * conj x): smooth but not conformal."""
    z = grid.z
    values = stereographic_ratio(z + stretch * np.conj(z), np.ones_like(z))
    values[~grid.active] = 0.0
    return DirectorField.normalized(grid, values)
