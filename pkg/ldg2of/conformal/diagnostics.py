# -*- coding: utf-8 -*-

##
## Residuals that certify conformality and harmonicity of sampled fields.
##

import math
from typing import Optional

import numpy as np

from ldg2of.grid.domain import DomainGrid
from ldg2of.grid.fields import DirectorField
from ldg2of.tensor.qtensor import uniaxial_from_director

UNIT_Q_SCALE = math.sqrt(1.5)


def tangential_gradient(grid: DomainGrid, values) -> np.ndarray:
    """Node gradient of an S^2-valued field with the normal part (n . d_i n) n removed.

    Shape (ny, nx, 2, 3). With these derivatives the frame identities used by the
    correction formulas hold exactly at every node."""
    n = np.asarray(values, dtype=float)
    grad = grid.gradient(n)
    normal = np.sum(grad * n[:, :, None, :], axis=-1, keepdims=True)
    return grad - normal * n[:, :, None, :]


def gradient_tensor(grid: DomainGrid, values) -> np.ndarray:
    """sum_i d_i n (x) d_i n from the tangential gradient, shape (ny, nx, 3, 3)."""
    t = tangential_gradient(grid, values)
    return np.einsum("...ia,...ib->...ab", t, t)


def conformality_residual(n: DirectorField, sigma: Optional[int] = None, layers: int = 3) -> float:
    """max |d2 n - sigma n x d1 n| over interior nodes `layers` steps from the band.

    sigma = +1 for holomorphic w, -1 for antiholomorphic w; when omitted the
    sign with the smaller residual is used."""
    grid = n.grid
    grad = grid.gradient(n.values)
    cross = np.cross(n.values, grad[:, :, 0])
    mask = grid.deep_interior(layers)
    if not np.any(mask):
        return 0.0
    signs = (1, -1) if sigma is None else (sigma,)
    return min(float(np.max(np.linalg.norm((grad[:, :, 1] - s * cross)[mask], axis=-1))) for s in signs)


def harmonic_residual(n: DirectorField) -> np.ndarray:
    """|Delta n + |grad n|^2 n| at interior nodes, zero elsewhere."""
    return sphere_residual(n.grid, n.values)


def sphere_residual(grid: DomainGrid, values) -> np.ndarray:
    """|Delta u + (|grad u|^2 / |u|^2) u| per interior node for a field with constant norm."""
    u = np.asarray(values, dtype=float)
    grad = grid.gradient(u)
    g2 = np.sum(grad * grad, axis=(-2, -1))
    u2 = np.sum(u * u, axis=-1)
    coeff = np.where(u2 > 0.0, g2 / np.where(u2 > 0.0, u2, 1.0), 0.0)
    r = grid.laplacian(u) + coeff[..., None] * u
    return np.where(grid.interior, np.linalg.norm(r, axis=-1), 0.0)


def unit_q(n: DirectorField) -> np.ndarray:
    """sqrt(3/2) (n n^T - I/3), the unit-norm uniaxial tensor of a director field."""
    q = np.zeros(n.grid.shape + (5,))
    q[n.grid.active] = uniaxial_from_director(n.values[n.grid.active], UNIT_Q_SCALE)
    return q


def s4_residual(n: DirectorField) -> np.ndarray:
    """S^4 harmonic map residual of the unit uniaxial tensor built from n."""
    return sphere_residual(n.grid, unit_q(n))


def frame_identity_residual(n: DirectorField) -> np.ndarray:
    """|grad n (x) grad n - |grad n|^2 (I - n n^T) / 2| per active node; zero for conformal n."""
    g = gradient_tensor(n.grid, n.values)
    g2 = np.trace(g, axis1=-2, axis2=-1)
    proj = np.eye(3) - np.einsum("...a,...b->...ab", n.values, n.values)
    r = np.linalg.norm(g - 0.5 * g2[..., None, None] * proj, axis=(-2, -1))
    return np.where(n.grid.active, r, 0.0)


def max_gradient_norm(grid: DomainGrid, values) -> float:
    """max over active nodes of |grad u| (Frobenius over components)."""
    grad = grid.gradient(np.asarray(values, dtype=float))
    norms = np.sqrt(np.sum(grad * grad, axis=(-2, -1)))
    return float(np.max(norms[grid.active])) if np.any(grid.active) else 0.0
