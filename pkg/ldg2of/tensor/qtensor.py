# -*- coding: utf-8 -*-

##
## Algebra of traceless symmetric 3x3 tensors in the orthonormal basis F1..F5.
##
## A Q-tensor is stored as its 5 F-coordinates in the last axis of an array, so
## every function here works on a single tensor (shape (5,)) or on a whole grid
## of them (shape (..., 5)). 3x3 matrices are only produced at the edges.
##

import logging
import math
from dataclasses import dataclass

import numpy as np

from ldg2of.common.errors import (AntipodalSingularity, DegenerateSpectrum, IndexOutOfRange,
                                  NotUnit, OrthogonalReference)
from ldg2of.common.types import MaterialParams

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
SQRT3_2 = math.sqrt(1.5)
SQRT6 = math.sqrt(6.0)

# Relative tolerance below which two eigenvalues are treated as equal
EIGEN_TIE = 1e-10


def _basis() -> np.ndarray:
    f = np.zeros((5, 3, 3))
    f[0, 0, 0], f[0, 1, 1] = 1.0 / SQRT2, -1.0 / SQRT2
    f[1, 0, 1] = f[1, 1, 0] = 1.0 / SQRT2
    f[2] = np.diag([-1.0, -1.0, 2.0]) / SQRT6
    f[3, 0, 2] = f[3, 2, 0] = 1.0 / SQRT2
    f[4, 1, 2] = f[4, 2, 1] = 1.0 / SQRT2
    f.setflags(write=False)
    return f


FBASIS = _basis()

# Gram-Schmidt candidates for degenerate eigenspaces, in priority order
_TIE_CANDIDATES = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def basis_tensor(j: int) -> np.ndarray:
    """Return F_j (1-based) as a 3x3 matrix."""
    if not 1 <= int(j) <= 5:
        raise IndexOutOfRange(f"basis index must be in 1..5, got {j}")
    return FBASIS[int(j) - 1].copy()


def to_matrix(q) -> np.ndarray:
    return np.einsum("...j,jab->...ab", np.asarray(q, dtype=float), FBASIS)


def from_matrix(m) -> np.ndarray:
    """F-coordinates of the traceless symmetric part of m."""
    return np.einsum("...ab,jab->...j", np.asarray(m, dtype=float), FBASIS)


def norm2(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def _det3(m: np.ndarray) -> np.ndarray:
    return (m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]))


def trace_cube(q) -> np.ndarray:
    """tr Q^3, which is 3 det Q for traceless Q."""
    return 3.0 * _det3(to_matrix(q))


def bulk_potential(q, params: MaterialParams) -> np.ndarray:
    """Shifted bulk potential f(Q) - f*, zero on the limit manifold."""
    x = norm2(q)
    f = (-0.5 * params.a2 * x - params.b2 / 3.0 * trace_cube(q)
         + 0.25 * params.c2 * x * x)
    return f - params.f_star


def bulk_gradient(q, params: MaterialParams) -> np.ndarray:
    """Gradient of bulk_potential with respect to the F-coordinates.

    In matrix form this is the traceless part of -a2 Q - b2 Q^2 + c2 |Q|^2 Q;
    the projection onto the F-basis removes the trace of Q^2."""
    q = np.asarray(q, dtype=float)
    m = to_matrix(q)
    x = norm2(q)[..., None]
    return (-params.a2 + params.c2 * x) * q - params.b2 * from_matrix(m @ m)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending and the matching orthonormal eigenvectors,
    stored as columns: vectors[..., :, k] belongs to values[..., k]. The frame
    is right-handed."""
    values: np.ndarray
    vectors: np.ndarray

    @property
    def principal(self) -> np.ndarray:
        return self.vectors[..., :, 0]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("...k,...ak,...bk->...ab", self.values, self.vectors, self.vectors)


def _kernel_vector(m: np.ndarray, lam: np.ndarray) -> np.ndarray:
    a = m - lam[:, None, None] * np.eye(3)
    cands = np.stack([np.cross(a[:, 0], a[:, 1]),
                      np.cross(a[:, 0], a[:, 2]),
                      np.cross(a[:, 1], a[:, 2])], axis=1)
    lens = np.linalg.norm(cands, axis=2)
    best = np.argmax(lens, axis=1)
    rows = np.arange(m.shape[0])
    v = cands[rows, best]
    length = lens[rows, best]
    # Zero-length only happens for the fully degenerate case, which is overwritten
    length = np.where(length > 0.0, length, 1.0)
    return v / length[:, None]


def _tie_break(v: np.ndarray) -> np.ndarray:
    """First of (e3, e1, e2) with a substantial component orthogonal to v,
    orthonormalized against v."""
    proj = _TIE_CANDIDATES[None, :, :] - np.einsum("nk,ck->nc", v, _TIE_CANDIDATES)[:, :, None] * v[:, None, :]
    lens2 = np.sum(proj * proj, axis=2)
    first = np.argmax(lens2 > 0.5, axis=1)
    rows = np.arange(v.shape[0])
    u = proj[rows, first]
    return u / np.sqrt(lens2[rows, first])[:, None]


def _pair(m: np.ndarray, a: np.ndarray, tol: np.ndarray):
    """The two eigenvalues of m on the plane orthogonal to the unit vector a and
    the eigenvector of the larger one. The 2x2 block is diagonalized directly,
    so a (near) double eigenvalue keeps full absolute accuracy."""
    u = _tie_break(a)
    w = np.cross(a, u)
    mu = np.einsum("nab,nb->na", m, u)
    mw = np.einsum("nab,nb->na", m, w)
    m11 = np.sum(u * mu, axis=1)
    m22 = np.sum(w * mw, axis=1)
    m12 = np.sum(u * mw, axis=1)
    half = 0.5 * (m11 - m22)
    rad = np.hypot(half, m12)
    theta = np.where(rad < tol, 0.0, 0.5 * np.arctan2(m12, half))
    mean = 0.5 * (m11 + m22)
    vector = np.cos(theta)[:, None] * u + np.sin(theta)[:, None] * w
    return mean + rad, mean - rad, vector


def eigendecompose(q) -> EigenSystem:
    """Closed-form (trigonometric) eigen-decomposition of traceless symmetric tensors.

    The outer roots of lambda^3 - (|Q|^2/2) lambda - det Q = 0 come from the
    trigonometric formula with one Newton polish step. The root farther from the
    middle one is simple; its eigenvector is the largest cross product of rows of
    (Q - lambda I) and the remaining pair is read off the 2x2 block of Q on the
    orthogonal plane. A pair that coincides within EIGEN_TIE * max(1, |Q|) is
    resolved by Gram-Schmidt against (e3, e1, e2)."""
    q = np.asarray(q, dtype=float)
    batch = q.shape[:-1]
    qf = q.reshape(-1, 5)
    m = to_matrix(qf)
    x = norm2(qf)
    det = _det3(m)

    p = np.sqrt(x / 6.0)
    safe_p = np.where(p > 0.0, p, 1.0)
    r = np.clip(det / (2.0 * safe_p ** 3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam1 = 2.0 * p * np.cos(phi)
    lam3 = 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)

    for lam in (lam1, lam3):
        dchi = 3.0 * lam * lam - 0.5 * x
        chi = lam ** 3 - 0.5 * x * lam - det
        ok = np.abs(dchi) > 1e-8 * np.maximum(x, 1e-300)
        lam -= np.where(ok, chi / np.where(ok, dchi, 1.0), 0.0)
    lam2 = -lam1 - lam3

    tol = EIGEN_TIE * np.maximum(1.0, np.sqrt(x))
    gap_top = lam1 - lam2
    gap_bot = lam2 - lam3
    full = (gap_top < tol) & (gap_bot < tol)
    top_first = (gap_top >= gap_bot) & ~full

    n = qf.shape[0]
    values = np.zeros((n, 3))
    v1 = np.empty((n, 3))
    v2 = np.empty((n, 3))
    v3 = np.empty((n, 3))

    idx = np.flatnonzero(top_first)
    if idx.size:
        a = _kernel_vector(m[idx], lam1[idx])
        hi, lo, b = _pair(m[idx], a, tol[idx])
        values[idx] = np.stack([lam1[idx], hi, lo], axis=1)
        v1[idx], v2[idx], v3[idx] = a, b, np.cross(a, b)

    idx = np.flatnonzero(~top_first & ~full)
    if idx.size:
        c = _kernel_vector(m[idx], lam3[idx])
        hi, lo, a = _pair(m[idx], c, tol[idx])
        values[idx] = np.stack([hi, lo, lam3[idx]], axis=1)
        v1[idx], v2[idx], v3[idx] = a, np.cross(c, a), c

    idx = np.flatnonzero(full)
    if idx.size:
        values[idx] = np.stack([lam1[idx], lam2[idx], lam3[idx]], axis=1)
        v1[idx], v2[idx], v3[idx] = _TIE_CANDIDATES[0], _TIE_CANDIDATES[1], _TIE_CANDIDATES[2]

    vectors = np.stack([v1, v2, v3], axis=2)
    return EigenSystem(values=values.reshape(batch + (3,)), vectors=vectors.reshape(batch + (3, 3)))


def principal_eigenvector(q, reference) -> np.ndarray:
    """Principal eigenvector with its sign aligned to `reference` (same batch shape
    as q, or a single 3-vector)."""
    q = np.asarray(q, dtype=float)
    es = eigendecompose(q)
    gap = es.values[..., 0] - es.values[..., 1]
    bad = gap < EIGEN_TIE
    if np.any(bad):
        node = np.unravel_index(int(np.argmax(bad)), bad.shape) if bad.shape else None
        raise DegenerateSpectrum(f"principal eigenvalue is degenerate (gap {gap[bad].min():.3e}) at node {node}",
                                 node=node)
    v = es.principal
    dot = np.sum(v * np.asarray(reference, dtype=float), axis=-1)
    flat = np.abs(dot) < 1e-8
    if np.any(flat):
        node = np.unravel_index(int(np.argmax(flat)), flat.shape) if flat.shape else None
        raise OrthogonalReference(f"principal eigenvector is orthogonal to the reference at node {node}")
    return v * np.sign(dot)[..., None]


def biaxiality_gap(q) -> np.ndarray:
    values = eigendecompose(q).values
    return np.maximum(values[..., 1] - values[..., 2], 0.0)


def rotation_to(n) -> np.ndarray:
    """The rotation R_n = I + [k]x + [k]x^2 / (1 + n.e3), k = e3 x n, which maps e3 to n
    about an axis orthogonal to e3."""
    n = np.asarray(n, dtype=float)
    denom = np.asarray(1.0 + n[..., 2])
    bad = denom < 1e-8
    if np.any(bad):
        node = np.unravel_index(int(np.argmax(bad)), bad.shape) if bad.shape else None
        raise AntipodalSingularity(f"R_n is undefined for n = -e3 (node {node})", node=node)
    k = np.zeros(n.shape[:-1] + (3, 3))
    k[..., 0, 2] = n[..., 0]
    k[..., 1, 2] = n[..., 1]
    k[..., 2, 0] = -n[..., 0]
    k[..., 2, 1] = -n[..., 1]
    return np.eye(3) + k + (k @ k) / denom[..., None, None]


def uniaxial_from_director(n, scale: float) -> np.ndarray:
    """F-coordinates of scale * (n n^T - I/3)."""
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-10):
        raise NotUnit("director must be a unit vector")
    n1, n2, n3 = n[..., 0], n[..., 1], n[..., 2]
    return scale * np.stack([(n1 * n1 - n2 * n2) / SQRT2,
                             SQRT2 * n1 * n2,
                             SQRT3_2 * (n3 * n3 - 1.0 / 3.0),
                             SQRT2 * n1 * n3,
                             SQRT2 * n2 * n3], axis=-1)


def v_rho(rho) -> np.ndarray:
    """V_rho = rho_1 F1 + rho_2 F2 + rho_3 F3 in F-coordinates."""
    rho = np.asarray(rho, dtype=float)
    return np.concatenate([rho, np.zeros(rho.shape[:-1] + (2,))], axis=-1)


def rotate(q, r) -> np.ndarray:
    """F-coordinates of R Q R^T."""
    r = np.asarray(r, dtype=float)
    return from_matrix(r @ to_matrix(q) @ np.swapaxes(r, -1, -2))
