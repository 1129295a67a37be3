# -*- coding: utf-8 -*-

##
## Energy functionals on grid fields and the O(eps^2) correction formulas for
## b^2 > 0.
##
## The bulk identity behind everything here: with V+ = s+(e3 e3 - I/3) and
## V_rho = rho1 F1 + rho2 F2 + rho3 F3,
##
##   f~(R (V+ + eps^2 V_rho) R^T) = (eps^4 / 2) B_eps rho . rho,
##   B_eps = B0 + eps^2 rho3 B1 + eps^4 |rho|^2 B2,
##
## with B0 = diag(mu, mu, nu), B1 = sqrt(8/3) s+ c2 I + sqrt(2/3) b2 diag(1, 1, -1/3)
## and B2 = c2/2 I. The expansion is exact (f~ is a quartic polynomial).
##
## Gradient products sum_i d_i n (x) d_i n always come from the tangential node
## gradient, so the two forms of H0 at its minimizer agree to rounding.
##

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ldg2of.analysis.decomposition import decompose
from ldg2of.common.errors import NotConformal, SingularB0
from ldg2of.common.types import EnergyBreakdown, HEpsDecomposition, LowerBound, MaterialParams
from ldg2of.conformal.diagnostics import conformality_residual, gradient_tensor
from ldg2of.grid.domain import DomainGrid
from ldg2of.grid.fields import DirectorField, QField
from ldg2of.tensor.qtensor import (SQRT2, SQRT3_2, SQRT6, bulk_potential, from_matrix, rotate,
                                   rotation_to, uniaxial_from_director, v_rho)

logger = logging.getLogger(__name__)

CONFORMAL_FACTOR = 10.0


class SecondVariation(NamedTuple):
    mu: float
    nu: float
    b0: np.ndarray
    b1: np.ndarray
    b2: np.ndarray


def mu_nu_b0matrices(params: MaterialParams) -> SecondVariation:
    s = params.s_plus
    mu, nu = params.mu, params.nu
    b1 = (math.sqrt(8.0 / 3.0) * s * params.c2 * np.eye(3)
          + math.sqrt(2.0 / 3.0) * params.b2 * np.diag([1.0, 1.0, -1.0 / 3.0]))
    return SecondVariation(mu=mu, nu=nu, b0=np.diag([mu, mu, nu]), b1=b1, b2=0.5 * params.c2 * np.eye(3))


def _b_eps_diagonal(rho: np.ndarray, eps: float, params: MaterialParams) -> np.ndarray:
    sv = mu_nu_b0matrices(params)
    rho = np.asarray(rho, dtype=float)
    rho2 = np.sum(rho * rho, axis=-1, keepdims=True)
    return (np.diag(sv.b0) + eps ** 2 * rho[..., 2:3] * np.diag(sv.b1)
            + eps ** 4 * rho2 * np.diag(sv.b2))


def bulk_quadratic_form(rho, eps: float, params: MaterialParams) -> np.ndarray:
    """(eps^4 / 2) B_eps rho . rho, equal to f~(R (V+ + eps^2 V_rho) R^T)."""
    rho = np.asarray(rho, dtype=float)
    return 0.5 * eps ** 4 * np.sum(_b_eps_diagonal(rho, eps, params) * rho * rho, axis=-1)


def oseen_frank_energy(n: DirectorField, params: MaterialParams) -> float:
    """s+^2 * integral |grad n|^2."""
    return params.s_plus ** 2 * n.grid.dirichlet_energy(n.values)


def ldg_energy(q: QField, params: MaterialParams, reference: Optional[float] = None) -> EnergyBreakdown:
    """E_eps = 1/2 int |grad Q|^2 + eps^-2 int f~(Q), and (E_eps - reference) / eps^2
    when a reference energy is given."""
    grid = q.grid
    elastic = 0.5 * grid.dirichlet_energy(q.values)
    bulk = grid.integrate(bulk_potential(q.values, params)) / params.eps ** 2
    total = elastic + bulk
    renormalized = None if reference is None else (total - reference) / params.eps ** 2
    return EnergyBreakdown(elastic=elastic, bulk=bulk, total=total, eps=params.eps,
                           reference=reference, renormalized=renormalized)


def limit_energy(n: DirectorField, params: MaterialParams) -> float:
    """1/2 int |grad Q[n]|^2 with the same edge quadrature as ldg_energy(); the
    reference E0 of renormalized energies."""
    return 0.5 * n.grid.dirichlet_energy(n.to_q(params.s_plus).values)


def _rotations(n: DirectorField) -> np.ndarray:
    r = np.broadcast_to(np.eye(3), n.grid.shape + (3, 3)).copy()
    act = n.grid.active
    r[act] = rotation_to(n.values[act])
    return r


def _b_from(grid: DomainGrid, n_values: np.ndarray, r: np.ndarray, params: MaterialParams) -> np.ndarray:
    s = params.s_plus
    g = gradient_tensor(grid, n_values)
    g2 = np.trace(g, axis1=-2, axis2=-1)
    rotated = from_matrix(np.swapaxes(r, -1, -2) @ g @ r)
    b = np.stack([-2.0 * s * rotated[..., 0], -2.0 * s * rotated[..., 1], SQRT6 * s * g2], axis=-1)
    return np.where(grid.active[..., None], b, 0.0)


def b_field(n: DirectorField, params: MaterialParams) -> np.ndarray:
    """b0 per node: -2 s+ (grad n (x) grad n) : R F_j R^T for j = 1, 2 and
    sqrt(6) s+ |grad n|^2 for j = 3. Shape (ny, nx, 3)."""
    return _b_from(n.grid, n.values, _rotations(n), params)


def _check_b0(params: MaterialParams):
    if params.mu <= 0.0 or params.nu <= 0.0:
        raise SingularB0(f"B0 = diag({params.mu}, {params.mu}, {params.nu}) is singular; "
                         f"use the b2 = 0 functionals")


def rho_star(n: DirectorField, params: MaterialParams) -> np.ndarray:
    """Pointwise minimizer rho0 = -B0^-1 b0 of H0[n, .]."""
    _check_b0(params)
    return -b_field(n, params) / np.array([params.mu, params.mu, params.nu])


def h0_energy(n: DirectorField, rho, params: MaterialParams) -> float:
    """H0[n, rho] = int 1/2 B0 rho . rho + b0 . rho."""
    rho = np.asarray(rho, dtype=float)
    b = b_field(n, params)
    diag = np.array([params.mu, params.mu, params.nu])
    density = 0.5 * np.sum(diag * rho * rho, axis=-1) + np.sum(b * rho, axis=-1)
    return n.grid.integrate(density)


def h0_closed_form(n: DirectorField, params: MaterialParams) -> float:
    """-s+^2 int (2/mu) |grad n (x) grad n|^2 + (3/nu - 1/mu) |grad n|^4."""
    _check_b0(params)
    g = gradient_tensor(n.grid, n.values)
    g2 = np.trace(g, axis1=-2, axis2=-1)
    gg = np.sum(g * g, axis=(-2, -1))
    density = (2.0 / params.mu) * gg + (3.0 / params.nu - 1.0 / params.mu) * g2 * g2
    return -params.s_plus ** 2 * n.grid.integrate(density)


def w_ldg(n: DirectorField, params: MaterialParams, check: bool = True) -> float:
    """W_LdG = -(3/nu) int |grad n|^4, the correction energy of a conformal field
    without the s+^2 factor."""
    g = gradient_tensor(n.grid, n.values)
    g2 = np.trace(g, axis1=-2, axis2=-1)
    if check:
        grid = n.grid
        bound = CONFORMAL_FACTOR * grid.h ** 2 * float(np.max(g2[grid.interior], initial=0.0))
        residual = conformality_residual(n)
        if residual > bound:
            raise NotConformal(f"conformality residual {residual:.3e} exceeds {bound:.3e}; "
                               f"use h0_closed_form for non-conformal fields")
    return -(3.0 / params.nu) * n.grid.integrate(g2 * g2)


def _correction(n: DirectorField, params: MaterialParams, rho: np.ndarray, r: np.ndarray) -> np.ndarray:
    p = np.zeros(n.grid.shape + (5,))
    act = n.grid.active
    p[act] = rotate(v_rho(rho[act]), r[act])
    return p


def corrected_minimizer(n: DirectorField, params: MaterialParams, blend: bool = True) -> QField:
    """Q = s+(n n^T - I/3) + eps^2 R_n V_rho0 R_n^T on interior nodes, Q_b on the band.

    With blend the correction is halved on the first interior ring next to the band."""
    grid = n.grid
    r = _rotations(n)
    rho = rho_star(n, params)
    factor = grid.interior.astype(float)
    if blend:
        factor = np.where(grid.interior & ~grid.deep_interior(1), 0.5, factor)
    q = n.to_q(params.s_plus).copy_values()
    q = q + params.eps ** 2 * factor[..., None] * _correction(n, params, rho, r)
    return QField(grid, q)


@dataclass
class CorrectionCoefficients:
    """rho0 and the coefficients of P0 = c0 Q0 + c1 (p p - q q) + c2 (p q + q p).

    c0, c1, c2 follow from rho0; the *_printed arrays evaluate the closed-form
    coefficient formulas as published, kept for comparison."""
    rho: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c0_printed: np.ndarray
    c1_printed: np.ndarray
    c2_printed: np.ndarray
    n: np.ndarray
    p: np.ndarray
    q: np.ndarray
    active: np.ndarray

    def frame_error(self) -> float:
        """Largest deviation of (n, p, q) from an orthonormal frame over the active nodes."""
        frame = np.stack([self.n[self.active], self.p[self.active], self.q[self.active]], axis=-1)
        gram = np.swapaxes(frame, -1, -2) @ frame
        return float(np.max(np.abs(gram - np.eye(3))))

    def summary(self, mask: np.ndarray) -> dict:
        def peak(a):
            return float(np.max(np.abs(a[mask]), initial=0.0))
        out = {name: peak(getattr(self, name)) for name in
               ("c0", "c1", "c2", "c0_printed", "c1_printed", "c2_printed")}
        out["c0_ratio"] = out["c0_printed"] / out["c0"] if out["c0"] > 0.0 else math.nan
        return out


def biax_coefficients(n: DirectorField, params: MaterialParams) -> CorrectionCoefficients:
    s = params.s_plus
    grid = n.grid
    r = _rotations(n)
    rho = rho_star(n, params)
    g = gradient_tensor(grid, n.values)
    g2 = np.trace(g, axis1=-2, axis2=-1)
    p = r[..., :, 0]
    q = r[..., :, 1]
    gpp = np.einsum("...a,...ab,...b->...", p, g, p)
    gqq = np.einsum("...a,...ab,...b->...", q, g, q)
    gpq = np.einsum("...a,...ab,...b->...", p, g, q)
    coeffs = CorrectionCoefficients(
        rho=rho,
        c0=rho[..., 2] * SQRT3_2 / s,
        c1=rho[..., 0] / SQRT2,
        c2=rho[..., 1] / SQRT2,
        c0_printed=np.where(grid.active, -2.0 * SQRT6 * g2 / params.nu, 0.0),
        c1_printed=np.where(grid.active, SQRT2 * s / params.mu * (gpp - gqq), 0.0),
        c2_printed=np.where(grid.active, 2.0 * SQRT2 * s / params.mu * gpq, 0.0),
        n=n.values, p=p, q=q, active=grid.active)
    summary = coeffs.summary(grid.interior)
    logger.info(f"c0 from rho0 peaks at {summary['c0']:.6g}, printed formula gives {summary['c0_printed']:.6g} "
                f"(ratio {summary['c0_ratio']:.4f})")
    return coeffs


def h_eps_decomposition(q: QField, n0: DirectorField, params: MaterialParams,
                        reference: Optional[float] = None) -> HEpsDecomposition:
    """Split G_eps[Q] into the director term s+^2 (|grad n_eps|^2 - |grad n0|^2) / eps^2,
    H_eps[n_eps, rho_eps] = int 1/2 B_eps rho . rho + b_eps . rho and the gradient
    term eps^2 / 2 |grad P|^2, with n_eps, rho_eps taken from the decomposition of Q.

    Director energies use the Q-level edge quadrature, so G_eps[Q[n0]] = 0 exactly."""
    eps = params.eps
    grid = q.grid
    dec = decompose(q, n0, params)
    e0 = limit_energy(n0, params) if reference is None else reference
    q_eps = dec.n_eps.to_q(params.s_plus)

    director = (limit_energy(dec.n_eps, params) - e0) / eps ** 2
    b_eps = _b_from(grid, dec.n_eps.values, _rotations(dec.n_eps), params)
    rho = dec.rho_eps
    density = 0.5 * np.sum(_b_eps_diagonal(rho, eps, params) * rho * rho, axis=-1) + np.sum(b_eps * rho, axis=-1)
    h_term = grid.integrate(np.where(grid.active, density, 0.0))
    gradient = 0.5 * grid.dirichlet_energy(q.values - q_eps.values) / eps ** 2
    g_eps = ldg_energy(q, params, reference=e0).renormalized
    total = director + h_term + gradient
    return HEpsDecomposition(director_term=director, h_eps_term=h_term, gradient_term=gradient,
                             g_eps=g_eps, reconstruction_error=abs(g_eps - total))


def leading_order_bounds(degree: int, params: MaterialParams) -> LowerBound:
    """Oseen-Frank lower bound for planar data of the given degree: 4 pi s+^2 |m|
    (the Dirichlet energy of a degree-m conformal field is 4 pi |m|), next to the
    printed 2 pi s+^2 |m|. For mixed fields pass |r| + |s|."""
    s2 = params.s_plus ** 2
    m = abs(int(degree))
    return LowerBound(derived=4.0 * math.pi * s2 * m, printed=2.0 * math.pi * s2 * m,
                      note="integral |grad n|^2 = 4 pi |m| for conformal fields")


def uniaxial_field(n: DirectorField, params: MaterialParams) -> QField:
    """Q[n] = s+ (n n^T - I/3)."""
    return n.to_q(params.s_plus)


__all__ = ["SecondVariation", "mu_nu_b0matrices", "bulk_quadratic_form", "oseen_frank_energy", "ldg_energy",
           "limit_energy", "b_field", "rho_star", "h0_energy", "h0_closed_form", "w_ldg", "corrected_minimizer",
           "CorrectionCoefficients", "biax_coefficients", "h_eps_decomposition", "leading_order_bounds",
           "uniaxial_field", "uniaxial_from_director"]
