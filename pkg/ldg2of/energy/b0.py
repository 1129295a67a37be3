# -*- coding: utf-8 -*-

##
## Functionals of the b^2 = 0 regime. The bulk potential depends on |Q|^2 only,
## f~ = (c2/4)(|Q|^2 - a2/c2)^2, and the limit manifold is the norm sphere
## |Q|^2 = a2/c2. Limit maps are parametrized by a unit c-field:
##
##   Q0 = sqrt(2/3) s+ (c1 F1 + c2 F2 + c3 F3),   |grad Q0|^2 = (a2/c2) |grad c|^2
##

import logging
import math

import numpy as np

from ldg2of.common.errors import WrongRegime
from ldg2of.common.types import EnergyBreakdown, LowerBound, MaterialParams
from ldg2of.energy.functionals import ldg_energy
from ldg2of.grid.fields import DirectorField, QField

logger = logging.getLogger(__name__)


def _check_regime(params: MaterialParams):
    if params.b2 != 0.0:
        raise WrongRegime(f"b2 = {params.b2}: these functionals need b2 = 0")


def q_from_cfield(c: DirectorField, params: MaterialParams) -> QField:
    """Q0 = sqrt(2/3) s+ (c1 F1 + c2 F2 + c3 F3)."""
    q = np.zeros(c.grid.shape + (5,))
    q[..., :3] = math.sqrt(2.0 / 3.0) * params.s_plus * c.values
    return QField(c.grid, q)


def grad_q_squared(q: QField) -> np.ndarray:
    """|grad Q|^2 per node from the central node gradient."""
    g = q.grid.gradient(q.values)
    return np.where(q.grid.active, np.sum(g * g, axis=(-2, -1)), 0.0)


def b0_gl_energy(q: QField, params: MaterialParams, reference=None) -> EnergyBreakdown:
    _check_regime(params)
    return ldg_energy(q, params, reference=reference)


def b0_limit_correction(q0: QField, params: MaterialParams) -> float:
    """-(c2 / (4 a2^2)) int |grad Q0|^4, the limit of the renormalized energy."""
    _check_regime(params)
    g2 = grad_q_squared(q0)
    return -params.c2 / (4.0 * params.a2 ** 2) * q0.grid.integrate(g2 * g2)


def b0_rho_prediction(q0: QField, params: MaterialParams) -> np.ndarray:
    """Pointwise minimizer rho* = -|grad Q0|^2 / (2 a2) of the trace component
    rho = (Q_eps - Q0) : Q0 / eps^2.

    Minimizing (c2/a2) |grad Q0|^2 rho + c2 rho^2 gives the minus sign; the value
    of the limit correction does not depend on it."""
    _check_regime(params)
    return -grad_q_squared(q0) / (2.0 * params.a2)


def b0_corrected_minimizer(c: DirectorField, params: MaterialParams, blend: bool = True) -> QField:
    """Q0 (1 + eps^2 (c2/a2) rho*) on interior nodes, Q0 on the band."""
    _check_regime(params)
    grid = c.grid
    q0 = q_from_cfield(c, params)
    rho = b0_rho_prediction(q0, params)
    factor = grid.interior.astype(float)
    if blend:
        factor = np.where(grid.interior & ~grid.deep_interior(1), 0.5, factor)
    scale = 1.0 + params.eps ** 2 * (params.c2 / params.a2) * rho * factor
    return QField(grid, q0.values * scale[..., None])


def b0_leading_order(k: int, params: MaterialParams, c3_boundary: float) -> LowerBound:
    """Leading-order energy of a degree-k conformal c-field with boundary height c3:
    (4/3) pi s+^2 (1 - |c3|) |k|, next to the printed (4/9) pi s+^2 |k|."""
    s2 = params.s_plus ** 2
    k = abs(int(k))
    derived = 4.0 / 3.0 * math.pi * s2 * (1.0 - abs(c3_boundary)) * k
    printed = 4.0 / 9.0 * math.pi * s2 * k
    logger.info(f"b2 = 0 leading order for k={k}, c3={c3_boundary:.6f}: {derived:.6g} (printed {printed:.6g})")
    return LowerBound(derived=derived, printed=printed, note=f"boundary height c3 = {c3_boundary!r}")
