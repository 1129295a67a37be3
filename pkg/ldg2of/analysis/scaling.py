# -*- coding: utf-8 -*-

##
## Least-squares fits over eps ladders. Power laws are fitted in log-log space;
## the expansion coefficient is the eps -> 0 intercept of (E_eps - E0) / eps^2.
##

import logging
import math
from typing import Optional, Sequence

import numpy as np

from ldg2of.common.errors import BadFit
from ldg2of.common.types import ScalingFit
from ldg2of.grid.domain import DomainGrid
from ldg2of.grid.fields import QField
from ldg2of.tensor.qtensor import biaxiality_gap

logger = logging.getLogger(__name__)

DEFAULT_LADDER = (0.2, 0.1414, 0.1, 0.0707, 0.05)
MAX_LOG_RESIDUAL = 0.1
BIAXIALITY_FLOOR = 1e-13


def check_ladder(eps: Sequence[float]) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    if eps.size < 3:
        raise BadFit(f"a scaling fit needs at least 3 eps values, got {eps.size}")
    if np.any(eps <= 0.0) or np.any(np.diff(eps) >= 0.0):
        raise BadFit(f"eps values must be positive and strictly decreasing: {eps.tolist()}")
    return eps


def _loglog(eps: np.ndarray, values: np.ndarray):
    """(exponent, coefficient, rms residual) of log|values| = log C + p log eps."""
    magnitude = np.abs(values)
    if np.any(magnitude == 0.0) or not np.all(np.isfinite(magnitude)):
        return math.nan, math.nan, math.nan
    x = np.log(eps)
    y = np.log(magnitude)
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(math.exp(intercept)), rms


def fit_power_law(eps: Sequence[float], values: Sequence[float], observable: str = "") -> ScalingFit:
    eps = check_ladder(eps)
    values = np.asarray(values, dtype=float)
    exponent, coefficient, rms = _loglog(eps, values)
    return ScalingFit(observable=observable, eps=eps.tolist(), values=values.tolist(),
                      exponent=exponent, coefficient=coefficient, residual=rms)


def expansion_fit(eps: Sequence[float], energies: Sequence[float], e0_ref: float,
                  prediction: Optional[float] = None) -> ScalingFit:
    """Coefficient K of E_eps = E0 + K eps^2 + O(eps^3), from a linear fit of
    (E_eps - E0) / eps^2 against eps. The exponent of |E_eps - E0| is reported
    from the log-log fit, whose residual must stay below MAX_LOG_RESIDUAL."""
    eps = check_ladder(eps)
    energies = np.asarray(energies, dtype=float)
    ratios = (energies - e0_ref) / eps ** 2
    slope, intercept = np.polyfit(eps, ratios, 1)
    exponent, _, rms = _loglog(eps, energies - e0_ref)
    if not math.isfinite(rms) or rms > MAX_LOG_RESIDUAL:
        raise BadFit(f"log-log fit of E_eps - E0 has residual {rms:.3g} (limit {MAX_LOG_RESIDUAL})")
    fit = ScalingFit(observable="renormalized_energy", eps=eps.tolist(), values=ratios.tolist(),
                     exponent=exponent, coefficient=float(intercept), residual=rms,
                     note=f"first-order slope {float(slope):.6g}")
    if prediction is not None:
        fit.prediction = float(prediction)
        fit.relative_error = abs(fit.coefficient - prediction) / abs(prediction) if prediction else math.nan
        logger.info(f"Expansion coefficient {fit.coefficient:.6g} vs prediction {prediction:.6g} "
                    f"(relative error {fit.relative_error:.3%})")
    return fit


def max_biaxiality(q: QField, layers: int = 3) -> float:
    mask = q.grid.deep_interior(layers)
    return float(np.max(biaxiality_gap(q.values[mask]), initial=0.0))


def biaxiality_scaling(eps: Sequence[float], minimizers: Sequence[QField], layers: int = 3,
                       min_exponent: Optional[float] = None) -> ScalingFit:
    """Power-law fit of the largest biaxiality gap away from the boundary.

    When every gap is below BIAXIALITY_FLOOR the fit is degenerate and reported
    as below floor. With min_exponent set, a smaller fitted exponent is a BadFit."""
    eps = check_ladder(eps)
    gaps = np.array([max_biaxiality(q, layers) for q in minimizers])
    ratio = gaps / eps ** 2
    if np.all(gaps < BIAXIALITY_FLOOR):
        return ScalingFit(observable="biaxiality_gap", eps=eps.tolist(), values=gaps.tolist(),
                          note="below floor")
    fit = fit_power_law(eps, gaps, "biaxiality_gap")
    fit.note = f"gap/eps^2 from {ratio[0]:.6g} to {ratio[-1]:.6g} (factor {ratio[0] / ratio[-1]:.3f})" \
        if ratio[-1] > 0.0 else "gap/eps^2 vanishes at the smallest eps"
    if min_exponent is not None and not fit.exponent > min_exponent:
        raise BadFit(f"biaxiality exponent {fit.exponent:.3f} is not above {min_exponent}")
    return fit


def boundary_approach_fit(radii: Sequence[float], w_values: Sequence[float]) -> ScalingFit:
    """Log-log fit of |W_LdG| against delta = 1 - |a|, radii increasing."""
    radii = np.abs(np.asarray(radii, dtype=float))
    delta = 1.0 - radii
    keep = delta < 1.0
    fit = fit_power_law(delta[keep], np.asarray(w_values, dtype=float)[keep], "boundary_approach")
    fit.note = "|W_LdG| against distance of the escape point to the boundary"
    return fit


def _interior_mask(grid: DomainGrid, layers: int, exclude: Optional[np.ndarray]) -> np.ndarray:
    mask = grid.deep_interior(layers)
    return mask if exclude is None else mask & ~exclude


def interior_relative_error(grid: DomainGrid, measured: np.ndarray, expected: np.ndarray,
                            layers: int = 3, exclude: Optional[np.ndarray] = None) -> float:
    """||measured - expected|| / ||expected|| in L^2 over nodes `layers` steps inside,
    leaving out the nodes flagged in `exclude`."""
    mask = _interior_mask(grid, layers, exclude)
    measured = np.asarray(measured, dtype=float)
    expected = np.asarray(expected, dtype=float)
    extra = (1,) * (measured.ndim - 2)
    m = mask.reshape(mask.shape + extra)
    diff = grid.integrate(np.where(m, (measured - expected) ** 2, 0.0).reshape(grid.shape + (-1,)).sum(axis=-1))
    ref = grid.integrate(np.where(m, expected ** 2, 0.0).reshape(grid.shape + (-1,)).sum(axis=-1))
    return math.sqrt(diff / ref) if ref > 0.0 else math.inf


def interior_l2(grid: DomainGrid, values: np.ndarray, layers: int = 3, exclude: Optional[np.ndarray] = None) -> float:
    mask = _interior_mask(grid, layers, exclude)
    values = np.asarray(values, dtype=float).reshape(grid.shape + (-1,))
    return math.sqrt(grid.integrate(np.where(mask[..., None], values ** 2, 0.0).sum(axis=-1)))
