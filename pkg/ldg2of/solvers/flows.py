# -*- coding: utf-8 -*-

##
## Explicit gradient flows with backtracking.
##
## Every flow moves the interior nodes only; band values are copied from the
## field's boundary data after each step. A trial step is accepted when it does
## not increase the discrete energy, otherwise tau is halved. With the adaptive
## policy tau grows by STEP_GROWTH after each accepted step, up to the stability
## bound of the flow.
##

import logging
import math
import time
from collections import deque
from dataclasses import replace
from typing import Callable, Optional, Tuple

import numpy as np

from ldg2of.common.errors import NoConvergence, NormCollapse, StepUnderflow
from ldg2of.common.types import FlowConfig, MaterialParams, SolveReport
from ldg2of.conformal.diagnostics import harmonic_residual, max_gradient_norm, sphere_residual
from ldg2of.energy.functionals import ldg_energy
from ldg2of.grid.fieldio import write_field
from ldg2of.grid.fields import DirectorField, GridField, QField
from ldg2of.tensor.qtensor import bulk_gradient

STEP_GROWTH = 1.5
MIN_STEP = 1e-12
MIN_NORM = 0.5
# Relative energy change treated as rounding noise when a step is rejected
ROUNDING_FLOOR = 1e-13


class GradientFlow:
    """Backtracking descent on one field. `energy` maps node values to the
    discrete energy, `advance` maps (values, tau) to trial values and
    `residual` maps values to per-node residual norms."""

    def __init__(self, name: str, field: GridField, cfg: FlowConfig, tau_max: float,
                 energy: Callable[[np.ndarray], float],
                 advance: Callable[[np.ndarray, float], np.ndarray],
                 residual: Callable[[np.ndarray], np.ndarray]):
        self._logger = logging.getLogger(__name__)
        self.name = name
        self.field = field
        self.cfg = cfg
        self.tau_max = tau_max
        self.energy = energy
        self.advance = advance
        self.residual = residual

        tau = tau_max if cfg.tau is None else float(cfg.tau)
        if tau > tau_max:
            self._logger.warning(f"{name}: tau {tau:.3e} exceeds the stability bound, using {tau_max:.3e}")
            tau = tau_max
        self.tau = tau

    def _l2(self, per_node: np.ndarray) -> float:
        return float(np.sqrt(self.field.grid.integrate(per_node * per_node)))

    def _checkpoint(self, values: np.ndarray, iteration: int):
        if self.cfg.checkpoint and iteration % max(1, self.cfg.checkpoint_every) == 0:
            write_field(self.cfg.checkpoint, self.field.with_values(values))

    def run(self) -> Tuple[GridField, SolveReport]:
        cfg = self.cfg
        start = time.perf_counter()
        values = self.field.copy_values()
        energy = self.energy(values)
        residual = self._l2(self.residual(values))
        report = SolveReport(solver=self.name, initial_residual=residual, energy_history=[energy])
        recent = deque([energy], maxlen=max(1, cfg.window) + 1)
        target = max(cfg.residual_tol, cfg.residual_rtol * residual)
        accepted = 0

        def finish(status: str, converged: bool) -> Tuple[GridField, SolveReport]:
            report.iterations = accepted
            report.final_energy = energy
            report.final_residual = residual
            report.tau_final = self.tau
            report.status = status
            report.converged = converged
            report.wall_time = time.perf_counter() - start
            if report.energy_history[-1] != energy:
                report.energy_history.append(energy)
            result = self.field.with_values(values)
            self._logger.info(f"{self.name}: {status} after {accepted} steps ({report.rejected_steps} rejected), "
                              f"energy {energy:.10g}, residual {residual:.3e}")
            return result, report

        while True:
            if residual <= target:
                return finish("converged (residual)", True)
            if len(recent) == recent.maxlen:
                drop = recent[0] - energy
                if drop <= cfg.energy_tol * max(abs(energy), 1e-300):
                    return finish("converged (energy)", True)
            if accepted >= cfg.max_iterations:
                result, report = finish("max iterations", False)
                raise NoConvergence(f"{self.name} did not converge in {cfg.max_iterations} steps "
                                    f"(residual {residual:.3e})", result=result, report=report)

            trial = self.advance(values, self.tau)
            trial_energy = self.energy(trial)
            if trial_energy <= energy:
                values, energy = trial, trial_energy
                accepted += 1
                residual = self._l2(self.residual(values))
                recent.append(energy)
                if accepted % max(1, cfg.history_every) == 0:
                    report.energy_history.append(energy)
                    self._logger.debug(f"{self.name}: step {accepted} energy {energy:.12g} "
                                       f"residual {residual:.3e} tau {self.tau:.3e}")
                self._checkpoint(values, accepted)
                if cfg.step_policy == "adaptive":
                    self.tau = min(self.tau * STEP_GROWTH, self.tau_max)
                continue

            report.rejected_steps += 1
            if trial_energy - energy <= ROUNDING_FLOOR * max(1.0, abs(energy)) and self.tau < 1e-3 * self.tau_max:
                return finish("converged (rounding floor)", True)
            self.tau *= 0.5
            if self.tau < MIN_STEP:
                result, report = finish("step underflow", False)
                raise StepUnderflow(f"{self.name}: step size fell below {MIN_STEP}", result=result, report=report)


def _project(grid, boundary: np.ndarray, trial: np.ndarray) -> np.ndarray:
    """Renormalize interior nodes, restore band values, zero the exterior."""
    interior = grid.interior
    norms = np.linalg.norm(trial, axis=-1)
    if np.any(norms[interior] < MIN_NORM):
        worst = float(np.min(norms[interior]))
        raise NormCollapse(f"nodal norm {worst:.3e} fell below {MIN_NORM} before renormalization")
    out = np.where(interior[..., None], trial / np.where(norms > 0.0, norms, 1.0)[..., None], 0.0)
    out[grid.band] = boundary
    return out


def _sphere_flow(name: str, init: DirectorField, cfg: FlowConfig) -> GradientFlow:
    grid = init.grid

    def energy(values):
        return 0.5 * grid.dirichlet_energy(values)

    def advance(values, tau):
        return _project(grid, init.boundary, values + tau * grid.laplacian(values))

    def residual(values):
        return sphere_residual(grid, values)

    tau_max = 0.25 * grid.h ** 2
    return GradientFlow(name, init, step_budget(cfg, tau_max), tau_max, energy, advance, residual)


def _sign_definite(n: DirectorField) -> Optional[bool]:
    n3 = n.values[n.grid.interior, 2]
    if n3.size == 0:
        return None
    return bool(np.all(n3 > 0.0) or np.all(n3 < 0.0))


def harmonic_map_flow(init: DirectorField, cfg: Optional[FlowConfig] = None) -> Tuple[DirectorField, SolveReport]:
    """Projected heat flow n <- normalize(n + tau Delta n) with fixed band values."""
    cfg = cfg or FlowConfig()
    result, report = _sphere_flow("harmonic_map_flow", init, cfg).run()
    report.sign_definite = _sign_definite(result)
    if _sign_definite(init) and not report.sign_definite:
        logging.getLogger(__name__).warning("harmonic_map_flow: sign-definite initial field lost n3 sign-definiteness")
    return result, report


def s4_harmonic_flow(init: DirectorField, cfg: Optional[FlowConfig] = None) -> Tuple[DirectorField, SolveReport]:
    """Harmonic map flow for the unit c-field of a b2 = 0 limit map."""
    cfg = cfg or FlowConfig()
    result, report = _sphere_flow("s4_harmonic_flow", init, cfg).run()
    report.sign_definite = _sign_definite(result)
    return result, report


def ldg_step_bound(grid, params: MaterialParams) -> float:
    """min(h^2 / 4, eps^2 / (2 Lambda)) with Lambda the bulk Hessian bound."""
    return min(0.25 * grid.h ** 2, params.eps ** 2 / (2.0 * params.hessian_bound))


def step_budget(cfg: FlowConfig, tau_max: float) -> FlowConfig:
    """cfg with max_iterations raised to cover cfg.flow_time at the step bound."""
    if cfg.flow_time is None:
        return cfg
    steps = int(math.ceil(cfg.flow_time / tau_max))
    return replace(cfg, max_iterations=max(cfg.max_iterations, steps))


def ldg_gradient(q: np.ndarray, grid, params: MaterialParams) -> np.ndarray:
    """-Delta Q + eps^-2 m bulk_gradient(Q) at interior nodes (m the relative node
    weight), i.e. the energy gradient divided by h^2."""
    g = -grid.laplacian(q) + grid.mass[..., None] * bulk_gradient(q, params) / params.eps ** 2
    return np.where(grid.interior[..., None], g, 0.0)


def ldg_gradient_flow(init: QField, params: MaterialParams,
                      cfg: Optional[FlowConfig] = None) -> Tuple[QField, SolveReport]:
    """Q <- Q - tau (-Delta Q + eps^-2 bulk_gradient(Q)) on interior nodes."""
    cfg = cfg or FlowConfig()
    grid = init.grid

    def energy(values):
        return ldg_energy(QField(grid, values), params).total

    def advance(values, tau):
        trial = values - tau * ldg_gradient(values, grid, params)
        trial[grid.band] = init.boundary
        return trial

    def residual(values):
        return np.linalg.norm(ldg_gradient(values, grid, params), axis=-1)

    tau_max = ldg_step_bound(grid, params)
    cfg = step_budget(cfg, tau_max)
    flow = GradientFlow("ldg_gradient_flow", init, cfg, tau_max, energy, advance, residual)
    try:
        result, report = flow.run()
    except (NoConvergence, StepUnderflow) as e:
        if e.report is not None:
            e.report.max_gradient = max_gradient_norm(grid, e.result.values)
        raise
    report.max_gradient = max_gradient_norm(grid, result.values)
    return result, report


def residuals(field: GridField) -> np.ndarray:
    """Per-node harmonic map residual: S^2 for director fields, S^4 (after
    normalization of |Q|) for Q-tensor fields."""
    if isinstance(field, DirectorField):
        return harmonic_residual(field)
    return sphere_residual(field.grid, field.values)
