# -*- coding: utf-8 -*-

##
## Splitting a computed Q-tensor field into its director n_eps and the
## transverse coordinates rho_eps:
##
##   Q = s+(n_eps n_eps^T - I/3) + eps^2 R V_rho R^T,   R = R_{n_eps}
##

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ldg2of.common.errors import DegenerateSpectrum
from ldg2of.common.types import MaterialParams
from ldg2of.grid.fields import DirectorField, GridField, QField
from ldg2of.tensor.qtensor import biaxiality_gap, eigendecompose, rotate, rotation_to, v_rho

logger = logging.getLogger(__name__)

MIN_GAP = 1e-6


@dataclass
class Decomposition:
    n_eps: DirectorField
    rho_eps: np.ndarray
    f45_residual: np.ndarray
    eigen_gap: np.ndarray
    biaxiality: np.ndarray
    eps: float
    degenerate: Optional[np.ndarray] = None

    def reconstruct(self, params: MaterialParams) -> np.ndarray:
        """Q[n_eps] + eps^2 R V_rho R^T per node (F-coordinates)."""
        grid = self.n_eps.grid
        act = grid.active
        q = self.n_eps.to_q(params.s_plus).copy_values()
        r = rotation_to(self.n_eps.values[act])
        q[act] += self.eps ** 2 * rotate(v_rho(self.rho_eps[act]), r)
        return q


def decompose(q: QField, n0: DirectorField, params: MaterialParams, mask_degenerate: bool = False) -> Decomposition:
    """Principal eigenvector (signed along n0) and rho_eps,j = (R^T (Q - Q[n_eps]) R) : F_j / eps^2.

    Nodes whose principal eigenvalue gap is below MIN_GAP raise DegenerateSpectrum,
    or with mask_degenerate take n_eps = n0 and rho_eps = 0 and are flagged in
    `degenerate`."""
    grid = q.grid
    act = grid.active
    eps = params.eps

    es = eigendecompose(q.values[act])
    gap = es.values[:, 0] - es.values[:, 1]
    flat = gap < MIN_GAP
    if np.any(flat) and not mask_degenerate:
        worst = int(np.argmin(gap))
        node = tuple(int(i) for i in np.argwhere(act)[worst])
        raise DegenerateSpectrum(f"principal eigenvalue gap {gap[worst]:.3e} below {MIN_GAP} at node {node}",
                                 node=node)
    v = es.principal
    sign = np.where(np.sum(v * n0.values[act], axis=-1) < 0.0, -1.0, 1.0)
    v = np.where(flat[:, None], n0.values[act], v * sign[:, None])
    if np.any(flat):
        logger.warning(f"{int(flat.sum())} nodes have a degenerate principal eigenvalue; n_eps = n0 there")

    n_values = np.zeros(grid.shape + (3,))
    n_values[act] = v
    n_eps = DirectorField.normalized(grid, n_values)

    r = rotation_to(n_eps.values[act])
    diff = q.values[act] - n_eps.to_q(params.s_plus).values[act]
    rotated = rotate(diff, np.swapaxes(r, -1, -2))

    rho = np.zeros(grid.shape + (3,))
    rho[act] = np.where(flat[:, None], 0.0, rotated[:, :3] / eps ** 2)
    f45 = np.zeros(grid.shape)
    f45[act] = np.where(flat, 0.0, np.linalg.norm(rotated[:, 3:], axis=-1))
    degenerate = np.zeros(grid.shape, dtype=bool)
    degenerate[act] = flat
    eigen_gap = np.zeros(grid.shape)
    eigen_gap[act] = gap
    return Decomposition(n_eps=n_eps, rho_eps=rho, f45_residual=f45, eigen_gap=eigen_gap,
                         biaxiality=np.where(act, biaxiality_gap(q.values), 0.0), eps=eps,
                         degenerate=degenerate)


def trace_component(q: QField, q0: QField, eps: float) -> np.ndarray:
    """(Q - Q0) : Q0 / eps^2 per node."""
    return np.sum((q.values - q0.values) * q0.values, axis=-1) / eps ** 2


def director_drift(n_eps: GridField, n0: GridField) -> float:
    """Discrete H^1_0 seminorm of n_eps - n0."""
    if n_eps.grid is not n0.grid and n_eps.grid.shape != n0.grid.shape:
        raise ValueError("director fields live on different grids")
    return float(np.sqrt(n0.grid.dirichlet_energy(n_eps.values - n0.values)))
