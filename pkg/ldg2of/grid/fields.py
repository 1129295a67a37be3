# -*- coding: utf-8 -*-

##
## Grid-sampled director and Q-tensor fields. Values live in arrays of shape
## (ny, nx, components); exterior nodes hold zeros. Every field keeps its own copy
## of the boundary-band values and any field derived with with_values() gets the
## same copy back, so boundary data can never drift during a solve.
##

import numpy as np

from ldg2of.common.errors import NotUnit
from ldg2of.grid.domain import DomainGrid
from ldg2of.tensor.qtensor import uniaxial_from_director

UNIT_TOL = 1e-10


class GridField:
    components = 0

    def __init__(self, grid: DomainGrid, values, boundary=None):
        if grid is None:
            raise ValueError("grid must not be None")
        values = np.array(values, dtype=float)
        if values.shape != grid.shape + (self.components,):
            raise ValueError(f"{type(self).__name__} needs shape {grid.shape + (self.components,)}, "
                             f"got {values.shape}")
        values[~grid.active] = 0.0
        if boundary is None:
            boundary = values[grid.band].copy()
        else:
            boundary = np.array(boundary, dtype=float)
            values[grid.band] = boundary
        values.setflags(write=False)
        boundary.setflags(write=False)
        self.grid = grid
        self.values = values
        self.boundary = boundary
        self._validate()

    def _validate(self):
        pass

    def with_values(self, values) -> "GridField":
        """Same grid and boundary data, new interior values."""
        return type(self)(self.grid, values, boundary=self.boundary)

    def copy_values(self) -> np.ndarray:
        return np.array(self.values)

    def boundary_unchanged(self, other: "GridField") -> bool:
        return bool(np.array_equal(self.values[self.grid.band], other.values[other.grid.band]))


class DirectorField(GridField):
    """S^2-valued field; |n| = 1 at every active node."""
    components = 3

    def _validate(self):
        lengths = np.linalg.norm(self.values[self.grid.active], axis=-1)
        if lengths.size and np.max(np.abs(lengths - 1.0)) > UNIT_TOL:
            raise NotUnit(f"director field is not unit length (max deviation "
                          f"{np.max(np.abs(lengths - 1.0)):.3e})")

    @classmethod
    def normalized(cls, grid: DomainGrid, values, boundary=None) -> "DirectorField":
        values = np.array(values, dtype=float)
        lengths = np.linalg.norm(values, axis=-1, keepdims=True)
        values = np.where(grid.active[..., None], values / np.where(lengths > 0.0, lengths, 1.0), 0.0)
        return cls(grid, values, boundary=boundary)

    def to_q(self, scale: float) -> "QField":
        """Uniaxial field scale * (n n^T - I/3)."""
        q = np.zeros(self.grid.shape + (5,))
        q[self.grid.active] = uniaxial_from_director(self.values[self.grid.active], scale)
        return QField(self.grid, q)

    def reflect(self) -> "DirectorField":
        """n -> (n1, n2, -n3), including the boundary copy."""
        flip = np.array([1.0, 1.0, -1.0])
        return DirectorField(self.grid, self.values * flip, boundary=self.boundary * flip)


class QField(GridField):
    """Q-tensor field in F-coordinates."""
    components = 5


def field_for(grid: DomainGrid, values) -> GridField:
    values = np.asarray(values)
    if values.shape[-1] == 3:
        return DirectorField(grid, values)
    return QField(grid, values)
