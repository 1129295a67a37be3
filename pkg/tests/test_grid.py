import math

import numpy as np
import pytest

from ldg2of.common.errors import InactiveNode, UnsupportedDomain
from ldg2of.common.types import DomainDescriptor
from ldg2of.grid.domain import contains, make_grid, project_to_boundary


def test_disk_area(disk64):
    assert disk64.integrate(np.ones(disk64.shape)) == pytest.approx(math.pi, rel=0.05)


def test_square_area_is_exact(square32):
    assert square32.integrate(np.ones(square32.shape)) == pytest.approx(1.0, abs=1e-12)


def test_ellipse_area(ellipse32):
    assert ellipse32.integrate(np.ones(ellipse32.shape)) == pytest.approx(math.pi * 0.6, rel=0.05)


@pytest.mark.parametrize("kind", ["disk", "square", "ellipse"])
def test_interior_neighbours_are_active(kind):
    grid = make_grid(DomainDescriptor(kind=kind, rx=1.0, ry=0.6), 24)
    act = grid.active
    rows, cols = np.nonzero(grid.interior)
    for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        assert np.all(act[rows + dr, cols + dc])
    # one ring of exterior nodes on every side
    assert not act[0].any() and not act[-1].any() and not act[:, 0].any() and not act[:, -1].any()


def test_band_points_lie_on_the_boundary(disk32):
    points = disk32.boundary_points
    assert np.allclose(np.abs(points), 1.0)
    nodes = disk32.X[disk32.band] + 1j * disk32.Y[disk32.band]
    assert np.max(np.abs(points - nodes)) <= disk32.h * (1.0 + 1e-9)


def test_project_to_boundary_square():
    desc = DomainDescriptor(kind="square")
    bx, by = project_to_boundary(desc, np.array([0.45, 0.0]), np.array([0.1, -0.48]))
    assert np.allclose(bx, [0.5, 0.0])
    assert np.allclose(by, [0.1, -0.5])
    assert np.all(contains(desc, bx, by))


def test_unsupported_domains():
    with pytest.raises(UnsupportedDomain):
        make_grid(DomainDescriptor(kind="disk"), 8)
    with pytest.raises(UnsupportedDomain):
        make_grid(DomainDescriptor(kind="ellipse", rx=-1.0, ry=1.0), 32)


def test_gradient_exact_on_linears(disk32):
    g = disk32.gradient(disk32.X)
    inner = disk32.interior
    assert np.allclose(g[inner, 0], 1.0, atol=1e-12)
    assert np.allclose(g[inner, 1], 0.0, atol=1e-12)
    node = disk32.node_of(0.25, -0.5)
    assert np.allclose(disk32.gradient_at(disk32.Y, node), [0.0, 1.0], atol=1e-12)


def test_laplacian_exact_on_quadratics(disk32):
    lap = disk32.laplacian(disk32.X ** 2)
    assert np.allclose(lap[disk32.interior], 2.0, atol=1e-8)
    assert np.all(lap[~disk32.interior] == 0.0)
    assert disk32.laplacian_at(disk32.X ** 2 + disk32.Y ** 2, disk32.node_of(0.0, 0.0)) == pytest.approx(4.0)


def test_laplacian_second_order():
    errors = []
    for resolution in (32, 64):
        grid = make_grid(DomainDescriptor(kind="square"), resolution)
        f = np.sin(grid.X) * np.sin(grid.Y)
        errors.append(np.max(np.abs((grid.laplacian(f) + 2.0 * f)[grid.interior])))
    assert 3.5 < errors[0] / errors[1] < 4.5


def test_pointwise_operators_need_interior_nodes(disk32):
    with pytest.raises(InactiveNode):
        disk32.gradient_at(disk32.X, (0, 0))
    with pytest.raises(InactiveNode):
        disk32.laplacian_at(disk32.X, (disk32.ny + 3, 0))


def test_integrate_is_linear(disk32):
    f = disk32.X ** 2
    g = np.cos(disk32.Y)
    lhs = disk32.integrate(2.0 * f - 3.0 * g)
    assert lhs == pytest.approx(2.0 * disk32.integrate(f) - 3.0 * disk32.integrate(g), rel=1e-12)


@pytest.mark.slow
def test_integrate_radial_density():
    grid = make_grid(DomainDescriptor(kind="disk"), 256)
    r2 = grid.X ** 2 + grid.Y ** 2
    assert grid.integrate(8.0 / (1.0 + r2) ** 2) == pytest.approx(4.0 * math.pi, rel=0.01)


def test_dirichlet_energy_of_linear_field(square32):
    assert square32.dirichlet_energy(square32.X) == pytest.approx(1.0, rel=1e-12)


def test_solve_laplace_reproduces_linear_data(ellipse32):
    u = 0.3 * ellipse32.X - 0.7 * ellipse32.Y + 0.1
    sol, residual = ellipse32.solve_laplace(u)
    assert residual < 1e-10
    assert np.allclose(sol[ellipse32.active], u[ellipse32.active], atol=1e-10)


def test_deep_interior_shrinks(disk32):
    deep = disk32.deep_interior(3)
    assert np.all(disk32.interior[deep])
    assert deep.sum() < disk32.interior.sum()
    assert np.array_equal(disk32.deep_interior(0), disk32.interior)


def test_boundary_order_is_counter_clockwise(disk32):
    flat = disk32.boundary_order()
    points = disk32.boundary_x.ravel()[flat] + 1j * disk32.boundary_y.ravel()[flat]
    assert np.all(np.diff(np.angle(points)) >= 0.0)
    assert len(flat) == int(disk32.band.sum())


def test_make_grid_is_cached():
    desc = DomainDescriptor(kind="disk")
    assert make_grid(desc, 20) is make_grid(DomainDescriptor(kind="disk"), 20)
