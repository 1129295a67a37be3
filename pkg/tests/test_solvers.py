import numpy as np
import pytest

from ldg2of.common.errors import NoConvergence, NormCollapse, StepUnderflow
from ldg2of.common.types import EscapeConfig, FlowConfig, MaterialParams
from ldg2of.conformal.construct import b0_conformal_cfield, conformal_field, control_boundary_angle, vertical_lift
from ldg2of.conformal.diagnostics import harmonic_residual, max_gradient_norm
from ldg2of.energy.functionals import corrected_minimizer, ldg_energy
from ldg2of.grid.fieldio import read_field
from ldg2of.grid.fields import DirectorField, QField
from ldg2of.solvers.flows import (GradientFlow, harmonic_map_flow, ldg_gradient, ldg_gradient_flow,
                                  ldg_step_bound, residuals, s4_harmonic_flow, step_budget)

RADIAL = EscapeConfig(m=1, points=[(0.0, 0.0)])


def constant(grid, vector):
    values = np.zeros(grid.shape + (len(vector),))
    values[grid.active] = vector
    return values


def is_non_increasing(history):
    return all(b <= a for a, b in zip(history, history[1:]))


def test_constant_field_is_a_fixed_point(disk32):
    n = DirectorField(disk32, constant(disk32, [0.0, 0.0, 1.0]))
    result, report = harmonic_map_flow(n)
    assert report.converged
    assert report.iterations == 0
    assert np.array_equal(result.values, n.values)


def test_partial_result_on_iteration_budget(disk32):
    init = vertical_lift(disk32, control_boundary_angle, "north")
    cfg = FlowConfig(max_iterations=20, energy_tol=0.0, residual_rtol=0.0)
    with pytest.raises(NoConvergence) as info:
        harmonic_map_flow(init, cfg)
    result, report = info.value.result, info.value.report
    assert report.iterations == 20
    assert not report.converged
    assert report.status == "max iterations"
    assert len(report.energy_history) == 3
    assert is_non_increasing(report.energy_history)
    assert report.energy_history[-1] == report.final_energy
    assert result.boundary_unchanged(init)
    assert np.allclose(np.linalg.norm(result.values[disk32.active], axis=-1), 1.0)


def test_norm_collapse(disk32):
    sign = np.where(np.arange(disk32.nx) % 2 == 0, 1.0, -1.0)
    values = constant(disk32, [1.0, 0.0, 0.0]) * sign[None, :, None]
    with pytest.raises(NormCollapse):
        harmonic_map_flow(DirectorField(disk32, values), FlowConfig(step_policy="fixed"))


def test_step_underflow(disk32):
    q = QField(disk32, np.zeros(disk32.shape + (5,)))
    flow = GradientFlow("uphill", q, FlowConfig(), 1.0,
                        energy=lambda v: float(np.sum(v)),
                        advance=lambda v, tau: v + tau,
                        residual=lambda v: np.ones(disk32.shape))
    with pytest.raises(StepUnderflow) as info:
        flow.run()
    report = info.value.report
    assert report.iterations == 0
    assert report.rejected_steps >= 39
    assert np.array_equal(info.value.result.values, q.values)


def test_tau_is_capped_at_the_stability_bound(disk32):
    q = QField(disk32, np.zeros(disk32.shape + (5,)))
    flow = GradientFlow("capped", q, FlowConfig(tau=1.0), 1e-3,
                        energy=lambda v: 0.0, advance=lambda v, tau: v, residual=lambda v: np.zeros(disk32.shape))
    assert flow.tau == 1e-3
    assert GradientFlow("small", q, FlowConfig(tau=1e-5), 1e-3,
                        energy=lambda v: 0.0, advance=lambda v, tau: v,
                        residual=lambda v: np.zeros(disk32.shape)).tau == 1e-5


def test_conformal_field_is_nearly_harmonic(disk32):
    init = conformal_field(RADIAL, disk32)
    result, report = harmonic_map_flow(init)
    assert report.converged
    assert report.sign_definite
    assert result.boundary_unchanged(init)
    assert is_non_increasing(report.energy_history)
    assert report.final_energy == pytest.approx(report.energy_history[0], rel=0.01)
    assert report.final_residual < report.initial_residual


def test_checkpoints(tmp_path, disk32):
    init = vertical_lift(disk32, control_boundary_angle, "north")
    path = tmp_path / "checkpoint.bin"
    cfg = FlowConfig(max_iterations=10, energy_tol=0.0, residual_rtol=0.0, checkpoint=str(path),
                     checkpoint_every=5)
    with pytest.raises(NoConvergence) as info:
        harmonic_map_flow(init, cfg)
    saved = read_field(path)
    assert np.allclose(saved.values, info.value.result.values)


def test_ldg_step_bound(disk32, unit_params):
    assert unit_params.hessian_bound == pytest.approx(20.0)
    assert ldg_step_bound(disk32, unit_params) == pytest.approx(disk32.h ** 2 / 4.0)
    small = unit_params.with_eps(0.05)
    assert ldg_step_bound(disk32, small) == pytest.approx(0.0025 / 40.0)


def test_ldg_gradient_of_the_limit_map(disk32, unit_params):
    n = conformal_field(RADIAL, disk32)
    q = n.to_q(unit_params.s_plus).values
    g = ldg_gradient(q, disk32, unit_params)
    assert np.all(g[~disk32.interior] == 0.0)
    assert np.allclose(g[disk32.interior], -disk32.laplacian(q)[disk32.interior], atol=1e-8)


def test_ldg_flow_partial_result(disk32, unit_params):
    n = conformal_field(RADIAL, disk32)
    init = corrected_minimizer(n, unit_params)
    cfg = FlowConfig(max_iterations=25, energy_tol=0.0, residual_rtol=0.0)
    with pytest.raises(NoConvergence) as info:
        ldg_gradient_flow(init, unit_params, cfg)
    result, report = info.value.result, info.value.report
    assert report.solver == "ldg_gradient_flow"
    assert report.max_gradient is not None and report.max_gradient > 0.0
    assert is_non_increasing(report.energy_history)
    assert result.boundary_unchanged(init)
    assert ldg_energy(result, unit_params).total <= ldg_energy(init, unit_params).total


def test_ldg_flow_lowers_the_uniaxial_energy(disk32):
    params = MaterialParams(eps=0.2)
    n = conformal_field(RADIAL, disk32)
    init = n.to_q(params.s_plus)
    cfg = FlowConfig(max_iterations=200, energy_tol=0.0, residual_rtol=0.0)
    with pytest.raises(NoConvergence) as info:
        ldg_gradient_flow(init, params, cfg)
    # the uniaxial limit map is not critical for E_eps: the flow moves off it
    assert info.value.report.final_energy < info.value.report.energy_history[0]


def test_residuals_dispatch(disk32, unit_params):
    n = conformal_field(RADIAL, disk32)
    assert np.array_equal(residuals(n), harmonic_residual(n))
    assert residuals(n.to_q(unit_params.s_plus)).shape == disk32.shape


def test_s4_flow_fixed_point(disk32):
    c = DirectorField(disk32, constant(disk32, [0.0, 0.0, -1.0]))
    result, report = s4_harmonic_flow(c)
    assert report.converged
    assert report.solver == "s4_harmonic_flow"
    assert report.sign_definite is True
    assert np.array_equal(result.values, c.values)


def test_s4_flow_keeps_unit_norm(disk32):
    c = b0_conformal_cfield(1, [(0.2, 0.1)], disk32)
    cfg = FlowConfig(max_iterations=10, energy_tol=0.0, residual_rtol=0.0)
    with pytest.raises(NoConvergence) as info:
        s4_harmonic_flow(c, cfg)
    result, report = info.value.result, info.value.report
    assert report.iterations == 10
    assert is_non_increasing(report.energy_history)
    assert result.boundary_unchanged(c)
    assert np.allclose(np.linalg.norm(result.values[disk32.active], axis=-1), 1.0)


def test_max_gradient_norm(disk32):
    ramp = np.where(disk32.active, disk32.x[None, :], 0.0)[..., None]
    assert max_gradient_norm(disk32, ramp) == pytest.approx(1.0, rel=1e-9)
    assert max_gradient_norm(disk32, constant(disk32, [0.3, -0.2])) == 0.0


def test_energy_window_waits_until_full(disk32):
    q = QField(disk32, np.zeros(disk32.shape + (5,)))

    def creep(values, tau):
        out = values.copy()
        out[0, 0, 0] -= 1e-14
        return out

    flow = GradientFlow("creep", q, FlowConfig(window=10, energy_tol=1e-10, max_iterations=50), 1.0,
                        energy=lambda v: 1.0 + float(v[0, 0, 0]), advance=creep,
                        residual=lambda v: np.ones(disk32.shape))
    _, report = flow.run()
    assert report.converged
    assert report.status == "converged (energy)"
    assert report.iterations == 10


def test_step_budget_covers_the_flow_time():
    assert step_budget(FlowConfig(max_iterations=10), 1e-3).max_iterations == 10
    assert step_budget(FlowConfig(max_iterations=10, flow_time=1.0), 1e-3).max_iterations == 1000
    assert step_budget(FlowConfig(max_iterations=5000, flow_time=1.0), 1e-3).max_iterations == 5000


def test_ldg_flow_budget_follows_the_flow_time(disk32, unit_params):
    n = conformal_field(RADIAL, disk32)
    init = corrected_minimizer(n, unit_params)
    tau = ldg_step_bound(disk32, unit_params)
    cfg = FlowConfig(max_iterations=1, energy_tol=0.0, residual_rtol=0.0, flow_time=12.5 * tau)
    with pytest.raises(NoConvergence) as info:
        ldg_gradient_flow(init, unit_params, cfg)
    assert info.value.report.iterations == 13


def test_ldg_flow_descends_at_every_step(disk32, unit_params):
    n = conformal_field(EscapeConfig(m=2, points=[(0.3, 0.1), (-0.2, -0.4)]), disk32)
    init = n.to_q(unit_params.s_plus)
    cfg = FlowConfig(max_iterations=40, energy_tol=0.0, residual_rtol=0.0, history_every=1)
    with pytest.raises(NoConvergence) as info:
        ldg_gradient_flow(init, unit_params, cfg)
    result, report = info.value.result, info.value.report
    assert len(report.energy_history) == 41
    assert is_non_increasing(report.energy_history)
    assert report.energy_history[-1] < report.energy_history[0]
    assert np.array_equal(result.values[disk32.band], init.values[disk32.band])
    assert result.boundary_unchanged(init)
