"""Shooting, certification and Nehari machinery for the radial problem."""

import numpy as np
import pytest

from henon_morse.errors import DegenerateInput, NoBracket, OverflowBlowUp
from henon_morse.nonlinearity import pure_power, quartic_coupled
from henon_morse.radial_bvp import (
    EPS_ORIGIN,
    ProblemParams,
    RadialProfile,
    _integrate_dense,
    _taylor_start,
    action_energy,
    count_interior_zeros,
    integrate_radial_ivp,
    nehari_defect,
    nehari_project,
    nonlinear_mass,
    quadratic_part,
    relative_residual,
    residual,
    shoot_system_newton,
)

from oracles import collocation_positive_amplitude, rk4_radial_ivp


def params_for(N, alpha, p=4.0, mu=0.0):
    return ProblemParams(N=N, alpha=alpha, mu1=mu, mu2=mu, f=pure_power(p))


def test_zero_data_gives_zero_profile():
    prof = integrate_radial_ivp(params_for(3, 0.0), (0.0, 0.0), 500)
    assert np.all(prof.u == 0) and np.all(prof.v == 0)
    assert np.all(prof.du == 0) and np.all(prof.dv == 0)
    assert residual(prof) == 0.0
    assert prof.is_trivial


def test_small_amplitude_undershoots():
    # small data stays positive up to the boundary
    prof = integrate_radial_ivp(params_for(3, 0.0), (0.1, 0.0), 500)
    assert np.all(prof.u[:-1] > 0)
    assert prof.u[-1] > 0


def test_ivp_matches_fixed_step_oracle():
    params = params_for(3, 0.0)
    prof = integrate_radial_ivp(params, (0.1, 0.0), 500)
    oracle = rk4_radial_ivp(params, (0.1, 0.0), n_steps=100_000)
    assert prof.u[-1] == pytest.approx(oracle[0], abs=1e-11)
    assert prof.du[-1] == pytest.approx(oracle[2], abs=1e-11)


def test_ivp_matches_oracle_with_weight_and_mu():
    params = ProblemParams(N=2, alpha=3.0, mu1=0.7, mu2=0.0, f=pure_power(4))
    prof = integrate_radial_ivp(params, (1.5, 0.0), 500)
    oracle = rk4_radial_ivp(params, (1.5, 0.0), n_steps=100_000)
    assert prof.u[-1] == pytest.approx(oracle[0], rel=1e-9)


def test_taylor_start_consistency():
    # integrating from eps/2 reproduces the series value at 2 eps
    params = params_for(3, 1.5, mu=0.4)
    d = (2.0, 0.0)
    dense = _integrate_dense(params, d, eps=EPS_ORIGIN / 2)
    series = _taylor_start(params, d, 2 * EPS_ORIGIN)
    integrated = dense(2 * EPS_ORIGIN)
    assert integrated[0] == pytest.approx(series[0], abs=1e-9)
    assert integrated[2] == pytest.approx(series[2], abs=1e-9)


def test_blowup_guard():
    # with the nonlinearity suppressed by a strong weight, a large linear term
    # drives exponential growth past the guard well before the boundary
    params = ProblemParams(N=3, alpha=20.0, mu1=1e6, mu2=0.0, f=pure_power(4))
    with pytest.raises(OverflowBlowUp):
        integrate_radial_ivp(params, (1.0, 0.0), 500)


def test_positive_shoot_against_collocation(solve):
    # independent relaxation/collocation oracle on three parameter sets
    cases = [(3, 0.0), (2, 4.0), (3, 6.0)]
    for N, alpha in cases:
        prof = solve(N, alpha)
        oracle_amp = collocation_positive_amplitude(params_for(N, alpha))
        assert prof.amplitude[0] == pytest.approx(oracle_amp, rel=1e-6)


def test_positive_shoot_certificates(solve):
    for N, alpha in ((3, 0.0), (2, 4.0)):
        prof = solve(N, alpha)
        assert np.all(prof.u[:-1] >= 0)
        assert abs(prof.u[-1]) <= 1e-9
        assert residual(prof) <= 1e-4
        assert relative_residual(prof) <= 1e-6


def test_supercritical_has_no_bracket():
    # ball-supercritical exponent: the shot never crosses the boundary zero
    params = ProblemParams(N=3, alpha=0.0, mu1=0.0, mu2=0.0, f=pure_power(8))
    with pytest.raises(NoBracket):
        from henon_morse.radial_bvp import shoot_positive

        shoot_positive(params, tol=1e-8)


def test_nodal_shoot(solve):
    prof = solve(2, 2.0, nodes=1)
    assert count_interior_zeros(prof, refine=4) == 1
    assert abs(prof.u[-1]) <= 1e-9
    assert relative_residual(prof) <= 2e-6
    # nodal amplitude exceeds the positive amplitude at identical parameters
    pos = solve(2, 2.0)
    assert prof.amplitude[0] > pos.amplitude[0]


def test_nodal_delegates_to_positive(solve):
    from henon_morse.radial_bvp import shoot_nodal

    prof = shoot_nodal(params_for(3, 0.0), nodes=0, tol=1e-10, grid_size=1000)
    assert count_interior_zeros(prof) == 0
    assert prof.amplitude[0] == pytest.approx(6.8968486195, rel=1e-8)


def test_residual_detects_corruption(solve):
    prof = solve(3, 0.0)
    u = prof.u.copy()
    u[len(u) // 2] += 1e-3
    bad = RadialProfile(prof.params, prof.grid, u, prof.v, prof.du, prof.dv,
                        prof.amplitude)
    assert residual(bad) >= 1e-2


def test_residual_second_order_convergence(solve):
    prof = solve(3, 0.0)
    amp = prof.amplitude
    vals = []
    for grid in (500, 1000, 2000, 4000):
        p = integrate_radial_ivp(prof.params, amp, grid, rtol=1e-12, atol=1e-12)
        vals.append(residual(p))
    orders = [np.log2(vals[i] / vals[i + 1]) for i in range(3)]
    assert all(o >= 1.8 for o in orders)


def test_action_energy(solve):
    zero = integrate_radial_ivp(params_for(3, 0.0), (0.0, 0.0), 500)
    assert action_energy(zero) == 0.0

    prof = solve(3, 0.0)
    # critical points satisfy I = (1/2 - 1/p) * nonlinear mass
    p = prof.params.f.p
    expected = (0.5 - 1.0 / p) * nonlinear_mass(prof)
    assert action_energy(prof) == pytest.approx(expected, rel=1e-6)

    # quadrature stability under grid doubling
    fine = integrate_radial_ivp(prof.params, prof.amplitude, 8000,
                                rtol=1e-12, atol=1e-12)
    assert action_energy(fine) == pytest.approx(action_energy(prof), rel=1e-7)


def test_nehari_projection(solve):
    prof = solve(3, 0.0)
    _, t = nehari_project(prof)
    assert t == pytest.approx(1.0, abs=1e-8)

    # homogeneity: scaling the input by 2 scales t by 1/2
    doubled = prof.scaled(2.0)
    _, t2 = nehari_project(doubled)
    assert t2 == pytest.approx(t / 2.0, abs=1e-10)


def test_nehari_projection_generic_profile():
    # a smooth non-solution test profile projects onto the manifold
    params = params_for(3, 1.0)
    r = np.linspace(0.0, 1.0, 2001)
    u = np.cos(0.5 * np.pi * r)
    du = -0.5 * np.pi * np.sin(0.5 * np.pi * r)
    z = np.zeros_like(r)
    w = RadialProfile(params, r, u, z, du, z, (1.0, 0.0))
    projected, t = nehari_project(w)
    assert t > 0
    defect = nehari_defect(projected)
    assert abs(defect) <= 1e-8 * quadratic_part(projected)


def test_nehari_rejects_zero():
    zero = integrate_radial_ivp(params_for(3, 0.0), (0.0, 0.0), 500)
    with pytest.raises(DegenerateInput):
        nehari_project(zero)


def test_symmetric_system_diagonal(solve):
    prof = solve(3, 2.0, family="quartic_coupled", b=1.0, mu=0.5)
    assert np.allclose(prof.u, prof.v)
    assert relative_residual(prof) <= 1e-6
    assert abs(prof.u[-1]) <= 1e-9


def test_system_newton_recovers_diagonal(solve):
    # b = 1 makes the coupling isotropic with a circle of solutions, so use a
    # nondegenerate coupling where the diagonal root is isolated
    prof = solve(3, 2.0, family="quartic_coupled", b=0.5, mu=0.5)
    d = prof.amplitude[0]
    params = prof.params
    newton = shoot_system_newton(params, (1.005 * d, 0.995 * d), tol=1e-9,
                                 grid_size=2000)
    assert newton.amplitude[0] == pytest.approx(d, rel=1e-6)
    assert newton.amplitude[1] == pytest.approx(d, rel=1e-6)
    assert relative_residual(newton) <= 2e-6


def test_grid_size_validation():
    with pytest.raises(ValueError):
        integrate_radial_ivp(params_for(3, 0.0), (1.0, 0.0), 50)
    with pytest.raises(ValueError):
        ProblemParams(N=1, alpha=0.0, mu1=0.0, mu2=0.0, f=pure_power(4))
    with pytest.raises(ValueError):
        ProblemParams(N=3, alpha=-0.5, mu1=0.0, mu2=0.0, f=pure_power(4))
