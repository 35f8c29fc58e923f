import numpy as np
import pytest

import cavitybec as cb

from conftest import dot_params


def test_adiabatic_cavity_dark_for_zero_theta():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4)
    assert cb.adiabatic_cavity(0.0, 0.5, p) == 0.0


def test_adiabatic_cavity_closed_form():
    # fixed point of the cavity drift: a = -eta*theta/(delta_eff - i*kappa);
    # oracle evaluated by direct complex arithmetic, -2/(4 - 10j)
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4)
    a = cb.adiabatic_cavity(0.5, 0.5, p)
    expected = -2.0 / (4.0 - 10.0j)
    assert a == pytest.approx(expected, abs=1e-15)
    assert a.real == pytest.approx(-0.06896551724, abs=1e-9)
    assert a.imag == pytest.approx(-0.17241379310, abs=1e-9)
    # drift really vanishes there
    delta_eff = p.delta_c + p.u0n * 0.5
    assert (delta_eff - 1j * p.kappa) * a + p.eta * 0.5 == pytest.approx(0.0, abs=1e-15)


def test_adiabatic_cavity_linearity_and_bound():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4)
    a1 = cb.adiabatic_cavity(0.4, 0.6, p)
    a2 = cb.adiabatic_cavity(-0.4, 0.6, p)
    assert a1 == pytest.approx(-a2, abs=1e-15)
    for th in (0.1, 0.5, 1.0):
        assert abs(cb.adiabatic_cavity(th, 0.5, p)) <= p.eta / p.kappa + 1e-12


@pytest.mark.parametrize(
    "kwargs,expected",
    [
        (dict(delta_c=10, u0n=-12, kappa=10, g1d=0.0), np.sqrt(0.5 * (4 + 100 / 4))),
        (dict(delta_c=10, u0n=-12, kappa=10, g1d=0.5), np.sqrt(1.0 * (4 + 100 / 4))),
    ],
)
def test_analytic_critical_pump_values(kwargs, expected):
    p = cb.ModelParams(**kwargs)
    assert cb.analytic_critical_pump(p) == pytest.approx(expected, rel=1e-12)


def test_analytic_critical_pump_requires_positive_delta0():
    p = cb.ModelParams(delta_c=5, u0n=-12, kappa=10)
    assert p.delta0 == pytest.approx(-1.0)
    assert cb.analytic_critical_pump(p) is None


def test_normal_phase_solution():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=3.0)
    ss = cb.imaginary_time_solve(p)
    assert abs(ss.theta) < 1e-6
    assert abs(ss.a) < 1e-6
    assert ss.mu == pytest.approx(0.0, abs=1e-8)
    assert not ss.extrapolated


def test_superradiant_solution_above_threshold():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4.0)
    ss = cb.imaginary_time_solve(p)
    assert abs(ss.theta) > 0.1
    assert abs(ss.a) > 0.01
    # cavity amplitude satisfies the elimination formula at the solution
    assert ss.a == pytest.approx(cb.adiabatic_cavity(ss.theta, ss.bmean, p), abs=1e-12)


def test_fixed_point_property_under_real_time_drift():
    tol = 1e-10
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4.0)
    ss = cb.imaginary_time_solve(p, tol=tol)
    state = cb.SystemState(ss.condensate, ss.a, 0.0)
    dc, da = cb.coupled_rhs(state, p)
    # remove the global phase rate mu
    drift = np.max(np.abs(dc + 1j * ss.mu * ss.condensate.c))
    assert drift <= 10 * tol
    assert abs(da) <= 10 * tol
    assert ss.residual <= 10 * tol


def test_z2_pairing_of_seeded_branches():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4.5)
    plus = cb.imaginary_time_solve(p, seed_eps=+1e-3)
    minus = cb.imaginary_time_solve(p, seed_eps=-1e-3)
    assert plus.theta == pytest.approx(-minus.theta, rel=1e-6)
    assert plus.a == pytest.approx(-minus.a, rel=1e-6)
    assert plus.bmean == pytest.approx(minus.bmean, rel=1e-8)


def test_sl_region_has_fixed_point_that_real_time_leaves(dot_steady_states):
    p = dot_params("II")
    ss = dot_steady_states["II"]
    assert ss.residual < 1e-8
    state = cb.SystemState(ss.condensate, ss.a, 0.0)
    traj = cb.evolve_meanfield(state, p, cb.IntegratorConfig(t_end=500.0, stride=0.1))
    assert np.max(np.abs(traj.theta - ss.theta)) > 1e-3


def test_threshold_bisection_matches_analytic_spot():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10)
    eta_c = cb.pump_threshold(p)
    assert eta_c == pytest.approx(3.8079, rel=0.01)


def test_custom_init_state_is_used():
    p = cb.ModelParams(delta_c=10, u0n=-12, kappa=10, eta=4.0)
    ref = cb.imaginary_time_solve(p)
    init = cb.CondensateState.from_modes(p.n_max, {0: 1.0, 1: -1e-3, -1: -1e-3}, normalize=True)
    ss = cb.imaginary_time_solve(p, init=init)
    assert ss.theta == pytest.approx(-ref.theta, rel=1e-6)
