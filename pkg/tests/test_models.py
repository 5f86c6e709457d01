"""Tests for the benchmark problems and the energy functional."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fvi.models import (
    BENCHMARK_NAMES,
    bagley_torvik,
    by_name,
    coupled_oscillator,
    damped_oscillator_1d,
    energy,
    energy_series,
    with_derivative_order,
)
from fvi.oracle import rl_monomial

OMEGA_COUPLED = 0.695970545353752740265
OMEGA_DAMPED_1D = 0.992156741649221471438
COUPLED_X1 = (0.948284621034966733799, -0.389438058222244040932)
COUPLED_P1 = (-0.0949292132714251026386, 0.203239829924610167692)
DAMPED_1D_X2 = 0.136299926787054763112
DAMPED_1D_P2 = -0.920194322831135084435


def _integrate_linear(eta, rho, x0, v0, t_end):
    # high-accuracy reference for xddot + rho xdot + eta x = 0
    d = x0.size

    def rhs(t, y):
        return np.concatenate([y[d:], -rho * y[d:] - eta * y[:d]])

    sol = solve_ivp(rhs, (0.0, t_end), np.concatenate([x0, v0]),
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:d, -1], sol.y[d:, -1]


def test_coupled_oscillator_parameters():
    spec = coupled_oscillator()
    assert spec.name == "coupled-oscillator"
    assert spec.problem.d == 2
    assert spec.problem.rho == 0.25
    assert spec.problem.alpha == 0.5
    assert spec.default_horizon == 20.0
    x0, p0 = spec.default_initials
    assert np.array_equal(x0, [0.8, -0.5])
    assert np.array_equal(p0, [0.4, 0.0])
    assert np.array_equal(spec.problem.mass_matrix, np.eye(2))


def test_coupled_oscillator_exact_solution_frozen_values():
    spec = coupled_oscillator()
    x0, p0 = spec.problem.exact_solution(0.0)
    assert np.allclose(x0, [0.8, -0.5], atol=1e-15)
    assert np.allclose(p0, [0.4, 0.0], atol=1e-15)
    x1, p1 = spec.problem.exact_solution(1.0)
    assert np.allclose(x1, COUPLED_X1, atol=1e-14)
    assert np.allclose(p1, COUPLED_P1, atol=1e-14)


def test_coupled_oscillator_against_ode_integrator():
    spec = coupled_oscillator()
    x0, p0 = spec.default_initials
    for t_end in (1.0, 5.0, 20.0):
        x_ref, v_ref = _integrate_linear(0.5, 0.25, x0, p0, t_end)
        x, p = spec.problem.exact_solution(t_end)
        assert np.abs(x - x_ref).max() < 1e-9
        assert np.abs(p - v_ref).max() < 1e-9


def test_coupled_oscillator_ode_residual():
    # five-point second derivative of the closed form, residual to 1e-8
    spec = coupled_oscillator()
    sol = spec.problem.exact_solution
    delta = 1e-2
    for t in (0.5, 1.0, 5.0, 17.3):
        vals = [np.asarray(sol(t + k * delta)[0]) for k in (-2, -1, 0, 1, 2)]
        xddot = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3]
                 - vals[4]) / (12 * delta ** 2)
        resid = xddot + 0.25 * np.asarray(sol(t)[1]) + 0.5 * vals[2]
        assert np.abs(resid).max() < 1e-8


def test_damped_oscillator_1d_frozen_values():
    spec = damped_oscillator_1d()
    assert spec.problem.d == 1
    assert spec.default_horizon == 16.0
    x, p = spec.problem.exact_solution(2.0)
    assert abs(x[0] - DAMPED_1D_X2) < 1e-14
    assert abs(p[0] - DAMPED_1D_P2) < 1e-14
    x_ref, v_ref = _integrate_linear(1.0, 0.25, *spec.default_initials, 16.0)
    x16, p16 = spec.problem.exact_solution(16.0)
    assert abs(x16[0] - x_ref[0]) < 1e-9
    assert abs(p16[0] - v_ref[0]) < 1e-9


def test_underdamped_frequencies():
    assert abs(math.sqrt(0.5 - 0.25 ** 2 / 4) - OMEGA_COUPLED) < 1e-18
    assert abs(math.sqrt(1.0 - 0.25 ** 2 / 4) - OMEGA_DAMPED_1D) < 1e-18


def test_bagley_torvik_solves_its_equation():
    spec = bagley_torvik()
    assert spec.problem.d == 1
    assert spec.problem.rho == 1.0
    assert spec.problem.alpha == 0.25
    assert spec.default_horizon == 1.0
    gamma_half = math.gamma(0.5)
    for t in (0.2, 0.5, 1.0):
        x, p = spec.problem.exact_solution(t)
        assert abs(x[0] - t ** 3) < 1e-15
        assert abs(p[0] - 3 * t ** 2) < 1e-15
        forcing = t ** 3 + 6 * t + 3.2 * t ** 2.5 / gamma_half
        resid = 6 * t + rl_monomial(3, 0.5, t, kind="derivative") + t ** 3 - forcing
        assert abs(resid) < 1e-12
    assert spec.problem.grad_potential(0.0, np.zeros(1))[0] == 0.0


def test_bagley_torvik_half_derivative_coefficient():
    # Gamma(4)/Gamma(3.5) equals 3.2/Gamma(0.5)
    assert abs(math.gamma(4.0) / math.gamma(3.5)
               - 3.2 / math.gamma(0.5)) < 1e-15


def test_energy_values():
    spec = coupled_oscillator()
    x0, p0 = spec.default_initials
    assert abs(energy(spec.problem, x0, p0) - 0.3025) < 1e-15
    assert energy(spec.problem, np.zeros(2), np.zeros(2)) == 0.0
    spec1 = damped_oscillator_1d()
    x0, p0 = spec1.default_initials
    assert abs(energy(spec1.problem, x0, p0) - 0.625) < 1e-15


def test_energy_decays_along_exact_flow():
    for spec in (coupled_oscillator(), damped_oscillator_1d()):
        times = np.linspace(0.0, spec.default_horizon, 9)
        vals = [energy(spec.problem, *spec.problem.exact_solution(t))
                for t in times]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_energy_series_vanishes_on_exact_trajectory():
    spec = coupled_oscillator()
    t = np.linspace(0.0, 10.0, 21)
    states = [spec.problem.exact_solution(tk) for tk in t]
    x = np.array([s[0] for s in states])
    p = np.array([s[1] for s in states])
    e_num, e_exact, e_err = energy_series(spec, t, x, p)
    assert np.allclose(e_num, e_exact, atol=1e-14)
    assert np.abs(e_err).max() < 1e-13
    assert abs(e_exact[0] - 0.3025) < 1e-15


def test_registry_lookup():
    assert BENCHMARK_NAMES == ("bagley-torvik", "coupled-oscillator",
                               "damped-oscillator-1d")
    for name in BENCHMARK_NAMES:
        assert by_name(name).name == name
    with pytest.raises(ValueError, match="unknown benchmark"):
        by_name("pendulum")


def test_with_derivative_order():
    spec = bagley_torvik()
    same = with_derivative_order(spec, 0.5)
    assert same is spec
    other = with_derivative_order(spec, 1.0)
    assert other.problem.alpha == 0.5
    assert other.problem.exact_solution is None
    assert other.problem.rho == spec.problem.rho
    with pytest.raises(ValueError, match="derivative order"):
        with_derivative_order(spec, 2.0)
    with pytest.raises(ValueError, match="derivative order"):
        with_derivative_order(spec, 0.0)


def test_construction_check_rejects_wrong_solution():
    from fvi.galerkin import LagrangianProblem
    from fvi.models import _check_exact

    bad = LagrangianProblem(
        d=1,
        potential=lambda t, x: 0.5 * x @ x,
        grad_potential=lambda t, x: x,
        rho=0.25,
        alpha=0.5,
        exact_solution=lambda t: (np.array([math.cos(t)]),
                                  np.array([-math.sin(t)])),
    )
    with pytest.raises(RuntimeError, match="residual"):
        _check_exact(bad, 10.0, lambda t: np.array([-math.sin(t)]))


def test_spec_validation():
    spec = coupled_oscillator()
    from fvi.models import BenchmarkSpec

    with pytest.raises(ValueError, match="dimension"):
        BenchmarkSpec(problem=spec.problem, name="x",
                      default_initials=(np.zeros(3), np.zeros(3)),
                      default_horizon=1.0, reference="")
    with pytest.raises(ValueError, match="horizon"):
        BenchmarkSpec(problem=spec.problem, name="x",
                      default_initials=(np.zeros(2), np.zeros(2)),
                      default_horizon=0.0, reference="")
