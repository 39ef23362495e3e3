import math
from dataclasses import replace

import numpy as np
import pytest

from fracstrich.errors import HypothesisError
from fracstrich.wellposed import (ContractionError, PotentialProblem, Solver, contraction_ratio, mass_deviation,
                                  picard_solve, solution_bounds_check)


@pytest.fixture(scope="module")
def problem():
    return PotentialProblem()


@pytest.fixture(scope="module")
def solver(problem):
    return Solver(problem)


def test_hypotheses():
    with pytest.raises(HypothesisError):
        PotentialProblem(gamma_x=1.0, gamma_t=0.35)
    with pytest.raises(HypothesisError):
        PotentialProblem(p=1.5)
    with pytest.raises(ValueError):
        PotentialProblem(phase=2.0)


def test_free_problem_is_unitary():
    pr = PotentialProblem(eps=0.0, forcing=None)
    sv = Solver(pr)
    sol = picard_solve(pr, solver=sv)
    assert sol.iterations == 1
    assert np.max(np.abs(np.array(sol.l2_sup) / math.pi ** 0.75 - 1)) < 1e-8


def test_phi_is_linear(solver):
    rng = np.random.default_rng(0)
    shape = (solver.disc.space.size, solver.disc.tgrid.size)
    u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    lhs = solver.phi(2 * u - 1j * v)[1]
    rhs = 2 * solver.phi(u)[1] - 1j * solver.phi(v)[1]
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs))


def test_contraction_scales_with_eps(problem, solver):
    c = contraction_ratio(problem, solver=solver)
    half = contraction_ratio(problem.scaled_potential(0.5))
    assert c < 0.5
    assert half == pytest.approx(c / 2, rel=1e-8)


def test_picard_converges_geometrically(problem, solver):
    sol = picard_solve(problem, solver=solver)
    assert sol.residuals[-1] < 1e-8 and sol.iterations <= 30
    assert max(sol.rates) <= sol.contraction + 0.05
    # the result is a fixed point of u = linear part + Phi(u)
    lin = solver.linear_part()[1].values
    again = lin + solver.phi(sol.solution.values)[1]
    assert solver.vnorm(again - sol.solution.values) < 1e-7 * solver.vnorm(sol.solution.values)
    rep = solution_bounds_check(sol, problem, solver)
    assert math.isfinite(rep.energy_constant) and math.isfinite(rep.strichartz_constant)
    assert rep.terms["u0_l2"] == pytest.approx(math.pi ** 0.75, rel=1e-9)


def test_refuses_large_potential(problem):
    with pytest.raises(ContractionError):
        picard_solve(problem, contraction=1.5)


def test_real_potential_conserves_mass(problem):
    # i u_t + D u + V u = 0 with real V keeps ||u(t)||_2 fixed
    dev = mass_deviation(replace(problem, eps=0.05), factors=(1.0, 0.5))
    assert [e for e, _ in dev] == [0.05, 0.025]
    assert max(d for _, d in dev) < 1e-8 * math.pi ** 0.75
