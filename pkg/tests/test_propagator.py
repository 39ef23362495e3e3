import math

import numpy as np
import pytest

from fracstrich.errors import HypothesisError, ResolutionError
from fracstrich.propagator import (SpaceTimeField, TimeGrid, duhamel, evolve, evolve_spectrum,
                                   fractional_laplacian, free_gaussian_evolution, phi, project, spectrum)
from fracstrich.radial import (RadialGrid, RadialProfile, SpectralProfile, default_rho_grid, hankel_inverse,
                               l2_norm)
from fracstrich.suites import manufactured_duhamel


def gauss_profile(n=3, r_max=24.0, panel=0.125):
    grid = RadialGrid(r_max, panel)
    return RadialProfile(n, grid, np.exp(-grid.nodes ** 2 / 2))


def test_cutoff_partition_of_unity():
    t = np.geomspace(1e-3, 1e3, 1000)
    total = sum(phi(t / 2.0 ** k) for k in range(-12, 13))
    assert np.max(np.abs(total - 1)) < 1e-10
    assert np.all(phi(np.array([0.5, 2.0, 0.3, 3.0])) == 0)


def test_time_zero_is_identity():
    f = gauss_profile()
    u = evolve(f, 0.0, 2.0)
    assert np.max(np.abs(u.values - f.values)) < 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_gaussian_closed_form(n):
    f = gauss_profile(n)
    for t in (0.25, 0.5):
        u = evolve(f, t, 2.0)
        exact = free_gaussian_evolution(f.grid.nodes, t, n)
        assert np.max(np.abs(u.values - exact)) < 1e-8


@pytest.mark.parametrize("a", [1.5, 2.0, 3.0])
def test_unitarity(a):
    f = gauss_profile()
    rho = default_rho_grid(f.grid)
    g = spectrum(f, rho)
    u = evolve_spectrum(3, g, rho, f.grid, np.array([0.02, 0.05, 0.1]), a)
    assert np.max(np.abs(u.l2_per_time() / l2_norm(f) - 1)) < 1e-8


def test_group_property():
    f = gauss_profile()
    rho = default_rho_grid(f.grid)
    g = spectrum(f, rho)
    two = evolve_spectrum(3, g * np.exp(0.3j * rho.nodes ** 1.5), rho, f.grid, 0.4, 1.5)
    one = evolve_spectrum(3, g, rho, f.grid, 0.7, 1.5)
    assert np.max(np.abs(two.values - one.values)) < 1e-12


def test_fractional_laplacian_a2():
    f = gauss_profile()
    r = f.grid.nodes
    lap = fractional_laplacian(f, 2.0)
    assert np.max(np.abs(lap.values - (3 - r ** 2) * np.exp(-r ** 2 / 2))) < 1e-8


def test_projections_sum_to_identity():
    # spectrum supported in [1/4, 4]: the pieces k = -3..3 recover f
    rho = RadialGrid(16.0, 2 ** -3)
    x = rho.nodes
    inside = (x > 0.25) & (x < 4)
    g = np.zeros_like(x)
    g[inside] = np.exp(-8 * np.log2(x[inside]) ** 2)
    grid = RadialGrid(48.0, 0.125)
    f = hankel_inverse(SpectralProfile(3, rho, g), grid)
    total = sum(project(f, k, rho).values for k in range(-3, 4))
    assert np.sqrt(np.sum(np.abs(total - f.values) ** 2)) < 1e-8 * np.sqrt(np.sum(np.abs(f.values) ** 2))


def test_guards():
    f = gauss_profile()
    with pytest.raises(ResolutionError):
        evolve(f, 1e4, 2.0)
    with pytest.raises(HypothesisError):
        evolve(f, 1.0, 1.0)


def test_cumulative_rules():
    for tg in (TimeGrid.graded(3.0, levels=6, order=8, symmetric=True), TimeGrid.simpson(3.0, 600, True)):
        got = tg.cumulative(np.cos(tg.nodes))
        assert np.max(np.abs(got - np.sin(tg.nodes))) < 1e-9


def test_duhamel_without_forcing_is_free_evolution():
    f = gauss_profile(r_max=16.0)
    tg = TimeGrid.graded(1.0, levels=4, order=8)
    F = SpaceTimeField(3, f.grid, tg, np.zeros((f.grid.size, tg.size)))
    u = duhamel(f, F, 2.0)
    free = evolve(f, tg, 2.0)
    assert np.max(np.abs(u.values - free.values)) < 1e-12


def test_manufactured_solution():
    assert manufactured_duhamel(3) < 1e-4


def test_field_csv_round_trip(tmp_path):
    grid = RadialGrid(2.0, 0.5)
    tg = TimeGrid.simpson(1.0, 4)
    vals = np.outer(grid.nodes, 1 + 1j * tg.nodes)
    u = SpaceTimeField(2, grid, tg, vals)
    u.to_csv(tmp_path / "u.csv")
    back = SpaceTimeField.from_csv(tmp_path / "u.csv", 2, grid, tg)
    assert np.array_equal(back.values, vals)


def test_closed_form_formula():
    # t = 0 reduces to the datum; modulus follows from completing the square
    r = np.linspace(0, 5, 11)
    assert np.allclose(free_gaussian_evolution(r, 0.0, 3), np.exp(-r ** 2 / 2))
    t = 0.5
    mod = np.abs(free_gaussian_evolution(r, t, 3))
    ref = (1 + 4 * t * t) ** -0.75 * np.exp(-r ** 2 / (2 * (1 + 4 * t * t)))
    assert np.allclose(mod, ref, rtol=1e-13)
    assert math.isclose(float(mod[0]), (1 + 4 * t * t) ** -0.75)
