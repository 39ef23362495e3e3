import math

import numpy as np
import pytest
from scipy import integrate, special

from fracstrich.errors import ResolutionError
from fracstrich.radial import (RadialGrid, RadialProfile, default_rho_grid, gaussian, hankel_forward,
                               hankel_inverse, l2_norm, sobolev_norm, spectral_l2_norm, sphere_area,
                               transform_matrix)


def profile(n, func, r_max=16.0, panel=0.25):
    grid = RadialGrid(r_max, panel)
    return RadialProfile(n, grid, func(grid.nodes))


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_grid_integrates_polynomials():
    g = RadialGrid(4.0, 0.5)
    assert np.sum(g.weights * g.nodes ** 5) == pytest.approx(4.0 ** 6 / 6, rel=1e-14)
    graded = RadialGrid(4.0, 0.5, grading=20)
    assert graded.weights.sum() == pytest.approx(4.0, rel=1e-12)
    assert np.all(np.diff(graded.nodes) > 0) and graded.nodes[0] > 0 and np.all(graded.weights > 0)
    with pytest.raises(ValueError):
        RadialGrid(1.0, 0.3)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_gaussian_transform_closed_form(n):
    s = 1.3
    f = profile(n, lambda r: np.exp(-r ** 2 / (2 * s ** 2)), r_max=20.0, panel=0.25)
    rho = default_rho_grid(f.grid)
    g = hankel_forward(f, rho)
    exact = (2 * math.pi) ** (n / 2) * s ** n * np.exp(-(s * rho.nodes) ** 2 / 2)
    assert np.max(np.abs(g.values - exact)) < 1e-11 * exact.max()


def test_transform_against_sine_transform():
    # n = 3: f^(rho) = (4 pi / rho) int f(r) sin(r rho) r dr, oracle by adaptive quadrature
    n = 3
    f = profile(n, lambda r: 1 / np.cosh(r), r_max=48.0, panel=0.125)
    rho = RadialGrid(8.0, 0.25)
    g = hankel_forward(f, rho)
    for i in (0, 40, 80, 120):
        p = rho.nodes[i]
        val, _ = integrate.quad(lambda r: r / np.cosh(r), 0, 60, weight="sin", wvar=p, limit=400)
        assert g.values[i].real == pytest.approx(4 * math.pi / p * val, rel=1e-8)


def test_bessel_kernel_against_scipy():
    rho = RadialGrid(4.0, 0.5)
    r = RadialGrid(8.0, 0.5)
    M = transform_matrix(2, rho.nodes, r.nodes)
    assert np.allclose(M, special.j0(np.multiply.outer(rho.nodes, r.nodes)), rtol=0, atol=1e-12)


def test_matrix_shared_under_dyadic_dilation():
    rho = RadialGrid(4.0, 0.5)
    r = RadialGrid(8.0, 0.5)
    M1 = transform_matrix(3, rho.nodes, r.nodes)
    M2 = transform_matrix(3, 2 * rho.nodes, r.nodes / 2)
    assert M1 is M2


@pytest.mark.parametrize("n", [2, 3])
def test_plancherel_and_round_trip(n):
    f = profile(n, lambda r: (1 + r ** 2) * np.exp(-r ** 2 / 2) + 0j)
    rho = default_rho_grid(f.grid)
    g = hankel_forward(f, rho)
    assert spectral_l2_norm(g) == pytest.approx(l2_norm(f), rel=1e-12)
    back = hankel_inverse(g, f.grid)
    assert np.max(np.abs(back.values - f.values)) < 1e-10


def test_norms_closed_form():
    n = 3
    f = profile(n, lambda r: np.exp(-r ** 2 / 2))
    assert l2_norm(f) == pytest.approx(math.pi ** (n / 4), rel=1e-13)
    assert sobolev_norm(f, 0) == pytest.approx(l2_norm(f), rel=1e-12)
    assert sobolev_norm(f, 1) == pytest.approx(math.sqrt(n / 2 * math.pi ** (n / 2)), rel=1e-12)


def test_resolution_check():
    f = profile(3, lambda r: np.exp(-r ** 2), r_max=16.0, panel=1.0)
    with pytest.raises(ResolutionError):
        hankel_forward(f, RadialGrid(16.0, 0.5))


def test_profile_csv_round_trip(tmp_path):
    f = profile(2, lambda r: np.exp(-r) * (1 + 1j * r), r_max=4.0, panel=0.5)
    f.to_csv(tmp_path / "f.csv")
    g = RadialProfile.from_csv(tmp_path / "f.csv", 2, f.grid)
    assert np.array_equal(g.values, f.values)


def test_analytic_tail_mass():
    R = 3.0
    ref = R * math.exp(-R * R) / 2 + math.sqrt(math.pi) / 4 * math.erfc(R)
    assert gaussian(1.0).tail_mass(R, 3) == pytest.approx(ref, rel=1e-9)
