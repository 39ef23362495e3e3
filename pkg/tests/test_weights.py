import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from fracstrich.errors import HypothesisError, SingularSamplingError
from fracstrich.weights import (CubeLattice, DilatingPowerWeight, McParams, SeparableWeight, SpatialBump,
                                SpatialConstant, SpatialPower, TabulatedWeight, TemporalPower, a1_constant,
                                a2_constant, bump_weight, constant_weight, default_x_grid, global_lp_norm,
                                growth_flag, maximal_function, mc_norm, power_weight, scaled_lattice,
                                spatial_cube_integrals)

LAT = CubeLattice(-2, 2, 1, 1)


def test_cube_integral_of_bump_against_tplquad():
    u = SpatialBump(1.0)
    center = np.array([0.25, 0.0, 0.125])
    got = spatial_cube_integrals(u, 2.0, 3, 1.0, center[None, :])[0]
    lo, hi = center - 0.5, center + 0.5
    ref, _ = integrate.tplquad(lambda z, y, x: float(u(np.array([math.sqrt(x * x + y * y + z * z)]))[0]) ** 2,
                               lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], epsabs=1e-11, epsrel=1e-10)
    assert got == pytest.approx(ref, rel=1e-7)


def test_cube_integral_of_singular_power_in_polar_form():
    # int over [-1/2, 1/2]^2 of |x|^-g = 8 int_0^{pi/4} (2 cos th)^(g-2) / (2-g) d th, and side^(2-g) scaling
    g = 1.2
    ref = 8 * integrate.quad(lambda th: (2 * math.cos(th)) ** (g - 2) / (2 - g), 0, math.pi / 4)[0]
    for side in (0.5, 1.0, 4.0):
        got = spatial_cube_integrals(SpatialPower(g), 1.0, 2, side, np.zeros((1, 2)))[0]
        assert got == pytest.approx(ref * side ** (2 - g), rel=1e-8)


def test_time_power_integral():
    v = TemporalPower(0.4, horizon=3.0)
    got = v.integral_p(np.array([-1.0]), np.array([5.0]), 2.0)[0]
    ref = integrate.quad(lambda t: abs(t) ** -0.8, -1, 0)[0] + integrate.quad(lambda t: t ** -0.8, 0, 3)[0]
    assert got == pytest.approx(ref, rel=1e-10)
    with pytest.raises(SingularSamplingError):
        TemporalPower(0.6).integral_p(np.array([-1.0]), np.array([1.0]), 2.0)


def test_parameter_window():
    with pytest.raises(HypothesisError):
        McParams(2.0, 3.0, 2.0, 3)
    with pytest.raises(HypothesisError):
        McParams(2.0, 0.5, 2.0, 3)
    McParams(2.0, 2.5, 2.0, 3)


def test_constant_weight_grows():
    res = mc_norm(constant_weight(), McParams(2.0, 2.0, 2.0, 3), LAT)
    # the radial cube rule integrates constants to ~1e-10
    assert res.per_scale == pytest.approx([2.0 ** (2 * m) for m in LAT.scales], rel=1e-9)
    assert res.growth


def test_growth_flag():
    assert not growth_flag([1, 2, 1])
    assert growth_flag([1, 2, 3])
    assert growth_flag([3, 2, 1])
    assert not growth_flag([1, 1, 1])


@pytest.mark.parametrize("w", [power_weight(1.2, 0.4), DilatingPowerWeight(1.2, 0.4, 2.0),
                               bump_weight(1.0, 1.0)])
def test_scaling_identity(w):
    params = McParams(2.0, 2.0, 2.0, 3)
    base = mc_norm(w, params, LAT).value
    for k in (-1, 1):
        lam = 2.0 ** -k
        other = mc_norm(w.dilate(lam, 2.0), params, scaled_lattice(LAT, k, 2.0)).value
        assert other * lam ** 2.0 == pytest.approx(base, rel=1e-12)


def test_power_weight_is_scale_invariant():
    res = mc_norm(power_weight(1.2, 0.4), McParams(2.0, 2.0, 2.0, 3), LAT)
    assert np.ptp(res.per_scale) < 1e-12 * max(res.per_scale)
    assert not res.growth


def test_monotone_in_p_cube_by_cube():
    w = bump_weight(1.0, 1.0)
    hi = mc_norm(w, McParams(2.0, 2.0, 2.0, 3), LAT, keep_cubes=True)
    lo = mc_norm(w, McParams(2.0, 1.25, 2.0, 3), LAT, keep_cubes=True)
    for m in LAT.scales:
        assert np.all(lo.cube_values[m] <= hi.cube_values[m] * (1 + 1e-12))


def test_global_norm_against_mpmath():
    w = bump_weight(2.0, 3.0)
    p = 2.5
    xs = mpmath.quad(lambda r: mpmath.exp(p * (1 - 1 / (1 - (r / 2) ** 2))) * r ** 2, [0, 2])
    ts = mpmath.quad(lambda t: mpmath.exp(p * (1 - 1 / (1 - (t / 3) ** 2))), [-3, 0, 3])
    ref = float((4 * mpmath.pi * xs * ts) ** (1 / p))
    assert global_lp_norm(w, p, 3) == pytest.approx(ref, rel=1e-9)


def test_endpoint_matches_global_norm():
    w = bump_weight(1.0, 1.0)
    val = mc_norm(w, McParams(2.0, 2.5, 2.0, 3), CubeLattice(-2, 3)).value
    assert val == pytest.approx(global_lp_norm(w, 2.5, 3), rel=0.05)


def test_maximal_function_dominates():
    x = default_x_grid(1e-2, 1e2, 4)
    for w in (power_weight(1.2, 0.4), bump_weight(1.0, 1.0)):
        ms = maximal_function(w, 1.5, x, 0.5, 3)
        assert np.all(ms(x) >= w.slice(0.5)(x))
    const = maximal_function(constant_weight(2.0), 1.5, x, 0.0, 3)
    assert np.allclose(const(x), 2.0, rtol=1e-7)


def test_maximal_of_power_is_proportional():
    x = default_x_grid(1e-2, 1e2, 4)
    u = SpatialPower(1.0)
    ratio = maximal_function(u, 1.5, x, n=3)(x) / u(x)
    assert np.ptp(ratio) < 1e-8 * ratio.max()
    assert ratio.min() > 1


def test_a2_and_a1_constants():
    lat = CubeLattice(-2, 2)
    assert a2_constant(SpatialConstant(3.0), lat, 3).value == pytest.approx(1.0, rel=1e-8)
    c = a2_constant(SpatialPower(1.0), lat, 3)
    assert 1 < c.value < 10 and not c.growth
    x = default_x_grid(1e-2, 1e2, 4)
    assert a1_constant(SpatialConstant(1.0), x, 3).value == pytest.approx(1.0, rel=1e-7)
    assert 1 < a1_constant(SpatialPower(1.0), x, 3).value < 10


def test_dilating_weight_slices():
    w = DilatingPowerWeight(1.0, 0.3, 2.0)
    r = np.array([0.5, 1.0, 3.0])
    for t in (0.25, 4.0):
        assert np.allclose(w.slice(t)(r), w(r, np.array([t]))[:, 0], rtol=1e-14)


def test_separable_parts_and_tabulated_round_trip(tmp_path):
    w = power_weight(1.0, 0.5)
    assert isinstance(w, SeparableWeight)
    r = np.array([0.5, 2.0])
    t = np.array([1.0, 4.0])
    assert np.allclose(w(r, t), np.outer(r ** -1.0, t ** -0.5))
    tab = TabulatedWeight(r, t, w(r, t))
    tab.to_csv(tmp_path / "w.csv")
    back = TabulatedWeight.from_csv(tmp_path / "w.csv")
    assert np.allclose(back(r, t), tab(r, t), rtol=1e-15)
