import math

import numpy as np
import pytest
from scipy import integrate

from fracstrich import estimates as est
from fracstrich.errors import HypothesisError
from fracstrich.estimates import (EstimateParams, Resolution, brute_force, extremizer_search,
                                  gaussian_width_family, homogeneous_ratio, make_setup, morawetz_exponents,
                                  morawetz_ratio, scaling_check, sweep_points, weight_support,
                                  window_points)
from fracstrich.radial import AnalyticProfile, gaussian
from fracstrich.weights import CubeLattice, McParams, bump_weight, mc_norm, power_weight

LAT = CubeLattice(-2, 2, extent_x=1, extent_t=1)
PARAMS = EstimateParams(3, 2.0, 0.0, 2.25)


def bump(x, R):
    x = abs(x) / R
    return math.exp(1 - 1 / (1 - x * x)) if x < 1 else 0.0


def test_lhs_and_rhs_against_closed_form():
    # |e^{it(-Delta)} e^{-r^2/2}|^2 = (1 + 4t^2)^{-3/2} exp(-r^2 / (1 + 4t^2)) in n = 3
    w = bump_weight(1.0, 1.0)
    rep = homogeneous_ratio(gaussian(1.0), w, PARAMS, LAT)

    def dens(r, t):
        s = 1 + 4 * t * t
        return 4 * math.pi * r * r * bump(r, 1.0) * bump(t, 1.0) * s ** -1.5 * math.exp(-r * r / s)
    ref = integrate.dblquad(dens, -1, 1, 0, 1, epsabs=1e-13, epsrel=1e-11)[0]
    assert rep.lhs == pytest.approx(math.sqrt(ref), rel=1e-7)
    mc = mc_norm(w, McParams(2.0, 2.25, 2.0, 3), LAT).value
    assert rep.rhs == pytest.approx(math.sqrt(mc) * math.pi ** 0.75, rel=1e-9)
    assert rep.ratio == pytest.approx(rep.lhs / rep.rhs, rel=1e-15)


def test_windows_and_points():
    for a in (1.75, 2.0, 2.5):
        for s in (0.0, 0.25):
            for p in window_points(3, a, s):
                assert EstimateParams(3, a, s, p).windows()["sobolev" if s else "homogeneous"]
    assert len(sweep_points()) == 12
    with pytest.raises(HypothesisError):
        EstimateParams(3, 1.0)
    with pytest.raises(HypothesisError):
        homogeneous_ratio(gaussian(1.0), bump_weight(), EstimateParams(3, 2.0, 0.0, 1.5), LAT)


def test_report_only_flags_outside_window():
    rep = homogeneous_ratio(gaussian(1.0), bump_weight(), EstimateParams(3, 2.0, 0.0, 1.5), LAT,
                            report_only=True)
    assert "outside:homogeneous" in rep.flags and math.isfinite(rep.ratio)


def test_zero_datum_is_guarded():
    zero = AnalyticProfile(lambda r: 0.0 * r, "zero")
    with pytest.raises(ValueError):
        homogeneous_ratio(zero, bump_weight(), PARAMS, LAT)


def test_dyadic_scaling_invariance():
    w = power_weight(1.2, 0.4)
    base, other, delta = scaling_check(gaussian(1.0), w, PARAMS, CubeLattice(-1, 1, 1, 1))
    assert delta < 1e-3
    assert base.ratio > 0


def test_lazy_field_matches_dense(monkeypatch):
    f, w = gaussian(1.0), power_weight(1.2, 0.4)
    setup = make_setup([f], 3, 2.0, Resolution(t_max=2.0))
    est.clear_caches()
    dense = homogeneous_ratio(f, w, PARAMS, LAT, setup=setup)
    est.clear_caches()
    monkeypatch.setattr(est, "FIELD_BYTES", 1)
    lazy = homogeneous_ratio(f, w, PARAMS, LAT, setup=setup)
    assert isinstance(est.free_field(f, setup)[1], est.LazyField)
    est.clear_caches()
    assert lazy.ratio == pytest.approx(dense.ratio, rel=1e-12)


def test_morawetz_exponents_and_unweighted_rhs():
    ax, bt = morawetz_exponents(3, 2.0, 4.5, 1.0 + 0.5 * (5 / 4.5 - 1.0))
    assert ax + 2.0 * bt == pytest.approx(1.0)
    # p b >= n throughout the n = 3 window, so a time factor is always present
    ax, bt = morawetz_exponents(3, 2.0, 2.0, 2.25)
    assert bt > 0 and ax + 2.0 * bt == pytest.approx(1.0)
    assert morawetz_exponents(4, 2.0, 2.0, 1.5) == (1.0, 0.0)
    p = 2.25
    rep = morawetz_ratio(gaussian(1.0), 2.0, EstimateParams(3, 2.0, 0.0, p))
    # b = a: the rhs is the plain L^2 norm of the datum
    assert rep.rhs == pytest.approx(rep.extra["l2"], rel=1e-12)
    assert rep.rhs == pytest.approx(math.pi ** 0.75, rel=1e-9)


def test_extremizer_is_deterministic_and_beats_grid():
    w = bump_weight(1.0, 1.0)
    fam = gaussian_width_family(w)
    lat = CubeLattice(-1, 1, 1, 1)
    r1 = extremizer_search(fam, PARAMS, lat, restarts=2, per_restart=10, seed=3)
    r2 = extremizer_search(fam, PARAMS, lat, restarts=2, per_restart=10, seed=3)
    assert r1.trace == r2.trace and r1.best_ratio == r2.best_ratio
    assert r1.evaluations == len(r1.trace) <= 20
    setup = make_setup(fam.setup_profiles(), 3, 2.0, support=weight_support(w))
    grid = brute_force(fam, PARAMS, lat, np.linspace(-1, 1, 5), setup)
    assert r1.best_ratio >= 0.99 * grid.max()
