import math

import mpmath
import numpy as np
import pytest

from fracstrich.specfun import (BesselOrder, bessel_error, bessel_j, bessel_leading, bessel_scaled,
                                envelope_constant, remainder_slope_scan, second_term_coefficient)

mpmath.mp.dps = 40

ORDERS = [0.0, 0.5, 1.0, 1.5, 2.0, 3.7]
POINTS = [1e-3, 0.5, 5.0, 11.9, 12.1, 30.0, 200.0, 1000.0]


@pytest.mark.parametrize("nu", ORDERS)
def test_bessel_j_matches_mpmath(nu):
    # the branch crossover at r = 12 is the least accurate point (~1e-12)
    r = np.array(POINTS)
    got = bessel_j(nu, r)
    ref = np.array([float(mpmath.besselj(nu, x)) for x in r])
    assert np.all(np.abs(got - ref) <= 1e-12 * np.maximum(1.0, np.abs(ref)))


def test_scaled_at_origin():
    for nu in ORDERS:
        assert bessel_scaled(nu, 0.0) == pytest.approx(1 / (2 ** nu * math.gamma(nu + 1)), rel=1e-14)


def test_remainder_against_extended_precision():
    for nu in (0.0, 1.0, 2.0):
        for r in (20.0, 50.0, 300.0):
            w = mpmath.mpf(r) - nu * mpmath.pi / 2 - mpmath.pi / 4
            lead = mpmath.sqrt(2 / (mpmath.pi * r)) * mpmath.cos(w) \
                - (nu ** 2 - 0.25) * mpmath.sin(w) / (mpmath.sqrt(2 * mpmath.pi) * mpmath.mpf(r) ** 1.5)
            ref = float(mpmath.besselj(nu, r) - lead)
            assert bessel_error(nu, r) == pytest.approx(ref, abs=2e-15)
            assert bessel_leading(nu, r) == pytest.approx(float(lead), abs=1e-15)


def test_half_integer_remainders_vanish():
    r = np.geomspace(2, 500, 40)
    for nu in (0.5, 1.5):
        assert np.max(np.abs(bessel_error(nu, r))) < 1e-13


def test_second_coefficient_is_gamma_ratio():
    for nu in ORDERS:
        ref = (nu - 0.5) * math.gamma(nu + 1.5) / math.gamma(nu + 0.5)
        assert second_term_coefficient(nu) == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_slope_scan_integer_orders():
    for nu in (0.0, 1.0, 2.0):
        rep = remainder_slope_scan(BesselOrder(nu), 10, 1000, 64)
        assert -2.6 <= rep.slope <= -2.4
        assert rep.samples == 64


def test_slope_scan_flags_terminating_series():
    rep = remainder_slope_scan(1.5, 10, 1000, 64)
    assert "identically zero" in rep.flags
    assert math.isnan(rep.slope)


def test_envelope_constant_bounded():
    r = np.geomspace(1e-2, 1e3, 2000)
    for n in (2, 3, 4):
        c = envelope_constant(n, r)
        assert 0.5 < c < 1.5


def test_input_validation():
    with pytest.raises(ValueError):
        BesselOrder(-1)
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        bessel_leading(0, 0.5)
    with pytest.raises(ValueError):
        remainder_slope_scan(0, 10, 1000, 4)
    assert BesselOrder.from_dimension(3).nu == 0.5
