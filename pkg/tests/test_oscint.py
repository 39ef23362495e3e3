import math

import numpy as np
import pytest
from scipy import integrate, special

from fracstrich.errors import HypothesisError, ResolutionError
from fracstrich.oscint import (DyadicAnnulusPair, OscIntegrand, amplitude_l1, annulus, band_limited_noise,
                               check_support, in_annulus, kernel_K, kernel_decay_scan, osc_integral,
                               panel_count, phi_squared, predicted_exponent, tk_norm_direct,
                               tk_norm_plancherel, tk_operator_norm, vdc_scan)


def quad_complex(func, lo, hi, limit=800):
    re = integrate.quad(lambda x: func(x).real, lo, hi, limit=limit, epsabs=1e-13, epsrel=1e-12)[0]
    im = integrate.quad(lambda x: func(x).imag, lo, hi, limit=limit, epsabs=1e-13, epsrel=1e-12)[0]
    return complex(re, im)


def phi2(x):
    return float(phi_squared(np.array([x]))[0])


@pytest.mark.parametrize("R,t,a,sign", [(16.0, 3.0, 2.0, 1), (16.0, 3.0, 2.0, -1), (40.0, -5.0, 1.5, 1),
                                        (8.0, 0.0, 3.0, 1)])
def test_osc_integral_against_adaptive_quadrature(R, t, a, sign):
    got = osc_integral(OscIntegrand(R=R, t=t, a=a, sign=sign))
    ref = quad_complex(lambda x: np.exp(1j * (sign * R * x + t * x ** a)) * phi2(x), 0.5, 2.0)
    assert abs(got - ref) < 1e-9 * amplitude_l1(phi_squared)


def test_support_and_hypothesis_checks():
    with pytest.raises(ValueError):
        check_support(lambda x: np.ones_like(x))
    with pytest.raises(HypothesisError):
        OscIntegrand(a=1.0)
    with pytest.raises(ResolutionError):
        panel_count(1e9)
    assert panel_count(0.0) == 48


def test_annuli():
    assert annulus(0) == (0.0, 1.0) and annulus(3) == (4.0, 8.0)
    x = np.array([0.0, 0.5, 1.0, 3.999, 4.0])
    assert in_annulus(x, 0).tolist() == [False, True, False, False, False]
    assert in_annulus(x, 3).tolist() == [False, False, False, False, True]
    with pytest.raises(ValueError):
        DyadicAnnulusPair(-1, 0)


@pytest.mark.parametrize("n", [2, 3])
def test_kernel_against_quadrature(n):
    nu = (n - 2) / 2
    pair = DyadicAnnulusPair(1, 2)
    r, lam, t = 3.0, 1.5, 0.7

    def integrand(x):
        return (np.exp(1j * t * x * x) * special.jv(nu, r * x) * special.jv(nu, lam * x) * x * phi2(x)
                * r ** -nu * lam ** -nu)
    ref = quad_complex(integrand, 0.5, 2.0)
    got = kernel_K(pair, r, lam, t, 2.0, n)
    assert abs(got - ref) < 1e-10 * max(1.0, abs(ref))
    # outside the annuli the kernel vanishes
    assert kernel_K(pair, 1.5, 1.5, t, 2.0, n) == 0


def test_kernel_symmetries():
    p = DyadicAnnulusPair(1, 3)
    a = kernel_K(p, 5.0, 1.25, 2.0)
    assert kernel_K(p.swapped(), 1.25, 5.0, 2.0) == pytest.approx(a, rel=1e-13)
    assert kernel_K(p, 5.0, 1.25, -2.0) == pytest.approx(np.conj(a), rel=1e-13)


def test_predicted_exponent():
    assert predicted_exponent(DyadicAnnulusPair(3, 3), 2) == -3.0
    assert predicted_exponent(DyadicAnnulusPair(2, 3), 3) == -5.0
    assert predicted_exponent(DyadicAnnulusPair(1, 5), 2) == pytest.approx(-3 * 6 / 4 - 1)


def test_tk_plancherel_against_direct_quadrature():
    h = band_limited_noise(np.random.default_rng(1))
    for k in (0, 2):
        fast = tk_norm_plancherel(h, k, 2.0, 2)
        slow = tk_norm_direct(h, k, 2.0, 2)
        assert fast == pytest.approx(slow, rel=1e-4)


def test_tk_power_iteration_is_lower_bound():
    for k in (1, 4):
        est = tk_operator_norm(k, 2.0, 2, trials=8)
        assert est.norm <= est.exact * (1 + 1e-12)
        assert est.norm >= 0.95 * est.exact


def test_vdc_slope_a2():
    rep = vdc_scan(a=2.0, R_list=2.0 ** np.arange(4, 12))
    assert -0.6 <= rep.slope <= -0.4


def test_small_kernel_scan():
    pairs = [DyadicAnnulusPair(j, j) for j in range(1, 5)] + [DyadicAnnulusPair(0, 3), DyadicAnnulusPair(3, 0)]
    scan = kernel_decay_scan(2.0, 2, pairs, per_octave=16, t_per_octave=8)
    assert len(scan.rows) == 6
    assert scan.rows[4].value == pytest.approx(scan.rows[5].value)
    assert math.isfinite(scan.constant) and scan.constant > 0
