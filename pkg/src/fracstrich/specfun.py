"""Bessel functions of the first kind and the two-term large-argument expansion.

J_nu is evaluated with two branches:

* the ascending series, summed in extended precision, for r <= max(12, 2 nu);
* the Hankel asymptotic series for larger r, truncated at its smallest term.

At the crossover r = 12 the smallest asymptotic term is ~1e-11, so the two
branches agree to better than 1e-10 there.  The remainder

    E_nu(r) = J_nu(r) - sqrt(2/(pi r)) cos(w) + (nu^2 - 1/4) sin(w) / (sqrt(2 pi) r^(3/2)),
    w = r - nu pi/2 - pi/4,

is what the scans below measure.  For nu = 1/2 and nu = 3/2 the Hankel series
terminates after the first two terms, so E_nu vanishes identically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fitting import FitReport, loglog_fit

SERIES_CROSSOVER = 12.0
_ASYMPTOTIC_TERMS = 40


@dataclass(frozen=True)
class BesselOrder:
    """Order nu >= 0 of J_nu."""

    nu: float

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu >= 0):
            raise ValueError(f"Bessel order must be finite and >= 0, got {self.nu}")

    @classmethod
    def from_dimension(cls, n):
        """The order (n-2)/2 attached to radial analysis in R^n."""
        if int(n) != n or n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {n}")
        return cls((n - 2) / 2)


def _nu(order):
    return order.nu if isinstance(order, BesselOrder) else BesselOrder(float(order)).nu


def _as_array(r):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite argument")
    return r


def crossover(nu):
    return max(SERIES_CROSSOVER, 2.0 * nu)


def _series_scaled(nu, z):
    """J_nu(z) / z^nu from the ascending series.

    For z <= 6 the terms never exceed ~20 in size and double precision is
    enough; beyond that the sum is accumulated in long double to absorb the
    cancellation between terms of size up to ~4e3 at z = 12.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape)
    low = z <= 6.0
    for mask, dtype, nterms in ((low, np.float64, 26), (~low, np.longdouble, 44 + int(2 * nu))):
        if not mask.any():
            continue
        zz = z[mask].astype(dtype)
        q = -(zz * zz) / 4
        nul = dtype(nu)
        term = np.full(zz.shape, 1 / (dtype(2) ** nul * dtype(math.gamma(nu + 1))))
        total = term.copy()
        for k in range(nterms):
            term = term * q / ((k + 1) * (k + 1 + nul))
            total += term
        out[mask] = total.astype(float)
    return out


def _hankel_coefficients(nu, count):
    """a_k(nu) = prod_{m<=k} (4 nu^2 - (2m-1)^2) / (k! 8^k)."""
    mu = 4.0 * nu * nu
    a = np.empty(count)
    a[0] = 1.0
    for k in range(1, count):
        a[k] = a[k - 1] * (mu - (2 * k - 1) ** 2) / (8.0 * k)
    return a


_BAND_EDGES = (12.0, 14.0, 17.0, 22.0, 30.0, 45.0, 80.0, 200.0, 1e3, np.inf)


def _terms_needed(a, lo):
    """Number of Hankel terms to keep for arguments >= lo.

    Stop once terms drop below 1e-17, or at the smallest term if the series
    never gets there (only near the crossover).
    """
    mags = np.abs(a) / lo ** np.arange(a.size)
    if np.any(a[1:] == 0):
        return int(np.argmax(a == 0))
    k_min = int(np.argmin(mags))
    small = np.nonzero(mags[:k_min + 1] < 1e-17)[0]
    return int(small[0]) if small.size else k_min + 1


def _asymptotic(nu, r):
    """Hankel expansion of J_nu(r), truncated no later than its smallest term."""
    a = _hankel_coefficients(nu, _ASYMPTOTIC_TERMS)
    signs = np.array([1.0 if (k // 2) % 2 == 0 else -1.0 for k in range(a.size)])
    r = np.asarray(r, dtype=float)
    P = np.empty(r.shape)
    Q = np.empty(r.shape)
    for lo, hi in zip(_BAND_EDGES[:-1], _BAND_EDGES[1:]):
        mask = (r >= lo) & (r < hi) if lo > _BAND_EDGES[0] else (r < hi)
        if not mask.any():
            continue
        K = max(_terms_needed(a, max(lo, r[mask].min())), 2)
        x = 1.0 / r[mask]
        x2 = x * x
        # Horner in 1/r^2 for the even (P) and odd (Q) parts
        p = np.zeros(x.shape)
        q = np.zeros(x.shape)
        for k in range(K - 1, -1, -1):
            if k % 2 == 0:
                p = p * x2 + signs[k] * a[k]
            else:
                q = q * x2 + signs[k] * a[k]
        P[mask] = p
        Q[mask] = q * x
    theta = nu * np.pi / 2 + np.pi / 4
    c, s = np.cos(r), np.sin(r)
    cw = c * math.cos(theta) + s * math.sin(theta)
    sw = s * math.cos(theta) - c * math.sin(theta)
    return np.sqrt(2.0 / (np.pi * r)) * (P * cw - Q * sw)


def bessel_j(order, r):
    """J_nu(r) for real r >= 0 (vectorized).

    Negative arguments are rejected since the radial code never needs them.
    """
    nu = _nu(order)
    r = _as_array(r)
    if np.any(r < 0):
        raise ValueError("bessel_j requires r >= 0")
    out = np.empty(r.shape)
    small = r <= crossover(nu)
    if small.any():
        z = r[small]
        out[small] = (_series_scaled(nu, z) * np.asarray(z, np.longdouble) ** nu).astype(float)
    if (~small).any():
        out[~small] = _asymptotic(nu, r[~small])
    return out if out.ndim else float(out)


def bessel_scaled(order, z):
    """Lambda_nu(z) = J_nu(z) / z^nu, finite and smooth at z = 0."""
    nu = _nu(order)
    z = _as_array(z)
    z = np.abs(z)
    out = np.empty(z.shape)
    small = z <= crossover(nu)
    if small.any():
        out[small] = _series_scaled(nu, z[small]).astype(float)
    if (~small).any():
        zz = z[~small]
        out[~small] = _asymptotic(nu, zz) / zz ** nu
    return out if out.ndim else float(out)


def second_term_coefficient(nu):
    """(nu - 1/2) Gamma(nu + 3/2) / Gamma(nu + 1/2), reduced to nu^2 - 1/4.

    The Gamma ratio collapses through Gamma(x + 1) = x Gamma(x), so no
    Gamma evaluation (and no rounding from one) enters the remainder.
    """
    return (nu - 0.5) * (nu + 0.5)


def _check_lemma_range(r):
    r = _as_array(r)
    if np.any(r <= 1):
        raise ValueError("the two-term expansion is only used for r > 1")
    return r


def bessel_leading(order, r):
    """Two leading terms of the large-argument expansion of J_nu."""
    nu = _nu(order)
    r = _check_lemma_range(r)
    w = r - nu * np.pi / 2 - np.pi / 4
    c = second_term_coefficient(nu)
    out = np.sqrt(2.0 / (np.pi * r)) * np.cos(w) - c / (np.sqrt(2 * np.pi) * r ** 1.5) * np.sin(w)
    return out if np.ndim(out) else float(out)


def bessel_error(order, r):
    """E_nu(r) = J_nu(r) minus its two-term expansion, for r > 1."""
    nu = _nu(order)
    r = _check_lemma_range(r)
    out = np.asarray(bessel_j(nu, r)) - np.asarray(bessel_leading(nu, r))
    return out if out.ndim else float(out)


def bessel_error_derivative(order, r, rel_step=1e-5):
    """dE_nu/dr by central differences with step h = r * rel_step."""
    nu = _nu(order)
    r = _check_lemma_range(r)
    h = r * rel_step
    out = (np.asarray(bessel_error(nu, r + h)) - np.asarray(bessel_error(nu, r - h))) / (2 * h)
    return out if out.ndim else float(out)


def local_envelope(fun, r, samples_per_period=64):
    """max |fun| over [r, r + 2 pi] for each r, a proxy for the oscillation amplitude."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    off = np.linspace(0.0, 2 * np.pi, samples_per_period)
    pts = r[:, None] + off[None, :]
    return np.max(np.abs(fun(pts.ravel())).reshape(pts.shape), axis=1)


def remainder_slope_scan(order, r_min, r_max, samples, derivative=False):
    """Fit log2 of the amplitude of E_nu (or dE_nu/dr) against log2 r.

    Sample points are log-spaced in [r_min, r_max]; at each point the local
    amplitude over one period is used so the fit is not polluted by zeros
    of the oscillating remainder.  If the remainder sits at rounding level
    everywhere the report carries the flag ``"identically zero"`` and a NaN
    slope.
    """
    nu = _nu(order)
    if not (1 < r_min < r_max) or samples < 8:
        raise ValueError("need 1 < r_min < r_max and at least 8 samples")
    r = np.geomspace(r_min, r_max, int(samples))
    fun = (lambda x: bessel_error_derivative(nu, x)) if derivative else (lambda x: bessel_error(nu, x))
    amp = local_envelope(fun, r)
    # rounding level of J relative to its own envelope sqrt(2/(pi r))
    floor = (1e-9 if derivative else 1e-11) * np.sqrt(2 / (np.pi * r))
    if np.all(amp <= floor):
        return FitReport(float("nan"), float("nan"), 0.0, len(r), ["identically zero"], r, amp)
    return loglog_fit(r, amp)


def envelope_constant(n, r):
    """sup over samples of |J_{(n-2)/2}(r)| / min(r^{(n-2)/2}, r^{-1/2})."""
    nu = (n - 2) / 2
    r = _as_array(r)
    env = np.minimum(r ** nu, r ** -0.5)
    return float(np.max(np.abs(bessel_j(nu, r)) / env))
