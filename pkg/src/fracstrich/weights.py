"""Space-time weights, the a-parabolic Morrey-Campanato norm and maximal-function tools.

A weight is w(x, t) >= 0, radial in x.  Most families are separable,
w = u(|x|) v(t), which lets every cube integral factor into a spatial part
(reduced to a radial integral by :mod:`fracstrich.cubes`) and a temporal
part (closed form or Gauss).  Cubes are Q(x, r) x I(t, r^a): Q the cube of
side r centered at x, I the interval of length r^a centered at t, so the
norm

    sup r^alpha ( r^{-(n+a)} int_I int_Q w^p )^{1/p}

is a sup of r^alpha times L^p averages.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .cubes import cube_rule, gauss, tensor_nodes
from .errors import DivisionGuardError, HypothesisError, SingularSamplingError

GROWTH_MARGIN = 0.02


# ---------------------------------------------------------------- spatial factors

class SpatialFactor:
    """u(rho) >= 0 for rho > 0."""

    breaks = ()
    singular_at_zero = False

    def __call__(self, rho):
        raise NotImplementedError

    def powered(self, rho, p):
        return self(rho) ** p

    def head_integral(self, eps, p, n):
        """omega_{n-1} int_0^eps u^p rho^{n-1} drho, or None if unknown."""
        return None

    def dilate(self, lam):
        return DilatedSpatial(self, lam)

    def describe(self):
        return {"family": type(self).__name__}


def _omega(n):
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


class SpatialConstant(SpatialFactor):
    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, rho):
        return np.full(np.shape(rho), self.value)

    def head_integral(self, eps, p, n):
        return _omega(n) * self.value ** p * eps ** n / n

    def dilate(self, lam):
        return self

    def describe(self):
        return {"family": "constant", "value": self.value}


class SpatialPower(SpatialFactor):
    """coef * rho^{-gamma}, optionally truncated to rho <= radius."""

    def __init__(self, gamma, coef=1.0, radius=None):
        self.gamma = float(gamma)
        self.coef = float(coef)
        self.radius = radius
        self.breaks = () if radius is None else (float(radius),)
        self.singular_at_zero = self.gamma > 0

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.coef * rho ** -self.gamma
        if self.radius is not None:
            out = np.where(rho <= self.radius, out, 0.0)
        return out

    def head_integral(self, eps, p, n):
        e = n - self.gamma * p
        if e <= 0:
            return np.inf
        if self.radius is not None:
            eps = min(eps, self.radius)
        return _omega(n) * self.coef ** p * eps ** e / e

    def dilate(self, lam):
        rad = None if self.radius is None else self.radius / lam
        return SpatialPower(self.gamma, self.coef * lam ** -self.gamma, rad)

    def describe(self):
        return {"family": "power", "gamma": self.gamma, "coef": self.coef, "radius": self.radius}


class SpatialBump(SpatialFactor):
    """height * exp(1 - 1/(1 - (rho/R)^2)) on rho < R."""

    def __init__(self, radius=1.0, height=1.0):
        self.radius = float(radius)
        self.height = float(height)

    def __call__(self, rho):
        x = np.asarray(rho, dtype=float) / self.radius
        out = np.zeros(x.shape)
        m = x < 1
        out[m] = self.height * np.exp(1 - 1 / (1 - x[m] ** 2))
        return out

    def head_integral(self, eps, p, n):
        return _omega(n) * self.height ** p * eps ** n / n

    def dilate(self, lam):
        return SpatialBump(self.radius / lam, self.height)

    def describe(self):
        return {"family": "bump", "radius": self.radius, "height": self.height}


class SpatialPlateau(SpatialFactor):
    """inner on rho < radius, outer beyond (outer -> 0 is the indicator limit)."""

    def __init__(self, radius=1.0, inner=1.0, outer=1e-3):
        self.radius, self.inner, self.outer = float(radius), float(inner), float(outer)
        self.breaks = (self.radius,)

    def __call__(self, rho):
        return np.where(np.asarray(rho) < self.radius, self.inner, self.outer)

    def head_integral(self, eps, p, n):
        return _omega(n) * self.inner ** p * eps ** n / n

    def describe(self):
        return {"family": "plateau", "radius": self.radius, "inner": self.inner, "outer": self.outer}


class SpatialExp(SpatialFactor):
    """exp(rate * min(rho, radius)): exponential growth frozen beyond ``radius``."""

    def __init__(self, rate=1.0, radius=4.0):
        self.rate, self.radius = float(rate), float(radius)
        self.breaks = (self.radius,)

    def __call__(self, rho):
        return np.exp(self.rate * np.minimum(np.asarray(rho, dtype=float), self.radius))

    def head_integral(self, eps, p, n):
        return _omega(n) * eps ** n / n

    def describe(self):
        return {"family": "exp", "rate": self.rate, "radius": self.radius}


class SpatialShifted(SpatialFactor):
    """(rho + shift)^{-gamma}: a power weight regularized at the origin."""

    def __init__(self, gamma, shift):
        self.gamma, self.shift = float(gamma), float(shift)

    def __call__(self, rho):
        return (np.asarray(rho, dtype=float) + self.shift) ** -self.gamma

    def head_integral(self, eps, p, n):
        return _omega(n) * self.shift ** (-self.gamma * p) * eps ** n / n

    def dilate(self, lam):
        return _Scaled(SpatialShifted(self.gamma, self.shift * lam), lam ** -self.gamma)

    def describe(self):
        return {"family": "shifted", "gamma": self.gamma, "shift": self.shift}


class _Scaled(SpatialFactor):
    def __init__(self, base, c):
        self.base, self.c = base, c
        self.breaks = base.breaks
        self.singular_at_zero = base.singular_at_zero

    def __call__(self, rho):
        return self.c * self.base(rho)

    def head_integral(self, eps, p, n):
        h = self.base.head_integral(eps, p, n)
        return None if h is None else self.c ** p * h

    def describe(self):
        return {**self.base.describe(), "scale": self.c}


class DilatedSpatial(SpatialFactor):
    """rho -> u(lam rho)."""

    def __init__(self, base, lam):
        self.base, self.lam = base, float(lam)
        self.breaks = tuple(b / self.lam for b in base.breaks)
        self.singular_at_zero = base.singular_at_zero

    def __call__(self, rho):
        return self.base(self.lam * np.asarray(rho))

    def head_integral(self, eps, p, n):
        h = self.base.head_integral(self.lam * eps, p, n)
        return None if h is None else h / self.lam ** n

    def describe(self):
        return {**self.base.describe(), "dilation": self.lam}


class SpatialTabulated(SpatialFactor):
    """Log-log interpolation of samples (rho_i, u_i), power-law extrapolation at both ends."""

    def __init__(self, rho, values):
        rho = np.asarray(rho, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0) or np.any(np.diff(rho) <= 0) or rho[0] <= 0:
            raise ValueError("tabulated spatial factor needs increasing positive radii and positive values")
        self.rho, self.values = rho, values
        self.lr, self.lv = np.log(rho), np.log(values)
        self.slope_lo = (self.lv[1] - self.lv[0]) / (self.lr[1] - self.lr[0])
        self.slope_hi = (self.lv[-1] - self.lv[-2]) / (self.lr[-1] - self.lr[-2])
        self.singular_at_zero = self.slope_lo < 0

    def __call__(self, rho):
        lr = np.log(np.asarray(rho, dtype=float))
        out = np.interp(lr, self.lr, self.lv)
        out = np.where(lr < self.lr[0], self.lv[0] + self.slope_lo * (lr - self.lr[0]), out)
        out = np.where(lr > self.lr[-1], self.lv[-1] + self.slope_hi * (lr - self.lr[-1]), out)
        out = np.exp(out)
        # exact samples at the nodes (exp(log v) can be off by an ulp)
        x = np.asarray(rho, dtype=float)
        i = np.clip(np.searchsorted(self.rho, x), 0, self.rho.size - 1)
        return np.where(self.rho[i] == x, self.values[i], out)

    def head_integral(self, eps, p, n):
        if eps > self.rho[0]:
            return None
        e = n + self.slope_lo * p
        if e <= 0:
            return np.inf
        c = self.values[0] / self.rho[0] ** self.slope_lo
        return _omega(n) * c ** p * eps ** e / e

    def describe(self):
        return {"family": "tabulated", "nodes": int(self.rho.size)}


# ---------------------------------------------------------------- temporal factors

class TemporalFactor:
    """v(t) >= 0 with int_lo^hi v^p available in vectorized form."""

    singular_at_zero = False

    def __call__(self, t):
        raise NotImplementedError

    def integral_p(self, lo, hi, p):
        """int_lo^hi v(t)^p dt for arrays lo <= hi, by 24-point Gauss per piece."""
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        x, w = gauss(24)
        cuts = sorted(self.breaks())
        edges = [lo]
        for c in cuts:
            edges.append(np.clip(c, lo, hi))
        edges.append(hi)
        total = np.zeros(np.broadcast(lo, hi).shape)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = (a + b) / 2, (b - a) / 2
            pts = mid[..., None] + half[..., None] * x
            total += half * np.sum(w * self(pts) ** p, axis=-1)
        return total

    def breaks(self):
        return ()

    def dilate(self, mu):
        return DilatedTemporal(self, mu)

    def describe(self):
        return {"family": type(self).__name__}


class TemporalConstant(TemporalFactor):
    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, t):
        return np.full(np.shape(t), self.value)

    def integral_p(self, lo, hi, p):
        return self.value ** p * (np.asarray(hi, float) - np.asarray(lo, float))

    def dilate(self, mu):
        return self

    def describe(self):
        return {"family": "constant", "value": self.value}


class TemporalPower(TemporalFactor):
    """coef * |t|^{-q}, optionally truncated to |t| <= horizon."""

    def __init__(self, q, coef=1.0, horizon=None):
        self.q, self.coef, self.horizon = float(q), float(coef), horizon
        self.singular_at_zero = self.q > 0

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            out = self.coef * t ** -self.q
        if self.horizon is not None:
            out = np.where(t <= self.horizon, out, 0.0)
        return out

    def integral_p(self, lo, hi, p):
        e = 1 - self.q * p
        if e <= 0:
            raise SingularSamplingError(f"|t|^(-{self.q * p:g}) is not integrable near t = 0")
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        if self.horizon is not None:
            lo = np.clip(lo, -self.horizon, self.horizon)
            hi = np.clip(hi, -self.horizon, self.horizon)

        def F(x):
            return np.sign(x) * np.abs(x) ** e / e
        return self.coef ** p * (F(hi) - F(lo))

    def dilate(self, mu):
        hor = None if self.horizon is None else self.horizon / mu
        return TemporalPower(self.q, self.coef * mu ** -self.q, hor)

    def describe(self):
        return {"family": "power", "q": self.q, "coef": self.coef, "horizon": self.horizon}


class TemporalBump(TemporalFactor):
    """exp(1 - 1/(1 - (t/T)^2)) on |t| < T."""

    def __init__(self, horizon=1.0):
        self.horizon = float(horizon)

    def __call__(self, t):
        x = np.asarray(t, dtype=float) / self.horizon
        out = np.zeros(x.shape)
        m = np.abs(x) < 1
        out[m] = np.exp(1 - 1 / (1 - x[m] ** 2))
        return out

    def breaks(self):
        return (-self.horizon, self.horizon)

    def dilate(self, mu):
        return TemporalBump(self.horizon / mu)

    def describe(self):
        return {"family": "bump", "horizon": self.horizon}


class DilatedTemporal(TemporalFactor):
    """t -> v(mu t)."""

    def __init__(self, base, mu):
        self.base, self.mu = base, float(mu)
        self.singular_at_zero = base.singular_at_zero

    def __call__(self, t):
        return self.base(self.mu * np.asarray(t))

    def integral_p(self, lo, hi, p):
        return self.base.integral_p(self.mu * np.asarray(lo), self.mu * np.asarray(hi), p) / self.mu

    def describe(self):
        return {**self.base.describe(), "dilation": self.mu}


# ---------------------------------------------------------------- weights

class Weight:
    """Base class: w(r, t) >= 0, radial in x."""

    separable = False
    singular_time = False

    def __call__(self, r, t):
        raise NotImplementedError

    def slice(self, t):
        """The spatial factor rho -> w(rho, t)."""
        return _Slice(self, t)

    def dilate(self, lam, a):
        """(x, t) -> w(lam x, lam^a t)."""
        raise NotImplementedError

    def describe(self):
        return {"family": type(self).__name__}


class SeparableWeight(Weight):
    """w(x, t) = u(|x|) v(t)."""

    separable = True

    def __init__(self, spatial, temporal=None):
        self.spatial = spatial
        self.temporal = temporal or TemporalConstant()
        self.singular_time = self.temporal.singular_at_zero

    def __call__(self, r, t):
        return np.multiply.outer(self.spatial(r), self.temporal(t)) if np.ndim(t) else \
            self.spatial(r) * self.temporal(np.array(t))

    def slice(self, t):
        return _Scaled(self.spatial, float(self.temporal(np.array(float(t)))))

    def dilate(self, lam, a):
        return SeparableWeight(self.spatial.dilate(lam), self.temporal.dilate(lam ** a))

    def describe(self):
        return {"family": "separable", "spatial": self.spatial.describe(),
                "temporal": self.temporal.describe()}


def power_weight(gamma_x, gamma_t=0.0, coef=1.0):
    """|x|^{-gamma_x} |t|^{-gamma_t}."""
    return SeparableWeight(SpatialPower(gamma_x, coef), TemporalPower(gamma_t) if gamma_t else TemporalConstant())


def truncated_power_weight(gamma_x, gamma_t, radius, horizon):
    return SeparableWeight(SpatialPower(gamma_x, radius=radius), TemporalPower(gamma_t, horizon=horizon))


def bump_weight(radius=1.0, horizon=1.0, height=1.0):
    return SeparableWeight(SpatialBump(radius, height), TemporalBump(horizon))


def constant_weight(c=1.0):
    return SeparableWeight(SpatialConstant(c), TemporalConstant())


class DilatingPowerWeight(Weight):
    """(|x| + |t|^{1/a})^{-gamma} |t|^{-q}: a non-separable weight with the a-parabolic scaling."""

    def __init__(self, gamma, q, a, coef=1.0):
        self.gamma, self.q, self.a, self.coef = float(gamma), float(q), float(a), float(coef)
        self.singular_time = self.q > 0

    def __call__(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.abs(np.asarray(t, dtype=float))
        if t.ndim:
            r = r[..., None] if r.ndim else r
        with np.errstate(divide="ignore"):
            return self.coef * (r + t ** (1 / self.a)) ** -self.gamma * t ** -self.q

    def slice(self, t):
        tau = abs(float(t)) ** (1 / self.a)
        c = self.coef * abs(float(t)) ** -self.q
        if tau == 0:
            return SpatialPower(self.gamma, c)
        return _Scaled(SpatialShifted(self.gamma, tau), c)

    def dilate(self, lam, a):
        if a != self.a:
            raise ValueError("dilation exponent must match the weight's a")
        return DilatingPowerWeight(self.gamma, self.q, a, self.coef * lam ** (-self.gamma - a * self.q))

    def describe(self):
        return {"family": "dilating-power", "gamma": self.gamma, "q": self.q, "a": self.a,
                "coef": self.coef}


class TabulatedWeight(Weight):
    """Weight given by samples on an (r, t) tensor grid; bilinear in (log r, t)."""

    def __init__(self, r, t, w):
        r, t, w = np.asarray(r, float), np.asarray(t, float), np.asarray(w, float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("tabulated weight must be finite and >= 0")
        self.r, self.t, self.w = r, t, w
        self._interp = RegularGridInterpolator((np.log(r), t), w, bounds_error=False, fill_value=None)

    def __call__(self, r, t):
        r = np.asarray(r, float)
        t = np.asarray(t, float)
        R, T = np.broadcast_arrays(np.log(np.clip(r, self.r[0], self.r[-1]))[..., None] if t.ndim else
                                   np.log(np.clip(r, self.r[0], self.r[-1])),
                                   np.clip(t, self.t[0], self.t[-1]))
        return np.maximum(self._interp(np.stack([R.ravel(), T.ravel()], -1)).reshape(R.shape), 0.0)

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path) as fh:
            for row in csv.DictReader(fh):
                rows.append((float(row["r"]), float(row["t"]), float(row["w"])))
        data = np.array(rows)
        r = np.unique(data[:, 0])
        t = np.unique(data[:, 1])
        if r.size * t.size != len(rows):
            raise ValueError("tabulated weight CSV must be a full (r, t) tensor grid")
        w = np.zeros((r.size, t.size))
        w[np.searchsorted(r, data[:, 0]), np.searchsorted(t, data[:, 1])] = data[:, 2]
        return cls(r, t, w)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["r", "t", "w"])
            for i, ri in enumerate(self.r):
                for j, tj in enumerate(self.t):
                    out.writerow([repr(float(ri)), repr(float(tj)), repr(float(self.w[i, j]))])

    def describe(self):
        return {"family": "tabulated", "shape": list(self.w.shape)}


class _Slice(SpatialFactor):
    def __init__(self, weight, t):
        self.weight, self.t = weight, float(t)

    def __call__(self, rho):
        return np.asarray(self.weight(np.asarray(rho, float), self.t), float)


# ---------------------------------------------------------------- lattice and params

@dataclass(frozen=True)
class McParams:
    """Exponents (alpha, p, a) of the a-parabolic Morrey-Campanato norm in R^n."""

    alpha: float
    p: float
    a: float
    n: int

    def __post_init__(self):
        if not (self.alpha > 0 and self.p >= 1 and self.a >= 1 and self.n >= 2):
            raise HypothesisError(f"invalid Morrey-Campanato parameters {self}")
        if self.p > (self.n + self.a) / self.alpha * (1 + 1e-12):
            raise HypothesisError(f"p = {self.p} exceeds (n + a)/alpha = {(self.n + self.a) / self.alpha}")


@dataclass(frozen=True)
class CubeLattice:
    """Dyadic cube family: sides 2^m, m_min <= m <= m_max.

    Spatial centers lie on 2^{m-2} Z^n: all of them in the block
    |c|_inf <= extent_x 2^m (reduced to the symmetry chamber of radial
    weights), plus points along the coordinate axis and the main diagonal
    out to ``x_domain``.  Time centers lie on 2^{am-2} Z with
    |t| <= extent_t 2^{am}, plus points out to ``t_domain``.
    """

    m_min: int = -6
    m_max: int = 6
    extent_x: float = 2.0
    extent_t: float = 2.0
    x_domain: float = 0.0
    t_domain: float = 0.0
    steps: int = 4

    def __post_init__(self):
        if not self.m_min < self.m_max:
            raise ValueError("lattice needs m_min < m_max")

    @property
    def scales(self):
        return list(range(self.m_min, self.m_max + 1))

    def relative_centers(self, n, m):
        """Spatial centers at scale m in units of the side 2^m, chamber-reduced."""
        K = int(round(self.extent_x * self.steps))
        ks = np.arange(0, K + 1)
        pts = set()
        for combo in _sorted_tuples(ks, n):
            pts.add(combo)
        ray = int(math.floor(self.x_domain / 2.0 ** m * self.steps))
        for k in range(K + 1, ray + 1):
            pts.add((0,) * (n - 1) + (k,))
            pts.add((k,) * n)
        return np.array(sorted(pts), dtype=float) / self.steps

    def relative_times(self, a, m):
        K = int(round(self.extent_t * self.steps))
        far = int(math.floor(self.t_domain / 2.0 ** (a * m) * self.steps))
        js = np.arange(-max(K, far), max(K, far) + 1)
        return js / self.steps

    def describe(self):
        return dict(m_min=self.m_min, m_max=self.m_max, extent_x=self.extent_x, extent_t=self.extent_t,
                    x_domain=self.x_domain, t_domain=self.t_domain, steps=self.steps)


def scaled_lattice(lat, k, a):
    """The lattice matching w(2^-k x, 2^-ka t) when ``lat`` matches w."""
    return CubeLattice(lat.m_min + k, lat.m_max + k, lat.extent_x, lat.extent_t,
                       lat.x_domain * 2.0 ** k, lat.t_domain * 2.0 ** (k * a), lat.steps)


def _sorted_tuples(ks, n):
    if n == 1:
        for k in ks:
            yield (int(k),)
        return
    for k in ks:
        for rest in _sorted_tuples(ks[ks >= k], n - 1):
            yield (int(k),) + rest


# ---------------------------------------------------------------- cube integrals

def spatial_cube_integrals(u, p, n, side, rel_centers):
    """int over Q(side * c, side) of u(|y|)^p dy for every relative center c."""
    rel_centers = np.atleast_2d(rel_centers)
    breaks = tuple(sorted(b / side for b in u.breaks))
    out = np.empty(len(rel_centers))
    dmin = np.array([_dmin(c) for c in rel_centers])
    dmax = np.linalg.norm(np.abs(rel_centers) + 0.5, axis=1)
    smooth = np.ones(len(rel_centers), dtype=bool)
    for b in breaks:
        smooth &= ~((dmin <= b) & (b <= dmax))
    far = (dmin >= 1.0) & smooth

    def g(rho):
        return u.powered(rho, p)

    if far.any():
        radii, wts = tensor_nodes(rel_centers[far], m=8)
        vals = g(side * radii)
        out[far] = side ** n * (vals @ wts)
    for i in np.nonzero(~far)[0]:
        c = rel_centers[i]
        rule = cube_rule(c, tuple(b for b in breaks if dmin[i] <= b <= dmax[i]))
        out[i] = rule.integrate(g, side, tiny_model=lambda eps: _head(u, eps, p, n, rule))
    if not np.all(np.isfinite(out)):
        raise SingularSamplingError("weight power not integrable over a sampled cube")
    return out


def _head(u, eps, p, n, rule):
    h = u.head_integral(eps, p, n)
    if h is None:
        return u.powered(np.array([eps]), p)[0] * rule.omega * eps ** n / n
    return h


def _dmin(c):
    return math.sqrt(sum(0.0 if abs(x) <= 0.5 else (abs(x) - 0.5) ** 2 for x in c))


def time_integrals(v, p, centers, length):
    return v.integral_p(centers - length / 2, centers + length / 2, p)


# ---------------------------------------------------------------- the norm

@dataclass
class McResult:
    value: float
    argmax: dict
    growth: bool
    per_scale: list
    cube_values: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {"value": self.value, "argmax": self.argmax, "growth": self.growth,
                "per_scale": self.per_scale}


def growth_flag(per_scale, margin=GROWTH_MARGIN):
    """True when the per-scale maxima peak at an end of the range and still climb there."""
    v = np.asarray(per_scale, dtype=float)
    if v.size < 2 or not np.all(np.isfinite(v)):
        return True
    i = int(np.argmax(v))
    if i == v.size - 1:
        return bool(v[-1] > v[-2] * (1 + margin))
    if i == 0:
        return bool(v[0] > v[1] * (1 + margin))
    return False


def mc_norm(w, params, lattice, keep_cubes=False):
    """Lattice lower bound of the a-parabolic Morrey-Campanato norm of w.

    Returns an :class:`McResult`: the largest cube quantity, where it was
    attained, the per-scale maxima and the growth flag.  With
    ``keep_cubes`` the per-cube values of every scale are kept (keyed by m)
    in the order (spatial center, time center).
    """
    n, a, p, alpha = params.n, params.a, params.p, params.alpha
    per_scale, best = [], None
    cubes = {}
    for m in lattice.scales:
        s = 2.0 ** m
        ell = s ** a
        rc = lattice.relative_centers(n, m)
        rt = lattice.relative_times(a, m)
        if w.separable:
            X = spatial_cube_integrals(w.spatial, p, n, s, rc)
            T = time_integrals(w.temporal, p, rt * ell, ell)
            vals = None
            ix, it = int(np.argmax(X)), int(np.argmax(T))
            top = s ** alpha * (s ** -(n + a) * X[ix] * T[it]) ** (1 / p)
            if keep_cubes:
                vals = s ** alpha * (s ** -(n + a) * np.outer(X, T)) ** (1 / p)
        else:
            vals = s ** alpha * (s ** -(n + a) * generic_cube_integrals(w, p, n, a, s, rc, rt)) ** (1 / p)
            ix, it = np.unravel_index(int(np.argmax(vals)), vals.shape)
            top = vals[ix, it]
        if not np.isfinite(top):
            raise SingularSamplingError(f"non-finite cube value at scale 2^{m}")
        per_scale.append(float(top))
        if keep_cubes:
            cubes[m] = vals
        if best is None or top > best[0]:
            best = (float(top), {"m": m, "center": (rc[ix] * s).tolist(), "t": float(rt[it] * ell)})
    return McResult(best[0], best[1], growth_flag(per_scale), per_scale, cubes)


def generic_cube_integrals(w, p, n, a, side, rel_centers, rel_times, m_t=16, levels=30):
    """int_I int_Q w^p for a non-separable weight, all (center, time) pairs.

    Time integrals use Gauss panels, graded toward t = 0 when the interval
    contains it and the weight is singular there.
    """
    ell = side ** a
    x, wt = gauss(m_t)
    out = np.empty((len(rel_centers), len(rel_times)))
    for j, tc in enumerate(rel_times * ell):
        lo, hi = tc - ell / 2, tc + ell / 2
        edges = [lo, hi]
        if w.singular_time and lo < 0 < hi:
            for side_end in (lo, hi):
                edges.extend(side_end * 2.0 ** -np.arange(1, levels))
            edges.append(0.0)
        edges = np.unique(edges)
        a_, b_ = edges[:-1, None], edges[1:, None]
        tn = ((a_ + b_) / 2 + (b_ - a_) / 2 * x).ravel()
        tw = ((b_ - a_) / 2 * wt).ravel()
        tn_ok = tn != 0
        tn, tw = tn[tn_ok], tw[tn_ok]
        for i, c in enumerate(rel_centers):
            rule = cube_rule(c)

            def g(rho):
                return np.asarray(w(rho, tn), float) ** p

            vals = rule.integrate(g, side)
            out[i, j] = float(np.dot(vals, tw))
    if not np.all(np.isfinite(out)):
        raise SingularSamplingError("weight power not integrable over a sampled cube")
    return out


def global_lp_norm(w, p, n, r_max=np.inf):
    """||w||_{L^p(R^n x R)} for separable w, by adaptive 1-D quadrature (an independent check)."""
    from scipy import integrate
    u, v = w.spatial, w.temporal
    pts = [b for b in getattr(u, "breaks", ()) if b > 0]
    up = getattr(u, "radius", None)
    top = up if up else r_max
    xs, _ = integrate.quad(lambda r: float(u(np.array([r]))[0]) ** p * r ** (n - 1), 0, top,
                           points=pts or None, limit=400, epsrel=1e-12)
    hor = getattr(v, "horizon", None)
    ts, _ = integrate.quad(lambda t: float(v(np.array([t]))[0]) ** p, -hor, hor, limit=400, epsrel=1e-12)
    return (_omega(n) * xs * ts) ** (1 / p)


# ---------------------------------------------------------------- maximal function and A_p

DIRECTIONS = ("axis", "diagonal")


def _direction(n, kind):
    d = np.zeros(n)
    if kind == "axis":
        d[-1] = 1.0
    else:
        d[:] = 1 / math.sqrt(n)
    return d


def centered_averages(u, p, n, x, sides, direction="axis"):
    """avg over Q(x e, s) of u^p for every radius x and side s (shape len(x) x len(sides))."""
    d = _direction(n, direction)
    x = np.asarray(x, float)
    sides = np.asarray(sides, float)
    out = np.empty((x.size, sides.size))
    for j, s in enumerate(sides):
        rel = np.outer(x / s, d)
        out[:, j] = spatial_cube_integrals(u, p, n, s, rel) / s ** n
    return out


SIDE_FACTORS = np.exp2(np.arange(-48, 49) / 8)


def sides_integrals(u, p, n, rel_center, sides):
    """int over Q(s c, s) of u^p for one relative center c and many sides s."""
    sides = np.asarray(sides, float)
    if u.breaks:
        return np.array([spatial_cube_integrals(u, p, n, s, rel_center[None, :])[0] for s in sides])
    dmin = _dmin(rel_center)
    if dmin >= 1.0:
        radii, wts = tensor_nodes(rel_center[None, :], m=8)
        vals = u.powered(np.multiply.outer(sides, radii[0]), p)
        out = sides ** n * (vals @ wts)
    else:
        rule = cube_rule(rel_center)
        vals = u.powered(np.multiply.outer(sides, rule.nodes), p)
        out = sides ** n * (vals @ rule.weights)
        if rule.tiny > 0:
            out = out + np.array([_head(u, s * rule.tiny, p, n, rule) for s in sides])
    return out


def centered_sup(u, q, x_grid, n=3, factors=SIDE_FACTORS):
    """sup over sides s of avg_{Q(x, s)} u^q, including the limit s -> 0 (u(x)^q).

    Centers are taken at distance |x| along the coordinate axis and along the
    diagonal and the larger value is kept.  Sides run over |x| * factors.
    """
    x_grid = np.asarray(x_grid, float)
    best = u(x_grid) ** q
    for direction in DIRECTIONS:
        d = _direction(n, direction)
        for f in factors:
            sides = f * x_grid
            avg = sides_integrals(u, q, n, d / f, sides) / sides ** n
            best = np.maximum(best, avg)
    return best


def maximal_function(w, rho, x_grid, t=0.0, n=3):
    """w_*(x, t) = (sup_s avg_{Q(x, s)} w(., t)^rho)^{1/rho} on radii ``x_grid``.

    Cubes are centered at points at distance |x| along the coordinate axis
    and along the diagonal, and the larger of the two sups is kept (a
    radial surrogate; w_* of a radial weight is not exactly radial).  Sides
    run over |x| 2^{j/8}, |j| <= 48; the vanishing side contributes w itself,
    so w_* >= w on every node.  Returns a :class:`SpatialTabulated`.
    """
    if not rho > 1:
        raise ValueError("maximal function exponent must exceed 1")
    u = w.slice(t) if isinstance(w, Weight) else w
    vals = np.maximum(centered_sup(u, rho, x_grid, n) ** (1 / rho), u(x_grid))
    vals = np.maximum(vals, np.finfo(float).tiny)
    return SpatialTabulated(x_grid, vals)


def maximal_weight(w, rho, x_grid, n=3):
    """Separable maximal weight u_* v for separable w = u v."""
    if not w.separable:
        raise ValueError("maximal_weight needs a separable weight; use maximal_function per slice")
    return SeparableWeight(maximal_function(w.spatial, rho, x_grid, n=n), w.temporal)


def mc_norm_of_maximal(w, params, lattice, rho, x_grid=None):
    """Ratio mc_norm(w_*) / mc_norm(w) and both results."""
    x_grid = default_x_grid() if x_grid is None else x_grid
    ws = maximal_weight(w, rho, x_grid, params.n)
    top = mc_norm(ws, params, lattice)
    bot = mc_norm(w, params, lattice)
    return top.value / bot.value, top, bot


def default_x_grid(lo=1e-3, hi=1e3, per_octave=4):
    count = int(round(math.log2(hi / lo) * per_octave)) + 1
    return np.geomspace(lo, hi, count)


@dataclass
class ClassConstant:
    value: float
    argmax: dict
    growth: bool
    per_scale: list

    def to_dict(self):
        return {"value": self.value, "argmax": self.argmax, "growth": self.growth,
                "per_scale": self.per_scale}


def a2_constant(u, lattice, n=3):
    """sup over lattice cubes of (avg u)(avg 1/u) for a spatial slice u."""
    inv = _Reciprocal(u)
    per_scale, best = [], None
    for m in lattice.scales:
        s = 2.0 ** m
        rc = lattice.relative_centers(n, m)
        A = spatial_cube_integrals(u, 1.0, n, s, rc) / s ** n
        B = spatial_cube_integrals(inv, 1.0, n, s, rc) / s ** n
        prod = A * B
        if not np.all(np.isfinite(prod)):
            raise DivisionGuardError("reciprocal weight not integrable on a sampled cube")
        i = int(np.argmax(prod))
        per_scale.append(float(prod[i]))
        if best is None or prod[i] > best[0]:
            best = (float(prod[i]), {"m": m, "center": (rc[i] * s).tolist()})
    return ClassConstant(best[0], best[1], growth_flag(per_scale), per_scale)


class _Reciprocal(SpatialFactor):
    def __init__(self, u):
        self.u = u
        self.breaks = u.breaks

    def __call__(self, rho):
        v = self.u(rho)
        if np.any(v <= 0):
            raise DivisionGuardError("weight vanishes on a sampled node")
        return 1.0 / v

    def head_integral(self, eps, p, n):
        h = self.u.head_integral(eps, -p, n) if isinstance(self.u, (SpatialPower, SpatialTabulated)) else None
        return h


def a1_constant(u, x_grid, n=3):
    """sup over nodes of M(u)(x) / u(x), M the centered cube maximal function."""
    x_grid = np.asarray(x_grid, float)
    ratio = centered_sup(u, 1.0, x_grid, n) / u(x_grid)
    i = int(np.argmax(ratio))
    return ClassConstant(float(ratio[i]), {"x": float(x_grid[i])}, bool(i in (0, len(x_grid) - 1)),
                         ratio.tolist())


class PoweredSpatial(SpatialFactor):
    """u^delta."""

    def __init__(self, u, delta):
        self.u, self.delta = u, float(delta)
        self.breaks = u.breaks

    def __call__(self, rho):
        return self.u(rho) ** self.delta

    def head_integral(self, eps, p, n):
        return self.u.head_integral(eps, p * self.delta, n)
