"""Radial grids, profiles and the Fourier transform of radial functions.

Normalization (fixed here once, used everywhere):

    f^(xi) = int e^{-i x.xi} f(x) dx,      f(x) = (2 pi)^{-n} int e^{i x.xi} f^(xi) dxi.

For radial f with nu = (n-2)/2 and Lambda_nu(z) = J_nu(z)/z^nu this reads

    f^(rho) = (2 pi)^{n/2} int_0^inf Lambda_nu(r rho) f(r) r^{n-1} dr,
    f(r)    = (2 pi)^{-n/2} int_0^inf Lambda_nu(r rho) f^(rho) rho^{n-1} drho,

and Plancherel is ||f||_2^2 = (2 pi)^{-n} omega_{n-1} int |f^|^2 rho^{n-1} drho,
with omega_{n-1} = 2 pi^{n/2} / Gamma(n/2) the area of the unit sphere.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ResolutionError
from .specfun import bessel_scaled

GL_ORDER = 16


def sphere_area(n):
    """omega_{n-1}, the surface measure of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


class RadialGrid:
    """Composite Gauss-Legendre rule on (0, r_max].

    Panels have a common length ``panel``; optionally the first panel is
    replaced by ``grading`` geometric sub-panels accumulating at 0, which
    helps integrands that are singular at the origin.  No node is 0.
    """

    def __init__(self, r_max, panel, order=GL_ORDER, grading=0):
        count = r_max / panel
        if not (r_max > 0 and panel > 0) or abs(count - round(count)) > 1e-9 * count:
            raise ValueError("r_max must be a positive multiple of the panel length")
        self.r_max = float(r_max)
        self.panel = float(panel)
        self.order = int(order)
        self.grading = int(grading)
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.arange(int(round(count)) + 1) * self.panel
        if self.grading:
            inner = self.panel * 2.0 ** -np.arange(self.grading + 1)[::-1]
            edges = np.concatenate([[0.0], inner, edges[2:]])
        lo, hi = edges[:-1], edges[1:]
        half = (hi - lo) / 2
        self.nodes = ((lo + hi) / 2 + half * x[:, None]).T.ravel()
        self.weights = (half * w[:, None]).T.ravel()
        self.edges = edges
        self._scale = 1.0

    @classmethod
    def for_band(cls, r_max, band, order=GL_ORDER, grading=0):
        """Grid on (0, r_max] able to resolve oscillations e^{i r rho} with rho <= band.

        The panel is the largest dyadic length <= 2 pi / band, i.e. at least
        ``order`` nodes per period of the fastest oscillation.
        """
        panel = 2.0 ** math.floor(math.log2(2 * math.pi / band))
        r_max = math.ceil(r_max / panel - 1e-9) * panel
        return cls(r_max, panel, order, grading)

    @property
    def size(self):
        return self.nodes.size

    @property
    def band(self):
        """Largest frequency resolved on this grid (one period per panel)."""
        return 2 * math.pi / self.panel

    def scaled(self, lam):
        """The grid dilated by lam (nodes and weights multiplied by lam)."""
        g = RadialGrid.__new__(RadialGrid)
        g.__dict__.update(self.__dict__)
        g.nodes = self.nodes * lam
        g.weights = self.weights * lam
        g.edges = self.edges * lam
        g.r_max = self.r_max * lam
        g.panel = self.panel * lam
        g._scale = self._scale * lam
        return g

    @property
    def key(self):
        return hashlib.sha1(self.nodes.tobytes() + self.weights.tobytes()).hexdigest()

    def describe(self):
        return {"r_max": self.r_max, "panel": self.panel, "order": self.order,
                "grading": self.grading, "nodes": int(self.size)}

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


@dataclass
class RadialProfile:
    """Samples of a radial function of x in R^n on a radial grid."""

    dimension: int
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")
        if self.dimension < 2 or int(self.dimension) != self.dimension:
            raise ValueError("dimension must be an integer >= 2")

    @property
    def r(self):
        return self.grid.nodes

    def __add__(self, other):
        _check_same(self, other)
        return type(self)(self.dimension, self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return type(self)(self.dimension, self.grid, self.values - other.values)

    def __mul__(self, c):
        return type(self)(self.dimension, self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path):
        write_profile_csv(path, self.r, self.values, "r")

    @classmethod
    def from_csv(cls, path, dimension, grid):
        r, v = read_profile_csv(path)
        if r.shape != grid.nodes.shape or not np.allclose(r, grid.nodes, rtol=1e-14, atol=0):
            raise ValueError("CSV nodes do not match the supplied grid")
        return cls(dimension, grid, v)


class SpectralProfile(RadialProfile):
    """Samples of a radial Fourier transform on a grid in rho = |xi|."""

    @property
    def rho(self):
        return self.grid.nodes

    def to_csv(self, path):
        write_profile_csv(path, self.rho, self.values, "rho")


def _check_same(a, b):
    if a.dimension != b.dimension or a.grid != b.grid:
        raise ValueError("profiles live on different grids or dimensions")


def write_profile_csv(path, x, values, name="r"):
    data = np.column_stack([x, np.real(values), np.imag(values)])
    np.savetxt(path, data, delimiter=",", header=f"{name},Re,Im", comments="", fmt="%.17g")


def read_profile_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


_MATRIX_CACHE = {}
_CACHE_BYTES = 1 << 30


def transform_matrix(n, rho_nodes, r_nodes):
    """Lambda_nu(r rho) on the (rho, r) tensor grid, cached by grid content.

    The entries depend only on the products r rho, so the key is normalized
    by a power of two (exact in floating point): grids related by a dyadic
    dilation rho -> 2^k rho, r -> 2^-k r share one matrix.
    """
    e = math.frexp(float(rho_nodes.max()))[1] if rho_nodes.size else 0
    key = (n, hashlib.sha1(np.ldexp(rho_nodes, -e).tobytes()).hexdigest(),
           hashlib.sha1(np.ldexp(r_nodes, e).tobytes()).hexdigest())
    M = _MATRIX_CACHE.get(key)
    if M is None:
        M = np.empty((rho_nodes.size, r_nodes.size))
        step = max(1, 2 ** 21 // r_nodes.size)
        for i in range(0, rho_nodes.size, step):
            M[i:i + step] = bessel_scaled((n - 2) / 2, np.multiply.outer(rho_nodes[i:i + step], r_nodes))
        while _MATRIX_CACHE and sum(m.nbytes for m in _MATRIX_CACHE.values()) + M.nbytes > _CACHE_BYTES:
            _MATRIX_CACHE.pop(next(iter(_MATRIX_CACHE)))
        _MATRIX_CACHE[key] = M
    return M


def real_matmul(M, X):
    """M @ X for real M and possibly complex X, without promoting M to complex."""
    if np.iscomplexobj(X):
        return (M @ np.ascontiguousarray(X.real)) + 1j * (M @ np.ascontiguousarray(X.imag))
    return M @ X


def _check_resolution(source, target, what):
    if source.panel > 2 * math.pi / target.r_max * (1 + 1e-12):
        raise ResolutionError(
            f"{what}: panel {source.panel:g} cannot resolve oscillation up to {target.r_max:g} "
            f"(needs panel <= {2 * math.pi / target.r_max:g})")


def hankel_forward(f, rho_grid):
    """Fourier transform of a radial profile, sampled on ``rho_grid``."""
    _check_resolution(f.grid, rho_grid, "hankel_forward")
    n = f.dimension
    M = transform_matrix(n, rho_grid.nodes, f.grid.nodes)
    vals = (2 * math.pi) ** (n / 2) * real_matmul(M, f.values * f.grid.nodes ** (n - 1) * f.grid.weights)
    return SpectralProfile(n, rho_grid, vals)


def hankel_inverse(g, r_grid):
    """Inverse Fourier transform of a spectral profile, sampled on ``r_grid``."""
    _check_resolution(g.grid, r_grid, "hankel_inverse")
    n = g.dimension
    M = transform_matrix(n, g.grid.nodes, r_grid.nodes)
    vals = (2 * math.pi) ** (-n / 2) * real_matmul(M.T, g.values * g.grid.nodes ** (n - 1) * g.grid.weights)
    return RadialProfile(n, r_grid, vals)


def inverse_batch(n, spectral_values, rho_grid, r_grid):
    """Inverse transform of many spectra at once; ``spectral_values`` is (N_rho, m)."""
    _check_resolution(rho_grid, r_grid, "hankel_inverse")
    M = transform_matrix(n, rho_grid.nodes, r_grid.nodes)
    scale = (2 * math.pi) ** (-n / 2) * rho_grid.nodes ** (n - 1) * rho_grid.weights
    return real_matmul(M.T, spectral_values * scale[:, None])


def l2_norm(f):
    """||f||_{L^2(R^n)} of a radial profile."""
    n = f.dimension
    g = f.grid
    return math.sqrt(sphere_area(n) * np.sum(np.abs(f.values) ** 2 * g.nodes ** (n - 1) * g.weights))


def spectral_l2_norm(g):
    """(2 pi)^{-n/2} ||g||_{L^2(R^n)}, equal to ||f|| for g = f^ by Plancherel."""
    n = g.dimension
    return (2 * math.pi) ** (-n / 2) * l2_norm(g)


def default_rho_grid(r_grid, order=GL_ORDER):
    """Largest spectral grid compatible with ``r_grid`` in both directions."""
    panel = 2.0 ** math.floor(math.log2(2 * math.pi / r_grid.r_max))
    rho_max = math.floor(r_grid.band / panel) * panel
    return RadialGrid(rho_max, panel, order)


def sobolev_norm(f, s, rho_grid=None):
    """Homogeneous Sobolev norm ||f||_{H^s dot}, Plancherel-normalized.

    Computed as (2 pi)^{-n/2} || rho^s f^ ||_{L^2}, so that s = 0 gives
    ``l2_norm(f)``.
    """
    if s < 0:
        raise ValueError("sobolev_norm needs s >= 0")
    rho_grid = rho_grid or default_rho_grid(f.grid)
    g = hankel_forward(f, rho_grid)
    n = f.dimension
    rho = rho_grid.nodes
    val = np.sum(rho ** (2 * s) * np.abs(g.values) ** 2 * rho ** (n - 1) * rho_grid.weights)
    return math.sqrt((2 * math.pi) ** (-n) * sphere_area(n) * val)


class AnalyticProfile:
    """A radial test function given in closed form.

    ``func`` maps r (array) to complex values.  The object can sample itself
    on a grid and account for the L^2 mass it loses beyond ``r_max``.
    """

    def __init__(self, func, name, params=None):
        self.func = func
        self.name = name
        self.params = dict(params or {})

    def sample(self, grid, n):
        return RadialProfile(n, grid, self.func(grid.nodes))

    def tail_mass(self, r_max, n):
        """int_{r > r_max} |f|^2 r^{n-1} dr (without the sphere factor)."""
        val, _ = integrate.quad(lambda r: abs(self.func(np.array([r]))[0]) ** 2 * r ** (n - 1),
                                r_max, np.inf, limit=200, epsabs=1e-300, epsrel=1e-10)
        return val

    def dilate(self, lam):
        """r -> f(lam r)."""
        return AnalyticProfile(lambda r: self.func(lam * r), f"{self.name}@{lam:g}",
                               {**self.params, "dilation": lam})


def gaussian(sigma=1.0, center=0.0, power=0):
    """r^power exp(-(r - center)^2 / (2 sigma^2))."""
    def func(r):
        r = np.asarray(r, dtype=float)
        return (r ** power * np.exp(-((r - center) ** 2) / (2 * sigma ** 2))).astype(complex)
    return AnalyticProfile(func, "gaussian", {"sigma": sigma, "center": center, "power": power})


def ball_indicator(radius=1.0):
    def func(r):
        return (np.asarray(r) <= radius).astype(complex)
    return AnalyticProfile(func, "ball", {"radius": radius})
