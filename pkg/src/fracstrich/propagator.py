"""Dyadic frequency projections, the fractional Schroedinger group and Duhamel's formula.

All operators act as multipliers on the radial Fourier transform: P_k by
phi(2^-k rho), the evolution e^{it(-Delta)^{a/2}} by e^{i t rho^a}, and
(-Delta)^{a/2} by rho^a.  With this sign convention u = e^{it(-Delta)^{a/2}} f
solves i u_t + (-Delta)^{a/2} u = 0, and the inhomogeneous problem
i u_t + (-Delta)^{a/2} u = F has

    u^(rho, t) = e^{i t rho^a} [ u0^(rho) - i int_0^t e^{-i s rho^a} F^(rho, s) ds ].
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ResolutionError
from .radial import (RadialGrid, RadialProfile, SpectralProfile, default_rho_grid,
                     hankel_forward, hankel_inverse, inverse_batch, real_matmul,
                     sphere_area, transform_matrix)

CUTOFF_DEFINITION = ("psi(t)=exp(-1/(t-1/2)-1/(2-t)) on (1/2,2), 0 elsewhere; "
                     "phi(t)=psi(t)/sum_k psi(2^-k t)")
CUTOFF_HASH = hashlib.sha256(CUTOFF_DEFINITION.encode()).hexdigest()[:16]

PHASE_STEP_LIMIT = math.pi / 4


def psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = (t > 0.5) & (t < 2.0)
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (ti - 0.5) - 1.0 / (2.0 - ti))
    return out


def phi(t):
    """Smooth dyadic cutoff: supported in (1/2, 2), sum_k phi(2^-k t) = 1 for t > 0.

    On (1/2, 2) at most two of the psi(2^-k t) are nonzero: k = 0 and either
    k = 1 (t > 1) or k = -1 (t < 1).
    """
    t = np.asarray(t, dtype=float)
    p0 = psi(t)
    den = p0 + psi(t / 2) + psi(2 * t)
    out = np.divide(p0, den, out=np.zeros(t.shape), where=p0 > 0)
    return out if out.ndim else float(out)


def band_window(k):
    return 2.0 ** (k - 1), 2.0 ** (k + 1)


def _spectral_grid(f, rho_grid):
    return rho_grid if rho_grid is not None else default_rho_grid(f.grid)


def _check_window(rho_grid, k):
    lo, hi = band_window(k)
    if rho_grid.r_max < hi or rho_grid.nodes[0] > lo:
        raise ResolutionError(f"spectral grid (0, {rho_grid.r_max:g}] does not cover [{lo:g}, {hi:g}]")


def project(f, k, rho_grid=None):
    """Littlewood-Paley piece P_k f, with (P_k f)^ = phi(2^-k rho) f^."""
    rho_grid = _spectral_grid(f, rho_grid)
    _check_window(rho_grid, k)
    g = hankel_forward(f, rho_grid)
    g = SpectralProfile(g.dimension, rho_grid, g.values * phi(rho_grid.nodes / 2.0 ** k))
    return hankel_inverse(g, f.grid)


def fractional_laplacian(f, a, rho_grid=None):
    """(-Delta)^{a/2} f through the multiplier rho^a."""
    rho_grid = _spectral_grid(f, rho_grid)
    g = hankel_forward(f, rho_grid)
    g = SpectralProfile(g.dimension, rho_grid, g.values * rho_grid.nodes ** a)
    return hankel_inverse(g, f.grid)


def effective_band(spectrum, rho, rel=1e-14):
    """Largest rho where |spectrum| exceeds rel * max |spectrum|."""
    mag = np.abs(spectrum)
    if mag.ndim > 1:
        mag = mag.max(axis=tuple(range(1, mag.ndim)))
    top = mag.max()
    if top == 0:
        return 0.0
    return float(rho[np.nonzero(mag > rel * top)[0][-1]])


def phase_guard(rho_grid, r_max, t_abs, a, band):
    """Reject phases changing by more than pi/4 per spectral node.

    The integrand of the inverse transform of e^{i t rho^a} g(rho) oscillates
    in rho at rate |t| a rho^{a-1} + r, measured against the mean node
    spacing panel/order of the spectral grid.
    """
    rate = t_abs * a * band ** (a - 1) + r_max
    step = rate * rho_grid.panel / rho_grid.order
    if step > PHASE_STEP_LIMIT * (1 + 1e-12):
        raise ResolutionError(
            f"phase step {step:.3g} rad per node exceeds pi/4 (|t|={t_abs:g}, a={a:g}, band={band:g}); "
            "refine the spectral grid or shorten the time window")
    return step


def _check_a(a):
    if not a > 1:
        from .errors import HypothesisError
        raise HypothesisError(f"the propagator requires a > 1, got a={a}")


class TimeGrid:
    """Time nodes with quadrature weights and a cumulative-integral rule.

    ``kind`` is ``"simpson"`` (uniform, step h, containing 0) or ``"gauss"``
    (composite Gauss-Legendre panels, optionally graded toward t = 0, which
    suits integrands singular at t = 0).
    """

    def __init__(self, nodes, weights, kind, panels=None, order=None, meta=None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.kind = kind
        self.panels = panels
        self.order = order
        self.meta = dict(meta or {})

    @classmethod
    def simpson(cls, t_max, steps, symmetric=False):
        """Uniform grid on [0, t_max] (or [-t_max, t_max]) with Simpson weights."""
        if steps % 2:
            raise ValueError("Simpson needs an even number of steps")
        h = t_max / steps
        pos = np.arange(steps + 1) * h
        w = np.full(steps + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= h / 3
        if symmetric:
            nodes = np.concatenate([-pos[:0:-1], pos])
            weights = np.concatenate([w[:0:-1], w])
            weights[steps] = 2 * w[0]
        else:
            nodes, weights = pos, w
        return cls(nodes, weights, "simpson", meta={"t_max": t_max, "steps": steps,
                                                    "symmetric": symmetric})

    @classmethod
    def graded(cls, t_max, levels=20, order=8, max_panel=None, symmetric=False):
        """Gauss panels on (0, t_max]: geometric toward 0, uniform beyond.

        Edges are t_max 2^{-levels}, ..., t_max/2, t_max, then every panel
        longer than ``max_panel`` is split evenly.
        """
        edges = [0.0] + list(t_max * 2.0 ** -np.arange(levels, -1, -1))
        if max_panel:
            fine = [0.0]
            for lo, hi in zip(edges[:-1], edges[1:]):
                m = max(1, math.ceil((hi - lo) / max_panel - 1e-12))
                fine.extend(lo + (hi - lo) * np.arange(1, m + 1) / m)
            edges = fine
        edges = np.array(edges)
        x, w = np.polynomial.legendre.leggauss(order)
        lo, hi = edges[:-1], edges[1:]
        half = (hi - lo) / 2
        nodes = ((lo + hi) / 2 + half * x[:, None]).T.ravel()
        weights = (half * w[:, None]).T.ravel()
        if symmetric:
            nodes = np.concatenate([-nodes[::-1], nodes])
            weights = np.concatenate([weights[::-1], weights])
        return cls(nodes, weights, "gauss", panels=edges, order=order,
                   meta={"t_max": t_max, "levels": levels, "order": order,
                         "max_panel": max_panel, "symmetric": symmetric})

    @property
    def size(self):
        return self.nodes.size

    def describe(self):
        return {"kind": self.kind, **self.meta, "nodes": int(self.size)}

    def scaled(self, lam):
        meta = dict(self.meta)
        meta["t_max"] = meta.get("t_max", 0) * lam
        if meta.get("max_panel"):
            meta["max_panel"] *= lam
        return TimeGrid(self.nodes * lam, self.weights * lam, self.kind,
                        None if self.panels is None else self.panels * lam, self.order, meta)

    def cumulative(self, g):
        """int_0^{t_i} g(s) ds at every node t_i (g has time on its last axis).

        Nodes with t_i < 0 receive -int_{t_i}^0 g.
        """
        g = np.asarray(g)
        out = np.zeros(g.shape, dtype=np.result_type(g, float))
        pos = self.nodes >= 0
        neg = ~pos
        if self.kind == "simpson":
            out[..., pos] = _cumsimpson(g[..., pos], self.nodes[pos])
            if neg.any():
                idx = np.nonzero(self.nodes <= 0)[0][::-1]
                part = _cumsimpson(g[..., idx], -self.nodes[idx])
                out[..., idx[1:]] = -part[..., 1:]
            return out
        S = _panel_integration_matrix(self.order)
        for side in (pos, neg):
            if not side.any():
                continue
            idx = np.nonzero(side)[0]
            if self.nodes[idx[0]] < 0:
                idx = idx[::-1]
            sign = 1.0 if self.nodes[idx[0]] > 0 else -1.0
            gs = g[..., idx]
            shape = gs.shape[:-1] + (-1, self.order)
            blocks = gs.reshape(shape)
            edges = self.panels
            h = (edges[1:] - edges[:-1]) / 2
            inner = np.einsum("ij,...pj->...pi", S, blocks) * h[:, None]
            full = (blocks * np.polynomial.legendre.leggauss(self.order)[1]).sum(-1) * h
            before = np.cumsum(full, axis=-1) - full
            res = inner + before[..., None]
            out[..., idx] = sign * res.reshape(gs.shape)
        return out


def _cumsimpson(g, t):
    if t.size == 1:
        return np.zeros(g.shape, dtype=np.result_type(g, float))
    if np.iscomplexobj(g):
        return _cumsimpson(g.real, t) + 1j * _cumsimpson(g.imag, t)
    return cumulative_simpson(g, dx=t[1] - t[0], axis=-1, initial=0)


_SMAT = {}


def _panel_integration_matrix(order):
    """S[i, j] = int_{-1}^{x_i} l_j(x) dx for the Gauss-Legendre Lagrange basis l_j."""
    if order not in _SMAT:
        x, w = np.polynomial.legendre.leggauss(order)
        V = np.polynomial.legendre.legvander(x, order - 1)
        # coefficients of l_j in the Legendre basis: V c_j = e_j
        C = np.linalg.inv(V)
        S = np.empty((order, order))
        for j in range(order):
            integ = np.polynomial.legendre.legint(C[:, j], lbnd=-1)
            S[:, j] = np.polynomial.legendre.legval(x, integ)
        _SMAT[order] = S
    return _SMAT[order]


@dataclass
class SpaceTimeField:
    """Complex field u(r, t) on a radial grid times a time grid (shape N_r x N_t)."""

    dimension: int
    rgrid: RadialGrid
    tgrid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.rgrid.size, self.tgrid.size):
            raise ValueError("field values must have shape (N_r, N_t)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def at(self, i):
        return RadialProfile(self.dimension, self.rgrid, self.values[:, i])

    def __add__(self, other):
        return SpaceTimeField(self.dimension, self.rgrid, self.tgrid, self.values + other.values)

    def __sub__(self, other):
        return SpaceTimeField(self.dimension, self.rgrid, self.tgrid, self.values - other.values)

    def __mul__(self, c):
        return SpaceTimeField(self.dimension, self.rgrid, self.tgrid, self.values * c)

    __rmul__ = __mul__

    def l2_per_time(self):
        """||u(., t)||_{L^2_x} at every time node."""
        g = self.rgrid
        dens = np.abs(self.values) ** 2 * (g.nodes ** (self.dimension - 1) * g.weights)[:, None]
        return np.sqrt(sphere_area(self.dimension) * dens.sum(axis=0))

    def to_csv(self, path):
        R, T = np.meshgrid(self.rgrid.nodes, self.tgrid.nodes, indexing="ij")
        v = self.values
        data = np.column_stack([R.ravel(), T.ravel(), v.real.ravel(), v.imag.ravel()])
        np.savetxt(path, data, delimiter=",", header="r,t,Re,Im", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, dimension, rgrid, tgrid):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        shape = (rgrid.size, tgrid.size)
        R = data[:, 0].reshape(shape)
        T = data[:, 1].reshape(shape)
        if not (np.allclose(R[:, 0], rgrid.nodes, rtol=1e-14, atol=0)
                and np.allclose(T[0], tgrid.nodes, rtol=1e-14, atol=1e-300)):
            raise ValueError("CSV nodes do not match the supplied grids")
        return cls(dimension, rgrid, tgrid, (data[:, 2] + 1j * data[:, 3]).reshape(shape))


def spectrum(f, rho_grid):
    return hankel_forward(f, rho_grid).values


def forward_batch(n, values, r_grid, rho_grid):
    """Fourier transforms of the columns of ``values`` (N_r x m) on ``rho_grid``."""
    from .radial import _check_resolution
    _check_resolution(r_grid, rho_grid, "hankel_forward")
    M = transform_matrix(n, rho_grid.nodes, r_grid.nodes)
    scale = (2 * math.pi) ** (n / 2) * r_grid.nodes ** (n - 1) * r_grid.weights
    return real_matmul(M, values * scale[:, None])


def evolve(f, t, a, rho_grid=None, guard=True):
    """e^{it(-Delta)^{a/2}} f.

    A scalar ``t`` returns a RadialProfile; a TimeGrid or an array of times
    returns a SpaceTimeField on ``f.grid``.
    """
    _check_a(a)
    rho_grid = _spectral_grid(f, rho_grid)
    g = spectrum(f, rho_grid)
    return evolve_spectrum(f.dimension, g, rho_grid, f.grid, t, a, guard)


def evolve_spectrum(n, g, rho_grid, r_grid, t, a, guard=True, band_rel=1e-14):
    """Evolution of the state with spectrum ``g`` (on ``rho_grid``), sampled on ``r_grid``.

    ``band_rel`` sets which spectral amplitudes the phase guard must resolve.
    """
    _check_a(a)
    scalar = np.ndim(t) == 0 and not isinstance(t, TimeGrid)
    tg = t if isinstance(t, TimeGrid) else None
    times = np.atleast_1d(tg.nodes if tg else np.asarray(t, dtype=float))
    rho = rho_grid.nodes
    if guard:
        phase_guard(rho_grid, r_grid.r_max, np.max(np.abs(times)), a, effective_band(g, rho, band_rel))
    E = np.exp(1j * np.multiply.outer(rho ** a, times))
    vals = inverse_batch(n, E * g[:, None], rho_grid, r_grid)
    if scalar:
        return RadialProfile(n, r_grid, vals[:, 0])
    if tg is None:
        tg = TimeGrid(times, np.zeros_like(times), "samples")
    return SpaceTimeField(n, r_grid, tg, vals)


@dataclass
class DuhamelResult:
    field: SpaceTimeField
    error_estimate: float


def duhamel(u0, F, a, out_times=None, rho_grid=None, tol=1e-6, guard=True, return_estimate=False,
            r_out=None, band_rel=1e-14):
    """Solution of i u_t + (-Delta)^{a/2} u = F, u(0) = u0, at the nodes of F's time grid.

    The retarded integral is accumulated in the spectral variable with the
    cumulative rule of ``F.tgrid``.  For Simpson grids the result is
    compared with the same rule at step 2h (Richardson pair); if
    ``out_times`` are given they must be nodes of the F grid at indices
    that are multiples of 4 (the source grid is at least 4x finer) and the
    solution is returned only there.  ``r_out`` is the radial grid of the
    output (default: the grid of ``u0``).
    """
    _check_a(a)
    n = u0.dimension
    rho_grid = _spectral_grid(u0, rho_grid)
    rho = rho_grid.nodes
    s = F.tgrid.nodes
    g0 = spectrum(u0, rho_grid)
    Fh = forward_batch(n, F.values, F.rgrid, rho_grid)
    if guard:
        band = max(effective_band(g0, rho, band_rel) if np.any(g0) else 0.0,
                   effective_band(Fh, rho, band_rel))
        r_top = (r_out or u0.grid).r_max
        phase_guard(rho_grid, r_top, np.max(np.abs(s)), a, band)
    rho_a = rho ** a
    integrand = np.exp(-1j * np.multiply.outer(rho_a, s)) * Fh
    cum = F.tgrid.cumulative(integrand)
    err = 0.0
    if F.tgrid.kind == "simpson" and s.size >= 5:
        coarse = _coarse_simpson(F.tgrid)
        if coarse is not None:
            sel, tg2 = coarse
            cum2 = tg2.cumulative(integrand[:, sel])
            diff = np.abs(cum[:, sel] - cum2)
            scale = np.abs(cum[:, sel]).max() + np.abs(g0).max()
            err = float(diff.max() / 15 / scale) if scale > 0 else 0.0
            if err > tol:
                raise ResolutionError(f"duhamel time quadrature self-estimate {err:.2e} exceeds {tol:.1e}")
    uh = np.exp(1j * np.multiply.outer(rho_a, s)) * (g0[:, None] - 1j * cum)
    tg = F.tgrid
    if out_times is not None:
        out_times = np.asarray(out_times, dtype=float)
        idx = np.array([int(np.argmin(np.abs(s - t))) for t in out_times])
        if not np.allclose(s[idx], out_times, rtol=0, atol=1e-12 * max(1.0, np.abs(s).max())):
            raise ValueError("output times must be nodes of the forcing time grid")
        zero = int(np.argmin(np.abs(s)))
        if F.tgrid.kind == "simpson" and np.any((idx - zero) % 4):
            raise ValueError("the forcing grid must be at least 4x finer than the output times")
        uh = uh[:, idx]
        tg = TimeGrid(out_times, np.zeros_like(out_times), "samples")
    r_out = r_out or u0.grid
    vals = inverse_batch(n, uh, rho_grid, r_out)
    field = SpaceTimeField(n, r_out, tg, vals)
    if return_estimate:
        return DuhamelResult(field, err)
    return field


def _coarse_simpson(tg):
    """Every other node of a Simpson grid, when that is again a Simpson grid."""
    steps = tg.meta.get("steps", 0)
    if steps % 4:
        return None
    t_max = tg.meta["t_max"]
    sym = tg.meta.get("symmetric", False)
    coarse = TimeGrid.simpson(t_max, steps // 2, sym)
    sel = np.arange(0, tg.size, 2)
    return sel, coarse


def free_gaussian_evolution(r, t, n=3, a=2):
    """Closed form of e^{it(-Delta)} e^{-r^2/2} for a = 2.

    With the multiplier e^{it rho^2}, completing the square gives
    (1 - 2it)^{-n/2} exp(-r^2 / (2 (1 - 2it))).
    """
    if a != 2:
        raise ValueError("closed form only for a = 2")
    z = 1 - 2j * t
    return z ** (-n / 2) * np.exp(-np.asarray(r) ** 2 / (2 * z))
