"""Integrals of radial functions over axis-parallel cubes in R^2 and R^3.

For a radial g and a cube Q,

    int_Q g(|y|) dy = int_0^inf g(rho) A_Q(rho) drho,

where A_Q(rho) is the (n-1)-dimensional measure of the sphere |y| = rho
inside Q.  A_Q is computed exactly: in the plane it is rho times the angle
of the circle inside the square; in space, slicing the sphere by planes
z = const gives A_Q(rho) = rho int Theta(sqrt(rho^2 - z^2)) dz, with Theta
the planar angle function of the xy-face (Archimedes: the area element of
the sphere in z is rho dz dtheta).

A_Q is piecewise smooth with square-root kinks at the distances from the
origin to the faces, edges and vertices of Q, so the rho integral is split
there and each piece uses a cosine-mapped Gauss rule, which absorbs the
square-root endpoint behaviour.

Rules are built for the unit cube (side 1) with a given center and are
reused for every dilate of it:  int_{Q(s c, s)} g = s^n sum_i w_i g(s rho_i).
"""

import itertools
import math

import numpy as np

_GL_CACHE = {}


def gauss(m):
    if m not in _GL_CACHE:
        _GL_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GL_CACHE[m]


def cosine_rule(lo, hi, m):
    """Gauss rule on [lo, hi] after x = lo + (hi - lo)(1 - cos theta)/2.

    ``lo`` and ``hi`` may be arrays (one interval per row); returns nodes and
    weights of shape (..., m).
    """
    x, w = gauss(m)
    theta = (x + 1) * (np.pi / 2)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    nodes = lo + (hi - lo) * (1 - np.cos(theta)) / 2
    weights = (hi - lo) / 2 * np.sin(theta) * (np.pi / 2) * w
    return nodes, weights


def _arc_intervals_x(R, lo, hi):
    """Angles theta in (-pi, pi] with R cos(theta) in [lo, hi], as two intervals."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.clip(lo / R, -1.0, 1.0)
        b = np.clip(hi / R, -1.0, 1.0)
    empty = (hi < -R) | (lo > R)
    t_lo = np.arccos(b)
    t_hi = np.arccos(a)
    t_lo = np.where(empty, 0.0, t_lo)
    t_hi = np.where(empty, 0.0, t_hi)
    return [(t_lo, t_hi), (-t_hi, -t_lo)]


def _arc_intervals_y(R, lo, hi):
    """Angles theta in (-pi, pi] with R sin(theta) in [lo, hi], as three intervals."""
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.clip(lo / R, -1.0, 1.0)
        d = np.clip(hi / R, -1.0, 1.0)
    empty = (hi < -R) | (lo > R)
    s_lo = np.arcsin(c)
    s_hi = np.arcsin(d)
    s_lo = np.where(empty, 0.0, s_lo)
    s_hi = np.where(empty, 0.0, s_hi)
    # mirror interval [pi - s_hi, pi - s_lo] split at pi
    m_lo, m_hi = np.pi - s_hi, np.pi - s_lo
    first = (np.minimum(m_lo, np.pi), np.minimum(m_hi, np.pi))
    second = (np.maximum(m_lo, np.pi) - 2 * np.pi, np.maximum(m_hi, np.pi) - 2 * np.pi)
    return [(s_lo, s_hi), first, second]


def square_angle(R, x0, x1, y0, y1):
    """Angle (in [0, 2 pi]) of the circle of radius R inside [x0,x1] x [y0,y1]."""
    R = np.asarray(R, dtype=float)
    total = np.zeros(R.shape)
    xs = _arc_intervals_x(R, x0, x1)
    ys = _arc_intervals_y(R, y0, y1)
    for a_lo, a_hi in xs:
        for b_lo, b_hi in ys:
            total += np.maximum(0.0, np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo))
    return np.where(R > 0, total, 0.0)


def _critical_distances(bounds):
    """Distances from 0 to the affine pieces of the boundary of a box (superset)."""
    choices = [(0.0, lo, hi) for lo, hi in bounds]
    out = set()
    for combo in itertools.product(*choices):
        out.add(math.sqrt(sum(c * c for c in combo)))
    return np.array(sorted(out))


def graded(points, ratio=2.0):
    """Sorted points with geometric fill-ins so consecutive positive points differ by <= ratio."""
    pts = np.unique(np.asarray(points, dtype=float))
    out = [pts[0]] if pts.size else []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if lo > 0 and hi / lo > ratio:
            k = int(math.ceil(math.log(hi / lo) / math.log(ratio)))
            out.extend(lo * (hi / lo) ** (np.arange(1, k) / k))
        out.append(hi)
    return np.array(out)


def distance_range(bounds):
    """(min, max) of |y| over the box."""
    dmin = math.sqrt(sum(0.0 if lo <= 0 <= hi else min(lo * lo, hi * hi) for lo, hi in bounds))
    dmax = math.sqrt(sum(max(lo * lo, hi * hi) for lo, hi in bounds))
    return dmin, dmax


def shell_area(rho, bounds, m_z=12):
    """A_Q(rho): measure of the sphere of radius rho inside the box ``bounds``."""
    rho = np.asarray(rho, dtype=float)
    n = len(bounds)
    if n == 2:
        (x0, x1), (y0, y1) = bounds
        return rho * square_angle(rho, x0, x1, y0, y1)
    if n != 3:
        raise ValueError("cube geometry is implemented for n = 2 and n = 3")
    (x0, x1), (y0, y1), (z0, z1) = bounds
    planar = graded(_critical_distances([(x0, x1), (y0, y1)]))
    r = rho.ravel()
    lo = np.maximum(z0, -r)
    hi = np.minimum(z1, r)
    zc = np.sqrt(np.maximum(r[:, None] ** 2 - planar[None, :] ** 2, 0.0))
    cuts = np.concatenate([lo[:, None], hi[:, None], zc, -zc], axis=1)
    cuts = np.sort(np.clip(cuts, lo[:, None], np.maximum(hi, lo)[:, None]), axis=1)
    zn, zw = cosine_rule(cuts[:, :-1], cuts[:, 1:], m_z)
    R = np.sqrt(np.maximum(r[:, None, None] ** 2 - zn ** 2, 0.0))
    theta = square_angle(R, x0, x1, y0, y1)
    out = r * np.sum(zw * theta, axis=(1, 2))
    return out.reshape(rho.shape)


class CubeRule:
    """Radial quadrature for the unit cube centered at ``center``.

    ``nodes``/``weights`` integrate g(|y|) over the part of the cube outside
    the ball of radius ``head`` (``head`` > 0 only when the cube contains
    the origin).  The head ball is covered by geometric shells down to
    ``head * 2^-depth``; the remaining tiny ball is left to the caller,
    which knows the small-radius behaviour of g.
    """

    def __init__(self, center, breaks=(), m_rho=16, m_z=16, depth=12):
        center = np.asarray(center, dtype=float)
        self.center = center
        n = center.size
        self.n = n
        bounds = [(c - 0.5, c + 0.5) for c in center]
        dmin, dmax = distance_range(bounds)
        crit = _critical_distances(bounds)
        cuts = [dmin, dmax] + [d for d in crit if dmin < d < dmax] + [b for b in breaks if dmin < b < dmax]
        nodes, weights = [], []
        omega = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        self.head = 0.0
        self.tiny = 0.0
        if dmin == 0.0:
            inner = min(min(abs(lo), abs(hi)) for lo, hi in bounds)
            self.head = inner
            edges = inner * 2.0 ** -np.arange(depth, -1, -1)
            ibreaks = sorted(b for b in breaks if edges[0] < b < inner)
            edges = np.unique(np.concatenate([edges, ibreaks]))
            x, w = gauss(m_rho)
            lo, hi = edges[:-1, None], edges[1:, None]
            rn = (lo + hi) / 2 + (hi - lo) / 2 * x
            nodes.append(rn.ravel())
            weights.append(((hi - lo) / 2 * w * omega * rn ** (n - 1)).ravel())
            self.tiny = float(edges[0])
            cuts = [c for c in cuts if c > inner] + [inner]
        cuts = graded(cuts)
        if cuts.size >= 2:
            rn, rw = cosine_rule(cuts[:-1], cuts[1:], m_rho)
            rn = rn.ravel()
            area = shell_area(rn, bounds, m_z)
            nodes.append(rn)
            weights.append(rw.ravel() * area)
        self.nodes = np.concatenate(nodes)
        self.weights = np.concatenate(weights)
        self.omega = omega
        self.dmin, self.dmax = dmin, dmax

    def integrate(self, g, side, tiny_model=None):
        """int over Q(side * center, side) of g(|y|) dy.

        ``g`` maps radii to values and may return a 2-D array (radii on the
        first axis).  ``tiny_model(eps)`` must return
        omega * int_0^eps g(rho) rho^{n-1} drho for the innermost ball; if it
        is None the ball is approximated with g at its outer radius.
        """
        vals = g(side * self.nodes)
        total = np.tensordot(self.weights, vals, axes=(0, 0)) * side ** self.n
        if self.tiny > 0:
            eps = side * self.tiny
            if tiny_model is not None:
                total = total + tiny_model(eps)
            else:
                total = total + g(np.array([eps]))[0] * self.omega * eps ** self.n / self.n
        return total


_RULES = {}


def cube_rule(center, breaks=()):
    key = (tuple(np.round(np.asarray(center, dtype=float), 12)), tuple(np.round(breaks, 12)))
    rule = _RULES.get(key)
    if rule is None:
        if len(_RULES) > 20000:
            _RULES.clear()
        rule = CubeRule(center, breaks)
        _RULES[key] = rule
    return rule


def tensor_nodes(centers, m=8):
    """Tensor Gauss nodes for unit cubes at ``centers`` (k, n): radii (k, m^n) and weights (m^n,)."""
    centers = np.atleast_2d(centers)
    n = centers.shape[1]
    x, w = gauss(m)
    x = x / 2
    w = w / 2
    grids = np.meshgrid(*([x] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.meshgrid(*([w] * n), indexing="ij"), axis=0).ravel()
    radii = np.linalg.norm(centers[:, None, :] + pts[None, :, :], axis=-1)
    return radii, wts
