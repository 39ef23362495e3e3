"""Oscillatory integrals on the unit frequency annulus.

Three objects are measured here:

* I(R, t) = int e^{+-iR rho + i t rho^a} Phi(rho) d rho with Phi supported in
  [1/2, 2], whose size should decay like R^{-1/2} uniformly in t;
* the localized kernels

      K_jk(r, lam, t) = chi_{I_k}(r) r^{-nu} chi_{I_j}(lam) lam^{-nu}
                        int e^{i t rho^a} J_nu(r rho) J_nu(lam rho) rho phi(rho)^2 d rho,

  with nu = (n-2)/2, I_0 = (0, 1) and I_m = [2^{m-1}, 2^m);
* the operators T_k h(r, t) = chi_{I_k}(r) r^{-nu} int e^{i t rho^a} J_nu(r rho) phi(rho) h(rho) d rho.

All rho integrals use composite Gauss-Legendre panels on [1/2, 2] sized so
that the phase moves by at most PANEL_PHASE radians per panel.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, ResolutionError
from .fitting import FitReport, loglog_fit
from .propagator import phi
from .radial import RadialGrid
from .specfun import bessel_scaled

RHO_LO, RHO_HI = 0.5, 2.0
PANEL_ORDER = 16
PANEL_PHASE = 12.0
MIN_PANELS = 48
MAX_PANELS = 1 << 17
SELF_CONVERGENCE = 1e-6
_CHUNK = 1 << 22


def phi_squared(rho):
    return np.asarray(phi(rho)) ** 2


def _check_a(a):
    if not a > 1:
        raise HypothesisError(f"oscillatory estimates require a > 1, got a={a}")


def panel_count(rate, refine=1):
    """Panels on [1/2, 2] for a phase with |d/d rho| <= rate, rounded up to 48 * 2^q."""
    need = max(MIN_PANELS, math.ceil((RHO_HI - RHO_LO) * rate / PANEL_PHASE))
    q = max(0, math.ceil(math.log2(need / MIN_PANELS)))
    count = MIN_PANELS * 2 ** q * refine
    if count > MAX_PANELS:
        raise ResolutionError(f"oscillatory quadrature needs {count} panels (budget {MAX_PANELS})")
    return count


_RULES = {}


def rho_rule(panels):
    """Composite Gauss-Legendre nodes and weights on [1/2, 2]."""
    if panels not in _RULES:
        x, w = np.polynomial.legendre.leggauss(PANEL_ORDER)
        edges = np.linspace(RHO_LO, RHO_HI, panels + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        nodes = ((lo + hi) / 2 + (hi - lo) / 2 * x).ravel()
        weights = ((hi - lo) / 2 * w).ravel()
        if len(_RULES) > 16:
            _RULES.clear()
        _RULES[panels] = (nodes, weights)
    return _RULES[panels]


def phase_rate(R, t, a):
    """Upper bound R + a 2^{a-1} |t| for the rho-derivative of the phase on [1/2, 2]."""
    return abs(R) + a * 2.0 ** (a - 1) * np.abs(t)


# ---------------------------------------------------------------- van der Corput integrals

@dataclass
class OscIntegrand:
    """e^{sign i R rho + i t rho^a} Phi(rho) on [1/2, 2]."""

    amplitude: object = phi_squared
    R: float = 0.0
    t: float = 0.0
    a: float = 2.0
    sign: int = 1

    def __post_init__(self):
        _check_a(self.a)
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        check_support(self.amplitude)


def check_support(amplitude, tol=1e-14):
    """Reject amplitudes that do not vanish at the ends of [1/2, 2]."""
    probe = np.linspace(RHO_LO, RHO_HI, 257)
    vals = np.abs(np.asarray(amplitude(probe), dtype=complex))
    if not np.all(np.isfinite(vals)):
        raise ValueError("amplitude must be finite on [1/2, 2]")
    top = vals.max()
    if top > 0 and max(vals[0], vals[-1]) > tol * top:
        raise ValueError("amplitude must vanish at rho = 1/2 and rho = 2")


def _osc_batch(amplitude, R, ts, a, sign, refine=1):
    """I(R, t) for an array of times; panels are chosen per octave of the phase rate."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty(ts.shape, dtype=complex)
    counts = np.array([panel_count(phase_rate(R, t, a), refine) for t in ts])
    for count in np.unique(counts):
        idx = np.nonzero(counts == count)[0]
        rho, w = rho_rule(int(count))
        amp = np.asarray(amplitude(rho), dtype=complex) * w
        base = sign * R * rho
        rho_a = rho ** a
        step = max(1, _CHUNK // rho.size)
        for s in range(0, idx.size, step):
            sel = idx[s:s + step]
            out[sel] = np.exp(1j * (base[None, :] + np.multiply.outer(ts[sel], rho_a))) @ amp
    return out


def osc_integral(integrand):
    """int_{1/2}^{2} e^{sign i R rho + i t rho^a} Phi(rho) d rho.

    The value is recomputed with twice the panel density; a change larger
    than 1e-6 relative to int |Phi| raises ResolutionError.
    """
    f = integrand
    v1 = _osc_batch(f.amplitude, f.R, [f.t], f.a, f.sign)[0]
    v2 = _osc_batch(f.amplitude, f.R, [f.t], f.a, f.sign, refine=2)[0]
    scale = amplitude_l1(f.amplitude)
    if scale > 0 and abs(v1 - v2) > SELF_CONVERGENCE * scale:
        raise ResolutionError(f"oscillatory integral not converged: change {abs(v1 - v2):.2e}")
    return complex(v2)


def amplitude_l1(amplitude):
    rho, w = rho_rule(MIN_PANELS)
    return float(np.sum(np.abs(amplitude(rho)) * w))


def default_t_samples(R, per_octave=24):
    """t = 0 and +-|t| log-spaced over [R/8, 8R], the stationary-phase window."""
    pos = np.geomspace(R / 8, 8 * R, 6 * per_octave + 1)
    return np.concatenate([-pos[::-1], [0.0], pos])


def vdc_scan(amplitude=phi_squared, a=2.0, R_list=None, t_sampler=default_t_samples, signs=(1, -1)):
    """Fit log2 sup_t |I(R, t)| against log2 R.

    For each R the sup runs over ``t_sampler(R)`` and both signs of the
    linear phase.  The maximizing integral is recomputed at twice the panel
    density and must agree to 1e-6 relative to int |Phi|.
    """
    _check_a(a)
    check_support(amplitude)
    R_list = np.asarray(2.0 ** np.arange(4, 13) if R_list is None else R_list, dtype=float)
    if R_list.size < 8 or np.any(R_list <= 1):
        raise ValueError("vdc_scan needs at least 8 values of R > 1")
    lr = np.log2(R_list)
    if np.any(np.abs(lr - np.round(lr)) > 1e-12):
        raise ValueError("R values must be powers of two")
    scale = amplitude_l1(amplitude)
    sups, argt = [], []
    for R in R_list:
        ts = np.asarray(t_sampler(R), dtype=float)
        best = (-1.0, 0.0, 1)
        for sign in signs:
            vals = np.abs(_osc_batch(amplitude, R, ts, a, sign))
            i = int(np.argmax(vals))
            if vals[i] > best[0]:
                best = (float(vals[i]), float(ts[i]), sign)
        check = abs(_osc_batch(amplitude, R, [best[1]], a, best[2], refine=2)[0])
        if abs(check - best[0]) > SELF_CONVERGENCE * scale:
            raise ResolutionError(f"vdc_scan: panel refinement changed sup at R={R:g}")
        sups.append(best[0])
        argt.append(best[1])
    rep = loglog_fit(R_list, np.array(sups))
    rep.flags.append(f"argmax_t={','.join(f'{t:.6g}' for t in argt)}")
    return rep


# ---------------------------------------------------------------- kernels K_jk

@dataclass(frozen=True)
class DyadicAnnulusPair:
    """Annuli I_j (for lam) and I_k (for r)."""

    j: int
    k: int

    def __post_init__(self):
        if int(self.j) != self.j or int(self.k) != self.k or self.j < 0 or self.k < 0:
            raise ValueError("annulus indices must be integers >= 0")

    def swapped(self):
        return DyadicAnnulusPair(self.k, self.j)


def annulus(m):
    """(lo, hi) of I_m: (0, 1) for m = 0, [2^{m-1}, 2^m) otherwise."""
    return (0.0, 1.0) if m == 0 else (2.0 ** (m - 1), 2.0 ** m)


def in_annulus(x, m):
    lo, hi = annulus(m)
    x = np.asarray(x, dtype=float)
    return (x > lo) & (x < hi) if m == 0 else (x >= lo) & (x < hi)


def annulus_samples(m, per_octave=64):
    """Endpoint-clustered (Chebyshev) points in I_m; open at the excluded ends."""
    lo, hi = annulus(m)
    if m == 0:
        theta = np.pi * (np.arange(per_octave) + 0.5) / per_octave
    else:
        theta = np.pi * np.arange(per_octave) / per_octave
    return lo + (hi - lo) * (1 - np.cos(theta)) / 2


def kernel_t_samples(pair, per_octave=24):
    """t = 0 and t log-spaced over [2^-4, 2^{3 + max(j, k)}].

    Negative times are not needed: K(r, lam, -t) is the conjugate of K(r, lam, t).
    """
    top = 3 + max(pair.j, pair.k)
    return np.concatenate([[0.0], np.exp2(np.linspace(-4, top, (top + 4) * per_octave + 1))])


def _radial_factor(n, x, rho):
    """x^{-nu} J_nu(x rho) = rho^nu Lambda_nu(x rho), shape (len(x), len(rho))."""
    nu = (n - 2) / 2
    return rho[None, :] ** nu * bessel_scaled(nu, np.multiply.outer(x, rho))


def _kernel_block(pair, r, lam, ts, a, n, refine=1):
    """K on the tensor grid r x lam x ts (no indicator applied), shape (len(ts), len(r), len(lam))."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty((ts.size, len(r), len(lam)), dtype=complex)
    extra = np.max(r) + np.max(lam)
    counts = np.array([panel_count(phase_rate(extra, t, a), refine) for t in ts])
    for count in np.unique(counts):
        idx = np.nonzero(counts == count)[0]
        rho, w = rho_rule(int(count))
        Ar = _radial_factor(n, r, rho)
        Al = _radial_factor(n, lam, rho) * (w * rho * phi_squared(rho))[None, :]
        rho_a = rho ** a
        for i in idx:
            e = np.exp(1j * ts[i] * rho_a)
            out[i] = (Ar * e.real) @ Al.T + 1j * ((Ar * e.imag) @ Al.T)
    return out


def kernel_K(pair, r, lam, t, a=2.0, n=2):
    """K_jk(r, lam, t) for arrays r, lam, t broadcast together."""
    _check_a(a)
    if n < 2:
        raise ValueError("dimension must be >= 2")
    r, lam, t = np.broadcast_arrays(np.asarray(r, float), np.asarray(lam, float), np.asarray(t, float))
    shape = r.shape
    r, lam, t = r.ravel(), lam.ravel(), t.ravel()
    out = np.zeros(r.shape, dtype=complex)
    inside = in_annulus(r, pair.k) & in_annulus(lam, pair.j)
    for i in np.nonzero(inside)[0]:
        out[i] = _kernel_block(pair, [r[i]], [lam[i]], [t[i]], a, n)[0, 0, 0]
    return out.reshape(shape) if shape else complex(out[0])


@dataclass
class SupNorm:
    value: float
    r: float
    lam: float
    t: float
    pair: DyadicAnnulusPair
    samples: int
    envelope_constant: float

    def to_dict(self):
        return {"j": self.pair.j, "k": self.pair.k, "sup": self.value, "r": self.r, "lam": self.lam,
                "t": self.t, "samples": self.samples, "envelope_constant": self.envelope_constant}


def envelope(x, n):
    return np.minimum(1.0, np.asarray(x, float) ** (-(n - 1) / 2))


def kernel_supnorm(pair, a=2.0, n=2, per_octave=64, t_per_octave=24):
    """max |K_jk| over the sample grid: a lower bound for the true sup-norm.

    Also records max |K| / (min(1, r^{-(n-1)/2}) min(1, lam^{-(n-1)/2})), the
    constant of the pointwise envelope bound on the same samples.  The
    maximizing sample is recomputed with doubled panel density.
    """
    _check_a(a)
    r = annulus_samples(pair.k, per_octave)
    lam = annulus_samples(pair.j, per_octave)
    ts = kernel_t_samples(pair, t_per_octave)
    mags = np.abs(_kernel_block(pair, r, lam, ts, a, n))
    i, p, q = np.unravel_index(int(np.argmax(mags)), mags.shape)
    top = float(mags[i, p, q])
    check = abs(_kernel_block(pair, [r[p]], [lam[q]], [ts[i]], a, n, refine=2)[0, 0, 0])
    if abs(check - top) > SELF_CONVERGENCE * max(top, 1e-300):
        raise ResolutionError(f"kernel sup for {pair} changed by {abs(check - top):.2e} under refinement")
    env = np.multiply.outer(envelope(r, n), envelope(lam, n))
    cenv = float(np.max(mags / env[None]))
    return SupNorm(top, float(r[p]), float(lam[q]), float(ts[i]), pair, int(mags.size), cenv)


def predicted_exponent(pair, n):
    """log2 of the kernel bound: -(n-1)(j+k)/2 if |j-k| <= 1, else -(2n-1)(j+k)/4 - |j-k|/4."""
    j, k = pair.j, pair.k
    if abs(j - k) <= 1:
        return -(n - 1) * (j + k) / 2
    return -(2 * n - 1) * (j + k) / 4 - abs(j - k) / 4


@dataclass
class KernelScan:
    """Kernel sup-norms per pair with fits for the two regimes."""

    rows: list
    diagonal: FitReport = None
    offdiagonal: FitReport = None
    constant: float = float("nan")
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows],
                "diagonal": None if self.diagonal is None else self.diagonal.to_dict(),
                "offdiagonal": None if self.offdiagonal is None else self.offdiagonal.to_dict(),
                "constant": self.constant, "flags": list(self.flags)}


def offdiagonal_pairs(max_sum=10, gaps=(2, 3, 4, 5)):
    return [DyadicAnnulusPair(j, k) for j in range(max_sum + 1) for k in range(max_sum + 1)
            if abs(j - k) in gaps and j + k <= max_sum]


def diagonal_pairs(lo=1, hi=7, neighbours=True):
    """(j, j) for lo <= j <= hi, plus (j, j+1) when ``neighbours``."""
    out = [DyadicAnnulusPair(j, j) for j in range(lo, hi + 1)]
    if neighbours:
        out += [DyadicAnnulusPair(j, j + 1) for j in range(lo, hi)]
    return sorted(out, key=lambda p: (p.j + p.k, p.j))


def kernel_decay_scan(a=2.0, n=2, jk_set=None, per_octave=64, t_per_octave=24, threads=1):
    """Sup-norms of K_jk over a set of pairs, fitted per regime.

    Diagonal regime (|j-k| <= 1): log2 sup against j+k, whose slope should
    be about -(n-1)/2.  Off-diagonal regime: log2 sup against the predicted
    exponent; ``constant`` is the smallest C with sup <= C 2^{predicted}
    on every sampled pair.  Pairs (j, k) and (k, j) share one evaluation
    through the symmetry K_jk(r, lam, t) = K_kj(lam, r, t).
    """
    from .parallel import ordered_map
    jk_set = list(jk_set) if jk_set is not None else diagonal_pairs() + offdiagonal_pairs()
    unique = sorted({(min(p.j, p.k), max(p.j, p.k)) for p in jk_set})
    results = ordered_map(lambda jk: kernel_supnorm(DyadicAnnulusPair(*jk), a, n, per_octave, t_per_octave),
                          unique, threads)
    table = dict(zip(unique, results))
    rows = []
    for p in jk_set:
        s = table[(min(p.j, p.k), max(p.j, p.k))]
        if (p.j, p.k) != (s.pair.j, s.pair.k):
            s = SupNorm(s.value, s.lam, s.r, s.t, p, s.samples, s.envelope_constant)
        rows.append(s)
    scan = KernelScan(rows)
    diag = [s for s in rows if abs(s.pair.j - s.pair.k) <= 1 and s.pair.j + s.pair.k > 0]
    off = [s for s in rows if abs(s.pair.j - s.pair.k) > 1]
    if len(diag) >= 8:
        scan.diagonal = loglog_fit(np.exp2([s.pair.j + s.pair.k for s in diag]), [s.value for s in diag])
    if off:
        pred = np.array([predicted_exponent(s.pair, n) for s in off])
        meas = np.array([s.value for s in off])
        scan.constant = float(np.max(meas / np.exp2(pred)))
        if len(off) >= 8:
            scan.offdiagonal = loglog_fit(np.exp2(pred), meas)
    return scan


# ---------------------------------------------------------------- operators T_k

TK_PANELS = 96


def band_limited_noise(rng, modes=16):
    """Random complex h on [1/2, 2]: a cosine series with Gaussian coefficients."""
    c = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
    c /= np.sqrt(1.0 + np.arange(modes))

    def h(rho):
        x = (np.asarray(rho, float) - RHO_LO) / (RHO_HI - RHO_LO)
        return np.cos(np.pi * np.outer(x, np.arange(modes))) @ c
    return h


def _annulus_rule(k, per_unit=4):
    """Gauss-Legendre nodes/weights on I_k with panels of length <= 1/per_unit (at least 4)."""
    lo, hi = annulus(k)
    panels = max(4, math.ceil((hi - lo) * per_unit))
    x, w = np.polynomial.legendre.leggauss(PANEL_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    a_, b_ = edges[:-1, None], edges[1:, None]
    return ((a_ + b_) / 2 + (b_ - a_) / 2 * x).ravel(), ((b_ - a_) / 2 * w).ravel()


def tk_multiplier(k, a, n, panels=TK_PANELS):
    """(rho_i, w_i, m_k(rho_i)) with ||T_k h||^2 = (2 pi / a) int |h|^2 m_k d rho.

    m_k(rho) = phi(rho)^2 rho^{1-a} int_{I_k} r J_nu(r rho)^2 dr follows from
    Plancherel in t after the substitution sigma = rho^a.
    """
    _check_a(a)
    rho, w = rho_rule(panels)
    r, wr = _annulus_rule(k)
    A = _radial_factor(n, r, rho)  # r^{-nu} J_nu(r rho)
    inner = (wr * r ** (n - 1)) @ (A ** 2)
    return rho, w, phi_squared(rho) * rho ** (1 - a) * inner


def tk_norm_plancherel(h, k, a=2.0, n=2, panels=TK_PANELS):
    """||T_k h||_{L^2_t L^2(r^{n-1} dr)} through the multiplier m_k."""
    rho, w, m = tk_multiplier(k, a, n, panels)
    return math.sqrt(2 * math.pi / a * float(np.sum(np.abs(h(rho)) ** 2 * m * w)))


def tk_apply(h, k, a, n, r_grid, t_nodes, panels=None):
    """T_k h on r_grid x t_nodes as a SpaceTimeField (zero outside I_k)."""
    from .propagator import SpaceTimeField, TimeGrid
    _check_a(a)
    t_nodes = t_nodes if isinstance(t_nodes, TimeGrid) else TimeGrid(
        np.asarray(t_nodes, float), np.zeros(np.size(t_nodes)), "samples")
    r = r_grid.nodes
    inside = in_annulus(r, k)
    vals = np.zeros((r.size, t_nodes.size), dtype=complex)
    if inside.any():
        rate = phase_rate(r[inside].max(), np.abs(t_nodes.nodes).max(), a)
        rho, w = rho_rule(panels or panel_count(rate))
        A = _radial_factor(n, r[inside], rho) * (w * phi(rho) * h(rho))[None, :]
        E = np.exp(1j * np.multiply.outer(rho ** a, t_nodes.nodes))
        vals[inside] = A @ E
    return SpaceTimeField(n, r_grid, t_nodes, vals)


def tk_norm_direct(h, k, a=2.0, n=2, t_max=256.0, dt=0.125):
    """||T_k h|| by direct quadrature: trapezoid in t on [-t_max, t_max], Gauss in r over I_k.

    T_k h(r, .) has its t-spectrum in [2^-a, 2^a], so the trapezoid rule in t
    is exact up to truncation at |t| = t_max once dt < pi / 2^a.
    """
    lo, hi = annulus(k)
    r_grid = RadialGrid(hi, (hi - lo) / max(4, math.ceil(hi - lo)) if k else 0.25)
    steps = int(round(2 * t_max / dt))
    ts = np.linspace(-t_max, t_max, steps + 1)
    field_ = tk_apply(h, k, a, n, r_grid, ts)
    wr = r_grid.weights * r_grid.nodes ** (n - 1)
    dens = (np.abs(field_.values) ** 2 * wr[:, None]).sum(axis=0)
    return math.sqrt(float(np.sum(dens) * dt))


def h_norm(h, panels=TK_PANELS):
    rho, w = rho_rule(panels)
    return math.sqrt(float(np.sum(np.abs(h(rho)) ** 2 * w)))


@dataclass
class TkEstimate:
    k: int
    norm: float
    exact: float
    trials: int


def tk_operator_norm(k, a=2.0, n=2, trials=32, refinements=5, seed=0, panels=TK_PANELS):
    """Randomized power iteration for ||T_k||, a lower bound of the operator norm.

    T_k^* T_k is multiplication by (2 pi / a) m_k on L^2([1/2, 2]), so each
    refinement step is h <- m_k h.  ``exact`` is the peak of the multiplier
    on the rule's nodes, for comparison.
    """
    rho, w, m = tk_multiplier(k, a, n, panels)
    rng = np.random.default_rng([seed, k])
    best = 0.0
    for _ in range(trials):
        h = band_limited_noise(rng)(rho)
        for _ in range(refinements):
            h = m * h
            h /= math.sqrt(float(np.sum(np.abs(h) ** 2 * w)))
        num = 2 * math.pi / a * float(np.sum(np.abs(h) ** 2 * m * w))
        den = float(np.sum(np.abs(h) ** 2 * w))
        best = max(best, math.sqrt(num / den))
    return TkEstimate(k, best, math.sqrt(2 * math.pi / a * float(m.max())), trials)


def tk_norm_scan(a=2.0, n=2, k_list=range(9), trials=32, refinements=5, seed=0):
    """Fit log2 ||T_k|| against k (as log2 of 2^k)."""
    _check_a(a)
    ests = [tk_operator_norm(k, a, n, trials, refinements, seed) for k in k_list]
    rep = loglog_fit(np.exp2([e.k for e in ests]), [e.norm for e in ests])
    return rep, ests
