"""Validation suites: one function per measured law, returning rows, a summary and pass/fail checks.

The command line harness runs one suite per subcommand; the acceptance
tests call the same functions with their default arguments.
"""

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from . import estimates as est
from . import oscint, wellposed
from .propagator import TimeGrid, SpaceTimeField, duhamel, evolve_spectrum, free_gaussian_evolution
from .radial import (RadialGrid, RadialProfile, default_rho_grid, gaussian, hankel_forward, hankel_inverse,
                     l2_norm, spectral_l2_norm)
from .specfun import BesselOrder, remainder_slope_scan
from .weights import (CubeLattice, DilatingPowerWeight, McParams, a2_constant, bump_weight, default_x_grid,
                      global_lp_norm, maximal_function, mc_norm, mc_norm_of_maximal, power_weight,
                      scaled_lattice, truncated_power_weight)


@dataclass
class Check:
    name: str
    value: float
    bound: str
    passed: bool
    criterion: int = None

    def to_dict(self):
        v = self.value
        return {"name": self.name, "value": None if v is None or (isinstance(v, float) and not math.isfinite(v))
                else v, "bound": self.bound, "pass": bool(self.passed)}


@dataclass
class SuiteResult:
    criterion: int
    rows: list
    summary: dict
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def by_criterion(self):
        """{criterion: [checks]}; a check without its own tag belongs to the suite's criterion."""
        out = {}
        for c in self.checks:
            out.setdefault(c.criterion or self.criterion, []).append(c)
        return out

    def acceptance(self):
        return {str(k): {"pass": all(c.passed for c in v), "checks": [c.to_dict() for c in v]}
                for k, v in sorted(self.by_criterion().items())}


def _within(name, value, lo, hi):
    ok = value is not None and math.isfinite(value) and lo <= value <= hi
    return Check(name, value, f"[{lo:g}, {hi:g}]", ok)


def _below(name, value, hi):
    ok = value is not None and math.isfinite(value) and value < hi
    return Check(name, value, f"< {hi:g}", ok)


def _timed(fn):
    @functools.wraps(fn)
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    return run


# ---------------------------------------------------------------- special functions

@_timed
def bessel_suite(orders=(0.0, 1.0, 1.5, 2.0), r_min=10.0, r_max=1000.0, samples=64, target=-2.5, tol=0.1):
    """Decay of the remainder of the two-term Bessel expansion."""
    rows, checks = [], []
    for nu in orders:
        rep = remainder_slope_scan(BesselOrder(nu), r_min, r_max, samples)
        d = rep.to_dict()
        rows.append({"nu": nu, "slope": d["slope"], "intercept": d["intercept"],
                     "max_residual": d["max_residual"], "samples": d["samples"], "flags": ";".join(d["flags"])})
        checks.append(_within(f"slope nu={nu:g}", d["slope"], target - tol, target + tol))
    return SuiteResult(1, rows, {"slopes": {str(r["nu"]): r["slope"] for r in rows}}, checks)


# ---------------------------------------------------------------- transforms and propagator

def _gaussian_profile(n, sigma=1.0, r_max=12.0, panel=0.25):
    grid = RadialGrid(r_max, panel)
    return RadialProfile(n, grid, np.exp(-grid.nodes ** 2 / (2 * sigma ** 2)))


@_timed
def transform_suite(dimensions=(2, 3), sigmas=(0.5, 1.0, 2.0)):
    """Hankel transforms of Gaussians: closed form, Plancherel and round trip."""
    rows, checks = [], []
    worst = {"closed_form": 0.0, "plancherel": 0.0, "round_trip": 0.0}
    for n in dimensions:
        for s in sigmas:
            f = _gaussian_profile(n, s, r_max=16 * s, panel=min(0.25, s / 4))
            rho = default_rho_grid(f.grid)
            g = hankel_forward(f, rho)
            exact = (2 * math.pi) ** (n / 2) * s ** n * np.exp(-(s * rho.nodes) ** 2 / 2)
            cf = float(np.max(np.abs(g.values - exact)) / np.max(exact))
            pl = abs(spectral_l2_norm(g) / l2_norm(f) - 1)
            back = hankel_inverse(g, f.grid)
            rt = float(np.max(np.abs(back.values - f.values)))
            rows.append({"n": n, "sigma": s, "closed_form": cf, "plancherel": pl, "round_trip": rt})
            for k, v in (("closed_form", cf), ("plancherel", pl), ("round_trip", rt)):
                worst[k] = max(worst[k], v)
    checks = [_below("closed form (max rel)", worst["closed_form"], 1e-10),
              _below("Plancherel", worst["plancherel"], 1e-6),
              _below("round trip (max abs)", worst["round_trip"], 1e-8)]
    return SuiteResult(6, rows, worst, checks)


@_timed
def propagator_suite(n=3, a_values=(1.5, 2.0, 3.0), times=(0.25, 1.0, 2.0)):
    """Unitarity, the a = 2 Gaussian closed form, Plancherel and a manufactured Duhamel solution."""
    rows, summary = [], {}
    f = gaussian(1.0)
    worst_unit = 0.0
    for a in a_values:
        setup = est.make_setup([f], n, a, est.Resolution(t_max=max(times)))
        g = est.data_spectrum(f, setup)
        norm0 = math.sqrt(est.spectral_norm2(n, setup.rho, g))
        tg = TimeGrid(np.array(times, float), np.zeros(len(times)), "samples")
        fld = evolve_on(setup, g, tg)
        l2 = fld.l2_per_time()
        for t, v in zip(times, l2):
            dev = abs(v / norm0 - 1)
            worst_unit = max(worst_unit, dev)
            rows.append({"check": "unitarity", "a": a, "t": t, "value": v / norm0, "deviation": dev})
    summary["unitarity"] = worst_unit

    setup = est.make_setup([f], n, 2.0, est.Resolution(t_max=max(times)))
    g = est.data_spectrum(f, setup)
    tg = TimeGrid(np.array(times, float), np.zeros(len(times)), "samples")
    fld = evolve_on(setup, g, tg)
    r = setup.r_eval.nodes
    worst_cf = 0.0
    for i, t in enumerate(times):
        exact = free_gaussian_evolution(r, t, n, 2)
        dev = float(np.max(np.abs(fld.values[:, i] - exact)) / np.max(np.abs(exact)))
        worst_cf = max(worst_cf, dev)
        rows.append({"check": "gaussian closed form", "a": 2.0, "t": t, "value": dev, "deviation": dev})
    summary["closed_form"] = worst_cf

    prof = _gaussian_profile(n, 1.0)
    pl = abs(spectral_l2_norm(hankel_forward(prof, default_rho_grid(prof.grid))) / l2_norm(prof) - 1)
    summary["plancherel"] = pl
    rows.append({"check": "plancherel", "a": None, "t": None, "value": pl, "deviation": pl})

    md = manufactured_duhamel(n)
    summary["manufactured"] = md
    rows.append({"check": "manufactured duhamel", "a": 2.0, "t": None, "value": md, "deviation": md})
    checks = [_below("unitarity", worst_unit, 1e-6), _below("a=2 Gaussian closed form", worst_cf, 1e-4),
              _below("Plancherel", pl, 1e-6), _below("manufactured Duhamel", md, 1e-4)]
    return SuiteResult(6, rows, summary, checks)


def evolve_on(setup, g, tgrid):
    return evolve_spectrum(setup.n, g, setup.rho, setup.r_eval, tgrid, setup.a,
                           band_rel=setup.resolution.band_rel)


def manufactured_duhamel(n=3, t_max=2.0):
    """Max relative error of duhamel for u = (1 + t^2) e^{-r^2/2}, a = 2.

    The forcing is F = i u_t + (-Delta) u = (2 i t + (1 + t^2)(n - r^2)) e^{-r^2/2}.
    """
    grid = RadialGrid(12.0, 0.25)
    r = grid.nodes
    g = np.exp(-r ** 2 / 2)
    u0 = RadialProfile(n, grid, g)
    tg = TimeGrid.graded(t_max, levels=4, order=8, max_panel=0.125)
    t = tg.nodes
    F = (2j * t[None, :] + (1 + t[None, :] ** 2) * (n - r[:, None] ** 2)) * g[:, None]
    sol = duhamel(u0, SpaceTimeField(n, grid, tg, F), 2.0, rho_grid=RadialGrid(16.0, 0.125))
    exact = (1 + t[None, :] ** 2) * g[:, None]
    return float(np.max(np.abs(sol.values - exact)) / np.max(np.abs(exact)))


# ---------------------------------------------------------------- weights

def weight_suite(n=3, a=2.0):
    """Named weights with the Morrey-Campanato exponent alpha they are tested at."""
    al = a
    gt = al / (n + a)
    return [
        ("power", power_weight(n * gt, gt), al),
        ("power-spatial", power_weight(al - a * 0.3, 0.3), al),
        ("truncated-power", truncated_power_weight(n * gt, gt, 4.0, 16.0), al),
        ("bump", bump_weight(1.0, 1.0), al),
        ("dilating", DilatingPowerWeight(al - a * gt, gt, a), al),
    ]


SMALL_LATTICE = CubeLattice(-2, 2, extent_x=1, extent_t=1)


@_timed
def mcnorm_suite(n=3, a=2.0, p=2.0, q=1.5, lattice=SMALL_LATTICE, endpoint_lattice=CubeLattice(-2, 3)):
    """Scaling identity, q < p monotonicity per cube, and the endpoint p = (n+a)/alpha."""
    rows = []
    worst_scale, worst_mono = 0.0, -math.inf
    for name, w, al in weight_suite(n, a):
        params = McParams(al, p, a, n)
        base = mc_norm(w, params, lattice, keep_cubes=True)
        for k in (-1, 1):
            lam = 2.0 ** -k
            other = mc_norm(w.dilate(lam, a), params, scaled_lattice(lattice, k, a))
            dev = abs(other.value / (lam ** -al * base.value) - 1)
            worst_scale = max(worst_scale, dev)
            rows.append({"check": "scaling", "weight": name, "param": lam, "value": other.value, "deviation": dev})
        lower = mc_norm(w, McParams(al, q, a, n), lattice, keep_cubes=True)
        excess = max(float(np.max(lower.cube_values[m] - base.cube_values[m] * (1 + 1e-12)))
                     for m in lattice.scales)
        worst_mono = max(worst_mono, excess)
        rows.append({"check": "monotonicity", "weight": name, "param": q, "value": lower.value,
                     "deviation": excess})
    ends = []
    for name, w in (("bump", bump_weight(1.0, 1.0)), ("bump-wide", bump_weight(2.0, 3.0))):
        al = 2.0
        pe = (n + a) / al
        val = mc_norm(w, McParams(al, pe, a, n), endpoint_lattice).value
        ref = global_lp_norm(w, pe, n)
        dev = abs(val / ref - 1)
        ends.append(dev)
        rows.append({"check": "endpoint", "weight": name, "param": pe, "value": val, "deviation": dev})
    summary = {"scaling": worst_scale, "monotonicity_excess": worst_mono, "endpoint": max(ends)}
    checks = [_below("scaling identity", worst_scale, 1e-12),
              Check("q<p cube-by-cube", worst_mono, "<= 0", worst_mono <= 0),
              _below("endpoint vs global L^p", max(ends), 0.05)]
    return SuiteResult(7, rows, summary, checks)


@_timed
def maximal_suite(n=3, a=2.0, p=2.0, rho=1.25, lattice=SMALL_LATTICE, a2_lattice=CubeLattice(-3, 3),
                  slice_times=(0.25, 1.0, 4.0)):
    """Maximal-weight norms, w_* >= w, and A_2 constants of w_* slices."""
    rows = []
    worst_delta, worst_ratio, worst_gap = 0.0, 0.0, math.inf
    suite = [(nm, w, al) for nm, w, al in weight_suite(n, a) if w.separable]
    for name, w, al in suite:
        params = McParams(al, p, a, n)
        ratio, top, bot = mc_norm_of_maximal(w, params, lattice, rho, default_x_grid(per_octave=4))
        fine, _, _ = mc_norm_of_maximal(w, params, lattice, rho, default_x_grid(per_octave=8))
        delta = abs(ratio - fine) / fine
        worst_delta = max(worst_delta, delta)
        worst_ratio = max(worst_ratio, ratio)
        rows.append({"check": "mc of maximal", "weight": name, "t": None, "value": ratio, "extra": delta})
    x = default_x_grid(per_octave=8)
    a2 = []
    dil = DilatingPowerWeight(1.0, 0.4, a)
    for name, w in [(nm, w) for nm, w, _ in suite] + [("dilating", dil)]:
        for t in slice_times:
            ms = maximal_function(w, rho, x, t, n)
            u = w.slice(t)
            gap = float(np.min(ms(x) - u(x)))
            worst_gap = min(worst_gap, gap)
            rows.append({"check": "w_* - w", "weight": name, "t": t, "value": gap, "extra": None})
            if name in ("power", "dilating"):
                c = a2_constant(ms, a2_lattice, n).value
                a2.append((name, t, c))
                rows.append({"check": "A2 of w_* slice", "weight": name, "t": t, "value": c, "extra": None})
    spread = max(max(c for nm, _, c in a2 if nm == name) / min(c for nm, _, c in a2 if nm == name)
                 for name in {nm for nm, _, _ in a2})
    summary = {"max_ratio": worst_ratio, "refinement_delta": worst_delta, "min_gap": worst_gap,
               "a2_spread": spread}
    checks = [Check("mc(w_*)/mc(w) finite", worst_ratio, "finite", math.isfinite(worst_ratio)),
              _below("refinement delta", worst_delta, 0.10),
              Check("w_* >= w", worst_gap, ">= 0", worst_gap >= 0),
              _below("A2 spread across t", spread, 1.5)]
    return SuiteResult(8, rows, summary, checks)


# ---------------------------------------------------------------- oscillatory integrals

@_timed
def vdc_suite(a_values=(1.5, 2.0, 3.0), R_exponents=(4, 12), target=-0.5, tol=0.05):
    rows, checks = [], []
    R = 2.0 ** np.arange(R_exponents[0], R_exponents[1] + 1)
    for a in a_values:
        rep = oscint.vdc_scan(a=a, R_list=R)
        for x, y in zip(rep.x, rep.y):
            rows.append({"a": a, "R": float(x), "sup": float(y), "slope": rep.slope})
        checks.append(_within(f"slope a={a:g}", rep.slope, target - tol, target + tol))
    return SuiteResult(2, rows, {"slopes": {str(a): c.value for a, c in zip(a_values, checks)}}, checks)


@_timed
def kernel_suite(dimensions=(2, 3), a=2.0, per_octave=64, t_per_octave=24, stability=True, threads=1):
    """Diagonal slope and the off-diagonal constant of the K_jk sup-norms."""
    rows, checks, summary = [], [], {}
    for n in dimensions:
        pairs = oscint.diagonal_pairs() + oscint.offdiagonal_pairs()
        scan = oscint.kernel_decay_scan(a, n, pairs, per_octave, t_per_octave, threads)
        for s in scan.rows:
            rows.append({"n": n, "j": s.pair.j, "k": s.pair.k, "sup": s.value,
                         "predicted_log2": oscint.predicted_exponent(s.pair, n),
                         "ratio_to_bound": s.value / 2.0 ** oscint.predicted_exponent(s.pair, n)})
        pure = [s for s in scan.rows if s.pair.j == s.pair.k]
        pure_slope = float(np.polyfit([2 * s.pair.j for s in pure], np.log2([s.value for s in pure]), 1)[0])
        target = -(n - 1) / 2
        checks.append(_within(f"diagonal slope n={n}", pure_slope, target - 0.15, target + 0.15))
        entry = {"diagonal_slope": scan.diagonal.slope, "pure_diagonal_slope": pure_slope,
                 "constant": scan.constant}
        if stability:
            fine = oscint.kernel_decay_scan(a, n, oscint.offdiagonal_pairs(), 2 * per_octave, 2 * t_per_octave,
                                            threads)
            drift = abs(fine.constant / scan.constant - 1)
            entry.update({"constant_doubled": fine.constant, "constant_drift": drift})
            checks.append(_below(f"off-diagonal C drift n={n}", drift, 0.15))
            checks[-1].criterion = 4
        checks.append(Check(f"off-diagonal bound n={n}", scan.constant, "finite C",
                            math.isfinite(scan.constant), 4))
        summary[str(n)] = entry
    return SuiteResult(3, rows, summary, checks)


@_timed
def tk_suite(dimensions=(2, 3), a_values=(1.5, 2.0), k_max=8, trials=32, refinements=5, seed=0):
    rows, checks, summary = [], [], {}
    for n in dimensions:
        for a in a_values:
            rep, ests = oscint.tk_norm_scan(a, n, range(k_max + 1), trials, refinements, seed)
            for e in ests:
                rows.append({"n": n, "a": a, "k": e.k, "norm": e.norm, "multiplier_peak": e.exact})
            summary[f"n={n},a={a:g}"] = rep.slope
            checks.append(_within(f"slope n={n} a={a:g}", rep.slope, 0.4, 0.6))
    return SuiteResult(5, rows, summary, checks)


# ---------------------------------------------------------------- estimates

@_timed
def strichartz_suite(n=3, a_values=(1.75, 2.0, 2.5), s_values=(0.0, 0.25), seed=0, t_max=(8.0, 8.0, 4.0),
                     freq_ks=(-4, 3)):
    """Sweep of homogeneous ratios plus stability, scaling and frequency-localized checks.

    ``t_max`` holds one time window per entry of ``a_values``; the checks
    outside the sweep use a = 2 and its window.
    """
    if len(t_max) != len(a_values):
        raise ConfigError("t_max needs one window per entry of a_values")
    windows = dict(zip(a_values, t_max))
    res = est.Resolution(t_max=windows.get(2.0, max(t_max)))
    sweep = est.run_sweep(n, a_values, s_values, seed=seed, resolution=res, t_max_by_a=windows)
    rows = [dict(r, data_params=";".join(f"{k}={v}" for k, v in sorted(r["data_params"].items())))
            for r in sweep.rows]
    finite = all(math.isfinite(r["ratio"]) for r in rows)
    P = est.EstimateParams(n, 2.0, 0.0, est.window_points(n, 2.0, 0.0)[0])
    f = gaussian(1.0)
    scal = []
    for fam in ("power", "dilating"):
        build, lat = est.WEIGHT_FAMILIES[fam]
        _, _, d = est.scaling_check(f, build(P), P, lat, res)
        scal.append(d)
    F = est.bump_in_time_forcing()
    _, _, d_inh = est.inhomogeneous_scaling_check(F, est.class_power_weight(P), P,
                                                  est.WEIGHT_FAMILIES["power"][1], res)
    inh = est.inhomogeneous_ratio(F, est.class_power_weight(P), P, est.WEIGHT_FAMILIES["power"][1], res,
                                  refinement=True)
    ks = range(freq_ks[0], freq_ks[1] + 1)
    freq = {}
    for alpha, p in ((2.0, P.p), (3.0, 1.5)):
        Q = est.EstimateParams(n, 2.0, 0.0, p, alpha=alpha)
        fit, _ = est.frequency_scan(f, est.class_power_weight(Q), Q, est.WEIGHT_FAMILIES["power"][1], ks, res)
        freq[alpha] = fit.slope
    summary = {"evaluations": len(rows), "best": {k: v for k, v in sweep.best.items() if k != "data_params"},
               **sweep.checks, "scaling_homogeneous": max(scal), "scaling_inhomogeneous": d_inh,
               "inhomogeneous_ratio": inh.ratio, "inhomogeneous_refinement_delta": inh.refinement_delta,
               "frequency_slopes": {str(k): v for k, v in freq.items()}}
    checks = [Check("evaluations >= 180", len(rows), ">= 180", len(rows) >= 180),
              Check("all ratios finite", float(finite), "finite", finite),
              _below("max ratio, doubled resolution", sweep.checks["refinement_delta"], 0.20),
              _below("max ratio, 1.5x domain", sweep.checks["domain_delta"], 0.20),
              _below("scaling invariance (homogeneous)", max(scal), 1e-3),
              _below("scaling invariance (inhomogeneous)", d_inh, 1e-3),
              _below("inhomogeneous refinement delta", inh.refinement_delta, 0.20)]
    for alpha, slope in freq.items():
        checks.append(Check(f"k-scan slope alpha={alpha:g}", slope, f"<= {(alpha - 2.0) / 2 + 0.15:g}",
                            math.isfinite(slope) and slope <= (alpha - 2.0) / 2 + 0.15))
    return SuiteResult(9, rows, summary, checks)


@_timed
def morawetz_suite(n=3, a=2.0, b_values=(2.0, 3.0, 4.5), t_max=8.0):
    rows, checks, summary = [], [], {}
    f = gaussian(1.0)
    res = est.Resolution(t_max=t_max)
    for b in b_values:
        p = est.morawetz_p(n, a, b)
        P = est.EstimateParams(n, a, 0.0, p)
        rep = est.morawetz_ratio(f, b, P, resolution=res, refinement=True)
        ax, bt = est.morawetz_exponents(n, a, b, p)
        rows.append({"b": b, "p": p, "alpha_x": ax, "beta_t": bt, "lhs": rep.lhs, "rhs": rep.rhs,
                     "ratio": rep.ratio, "refinement_delta": rep.refinement_delta, "l2": rep.extra["l2"],
                     "tail_fraction": rep.extra["tail_fraction"]})
        checks.append(Check(f"ratio finite b={b:g}", rep.ratio, "finite", math.isfinite(rep.ratio)))
        checks.append(_below(f"refinement delta b={b:g}", rep.refinement_delta, 0.20))
        if b == a:
            dev = abs(rep.rhs / rep.extra["l2"] - 1)
            checks.append(_below("b=a rhs equals ||f||_2", dev, 1e-12))
        summary[str(b)] = rep.ratio
    return SuiteResult(10, rows, summary, checks)


@_timed
def extremize_suite(n=3, a=2.0, restarts=16, per_restart=200, seed=0, grid_points=0, sigma_range=(0.5, 2.0)):
    """Multi-start search over Gaussian widths against a fixed bump weight."""
    P = est.EstimateParams(n, a, 0.0, est.window_points(n, a, 0.0)[0])
    w = bump_weight(2.0, 2.0)
    lat = est.WEIGHT_FAMILIES["bump"][1]
    fam = est.gaussian_width_family(w, sigma_range)
    res = est.extremizer_search(fam, P, lat, restarts, per_restart, seed)
    rows = [{"eval": i, "log2_sigma": th[0], "ratio": r} for i, (th, r) in enumerate(res.trace)]
    summary = res.to_dict()
    checks = [Check("best ratio finite", res.best_ratio, "finite", math.isfinite(res.best_ratio))]
    if grid_points:
        setup = est.make_setup(fam.setup_profiles(), n, a, est.Resolution(), support=est.weight_support(w))
        grid = np.linspace(*fam.bounds[0], int(grid_points))
        bf = est.brute_force(fam, P, lat, grid, setup)
        dev = abs(res.best_ratio - bf.max()) / bf.max()
        summary.update({"grid_max": float(bf.max()), "grid_argmax": float(grid[int(bf.argmax())]),
                        "grid_deviation": dev})
        checks.append(_below("search vs grid maximum", dev, 0.01))
    return SuiteResult(9, rows, summary, checks)


# ---------------------------------------------------------------- potential problem

@_timed
def wellposed_suite(eps=0.05, t_max=2.0, refinement=True, trials=8):
    P = wellposed.PotentialProblem(eps=eps, resolution=est.Resolution(t_max=t_max))
    S = wellposed.Solver(P)
    c = wellposed.contraction_ratio(P, trials=trials, solver=S)
    half = wellposed.contraction_ratio(P.scaled_potential(0.5), trials=trials)
    sol = wellposed.picard_solve(P, solver=S, contraction=c)
    bounds = wellposed.solution_bounds_check(sol, P, S, refinement=refinement)
    rows = [{"iteration": i + 1, "residual": r, "rate": sol.rates[i - 1] if i else None,
             "sup_l2": sol.l2_sup[i + 1]} for i, r in enumerate(sol.residuals)]
    max_rate = max(sol.rates) if sol.rates else 0.0
    # continuity in time is only visible through consecutive nodes: max ||u(t_i+1) - u(t_i)||_2 / ||u0||_2
    steps = S.l2_in_time(np.diff(sol.spectrum, axis=1))
    jump = float(steps.max() / bounds.terms["u0_l2"])
    summary = {"contraction": c, "max_step_jump": jump, "max_step": float(np.diff(S.disc.tgrid.nodes).max()), "contraction_half": half, "halving_ratio": half / c,
               "iterations": sol.iterations, "final_residual": sol.residuals[-1], "max_rate": max_rate,
               "bounds": bounds.to_dict()}
    checks = [_below("contraction ratio", c, 0.5),
              _within("eps halving", half / c, 0.45, 0.55),
              _below("final residual", sol.residuals[-1], 1e-8),
              Check("iterations <= 30", sol.iterations, "<= 30", sol.iterations <= 30),
              Check("geometric rate", max_rate, f"<= {c + 0.05:g}", max_rate <= c + 0.05)]
    if refinement:
        checks.append(_below("Strichartz-type constant refinement", bounds.refinement_delta["strichartz"], 0.15))
        checks.append(_below("energy constant refinement", bounds.refinement_delta["energy"], 0.15))
    return SuiteResult(11, rows, summary, checks)


__all__ = ["Check", "SuiteResult", "bessel_suite", "transform_suite", "propagator_suite", "mcnorm_suite",
           "maximal_suite", "vdc_suite", "kernel_suite", "tk_suite", "strichartz_suite", "morawetz_suite",
           "extremize_suite", "wellposed_suite", "manufactured_duhamel", "weight_suite"]
