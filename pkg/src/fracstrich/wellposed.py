"""The linear equation with a time-dependent potential,

    i u_t + (-Delta)^{a/2} u + V(x, t) u = F,   u(0) = u0,

solved on 0 < t <= T as the fixed point of

    u = e^{it(-Delta)^{a/2}} u0 - i int_0^t e^{i(t-s)(-Delta)^{a/2}} F(s) ds + Phi(u),
    Phi(u)(t) = -i int_0^t e^{i(t-s)(-Delta)^{a/2}} (V u)(s) ds.

The discrete problem lives on the grids of a :class:`~fracstrich.estimates.Setup`:
fields are sampled on the evaluation radius r <= r_eval and are band
limited to the spectral grid, so V is in effect truncated to the working
domain and Phi includes the projection onto rho <= rho_max.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivisionGuardError, FracstrichError, HypothesisError, ResolutionError
from .estimates import (AnalyticForcing, Resolution, bump_in_time_forcing, cached_mc, forcing_setup,
                        make_setup, spectral_norm2, time_density, time_integral)
from .propagator import SpaceTimeField, TimeGrid, forward_batch, phase_guard, _check_a
from .radial import RadialGrid, RadialProfile, gaussian, inverse_batch, sphere_area
from .weights import CubeLattice, McParams, SeparableWeight, SpatialPower, TemporalPower, mc_norm


class ContractionError(FracstrichError):
    """Picard iteration refused or failed to converge."""


@dataclass(frozen=True)
class PotentialProblem:
    """V = eps * phase * |x|^{-gamma_x} |t|^{-gamma_t} with gamma_x + a gamma_t = a.

    ``u0`` is an analytic profile, ``forcing`` an analytic forcing or None.
    ``p`` is the Morrey-Campanato exponent used for |V| (alpha = a).
    """

    n: int = 3
    a: float = 2.0
    eps: float = 0.05
    gamma_x: float = 1.3
    gamma_t: float = 0.35
    p: float = 2.25
    phase: complex = 1.0
    u0: object = field(default_factory=lambda: gaussian(1.0))
    forcing: object = field(default_factory=bump_in_time_forcing)
    resolution: Resolution = Resolution(t_max=2.0)
    lattice: CubeLattice = CubeLattice(-1, 1, extent_x=1, extent_t=1)

    def __post_init__(self):
        _check_a(self.a)
        n, a, p = self.n, self.a, self.p
        if abs(self.gamma_x + a * self.gamma_t - a) > 1e-12:
            raise HypothesisError("the potential must satisfy gamma_x + a gamma_t = a")
        if not a / (a - 1) < p <= (n + a) / a:
            raise HypothesisError(f"p={p} outside the window a/(a-1) < p <= (n+a)/a")
        if not (self.gamma_x * p < n and self.gamma_t * p < 1 and self.gamma_x >= 0 and self.gamma_t >= 0):
            raise HypothesisError("|V|^p is not locally integrable for these exponents")
        if abs(abs(self.phase) - 1) > 1e-12:
            raise ValueError("phase must have modulus 1")

    @property
    def t_max(self):
        return self.resolution.t_max

    def scaled_potential(self, factor):
        return replace(self, eps=self.eps * factor)

    def weight(self, radius=None):
        """|V| as a weight (truncated at ``radius`` and at |t| = t_max)."""
        return SeparableWeight(SpatialPower(self.gamma_x, self.eps, radius),
                               TemporalPower(self.gamma_t, horizon=self.t_max))

    def potential(self, r, t):
        """V on the tensor grid r x t."""
        return self.eps * self.phase * np.multiply.outer(np.asarray(r, float) ** -self.gamma_x,
                                                         np.abs(np.asarray(t, float)) ** -self.gamma_t)

    def mc_params(self):
        return McParams(self.a, self.p, self.a, self.n)

    def to_dict(self):
        return {"n": self.n, "a": self.a, "eps": self.eps, "gamma_x": self.gamma_x, "gamma_t": self.gamma_t,
                "p": self.p, "phase": [float(np.real(self.phase)), float(np.imag(self.phase))],
                "u0": {"name": self.u0.name, **self.u0.params},
                "forcing": None if self.forcing is None else {"name": self.forcing.name, **self.forcing.params},
                "resolution": self.resolution.to_dict()}


@dataclass
class Discretization:
    """Grids for a problem: data grid, spectral grid, space grid r <= R and time grid on (0, T]."""

    n: int
    a: float
    data: RadialGrid
    rho: RadialGrid
    space: RadialGrid
    tgrid: TimeGrid

    def describe(self):
        return {"data": self.data.describe(), "rho": self.rho.describe(), "space": self.space.describe(),
                "time": self.tgrid.describe()}


def discretize(problem, resolution=None):
    """Grids resolving u0 and F over 0 < t <= T; the spectral grid passes the phase guard at its top."""
    res = resolution or problem.resolution
    probes = [problem.u0]
    if problem.forcing is not None:
        probes.append(gaussian(problem.forcing.params.get("sigma", 1.0)))
    setup = make_setup(probes, problem.n, problem.a, res)
    rho = setup.rho
    while True:
        try:
            phase_guard(rho, setup.r_eval.r_max, res.t_max, problem.a, rho.r_max)
            break
        except ResolutionError:
            rho = RadialGrid(rho.r_max, rho.panel / 2, rho.order)
    max_panel = min(res.t_max / 8, 3.0 / setup.band_mass ** problem.a) / res.refine
    tgrid = TimeGrid.graded(res.t_max, levels=res.t_levels, order=res.t_order, max_panel=max_panel)
    return Discretization(problem.n, problem.a, setup.data, rho, setup.r_eval, tgrid)


class Solver:
    """Discrete linear part, Phi and norms for one problem on one discretization."""

    def __init__(self, problem, disc=None):
        self.problem = problem
        self.disc = disc or discretize(problem)
        d = self.disc
        self.V = problem.potential(d.space.nodes, d.tgrid.nodes)
        self.absV = np.abs(self.V)
        self.rho_a = d.rho.nodes ** problem.a

    # -- linear part
    def linear_part(self):
        """(spectrum, field) of e^{itD^a} u0 - i int_0^t e^{i(t-s)D^a} F(s) ds."""
        p, d = self.problem, self.disc
        u0 = RadialProfile(p.n, d.data, p.u0.func(d.data.nodes))
        if p.forcing is not None:
            Fv = p.forcing.sample(d.space, d.tgrid.nodes)
        else:
            Fv = np.zeros((d.space.size, d.tgrid.size), complex)
        spec = forward_batch(p.n, u0.values[:, None], d.data, d.rho)[:, 0]
        Fh = forward_batch(p.n, Fv, d.space, d.rho)
        uh = self._retarded(Fh) + np.exp(1j * np.multiply.outer(self.rho_a, d.tgrid.nodes)) * spec[:, None]
        return uh, self.field(inverse_batch(p.n, uh, d.rho, d.space))

    def _retarded(self, Fh):
        t = self.disc.tgrid.nodes
        cum = self.disc.tgrid.cumulative(np.exp(-1j * np.multiply.outer(self.rho_a, t)) * Fh)
        return np.exp(1j * np.multiply.outer(self.rho_a, t)) * (-1j * cum)

    # -- Phi
    def phi_spectral(self, values):
        """Spectrum of Phi(u) at every time node, for u given on space x time."""
        d = self.disc
        Fh = forward_batch(self.problem.n, self.V * values, d.space, d.rho)
        return self._retarded(Fh)

    def phi(self, values):
        """(spectrum, values) of Phi(u)."""
        uh = self.phi_spectral(values)
        return uh, inverse_batch(self.problem.n, uh, self.disc.rho, self.disc.space)

    # -- norms
    def vnorm(self, values):
        """||u||_{L^2(|V|)} over the working domain."""
        d = self.disc
        g = time_density(values, d.space, self.problem.n, self.absV)
        return math.sqrt(max(time_integral(g, d.tgrid), 0.0))

    def l2_in_time(self, spec):
        """||u(t)||_2 at every node, from the spectrum (Plancherel)."""
        d = self.disc
        rho = d.rho.nodes
        dens = np.abs(spec) ** 2 * (rho ** (self.problem.n - 1) * d.rho.weights)[:, None]
        return np.sqrt((2 * math.pi) ** -self.problem.n * sphere_area(self.problem.n) * dens.sum(axis=0))

    def forcing_dual_norm(self):
        """||F||_{L^2(|V|^{-1})} over the working domain."""
        p, d = self.problem, self.disc
        if p.forcing is None:
            return 0.0
        Fv = p.forcing.sample(d.space, d.tgrid.nodes)
        if np.any((np.abs(Fv) > 0) & (self.absV <= 0)):
            raise DivisionGuardError("V vanishes on the support of F")
        inv = np.where(self.absV > 0, 1.0 / np.where(self.absV > 0, self.absV, 1.0), 0.0)
        return math.sqrt(time_integral(time_density(Fv, d.space, p.n, inv), d.tgrid))

    def field(self, values):
        return SpaceTimeField(self.problem.n, self.disc.space, self.disc.tgrid, values)


def phi_map(u, problem, solver=None):
    """Phi(u) = -i int_0^t e^{i(t-s)(-Delta)^{a/2}} (V u)(s) ds for a field u on the solver's grids."""
    solver = solver or Solver(problem)
    vals = u.values if isinstance(u, SpaceTimeField) else np.asarray(u)
    return solver.field(solver.phi(vals)[1])


def _trial_fields(solver, trials, seed):
    """Seeded trial fields: free evolutions of random band-limited data and smooth space-time noise."""
    d = solver.disc
    rng = np.random.default_rng(seed)
    rho = d.rho.nodes
    t = d.tgrid.nodes
    band = min(rho[-1], 4.0)
    out = []
    for i in range(trials):
        c = rng.standard_normal((4, 2)) @ np.array([1, 1j])
        centers = band * (np.arange(4) + 0.5) / 4
        spec = sum(ci * np.exp(-((rho - m) ** 2) * 4) for ci, m in zip(c, centers))
        if i % 2:
            tc = rng.standard_normal(3)
            time = sum(tk * np.cos((k + 1) * np.pi * t / t[-1]) for k, tk in enumerate(tc))
            uh = spec[:, None] * time[None, :]
        else:
            uh = spec[:, None] * np.exp(1j * np.multiply.outer(solver.rho_a, t))
        out.append(inverse_batch(solver.problem.n, uh, d.rho, d.space))
    return out


@dataclass
class ContractionReport:
    ratio: float
    ratios: list
    trials: int

    def to_dict(self):
        return {"ratio": self.ratio, "ratios": self.ratios, "trials": self.trials}


def contraction_ratio(problem, trials=8, refinements=3, seed=0, solver=None, report=False):
    """max ||Phi(u)||_{L^2(|V|)} / ||u||_{L^2(|V|)} over seeded trial fields.

    Each trial is followed by ``refinements`` re-applications u <- Phi(u),
    which pull it toward the most amplified direction.
    """
    if problem.eps == 0:
        out = ContractionReport(0.0, [0.0], trials)
        return out if report else 0.0
    solver = solver or Solver(problem)
    ratios = []
    for u in _trial_fields(solver, trials, seed):
        for _ in range(refinements + 1):
            nu = solver.vnorm(u)
            if nu == 0:
                break
            _, v = solver.phi(u)
            ratios.append(solver.vnorm(v) / nu)
            u = v
    out = ContractionReport(float(max(ratios)), [float(x) for x in ratios], trials)
    return out if report else out.ratio


@dataclass
class PicardResult:
    solution: SpaceTimeField
    spectrum: np.ndarray
    residuals: list
    rates: list
    l2_sup: list
    contraction: float
    iterations: int

    def to_dict(self):
        return {"residuals": self.residuals, "rates": self.rates, "l2_sup": self.l2_sup,
                "contraction": self.contraction, "iterations": self.iterations}


def picard_solve(problem, tol=1e-8, max_iters=30, solver=None, contraction=None):
    """Fixed point of u = (linear part) + Phi(u) by Picard iteration from the linear part.

    The residual of step k is ||u_k - u_{k-1}||_{L^2(|V|)} / ||u_k||_{L^2(|V|)}.
    The contraction ratio is measured first and the iteration refused when it
    is not below 1.
    """
    solver = solver or Solver(problem)
    lin_spec, lin = solver.linear_part()
    if problem.eps == 0:
        return PicardResult(lin, lin_spec, [0.0], [], [float(solver.l2_in_time(lin_spec).max())], 0.0, 1)
    rate = contraction if contraction is not None else contraction_ratio(problem, solver=solver)
    if not rate < 1:
        raise ContractionError(f"Phi is not contractive in L^2(|V|): measured ratio {rate:.3g}")
    u, spec = lin.values, lin_spec
    residuals, rates, sups = [], [], [float(solver.l2_in_time(spec).max())]
    for k in range(1, max_iters + 1):
        ph_spec, ph = solver.phi(u)
        new, new_spec = lin.values + ph, lin_spec + ph_spec
        norm = solver.vnorm(new)
        res = solver.vnorm(new - u) / norm if norm > 0 else 0.0
        residuals.append(res)
        if len(residuals) > 1 and residuals[-2] > 0:
            rates.append(res / residuals[-2])
        u, spec = new, new_spec
        sups.append(float(solver.l2_in_time(spec).max()))
        if res < tol:
            return PicardResult(solver.field(u), spec, residuals, rates, sups, rate, k)
    raise ContractionError(f"no convergence in {max_iters} iterations (last residual {residuals[-1]:.3g})")


@dataclass
class BoundsReport:
    energy_constant: float
    strichartz_constant: float
    mc: float
    terms: dict
    refinement_delta: dict = None

    def to_dict(self):
        return {"energy_constant": self.energy_constant, "strichartz_constant": self.strichartz_constant,
                "mc": self.mc, "terms": self.terms, "refinement_delta": self.refinement_delta}


def solution_bounds_check(solution, problem, solver=None, refinement=False):
    """Implied constants of the two solution bounds.

    strichartz:  ||u||_{L^2(|V|)} <= C (mc^{1/2} ||u0||_2 + mc ||F||_{L^2(|V|^{-1})}),
    energy:      sup_t ||u(t)||_2 <= C (||u0||_2 + mc^{1/2} ||F||_{L^2(|V|^{-1})}),

    with mc the Morrey-Campanato norm of |V| (alpha = a).  ``solution`` is a
    :class:`PicardResult` on the solver's grids.
    """
    solver = solver or Solver(problem)
    d = solver.disc
    mc = mc_norm(problem.weight(), problem.mc_params(), problem.lattice).value
    u0 = math.sqrt(spectral_norm2(problem.n, d.rho, forward_batch(
        problem.n, problem.u0.func(d.data.nodes)[:, None], d.data, d.rho)[:, 0]))
    fd = solver.forcing_dual_norm()
    lhs_s = solver.vnorm(solution.solution.values)
    lhs_e = float(solver.l2_in_time(solution.spectrum).max())
    rhs_s = math.sqrt(mc) * u0 + mc * fd
    rhs_e = u0 + math.sqrt(mc) * fd
    rep = BoundsReport(lhs_e / rhs_e, lhs_s / rhs_s, mc,
                       {"u_V": lhs_s, "sup_l2": lhs_e, "u0_l2": u0, "F_dual": fd})
    if refinement:
        fine_problem = replace(problem, resolution=problem.resolution.doubled())
        fine_solver = Solver(fine_problem)
        fine = solution_bounds_check(picard_solve(fine_problem, solver=fine_solver), fine_problem, fine_solver)
        rep.refinement_delta = {
            "energy": abs(rep.energy_constant - fine.energy_constant) / fine.energy_constant,
            "strichartz": abs(rep.strichartz_constant - fine.strichartz_constant) / fine.strichartz_constant}
    return rep


def dual_estimate_check(forcing, w, params, lattice, resolution=Resolution(t_max=2.0), refinement=True):
    """Implied C in ||int e^{-is(-Delta)^{a/2}} F(s) ds||_2 <= C mc^{1/2} ||F||_{L^2(1/w)}.

    Returns (C, relative change of C at doubled resolution or None).
    """
    def constant(res):
        setup = forcing_setup(forcing, params, res)
        tg = setup.tgrid
        Fv = forcing.sample(setup.data, tg.nodes)
        Fh = forward_batch(params.n, Fv, setup.data, setup.rho)
        phase = np.exp(-1j * np.multiply.outer(setup.rho.nodes ** params.a, tg.nodes))
        g = (phase * Fh) @ tg.weights
        lhs = math.sqrt(spectral_norm2(params.n, setup.rho, g))
        wF = np.asarray(w(setup.data.nodes, tg.nodes), float)
        inv = np.where(np.abs(Fv) > 0, 1.0 / np.where(wF > 0, wF, np.inf), 0.0)
        Fn = math.sqrt(time_integral(time_density(Fv, setup.data, params.n, inv), tg))
        mc = cached_mc(w, params.mc_params(params.a), lattice).value
        return lhs / (math.sqrt(mc) * Fn)

    c = constant(resolution)
    if not refinement:
        return c, None
    c2 = constant(resolution.doubled())
    return c, abs(c - c2) / c2


def mass_deviation(problem, factors=(1.0, 0.5, 0.25, 0.125)):
    """sup_t | ||u(t)||_2 - ||u0||_2 | for F = 0 and V scaled by each factor.

    Returns a list of (eps, deviation).
    """
    base = replace(problem, forcing=None)
    out = []
    for f in factors:
        pr = base.scaled_potential(f)
        solver = Solver(pr)
        sol = picard_solve(pr, solver=solver)
        l2 = solver.l2_in_time(sol.spectrum)
        u0 = solver.l2_in_time(solver.linear_part()[0][:, :1])[0]
        out.append((pr.eps, float(np.max(np.abs(l2 - u0)))))
    return out


__all__ = ["PotentialProblem", "Discretization", "discretize", "Solver", "phi_map", "contraction_ratio",
           "picard_solve", "solution_bounds_check", "dual_estimate_check", "mass_deviation",
           "ContractionError", "ContractionReport", "PicardResult", "BoundsReport", "AnalyticForcing"]
