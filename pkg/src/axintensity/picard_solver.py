"""Frozen-coefficient fixed-point iteration and the truncation sequence.

Starting from u_0 = 0 the iteration solves the linearized problem with
coefficients a[u_k - Omega] and takes u_{k+1} as its solution (optionally
relaxed).  Convergence is measured in the weighted L^p norm

    || (u_{k+1} - u_k) tent^-delta ||_{p, (0, 3 eta)},   delta = (alpha + gamma)/2,

with the large exponent p = 29, and the energy ||grad u||_{(beta, eta)} is
recorded for every iterate.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .analytic_data import ZeroData, eval_h, eval_psi
from .conjugate_pair import (BoundaryData, ConjugateField, DataFunction, IntensityProfile,
                             assemble_omega, boundary_p, solve_pl, solve_ql_annulus)
from .linear_solver import assemble, solve
from .polar_grid import PolarGrid, ScalarField, WeightSpec, tent, weighted_norm


class NonConvergenceError(RuntimeError):
    def __init__(self, msg: str, trace: "IterationTrace | None" = None, u: ScalarField | None = None):
        super().__init__(msg)
        self.trace = trace
        self.u = u


@dataclass(frozen=True)
class SolverParams:
    alpha: float = 0.39
    gamma: float = 0.6
    eta: float = 1e-3
    d: float = 0.1
    e: float = 1.2
    delta_gap: float = 0.023
    p_exp: float = 29.0
    beta: float = 0.2
    max_iter: int = 200
    tol: float = 1e-8
    relaxation: float = 1.0
    fallback_relaxation: float = 0.5
    burn_in: int = 3

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.relaxation <= 1 or not 0 < self.fallback_relaxation <= 1:
            raise ValueError("relaxation factors must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @property
    def delta_wt(self) -> float:
        return 0.5 * (self.alpha + self.gamma)


@dataclass
class IterationTrace:
    increments: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    relaxation: list[float] = field(default_factory=list)

    @property
    def n_iter(self) -> int:
        return len(self.increments)

    def append(self, inc: float, energy: float, sec: float, relax: float) -> None:
        self.increments.append(float(inc))
        self.energies.append(float(energy))
        self.seconds.append(float(sec))
        self.relaxation.append(float(relax))

    def write_csv(self, path: str | Path, with_seconds: bool = False) -> None:
        """Write one row per iteration.  Wall times are opt-in so reruns stay bit-identical."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "increment", "energy"] + (["seconds"] if with_seconds else []))
            for k, (a, b, c) in enumerate(zip(self.increments, self.energies, self.seconds), start=1):
                w.writerow([k, repr(a), repr(b)] + ([repr(c)] if with_seconds else []))


def increment_norm(du: ScalarField, params: SolverParams) -> float:
    g = du.grid
    _, P = g.quad_mesh()
    vals = du.at_quad() * tent(P) ** (-params.delta_wt)
    return weighted_norm(vals, WeightSpec(gamma=0.0, eta=3 * params.eta, p=params.p_exp), g)


def energy_norm(u: ScalarField, params: SolverParams) -> float:
    return weighted_norm(u.gradient(), WeightSpec(gamma=params.beta, eta=params.eta), u.grid)


def l2_distance(a: ScalarField, b: ScalarField, params: SolverParams) -> float:
    return weighted_norm(a - b, WeightSpec(gamma=0.0, eta=3 * params.eta, p=2.0))


def picard(omega: DataFunction, grid: PolarGrid | None = None, params: SolverParams = SolverParams(),
           u0: ScalarField | None = None) -> tuple[ScalarField, IterationTrace]:
    """Fixed-point iteration u_{k+1} = T(u_k) for the data function ``omega``."""
    grid = grid or omega.grid
    if not np.isfinite(omega.K):
        raise ValueError("data function has a non-finite axis constant")
    u = u0 if u0 is not None else ScalarField(grid, np.zeros(grid.shape))
    trace = IterationTrace()
    relax = params.relaxation
    growth = 0
    t0 = time.perf_counter()
    for _ in range(params.max_iter):
        new = solve(assemble(u, omega, grid))
        if relax != 1.0:
            new = ScalarField(grid, relax * new.values + (1.0 - relax) * u.values)
        inc = increment_norm(new - u, params)
        energy = energy_norm(new, params)
        if not (np.isfinite(inc) and np.isfinite(energy)):
            raise NonConvergenceError("iteration produced non-finite values", trace, u)
        if trace.n_iter and inc > trace.increments[-1]:
            growth += 1
        else:
            growth = 0
        trace.append(inc, energy, time.perf_counter() - t0, relax)
        u = new
        if inc <= params.tol:
            return u, trace
        if growth >= 3 and relax > params.fallback_relaxation:
            relax, growth = params.fallback_relaxation, 0
    raise NonConvergenceError(
        f"no convergence after {params.max_iter} iterations (last increment {trace.increments[-1]:.3e})", trace, u)


def fixed_point_residual(u: ScalarField, omega: DataFunction, params: SolverParams = SolverParams()) -> float:
    """Increment produced by one more linear solve from ``u``."""
    return increment_norm(solve(assemble(u, omega, u.grid)) - u, params)


def random_start(grid: PolarGrid, rng: np.random.Generator, amplitude: float = 1.0, modes: int = 4) -> ScalarField:
    """Bounded wall-vanishing initial guess: a random sine-times-polynomial sum."""
    Rm, Pm = grid.mesh()
    x = (Rm - 1.0) / (grid.R - 1.0)
    vals = np.zeros(grid.shape)
    for k in range(1, modes + 1):
        c = rng.uniform(-1, 1, size=3)
        vals += (c[0] + c[1] * x + c[2] * x**2) * np.sin(k * Pm) / k
    vals *= amplitude / max(np.abs(vals).max(), 1e-300)
    vals[:, 0] = vals[:, -1] = 0.0
    return ScalarField(grid, vals)


def uniqueness_probe(omega: DataFunction, grid: PolarGrid | None = None, params: SolverParams = SolverParams(),
                     n_starts: int = 3, seed: int = 0, amplitude: float = 1.0) -> float:
    """Maximum pairwise distance of fixed points reached from random starts."""
    if n_starts < 2:
        raise ValueError("n_starts must be >= 2")
    grid = grid or omega.grid
    rng = np.random.default_rng(seed)
    sols = []
    for _ in range(n_starts):
        u, _ = picard(omega, grid, params, u0=random_start(grid, rng, amplitude))
        sols.append(u)
    return max(l2_distance(a, b, params) for i, a in enumerate(sols) for b in sols[i + 1:])


# ----------------------------------------------------------------------
# problem data and the truncation sequence
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Intensity data and zero configuration.

    ``I_hat=None`` marks the exterior problem; bounded truncations then use
    the artificial outer intensity |h| on S_R.
    """

    I: IntensityProfile
    zeros: ZeroData
    I_hat: IntensityProfile | None = None


@dataclass(frozen=True, eq=False)
class PreparedData:
    grid: PolarGrid
    zd: ZeroData
    bd: BoundaryData
    p_l: ScalarField
    q_l: ConjugateField
    omega: DataFunction


def artificial_outer_intensity(zd: ZeroData, R: float) -> IntensityProfile:
    """The profile |h(R e^{i phi})|, for which p on S_R is constant."""
    return IntensityProfile(lambda t: np.abs(eval_h(zd, R * np.exp(1j * np.asarray(t, dtype=float)))), "|h|")


def prepare(spec: ProblemSpec, grid: PolarGrid, series_terms: int = 64, K_cap: float = 50.0) -> PreparedData:
    """Boundary data, the conjugate pair (p_l, q_l) and Omega on ``grid``."""
    zd = replace(spec.zeros, R=grid.R) if spec.zeros.R != grid.R else spec.zeros
    I_hat = spec.I_hat if spec.I_hat is not None else artificial_outer_intensity(zd, grid.R)
    bd = boundary_p(spec.I, I_hat, zd, grid.R)
    p_l = solve_pl(bd, grid)
    q_l = solve_ql_annulus(bd, grid, series_terms)
    psi = eval_psi(zd, grid)
    omega = assemble_omega(psi, q_l, K_cap)
    return PreparedData(grid, zd, bd, p_l, q_l, omega)


@dataclass
class SequenceResult:
    R_list: list[float]
    solutions: list[ScalarField]
    data: list[PreparedData]
    traces: list[IterationTrace]
    distances: list[float]
    energies: list[float]
    monotone: bool

    @property
    def energy_variation(self) -> float:
        e = np.asarray(self.energies)
        if e.max() < 1e-12:
            return 0.0
        return float((e.max() - e.min()) / e.max())


def _restrict(u: ScalarField, small: PolarGrid) -> ScalarField:
    """Values of ``u`` on the nodes of the smaller grid (grids must nest radially)."""
    from scipy.interpolate import RegularGridInterpolator

    g = u.grid
    if g.nphi == small.nphi:
        idx = np.searchsorted(g.r_nodes, small.r_nodes)
        idx = np.clip(idx, 0, g.nr - 1)
        if np.allclose(g.r_nodes[idx], small.r_nodes, rtol=0, atol=1e-12):
            return ScalarField(small, u.values[idx])
    interp = RegularGridInterpolator((g.r_nodes, g.phi_nodes), u.values)
    Rm, Pm = small.mesh()
    return ScalarField(small, interp(np.stack([Rm.ravel(), Pm.ravel()], axis=1)))


def log_grid_factory(nodes_per_octave: int = 16, nphi: int = 129) -> Callable[[float], PolarGrid]:
    """Grids with logarithmic radial spacing whose nodes nest for R = 2^k."""

    def make(R: float) -> PolarGrid:
        nr = int(round(nodes_per_octave * np.log2(R))) + 1
        return PolarGrid(R, max(nr, 3), nphi, spacing="log")

    return make


def exterior_sequence(spec: ProblemSpec, R_list: Sequence[float], params: SolverParams = SolverParams(),
                      grid_for: Callable[[float], PolarGrid] | None = None,
                      monotone_slack: float = 1e-9) -> SequenceResult:
    """Solve truncated problems on Q_{R_n} and report their Cauchy behaviour.

    Consecutive solutions are compared on the smallest domain.  Distances
    that fail to decrease (beyond ``monotone_slack``) are flagged through
    ``monotone=False``; the thresholds are empirical.
    """
    R_list = [float(R) for R in R_list]
    if len(R_list) < 2 or np.any(np.diff(R_list) <= 0):
        raise ValueError("R_list must be increasing with at least two entries")
    if spec.I_hat is not None:
        raise ValueError("exterior_sequence expects an exterior problem (I_hat=None)")
    grid_for = grid_for or log_grid_factory()
    sols, datas, traces, energies = [], [], [], []
    for R in R_list:
        grid = grid_for(R)
        data = prepare(spec, grid)
        u, tr = picard(data.omega, grid, params)
        sols.append(u)
        datas.append(data)
        traces.append(tr)
        energies.append(energy_norm(u, params))
    small = sols[0].grid
    restricted = [_restrict(u, small) for u in sols]
    dist = [l2_distance(restricted[k + 1], restricted[k], params) for k in range(len(sols) - 1)]
    monotone = all(dist[k + 1] <= dist[k] + monotone_slack for k in range(len(dist) - 1))
    return SequenceResult(R_list, sols, datas, traces, dist, energies, monotone)
