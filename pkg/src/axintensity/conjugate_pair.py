"""Boundary data for p, the conjugate harmonic pair (p_l, q_l) and the data function.

Writing f = h exp((p + i q)/2), the prescribed intensities become Dirichlet
data for p on the two circles,

    p = 2 (ln I - sum_n ln|z - z_n|)           on r = 1,
    p = 2 (ln I_hat - sum_n ln|z - z_n| + p_l0)  on r = R,

where the sums run over all 2N zeros and p_l0 equalizes the two mean values,
which is the condition for a single-valued conjugate.  The harmonic part p_l
is computed by a finite element Laplace solve on the grid, and its conjugate
q_l by the Schwarz-type kernels of the exterior and the annulus, written in
the subtracted form

    C(s, phi; P) = (s/pi) sin(phi) int_0^pi (cos t - s cos phi) / D(t)
                   * (P(t) - P(phi)) dt,
    D(t) = (1 - s cos(t + phi)) (1 - s cos(t - phi)),   s = 2 r / (1 + r^2),

which equals (1/pi) int_0^{2 pi} r sin(phi - t) / (1 - 2 r cos(phi - t) + r^2) P(t) dt
for even P.  The data function is Omega = Psi - q_l.
"""

from __future__ import annotations

import ast
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve

from .analytic_data import PsiField, ZeroData, log_abs_zero_product
from .polar_grid import PolarGrid, ScalarField, assemble_cells

Profile = Callable[[np.ndarray], np.ndarray]


class CompatibilityError(ValueError):
    """Boundary means of p differ, so no single-valued conjugate exists."""


class DataBoundError(ValueError):
    """The data function violates the configured axis bound |Omega| <= K sin(phi)."""


class RegularityWarning(UserWarning):
    pass


# ----------------------------------------------------------------------
# intensity profiles
# ----------------------------------------------------------------------
_ALLOWED_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "cosh": np.cosh, "sinh": np.sinh, "tanh": np.tanh,
    "arctan": np.arctan, "pi": np.pi, "e": np.e,
}


def _compile_expression(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_FUNCS and node.id not in ("phi", "theta"):
            raise ValueError(f"unknown name {node.id!r} in intensity expression")
        if isinstance(node, (ast.Attribute, ast.Subscript, ast.Lambda, ast.Starred)):
            raise ValueError("intensity expression may only use arithmetic and elementary functions")
    code = compile(tree, "<intensity>", "eval")

    def fn(phi):
        phi = np.asarray(phi, dtype=float)
        env = dict(_ALLOWED_FUNCS, phi=phi, theta=phi)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, env), phi.shape).astype(float)

    return fn


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    """Surface intensity I(phi) on [0, pi], extended evenly to (-pi, pi]."""

    func: Profile
    name: str = "custom"
    holder_alpha: float = 1.0
    axis_alpha_tilde: float = 1.0

    def __call__(self, phi) -> np.ndarray:
        return np.asarray(self.func(np.abs(np.asarray(phi, dtype=float))), dtype=float)

    @classmethod
    def constant(cls, value: float = 1.0) -> "IntensityProfile":
        if not value > 0:
            raise ValueError("intensity must be positive")
        return cls(lambda phi: np.full(np.shape(phi), float(value)), name=f"constant({value})")

    @classmethod
    def dipole(cls, scale: float = 1.0) -> "IntensityProfile":
        return cls(lambda phi: scale * np.sqrt(1.0 + 3.0 * np.cos(phi) ** 2), name="dipole")

    @classmethod
    def expression(cls, expr: str) -> "IntensityProfile":
        prof = cls(_compile_expression(expr), name=expr)
        prof.check_positive()
        return prof

    @classmethod
    def table(cls, phi, values) -> "IntensityProfile":
        phi = np.asarray(phi, dtype=float)
        values = np.asarray(values, dtype=float)
        if phi.ndim != 1 or phi.size != values.size or phi.size < 4:
            raise ValueError("intensity table needs at least four (phi, I) pairs")
        if np.any(values <= 0):
            raise ValueError("intensity must be positive")
        if phi[0] > 0 or phi[-1] < np.pi or np.any(np.diff(phi) <= 0):
            raise ValueError("intensity table must be increasing and cover [0, pi]")
        # zero end slopes make the even continuation across the axis C^1
        spline = CubicSpline(phi, values, bc_type=((1, 0.0), (1, 0.0)))
        return cls(spline, name="table")

    def check_positive(self, n: int = 2049) -> None:
        vals = self(np.linspace(0.0, np.pi, n))
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError(f"intensity {self.name} is not positive on [0, pi]")

    def axis_check(self) -> dict:
        """Empirical check of |I(phi) - I(0)| <= C phi^(1 + alpha_tilde) at both walls."""
        a = self.axis_alpha_tilde
        small = np.geomspace(1e-3, 1e-1, 30)
        out = {}
        for label, base, pts in (("0", 0.0, small), ("pi", np.pi, np.pi - small)):
            ratio = np.abs(self(pts) - self(np.array([base]))[0]) / small ** (1 + a)
            # the ratio must stay bounded as phi -> wall
            out[label] = float(ratio.max())
            ok = ratio[:5].max() <= 10.0 * max(ratio[-5:].max(), 1e-300) or ratio.max() < 1e-8
            if not ok:
                warnings.warn(f"intensity {self.name} may violate the axis condition at phi={label}",
                              RegularityWarning, stacklevel=2)
            out[label + "_ok"] = bool(ok)
        return out

    def holder_check(self, n_pairs: int = 2000, seed: int = 0) -> dict:
        """Two-point Hoelder ratios |I(x) - I(y)| / |x - y|^alpha on [0, pi]."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, np.pi, n_pairs)
        d = np.geomspace(1e-6, 1e-1, n_pairs)
        y = np.clip(x + d, 0, np.pi)
        dist = np.abs(y - x)
        keep = dist > 0
        ratio = np.abs(self(x[keep]) - self(y[keep])) / dist[keep] ** self.holder_alpha
        fine, coarse = ratio[: ratio.size // 4], ratio[-ratio.size // 4:]
        ok = bool(fine.max() <= 10.0 * max(coarse.max(), 1e-12))
        if not ok:
            warnings.warn(f"intensity {self.name} may not be Hoelder-{self.holder_alpha}", RegularityWarning,
                          stacklevel=2)
        return {"max_ratio": float(ratio.max()), "ok": ok}


# ----------------------------------------------------------------------
# boundary data
# ----------------------------------------------------------------------
_GL_T, _GL_W = leggauss(16)


def mean_over_circle(P: Profile, panels: int = 64) -> float:
    """(1/2pi) int_{-pi}^{pi} P for an even profile, by composite Gauss-Legendre."""
    edges = np.linspace(0.0, np.pi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (a + b) + 0.5 * (b - a) * _GL_T[None, :]
    w = 0.5 * (b - a) * _GL_W[None, :]
    return float(np.sum(P(t) * w) / np.pi)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Traces of p on the inner circle and (bounded case) on the outer circle."""

    p_inner: Profile
    p_outer: Profile | None = None
    p_l0: float = 0.0
    R: float | None = None

    def compatibility_gap(self) -> float:
        if self.p_outer is None:
            return 0.0
        return mean_over_circle(self.p_inner) - mean_over_circle(self.p_outer)

    def check_compatibility(self, tol: float = 1e-10) -> None:
        gap = self.compatibility_gap()
        if abs(gap) > tol * max(1.0, abs(mean_over_circle(self.p_inner))):
            raise CompatibilityError(f"boundary means of p differ by {gap:.3e}")


def boundary_p(I: IntensityProfile, I_hat: IntensityProfile | None, zd: ZeroData, R: float | None) -> BoundaryData:
    """Traces of p from the intensities and the zero factor.

    With ``I_hat=None`` (exterior problem) only the inner trace is built.
    """
    I.check_positive()

    def p_inner(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * (np.log(I(t)) - log_abs_zero_product(zd, np.exp(1j * t)))

    if I_hat is None or R is None:
        return BoundaryData(p_inner, None, 0.0, R)
    I_hat.check_positive()

    def p_outer_raw(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * (np.log(I_hat(t)) - log_abs_zero_product(zd, R * np.exp(1j * t)))

    p_l0 = 0.5 * (mean_over_circle(p_inner) - mean_over_circle(p_outer_raw))

    def p_outer(t):
        return p_outer_raw(t) + 2.0 * p_l0

    return BoundaryData(p_inner, p_outer, float(p_l0), float(R))


# ----------------------------------------------------------------------
# harmonic part p_l
# ----------------------------------------------------------------------
def laplace_matrix(grid: PolarGrid):
    """Q1 stiffness matrix of int (d_r p d_r psi + r^-2 d_phi p d_phi psi) r dr dphi."""
    r = grid.cell_r
    w = grid.cell_w * r
    dr, dp = grid.cell_dNdr, grid.cell_dNdphi
    local = np.einsum("cq,cqi,cqj->cij", w, dr, dr) + np.einsum("cq,cqi,cqj->cij", w / r**2, dp, dp)
    return assemble_cells(grid, local)


def solve_pl(bd: BoundaryData, grid: PolarGrid) -> ScalarField:
    """Discrete harmonic function with Dirichlet data on both circles.

    The axis walls carry the natural (zero Neumann) condition, which is the
    even continuation across phi = 0 and phi = pi.
    """
    if bd.p_outer is None:
        raise ValueError("solve_pl needs outer boundary data (bounded annulus)")
    bd.check_compatibility()
    A = laplace_matrix(grid).tocsr()
    u = np.zeros(grid.shape)
    u[0, :] = bd.p_inner(grid.phi_nodes)
    u[-1, :] = bd.p_outer(grid.phi_nodes)
    free = np.zeros(grid.shape, dtype=bool)
    free[1:-1, :] = True
    f, fixed = free.ravel(), ~free.ravel()
    rhs = -A[f][:, fixed] @ u.ravel()[fixed]
    sol = spsolve(A[f][:, f].tocsc(), rhs)
    if not np.all(np.isfinite(sol)):
        raise np.linalg.LinAlgError("Laplace solve for p_l failed (singular assembly)")
    flat = u.ravel()
    flat[f] = sol
    return ScalarField(grid, flat)


# ----------------------------------------------------------------------
# conjugate part q_l
# ----------------------------------------------------------------------
def _s_and_gap(rho):
    rho = np.asarray(rho, dtype=float)
    s = 2.0 * rho / (1.0 + rho**2)
    return s, (1.0 - rho) ** 2 / (1.0 + rho**2)


def _graded_nodes(eps: float, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes on [0, 1] with geometric grading towards both ends."""
    left = [0.0]
    x = eps
    while x < 0.5:
        left.append(x)
        x *= 2.0
    left.append(0.5)
    left = np.array(left)
    br = np.concatenate([left, 1.0 - left[-2::-1]])
    t, w = leggauss(order)
    a, b = br[:-1, None], br[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * t).ravel(), (0.5 * (b - a) * w).ravel()


def conjugation_integral(P: Profile, rho: float, phi: np.ndarray, order: int = 8,
                         eps_floor: float = 1e-7) -> np.ndarray:
    """C(s(rho), phi; P) in subtracted form for one radius ratio ``rho``.

    Panels are split at t = phi and graded geometrically towards it on the
    scale of the kernel peak width sqrt(2 (1 - s)/s).
    """
    phi_all = np.atleast_1d(np.asarray(phi, dtype=float))
    interior = (phi_all > 0.0) & (phi_all < np.pi)
    out = np.zeros_like(phi_all)
    phi = phi_all[interior]
    if phi.size == 0:
        return out
    s, gap = _s_and_gap(rho)
    s, gap = float(s), float(gap)
    width = np.sqrt(2.0 * gap / s) if s > 0 else np.pi
    eps = min(0.25, max(eps_floor, width / (8.0 * np.pi)))
    tau, wt = _graded_nodes(eps, order)
    P_phi = P(phi)
    total = np.zeros_like(phi)
    cphi = np.cos(phi)
    for side in (0, 1):
        L = phi if side == 0 else np.pi - phi
        theta = phi[:, None] - L[:, None] * tau[None, :] if side == 0 else phi[:, None] + L[:, None] * tau[None, :]
        half_sum = 0.5 * (theta + phi[:, None])
        half_dif = 0.5 * (theta - phi[:, None])
        # accurate forms of 1 - s cos(t -/+ phi) and cos t - s cos phi near s = 1
        d_minus = gap + 2.0 * s * np.sin(half_dif) ** 2
        d_plus = gap + 2.0 * s * np.sin(half_sum) ** 2
        numer = -2.0 * np.sin(half_sum) * np.sin(half_dif) + gap * cphi[:, None]
        g = numer / (d_minus * d_plus) * (P(theta) - P_phi[:, None])
        total += np.sum(g * wt[None, :], axis=1) * L
    out[interior] = (s / np.pi) * np.sin(phi) * total
    return out


def cosine_coefficients(P: Profile, kmax: int, panels: int = 64) -> np.ndarray:
    """b_k = int_0^pi cos(k t) P(t) dt for k = 1..kmax."""
    edges = np.linspace(0.0, np.pi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (a + b) + 0.5 * (b - a) * _GL_T[None, :]).ravel()
    w = (0.5 * (b - a) * _GL_W[None, :]).ravel()
    k = np.arange(1, kmax + 1)
    return np.cos(np.outer(k, t)) @ (P(t) * w)


def _series_factor(k: np.ndarray, x: np.ndarray, R: float) -> np.ndarray:
    """(x^k + x^-k) / (R^(2k) - 1) evaluated without overflow; shape (len(x), len(k))."""
    lx = np.log(np.asarray(x, dtype=float))[:, None]
    lR = np.log(R)
    kk = k[None, :].astype(float)
    denom = -np.expm1(-2.0 * kk * lR)  # 1 - R^(-2k)
    return (np.exp(kk * (lx - 2 * lR)) + np.exp(-kk * (lx + 2 * lR))) / denom


def _amplitude(P: Profile) -> float:
    t = np.linspace(0, np.pi, 4097)
    vals = P(t)
    return float(np.max(np.abs(vals - mean_over_circle(P))))


def series_tail_bound(bd: BoundaryData, R: float, series_terms: int, r_values: np.ndarray) -> float:
    """Bound on the truncated part of the annulus series, maximized over ``r_values``.

    Uses |(1/pi) int sin k(phi - t) P(t) dt| <= 2 max|P - mean P|.
    """
    A_in, A_out = _amplitude(bd.p_inner), _amplitude(bd.p_outer)
    k = np.arange(series_terms + 1, series_terms + 4001)
    r = np.asarray(r_values, dtype=float)
    inner = _series_factor(k, r, R)
    outer = _series_factor(k, r / R, R)
    tail = 2.0 * (A_in * inner + A_out * outer).sum(axis=1)
    return float(tail.max())


@dataclass(frozen=True, eq=False)
class ConjugateField:
    """q_l at the nodes and at the tensor quadrature points."""

    field: ScalarField
    quad: np.ndarray = field(repr=False)
    tail_bound: float = 0.0
    K_ql: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _tensor_eval(fn: Callable[[float, np.ndarray], np.ndarray], r: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([fn(float(ri), phi) for ri in r])


def ql_exterior_values(bd: BoundaryData, r: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Conjugate of the exterior harmonic extension of ``bd.p_inner`` on a tensor set."""
    return _tensor_eval(lambda ri, ph: -conjugation_integral(bd.p_inner, ri, ph), r, phi)


def ql_annulus_values(bd: BoundaryData, R: float, r: np.ndarray, phi: np.ndarray,
                      series_terms: int = 64) -> np.ndarray:
    """Conjugate of the annulus harmonic function with traces p_inner, p_outer."""
    k = np.arange(1, series_terms + 1)
    b_in = cosine_coefficients(bd.p_inner, series_terms)
    b_out = cosine_coefficients(bd.p_outer, series_terms)
    r = np.asarray(r, dtype=float)
    sin_k = np.sin(np.outer(phi, k))  # (nphi, K)
    ser_in = _series_factor(k, r, R) * b_in[None, :]
    ser_out = _series_factor(k, r / R, R) * b_out[None, :]
    series = (2.0 / np.pi) * (ser_out - ser_in) @ sin_k.T  # (nr, nphi)

    def kern(ri, ph):
        return conjugation_integral(bd.p_outer, ri / R, ph) - conjugation_integral(bd.p_inner, ri, ph)

    return _tensor_eval(kern, r, phi) + series


def _axis_constant(values: np.ndarray, phi: np.ndarray) -> float:
    inner = values[:, 1:-1] / np.sin(phi[None, 1:-1])
    return float(np.max(np.abs(inner))) if inner.size else 0.0


def solve_ql_exterior(bd: BoundaryData, grid: PolarGrid) -> ConjugateField:
    nodes = ql_exterior_values(bd, grid.r_nodes, grid.phi_nodes)
    nodes[:, 0] = nodes[:, -1] = 0.0
    quad = ql_exterior_values(bd, grid.rq1, grid.pq1)
    return ConjugateField(ScalarField(grid, nodes), quad, 0.0, _axis_constant(nodes, grid.phi_nodes))


def solve_ql_annulus(bd: BoundaryData, grid: PolarGrid, series_terms: int = 64,
                     tail_tol: float | None = None) -> ConjugateField:
    if bd.p_outer is None:
        raise ValueError("annulus conjugate needs outer boundary data")
    if series_terms < 1:
        raise ValueError("series_terms must be >= 1")
    bd.check_compatibility()
    R = grid.R
    tail = series_tail_bound(bd, R, series_terms, grid.r_nodes)
    if tail_tol is not None and tail > tail_tol:
        raise ValueError(f"series_terms={series_terms} gives tail bound {tail:.3e} > {tail_tol:.3e}")
    nodes = ql_annulus_values(bd, R, grid.r_nodes, grid.phi_nodes, series_terms)
    nodes[:, 0] = nodes[:, -1] = 0.0
    quad = ql_annulus_values(bd, R, grid.rq1, grid.pq1, series_terms)
    return ConjugateField(ScalarField(grid, nodes), quad, tail, _axis_constant(nodes, grid.phi_nodes))


# ----------------------------------------------------------------------
# data function
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DataFunction:
    """Omega = Psi - q_l at nodes and quadrature points with its axis constant K."""

    omega: ScalarField
    quad: np.ndarray = field(repr=False)
    K: float
    psi: PsiField | None = field(default=None, repr=False)
    ql: ConjugateField | None = field(default=None, repr=False)

    @property
    def grid(self) -> PolarGrid:
        return self.omega.grid

    @classmethod
    def zero(cls, grid: PolarGrid) -> "DataFunction":
        nq = (grid.rq1.size, grid.pq1.size)
        return cls(ScalarField(grid, np.zeros(grid.shape)), np.zeros(nq), 0.0)


def assemble_omega(psi: PsiField, ql: ConjugateField | None, K_cap: float = 50.0) -> DataFunction:
    grid = psi.field.grid
    if ql is not None and ql.field.grid is not grid:
        raise ValueError("Psi and q_l live on different grids")
    ql_n = ql.values if ql is not None else 0.0
    ql_q = ql.quad if ql is not None else 0.0
    nodes = psi.values - ql_n
    nodes[:, 0] = nodes[:, -1] = 0.0
    quad = psi.quad - ql_q
    K = _axis_constant(nodes, grid.phi_nodes)
    if K > K_cap:
        raise DataBoundError(f"axis constant K = {K:.3g} exceeds the cap {K_cap}")
    return DataFunction(ScalarField(grid, nodes), quad, K, psi, ql)
