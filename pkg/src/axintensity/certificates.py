"""Computable constants behind the solvability argument.

* The coercivity function F(s, t, tau), its infimum LB, the comparison
  value CF and the gap Delta = LB - CF.
* A quadrature harness for the weighted Hardy and Poincare inequalities
  on (1, R) x (0, pi).
* The Kummer-function supersolution that bounds the spectrum of the
  linearized operator away from M.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize
from scipy.special import roots_jacobi

from .polar_grid import ScalarField

A_RHO_DEV_CAP = 0.61
A_ZETA_BOUND = 0.73
A_RHO_LOWER = 0.22


# ----------------------------------------------------------------------
# coercivity
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CoercivityInputs:
    alpha: float = 0.39
    gamma: float = 0.6
    eta: float = 1e-3
    d: float = 0.1
    e: float = 1.2

    @property
    def beta_plus(self) -> float:
        return 0.5 * (self.alpha + self.gamma)

    @property
    def beta_minus(self) -> float:
        return 0.5 * (self.alpha - self.gamma)

    @property
    def delta_plus(self) -> float:
        b = self.beta_plus
        return b * (1 + b)

    @property
    def delta_minus(self) -> float:
        b = self.beta_minus
        return b * (1 + b)

    @property
    def delta_0(self) -> float:
        return self.beta_plus * self.beta_minus + 0.5 * (self.beta_plus + self.beta_minus)

    @property
    def c_plus(self) -> float:
        h = self.eta
        return 1.5 * h * (1 + 1.5 * h) * math.pi**2 * self.d**2

    @property
    def c_minus(self) -> float:
        h = self.eta
        return 0.5 * h * (1 + 0.5 * h) * math.pi**2 * self.e**2

    @property
    def c_0(self) -> float:
        h = self.eta
        return 0.5 * h * (1 + 1.5 * h) * math.pi**2

    def e_lower_bound(self, a_zeta_sup: float = A_ZETA_BOUND, dev: float = A_RHO_DEV_CAP) -> float:
        """Smallest admissible e: (||a_zeta|| + eta pi/2) / ||a_rho - alpha||."""
        return (a_zeta_sup + self.eta * math.pi / 2) / dev


def F(s: float, t: float, tau: float, inputs: CoercivityInputs = CoercivityInputs()) -> float:
    """Two-factor square-root lower bound of the bilinear form ratio."""
    if s < 0 or not 0 <= t <= 1 or not 0 <= tau <= 1:
        raise ValueError("F needs s >= 0 and t, tau in [0, 1]")
    c = inputs
    h = c.eta
    num = 1 - c.c_0 + (1 - h / 2) * s + 4 * c.delta_0 * t + 0.5 * (c.beta_plus + c.beta_minus) * tau
    den_p = 1 + c.c_plus + (1 + 1.5 * h) * c.d**2 * s + 4 * c.delta_plus * t + c.beta_plus * tau
    den_m = 1 + c.c_minus + (1 + 0.5 * h) * c.e**2 * s + 4 * c.delta_minus * t + c.beta_minus * tau
    rad1, rad2 = num / den_p, num / den_m
    if rad1 < 0 or rad2 < 0 or den_p <= 0 or den_m <= 0:
        raise ValueError(f"negative radicand in F at (s, t, tau) = ({s}, {t}, {tau})")
    return math.sqrt(rad1) * math.sqrt(rad2)


def _F_vec(s, t, tau, c: CoercivityInputs):
    h = c.eta
    num = 1 - c.c_0 + (1 - h / 2) * s + 4 * c.delta_0 * t + 0.5 * (c.beta_plus + c.beta_minus) * tau
    den_p = 1 + c.c_plus + (1 + 1.5 * h) * c.d**2 * s + 4 * c.delta_plus * t + c.beta_plus * tau
    den_m = 1 + c.c_minus + (1 + 0.5 * h) * c.e**2 * s + 4 * c.delta_minus * t + c.beta_minus * tau
    with np.errstate(invalid="ignore"):
        return np.sqrt(num / den_p) * np.sqrt(num / den_m)


@dataclass(frozen=True)
class LowerBound:
    value: float
    s: float
    t: float
    tau: float


def lower_bound_LB(inputs: CoercivityInputs = CoercivityInputs(), n_s: int = 121, n_t: int = 41,
                   n_tau: int = 11, s_range: tuple[float, float] = (1e-6, 1e6)) -> LowerBound:
    """inf of F over s >= 0, t, tau in [0, 1]: log-scale grid search then bounded polishing.

    s is searched as log10 s plus the exact point s = 0; the minimizer is
    recorded.
    """
    ls = np.linspace(np.log10(s_range[0]), np.log10(s_range[1]), n_s)
    s_vals = np.concatenate([[0.0], 10.0**ls])
    t_vals = np.linspace(0, 1, n_t)
    tau_vals = np.linspace(0, 1, n_tau)
    S, T, U = np.meshgrid(s_vals, t_vals, tau_vals, indexing="ij")
    vals = _F_vec(S, T, U, inputs)
    if not np.all(np.isfinite(vals)):
        raise ValueError("F is not real on the search grid")
    k = np.unravel_index(np.argmin(vals), vals.shape)
    best = (float(vals[k]), float(S[k]), float(T[k]), float(U[k]))
    # polish in (asinh s, t, tau) so that s = 0 stays reachable
    x0 = np.array([np.arcsinh(best[1]), best[2], best[3]])

    def obj(x):
        return float(_F_vec(np.sinh(x[0]), x[1], x[2], inputs))

    hi = float(np.arcsinh(s_range[1]))
    res = minimize(obj, x0, method="L-BFGS-B", bounds=[(0.0, hi), (0.0, 1.0), (0.0, 1.0)],
                   options=dict(ftol=1e-15, gtol=1e-12, maxiter=500))
    if res.fun < best[0]:
        best = (float(res.fun), float(np.sinh(res.x[0])), float(res.x[1]), float(res.x[2]))
    # the far end s -> infinity is covered by the asymptotic value
    asym = s_asymptote(inputs)
    if asym < best[0]:
        best = (asym, math.inf, 0.0, 0.0)
    return LowerBound(*best)


def s_asymptote(inputs: CoercivityInputs) -> float:
    """lim F as s -> infinity."""
    h = inputs.eta
    return (1 - h / 2) / math.sqrt((1 + 1.5 * h) * inputs.d**2 * (1 + 0.5 * h) * inputs.e**2)


def comparison_CF(alpha: float = 0.39, gamma: float = 0.6, a_rho_dev: float = A_RHO_DEV_CAP) -> float:
    return 2 * math.sqrt(2) * a_rho_dev / (1 + alpha + gamma)


def gap_Delta(inputs: CoercivityInputs = CoercivityInputs(), a_rho_dev: float = A_RHO_DEV_CAP) -> float:
    return lower_bound_LB(inputs).value - comparison_CF(inputs.alpha, inputs.gamma, a_rho_dev)


def constant_C(inputs: CoercivityInputs = CoercivityInputs()) -> float:
    """Lower-order bound constant: C^2 = 2 max{1/d^2, 1 + (pi^2 eta^2 + gamma^2)(2/(1+alpha+gamma))^2}."""
    c = inputs
    inner = 1 + (math.pi**2 * c.eta**2 + c.gamma**2) * (2 / (1 + c.alpha + c.gamma)) ** 2
    return math.sqrt(2 * max(1 / c.d**2, inner))


def constant_M(inputs: CoercivityInputs = CoercivityInputs(), delta: float | None = None) -> float:
    delta = gap_Delta(inputs) if delta is None else delta
    if not delta > 0:
        raise ValueError("M = C / Delta needs a positive gap")
    return constant_C(inputs) / delta


def gamma_sweep(gammas: Sequence[float], alpha: float = 0.39, eta: float = 1e-3, d: float = 0.1,
                e: float = 1.2, a_rho_dev: float = A_RHO_DEV_CAP) -> np.ndarray:
    """Rows (gamma, LB, CF) for the window plot of LB against CF.

    LB is NaN where a factor of F turns negative somewhere on the search
    box; the estimate carries no information there.
    """
    rows = []
    for g in gammas:
        try:
            lb = lower_bound_LB(CoercivityInputs(alpha, float(g), eta, d, e)).value
        except ValueError:
            lb = float("nan")
        rows.append((float(g), lb, comparison_CF(alpha, float(g), a_rho_dev)))
    return np.array(rows)


# ----------------------------------------------------------------------
# Hardy / Poincare harness
# ----------------------------------------------------------------------
def _angular_rule(breaks: np.ndarray, gamma: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_0^pi g(phi) tent(phi)^-gamma dphi.

    ``breaks`` must contain 0, pi/2 and pi.  Wall panels use Gauss-Jacobi
    rules that absorb the singular weight; the other panels use
    Gauss-Legendre with the weight evaluated pointwise.
    """
    xg, wg = leggauss(n)
    xj, wj = roots_jacobi(n, 0.0, -gamma)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        h = b - a
        if a == 0.0:
            nodes.append(a + h * (1 + xj) / 2)
            weights.append((h / 2) ** (1 - gamma) * wj)
        elif b == np.pi:
            nodes.append(b - h * (1 + xj) / 2)
            weights.append((h / 2) ** (1 - gamma) * wj)
        else:
            x = a + h * (1 + xg) / 2
            nodes.append(x)
            weights.append(h / 2 * wg * np.minimum(x, np.pi - x) ** (-gamma))
    return np.concatenate(nodes), np.concatenate(weights)


def _radial_rule(breaks: np.ndarray, eta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    xg, wg = leggauss(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    r = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
    w = 0.5 * (b - a) * wg[None, :] * r ** (1 - eta)
    return r.ravel(), w.ravel()


@dataclass(frozen=True)
class HardyResult:
    lhs: float
    rhs: float
    constant: float
    passed: bool
    kind: str

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def hardy_constant(gamma: float, p: float) -> float:
    if p + gamma - 1 == 0:
        raise ValueError("gamma = 1 - p is excluded")
    return p / abs(p + gamma - 1)


def _pnorm(vals: np.ndarray, w: np.ndarray, p: float) -> float:
    a = np.abs(vals)
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((a / m) ** p * w) ** (1 / p))


def _as_callables(f, dfdphi, dfdr):
    """Bilinear evaluation of a nodal field (with its piecewise derivatives)."""
    g = f.grid
    vals = f.values

    def interp_matrix(nodes, x, deriv=False):
        idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
        h = nodes[idx + 1] - nodes[idx]
        lam = (x - nodes[idx]) / h
        M = np.zeros((x.size, nodes.size))
        rows = np.arange(x.size)
        if deriv:
            M[rows, idx] = -1 / h
            M[rows, idx + 1] = 1 / h
        else:
            M[rows, idx] = 1 - lam
            M[rows, idx + 1] = lam
        return M

    def make(dr, dp):
        def fn(r, phi):
            return interp_matrix(g.r_nodes, r, dr) @ vals @ interp_matrix(g.phi_nodes, phi, dp).T
        return fn

    return make(False, False), make(False, True), make(True, False)


@dataclass(frozen=True, eq=False)
class _HardySamples:
    """Quadrature values of f, d_phi f and d_r f for one tent exponent."""

    f: np.ndarray
    dphi: np.ndarray
    dr: np.ndarray | None
    W: np.ndarray
    r: np.ndarray
    tent: np.ndarray
    R: float


def _sample(f, gamma: float, eta: float, R: float | None, dfdphi, dfdr, n_panels: int, n_points: int):
    if isinstance(f, ScalarField):
        g = f.grid
        if np.any(f.values[:, 0] != 0) or np.any(f.values[:, -1] != 0):
            raise ValueError("f must vanish on the walls")
        R = g.R
        fn, dp_fn, dr_fn = _as_callables(f, None, None)
        # the interpolant is bilinear per cell, so low-order rules per cell are exact up to the weight
        pb = np.union1d(g.phi_nodes, [np.pi / 2])
        rb = g.r_nodes
        n_ang, n_rad = 8, 4
        wrap = lambda fun: (lambda r, p: fun(r, p))  # noqa: E731
    else:
        if dfdphi is None or R is None:
            raise ValueError("callable f needs dfdphi and R")
        fn, dp_fn, dr_fn = f, dfdphi, dfdr
        pb = np.concatenate([np.linspace(0, np.pi / 2, n_panels + 1), np.linspace(np.pi / 2, np.pi, n_panels + 1)[1:]])
        rb = np.linspace(1.0, R, 5)
        n_ang, n_rad = n_points, max(4, n_points // 2)
        wrap = lambda fun: (lambda r, p: fun(r[:, None], p[None, :]))  # noqa: E731
    phq, pw = _angular_rule(pb, gamma, n_ang)
    rq, rw = _radial_rule(rb, eta, n_rad)
    W = np.outer(rw, pw)
    shape = W.shape
    fv = np.broadcast_to(wrap(fn)(rq, phq), shape)
    dpv = np.broadcast_to(wrap(dp_fn)(rq, phq), shape)
    drv = None if dr_fn is None else np.broadcast_to(wrap(dr_fn)(rq, phq), shape)
    tent_v = np.minimum(phq, np.pi - phq)[None, :]
    return _HardySamples(fv, dpv, drv, W, rq[:, None], tent_v, float(R))


def _inequalities(smp: _HardySamples, gamma: float, p: float, c: float) -> dict[str, HardyResult]:
    K = hardy_constant(gamma, p)
    out = {}
    lhs = _pnorm(smp.f / smp.tent, smp.W, p)
    dnorm = _pnorm(smp.dphi, smp.W, p)
    rhs = K * dnorm
    out["hardy"] = HardyResult(lhs, rhs, K, lhs <= rhs * (1 + 1e-6), "hardy")
    lhs2 = _pnorm(smp.f, smp.W, p)
    rhs2 = 0.5 * math.pi * K * dnorm
    out["poincare"] = HardyResult(lhs2, rhs2, 0.5 * math.pi * K, lhs2 <= rhs2 * (1 + 1e-6), "poincare")
    if smp.dr is not None:
        gnorm = _pnorm(np.hypot(c * smp.dr, smp.dphi / smp.r), smp.W, p)
        K3 = smp.R * 0.5 * math.pi * K
        out["poincare_gradient"] = HardyResult(lhs2, K3 * gnorm, K3, lhs2 <= K3 * gnorm * (1 + 1e-6),
                                               "poincare_gradient")
    return out


def hardy_check(f, gamma: float, eta: float, p: float, R: float | None = None,
                dfdphi: Callable | None = None, dfdr: Callable | None = None, c: float = 1.0,
                n_panels: int = 8, n_points: int = 16) -> dict[str, HardyResult]:
    """Both sides of the Hardy inequality and the two Poincare inequalities.

    ``f`` is a wall-vanishing :class:`ScalarField` or a callable ``f(r, phi)``
    evaluated on tensor grids (r as column, phi as row); callables need the
    derivative callables as well.  Each check passes when
    ``lhs <= rhs * (1 + 1e-6)``.
    """
    smp = _sample(f, gamma, eta, R, dfdphi, dfdr, n_panels, n_points)
    return _inequalities(smp, gamma, p, c)


def random_trig_family(rng: np.random.Generator, modes: int = 6, radial_degree: int = 2):
    """A random wall-vanishing function sum_k P_k(r) sin(k phi) with its derivatives."""
    from numpy.polynomial import polynomial as P

    C = rng.normal(size=(modes, radial_degree + 1)) / np.arange(1, modes + 1)[:, None]
    dC = np.array([P.polyder(c) for c in C])
    ks = np.arange(1, modes + 1).reshape(-1, 1, 1)

    def radial(coeffs, r):
        r = np.asarray(r, dtype=float)
        return np.stack([P.polyval(r, c) for c in coeffs])

    def f(r, phi):
        return np.sum(radial(C, r) * np.sin(ks * phi), axis=0)

    def dphi(r, phi):
        return np.sum(radial(C, r) * ks * np.cos(ks * phi), axis=0)

    def dr(r, phi):
        return np.sum(radial(dC, r) * np.sin(ks * phi), axis=0)

    return f, dphi, dr


@dataclass
class HarnessReport:
    n_functions: int
    failures: int
    max_ratio: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def hardy_harness(n: int = 100, p_list: Sequence[float] = (2, 4, 29), gamma_list: Sequence[float] = (0, 0.2, 0.99),
                  eta: float = 1e-3, R: float = 2.0, seed: int = 0) -> HarnessReport:
    """Random wall-vanishing family checked against all three inequalities."""
    rng = np.random.default_rng(seed)
    funcs = [random_trig_family(rng) for _ in range(n)]
    fails = 0
    worst: dict[str, float] = {}
    cases = []
    for gam in gamma_list:
        samples = [_sample(f, gam, eta, R, fp, fr, 8, 16) for f, fp, fr in funcs]
        for p in p_list:
            key = f"p={p},gamma={gam}"
            w = 0.0
            for smp in samples:
                for res in _inequalities(smp, gam, p, 1.0).values():
                    w = max(w, res.ratio)
                    fails += not res.passed
            worst[key] = w
            cases.append(dict(p=p, gamma=gam, max_ratio=w))
    return HarnessReport(n, fails, worst, cases)


def extremal_ratio(a: float, gamma: float, p: float, n: int = 40) -> tuple[float, float]:
    """Hardy ratio ||f/tent|| / ||d_phi f|| for f = tent^a, with the bound.

    The family is admissible for a > 1 - (1 - gamma)/p; both sides reduce
    to integrals of tent^(p(a-1) - gamma), done by Gauss-Jacobi with that
    exact exponent.
    """
    a_min = 1 - (1 - gamma) / p
    if not a > a_min:
        raise ValueError(f"exponent a must exceed {a_min}")
    beta = p * (a - 1) - gamma
    x, w = roots_jacobi(n, 0.0, beta)
    h = np.pi / 2
    # int_0^{pi/2} phi^beta dphi on each half; the integrand is constant
    base = 2 * (h / 2) ** (1 + beta) * np.sum(w)
    lhs = base ** (1 / p)
    rhs = a * base ** (1 / p)
    return lhs / rhs, hardy_constant(gamma, p)


# ----------------------------------------------------------------------
# Kummer supersolution
# ----------------------------------------------------------------------
def kummer_M(a: float, b: float, x: float, tol: float = 1e-16, max_terms: int = 500,
             return_terms: bool = False):
    """Confluent hypergeometric series sum (a)_k/(b)_k x^k/k!.

    Negative arguments use M(a, b, x) = e^x M(b - a, b, -x) so that the
    summed series never alternates.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError("b must not be a non-positive integer")
    if abs(x) > 50:
        raise ValueError("series regime requires |x| <= 50")
    if x < 0:
        val, n = kummer_M(b - a, b, -x, tol, max_terms, True)
        return (math.exp(x) * val, n) if return_terms else math.exp(x) * val
    term, total, k = 1.0, 1.0, 0
    while k < max_terms:
        term *= (a + k) / (b + k) * x / (k + 1)
        total += term
        k += 1
        if abs(term) <= tol * abs(total):
            break
    else:
        raise RuntimeError("Kummer series did not converge")
    return (total, k + 1) if return_terms else total


def _kappa(d_phi: float) -> float:
    if d_phi >= 0.25:
        raise ValueError("d_phi < 1/4 required for a real Kummer argument")
    return math.sqrt(1 - 4 * d_phi)


def g1(phi, d_phi: float):
    """exp(-(1+kappa) phi/2) phi^(1/2) M(3/4 + 1/(4 kappa), 3/2, kappa phi)."""
    k = _kappa(d_phi)
    a = 0.75 + 0.25 / k
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    M = np.array([kummer_M(a, 1.5, k * x) for x in phi])
    out = np.exp(-(1 + k) * phi / 2) * np.sqrt(phi) * M
    return out


def g1_prime(phi, d_phi: float):
    k = _kappa(d_phi)
    a, b = 0.75 + 0.25 / k, 1.5
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    M0 = np.array([kummer_M(a, b, k * x) for x in phi])
    M1 = np.array([kummer_M(a + 1, b + 1, k * x) for x in phi])
    pre = np.exp(-(1 + k) * phi / 2) * np.sqrt(phi)
    return pre * ((-(1 + k) / 2 + 0.5 / phi) * M0 + k * (a / b) * M1)


def g1_second(phi, d_phi: float):
    """Second derivative of g1 from the Kummer derivative identities."""
    k = _kappa(d_phi)
    a, b = 0.75 + 0.25 / k, 1.5
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    M0 = np.array([kummer_M(a, b, k * x) for x in phi])
    M1 = a / b * np.array([kummer_M(a + 1, b + 1, k * x) for x in phi])
    M2 = a * (a + 1) / (b * (b + 1)) * np.array([kummer_M(a + 2, b + 2, k * x) for x in phi])
    lin = -(1 + k) / 2 + 0.5 / phi
    pre = np.exp(-(1 + k) * phi / 2) * np.sqrt(phi)
    return pre * ((lin**2 - 0.5 / phi**2) * M0 + 2 * lin * k * M1 + k**2 * M2)


def find_dphi(lo: float = 0.1, hi: float = 0.2499, tol: float = 1e-12) -> float:
    """Root of g1'(pi/2) = 0 in d_phi, by bisection."""
    fl = g1_prime(np.pi / 2, lo)[0]
    fh = g1_prime(np.pi / 2, hi)[0]
    if fl * fh > 0:
        raise RuntimeError("g1'(pi/2) does not change sign on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = g1_prime(np.pi / 2, mid)[0]
        if fm * fl > 0:
            lo, fl = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SupersolutionParams:
    eps: float = 0.3
    R0: float = 5.0
    R: float = 10.0
    d_r: float = 0.09
    d_phi: float = field(default=None)
    A: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps < math.pi / 2:
            raise ValueError("eps must lie in (0, pi/2)")
        if not 1 < self.R0 < self.R:
            raise ValueError("need 1 < R0 < R")
        if self.d_phi is None:
            object.__setattr__(self, "d_phi", find_dphi())

    @property
    def D(self) -> float:
        return self.d_phi - self.d_r

    @property
    def kappa(self) -> complex | float:
        v = 1 - 4 * self.d_phi
        return math.sqrt(v) if v >= 0 else 1j * math.sqrt(-v)

    @property
    def c_eps(self) -> float:
        return 1 / self.eps + 1

    @property
    def alpha_pm(self) -> tuple[float, float]:
        c = self.c_eps
        s = math.sqrt(c * c + 4 * self.d_r)
        return 0.5 * (c + s), 0.5 * (c - s)


def radial_parts(prm: SupersolutionParams, r: np.ndarray):
    """f and f' on (1, R): f1 on (1, R0], f2 on [R0, R)."""
    ap, am = prm.alpha_pm
    r = np.asarray(r, dtype=float)
    x = r / prm.R0
    inner = r <= prm.R0
    f = np.where(inner, (ap * x**am - am * x**ap) / (ap - am), (ap * x ** (-am) - am * x ** (-ap)) / (ap - am))
    fp = np.where(inner, ap * am / (ap - am) * (x**am - x**ap) / r, -ap * am / (ap - am) * (x ** (-am) - x ** (-ap)) / r)
    return f, fp


def _radial_second(prm: SupersolutionParams, r: np.ndarray) -> np.ndarray:
    ap, am = prm.alpha_pm
    x = r / prm.R0
    inner = r <= prm.R0
    e1 = (ap * am * (am - 1) * x**am - am * ap * (ap - 1) * x**ap) / (ap - am) / r**2
    e2 = (ap * (-am) * (-am - 1) * x ** (-am) - am * (-ap) * (-ap - 1) * x ** (-ap)) / (ap - am) / r**2
    return np.where(inner, e1, e2)


def supersolution_check(eps: float = 0.3, R0: float = 5.0, R: float = 10.0, d_r: float = 0.09,
                        n: int = 10_000, tol: float = 1e-10) -> dict:
    """Pointwise verification of the radial and angular supersolution inequalities."""
    prm = SupersolutionParams(eps=eps, R0=R0, R=R, d_r=d_r)
    c = prm.c_eps
    rep: dict = dict(d_phi=prm.d_phi, d_r=d_r, D=prm.D, c_eps=c, alpha_plus=prm.alpha_pm[0], alpha_minus=prm.alpha_pm[1])
    # radial part
    r = np.linspace(1.0, R, n)
    f, fp = radial_parts(prm, r)
    fpp = _radial_second(prm, r)
    inner = r <= R0
    # worst case over |b_r| <= c_eps: the coefficient term is linear in b_r
    worst = np.maximum((1 - c) * fp, (1 + c) * fp) / r
    ineq_r = fpp + worst - d_r * f / r**2
    ode1 = fpp + (1 - c) / r * fp - d_r * f / r**2
    ode2 = fpp + (1 + c) / r * fp - d_r * f / r**2
    scale_r = np.max(np.abs(fpp)) + np.max(np.abs(fp)) + np.max(np.abs(f))
    rep["radial_ode_residual"] = float(max(np.abs(ode1[inner]).max(), np.abs(ode2[~inner]).max()) / scale_r)
    rep["radial_inequality_max"] = float(ineq_r.max() / scale_r)
    rep["f_R0"], rep["fprime_R0"] = [float(v) for v in (radial_parts(prm, np.array([R0]))[0][0],
                                                       radial_parts(prm, np.array([R0]))[1][0])]
    rep["fprime_1"] = float(fp[0])
    rep["fprime_R"] = float(fp[-1])
    rep["f_min"] = float(f.min())
    # angular part on (0, pi/2); g2 is the mirror image
    phi = np.linspace(0, np.pi / 2, n + 1)[1:]
    d = prm.d_phi
    gv = g1(phi, d)
    gp = g1_prime(phi, d)
    gpp = g1_second(phi, d)
    ode_g = gpp + (1 + 0.5 / phi) * gp + d * gv
    rel_ode = np.abs(ode_g) / (np.abs(gpp) + np.abs(gp) + np.abs(gv))
    rep["angular_ode_residual"] = float(rel_ode.max())
    upper = A_RHO_LOWER / np.tan(phi) + A_ZETA_BOUND
    ineq_g = gpp + np.maximum(upper, 0) * np.maximum(gp, 0) + d * gv
    ineq_half = gpp + (0.5 / phi + 1) * gp + d * gv
    sc = np.max(np.abs(gpp)) + np.max(np.abs(gp)) + np.max(np.abs(gv))
    rep["angular_inequality_max"] = float(ineq_g.max() / sc)
    rep["angular_bound_inequality_max"] = float(ineq_half.max() / sc)
    rep["gprime_min"] = float(gp.min())
    rep["g_min"] = float(gv.min())
    rep["gprime_half_pi"] = float(g1_prime(np.pi / 2, d)[0])
    rep["coefficient_bound_ok"] = bool(np.all(upper <= 0.5 / phi + 1 + 1e-15))
    small = np.array([1e-6, 1e-5, 1e-4])
    rep["g_sqrt_slope"] = float(np.polyfit(np.log(small), np.log(g1(small, d)), 1)[0])
    checks = dict(
        radial_ode=rep["radial_ode_residual"] <= 1e-8,
        radial_inequality=rep["radial_inequality_max"] <= tol,
        initial_conditions=abs(rep["f_R0"] - 1) <= 1e-14 and abs(rep["fprime_R0"]) <= 1e-14,
        radial_signs=rep["fprime_1"] < 0 < rep["fprime_R"] and rep["f_min"] > 0,
        angular_inequality=rep["angular_inequality_max"] <= tol and rep["angular_bound_inequality_max"] <= tol,
        angular_signs=rep["gprime_min"] >= -tol and rep["g_min"] >= 0,
        c1_matching=abs(rep["gprime_half_pi"]) <= 1e-8 and abs(rep["fprime_R0"]) <= 1e-14,
        gap=prm.D > 0.1,
        angular_ode=rep["angular_ode_residual"] <= 1e-10,
    )
    rep["checks"] = checks
    rep["passed"] = all(checks.values())
    return rep
