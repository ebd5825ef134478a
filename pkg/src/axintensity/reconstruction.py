"""Recovery of the real part wp and assembly of the meridional field.

Given the solved argument u and the data Omega, the gradient of wp is

    d_r wp            = r^-1 d_phi u + (sin(x + phi) - sin phi) / (r sin phi),
    -r^-1 d_phi wp    = d_r u + (cos phi - cos(x + phi)) / (r sin phi),

with x = u - Omega.  Both right-hand sides are 2 pi periodic in x, so the
branch of Omega never matters.  wp is integrated along radial lines from
the inner circle, where it is anchored to zero, and the second relation is
integrated along circles as an independent check.  The field follows from

    p = wp + p_l,  q = u + q_l,  f = h exp((p + i q)/2),  H_zeta = Re f,  H_rho = -Im f.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RectBivariateSpline

from .analytic_data import ZeroData, eval_h
from .conjugate_pair import BoundaryData, ConjugateField, DataFunction
from .polar_grid import PolarGrid, ScalarField


class PathIndependenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReconstructionConstants:
    wp0: float
    p_l0: float = 0.0
    I0: float = float("nan")
    wp_S1_dev: float = 0.0
    wp_SR_dev: float = 0.0
    path_residual: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _ddphi(v: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.gradient(v, phi, axis=1, edge_order=2)


def _ddr(v: np.ndarray, r: np.ndarray) -> np.ndarray:
    return np.gradient(v, r, axis=0, edge_order=2)


def _wall_quotient(num: np.ndarray, x: np.ndarray, phi: np.ndarray, wall_limit: np.ndarray) -> np.ndarray:
    """num / sin(phi) in the interior, with the supplied limits on the two walls."""
    out = np.empty_like(num)
    out[:, 1:-1] = num[:, 1:-1] / np.sin(phi[None, 1:-1])
    out[:, 0] = wall_limit[0]
    out[:, -1] = wall_limit[1]
    return out


def _x_wall_slopes(x: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided second-order d_phi x at the walls, using x = 0 there."""
    h0 = phi[1] - phi[0]
    h1 = phi[-1] - phi[-2]
    left = (4.0 * x[:, 1] - x[:, 2]) / (2.0 * h0)
    right = (-4.0 * x[:, -2] + x[:, -3]) / (2.0 * h1)
    return left, right


def wp_gradients(u: ScalarField, omega: DataFunction) -> tuple[np.ndarray, np.ndarray]:
    """Nodal (d_r wp, r^-1 d_phi wp) from the two first-order relations."""
    g = u.grid
    r, phi = g.r_nodes, g.phi_nodes
    Rm, Pm = g.mesh()
    uv = u.values
    x = uv - omega.omega.values
    x[:, 0] = x[:, -1] = 0.0
    up = _ddphi(uv, phi)
    ur = _ddr(uv, r)
    xl, xr = _x_wall_slopes(x, phi)
    # near phi = 0: (sin(x+phi) - sin phi)/sin phi -> d_phi x; near pi the same limit holds
    radial_q = _wall_quotient(np.sin(x + Pm) - np.sin(Pm), x, phi, (xl, xr))
    circ_q = _wall_quotient(np.cos(Pm) - np.cos(x + Pm), x, phi, (np.zeros(g.nr), np.zeros(g.nr)))
    dr_wp = (up + radial_q) / Rm
    dphi_wp_over_r = -(ur + circ_q / Rm)
    return dr_wp, dphi_wp_over_r


def integrate_wp(u: ScalarField, omega: DataFunction, bd: BoundaryData | None = None, ro: int = 0,
                 check_circles: int = 3, max_path_residual: float | None = None
                 ) -> tuple[ScalarField, ReconstructionConstants]:
    """Radial integration of wp from r = 1 with wp = 0 on the inner circle."""
    g = u.grid
    r, phi = g.r_nodes, g.phi_nodes
    dr_wp, dphi_r = wp_gradients(u, omega)
    wp = cumulative_trapezoid(dr_wp, r, axis=0, initial=0.0)
    # circle integration: d_phi wp = r * (r^-1 d_phi wp)
    dphi = dphi_r * r[:, None]
    circ = cumulative_trapezoid(dphi, phi, axis=1, initial=0.0)
    wp_S1_dev = float(np.std(circ[0]))
    wp_SR_dev = float(np.std(wp[-1]))
    wp0 = float(np.mean(wp[-1]))
    picks = np.unique(np.linspace(0, g.nr - 1, check_circles + 2).round().astype(int)[1:-1])
    path = 0.0
    for i in picks:
        mismatch = (wp[i] - wp[i, 0]) - circ[i]
        path = max(path, float(np.max(np.abs(mismatch))))
    if max_path_residual is not None and path > max_path_residual:
        raise PathIndependenceError(f"path-independence residual {path:.3e} exceeds {max_path_residual:.3e}")
    p_l0 = bd.p_l0 if bd is not None else 0.0
    I0 = float(np.exp(p_l0 + 0.5 * wp0 - ro * np.log(g.R)))
    consts = ReconstructionConstants(wp0, p_l0, I0, wp_S1_dev, wp_SR_dev, path)
    return ScalarField(g, wp), consts


@dataclass(frozen=True, eq=False)
class MeridionalField:
    H_zeta: ScalarField
    H_rho: ScalarField
    evaluator: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = field(
        default=None, repr=False)
    kind: str = "computed"

    @property
    def grid(self) -> PolarGrid:
        return self.H_zeta.grid

    @property
    def modulus(self) -> np.ndarray:
        return np.hypot(self.H_zeta.values, self.H_rho.values)

    def __neg__(self) -> "MeridionalField":
        ev = self.evaluator
        neg = None if ev is None else (lambda r, p: tuple(-c for c in ev(r, p)))
        return MeridionalField(ScalarField(self.grid, -self.H_zeta.values),
                               ScalarField(self.grid, -self.H_rho.values), neg, self.kind)

    def scaled(self, c: float) -> "MeridionalField":
        ev = self.evaluator
        sc = None if ev is None else (lambda r, p: tuple(c * v for v in ev(r, p)))
        return MeridionalField(ScalarField(self.grid, c * self.H_zeta.values),
                               ScalarField(self.grid, c * self.H_rho.values), sc, self.kind)

    @classmethod
    def from_function(cls, grid: PolarGrid, func: Callable, kind: str = "analytic") -> "MeridionalField":
        """Sample ``func(r, phi) -> (H_zeta, H_rho)`` on the nodes."""
        Rm, Pm = grid.mesh()
        hz, hr = func(Rm, Pm)
        hr = np.array(np.broadcast_to(hr, grid.shape), dtype=float)
        return cls(ScalarField(grid, np.broadcast_to(hz, grid.shape).copy()), ScalarField(grid, hr), func, kind)


def field_from_pq(zd: ZeroData, r, phi, p, q) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(r) * np.exp(1j * np.asarray(phi))
    with np.errstate(over="raise"):
        try:
            f = eval_h(zd, z) * np.exp(0.5 * (np.asarray(p) + 1j * np.asarray(q)))
        except FloatingPointError as exc:
            raise OverflowError("exp(p/2) overflowed; p is unbounded") from exc
    return f.real, -f.imag


def assemble_field(wp: ScalarField, u: ScalarField, p_l: ScalarField, q_l: ConjugateField | ScalarField,
                   zd: ZeroData, consts: ReconstructionConstants | None = None):
    """Return (p, q, MeridionalField, I0) on the common grid."""
    g = wp.grid
    qlf = q_l.field if isinstance(q_l, ConjugateField) else q_l
    for f in (u, p_l, qlf):
        if f.grid is not g:
            raise ValueError("all inputs must live on the same grid")
    p = ScalarField(g, wp.values + p_l.values)
    q = ScalarField(g, u.values + qlf.values)
    Rm, Pm = g.mesh()
    hz, hr = field_from_pq(zd, Rm, Pm, p.values, q.values)
    hr[:, 0] = hr[:, -1] = 0.0
    kx = min(3, g.nr - 1)
    ky = min(3, g.nphi - 1)
    sp_p = RectBivariateSpline(g.r_nodes, g.phi_nodes, p.values, kx=kx, ky=ky)
    sp_q = RectBivariateSpline(g.r_nodes, g.phi_nodes, q.values, kx=kx, ky=ky)

    def evaluator(r, phi):
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        # even/odd continuation across the walls: p(-phi) = p(phi), q(-phi) = -q(phi)
        sgn = np.where((phi < 0) | (phi > np.pi), -1.0, 1.0)
        pf = np.where(phi < 0, -phi, np.where(phi > np.pi, 2 * np.pi - phi, phi))
        pv = sp_p.ev(r, pf)
        qv = sgn * sp_q.ev(r, pf)
        return field_from_pq(zd, r, phi, pv, qv)

    I0 = consts.I0 if consts is not None else float("nan")
    H = MeridionalField(ScalarField(g, hz), ScalarField(g, hr), evaluator)
    return p, q, H, I0
