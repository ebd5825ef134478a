"""Tensor-product discretization of the meridional rectangle Q_R = (1, R) x (0, pi).

Points of the meridional half plane are written in polar form
zeta = r cos(phi), rho = r sin(phi).  The rectangle is covered by bilinear
(Q1) cells with a tensor Gauss rule in every cell, so no quadrature point ever
lies on the symmetry axis phi in {0, pi}.  All weighted norms of the package
use the measure

    tent(phi)^(-gamma) dphi r^(1 - eta) dr,

where ``tent(phi) = min(phi, pi - phi)`` is the distance to the axis walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

GAMMA_MAX = 0.99


def tent(phi):
    """Distance of the angle ``phi`` to the nearest axis wall.

    Accepts scalars or arrays in ``[0, pi]``; anything outside raises
    ``ValueError``.
    """
    arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tent: non-finite angle")
    if np.any(arr < 0.0) or np.any(arr > np.pi):
        raise ValueError("tent: angle outside [0, pi]")
    out = np.minimum(arr, np.pi - arr)
    return float(out) if out.ndim == 0 else out


def _stretched_nodes(R: float, n: int, stretch: float | None, spacing: str = "uniform") -> np.ndarray:
    if spacing == "log":
        if stretch not in (None, 1.0):
            raise ValueError("stretch cannot be combined with logarithmic spacing")
        nodes = np.exp(np.linspace(0.0, np.log(R), n))
        nodes[0], nodes[-1] = 1.0, R
        return nodes
    if spacing != "uniform":
        raise ValueError(f"unknown radial spacing {spacing!r}")
    if stretch is None or stretch == 1.0:
        return np.linspace(1.0, R, n)
    if stretch <= 0:
        raise ValueError("stretch factor must be positive")
    k = np.arange(n, dtype=float)
    # geometric spacing: consecutive steps grow by the factor ``stretch``
    ratio = (stretch ** k - 1.0) / (stretch ** (n - 1) - 1.0)
    nodes = 1.0 + (R - 1.0) * ratio
    nodes[0], nodes[-1] = 1.0, R
    return nodes


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Rectangle (1, R) x (0, pi) with ``nr`` x ``nphi`` nodes.

    Node values are stored as arrays of shape ``(nr, nphi)``; the flattened
    (C-order) index of node ``(i, j)`` is ``i * nphi + j``.
    """

    R: float
    nr: int
    nphi: int
    stretch: float | None = None
    quad_order: int = 2
    spacing: str = "uniform"
    r_nodes: np.ndarray = field(init=False, repr=False)
    phi_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.R > 1.0:
            raise ValueError("outer radius R must exceed 1")
        if self.nr < 2 or self.nphi < 3:
            raise ValueError("need nr >= 2 and nphi >= 3")
        if self.quad_order < 1:
            raise ValueError("quad_order must be >= 1")
        r = _stretched_nodes(float(self.R), int(self.nr), self.stretch, self.spacing)
        if np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes are not strictly increasing")
        phi = np.linspace(0.0, np.pi, int(self.nphi))
        object.__setattr__(self, "r_nodes", r)
        object.__setattr__(self, "phi_nodes", phi)
        self._build_quadrature()

    # ------------------------------------------------------------------
    # quadrature tables
    # ------------------------------------------------------------------
    def _build_quadrature(self):
        xi, wi = leggauss(self.quad_order)
        # 1D reference basis on [-1, 1]: N0 = (1 - x)/2, N1 = (1 + x)/2
        n1 = np.stack([(1 - xi) / 2, (1 + xi) / 2], axis=1)  # (nq1, 2)
        d1 = np.array([-0.5, 0.5])  # dN/dx

        hr = np.diff(self.r_nodes)
        hp = np.diff(self.phi_nodes)
        rq = 0.5 * (self.r_nodes[:-1, None] + self.r_nodes[1:, None]) + 0.5 * hr[:, None] * xi[None, :]
        pq = 0.5 * (self.phi_nodes[:-1, None] + self.phi_nodes[1:, None]) + 0.5 * hp[:, None] * xi[None, :]
        wr = 0.5 * hr[:, None] * wi[None, :]
        wp = 0.5 * hp[:, None] * wi[None, :]

        ncr, ncp, nq1 = hr.size, hp.size, xi.size
        # the flattened list of 1D quadrature abscissae (cell-major)
        object.__setattr__(self, "rq1", rq.ravel())
        object.__setattr__(self, "pq1", pq.ravel())
        object.__setattr__(self, "wr1", wr.ravel())
        object.__setattr__(self, "wp1", wp.ravel())

        # 1D interpolation / differentiation operators node -> quad point
        Br = np.zeros((ncr * nq1, self.nr))
        Dr = np.zeros((ncr * nq1, self.nr))
        for c in range(ncr):
            rows = slice(c * nq1, (c + 1) * nq1)
            Br[rows, c] = n1[:, 0]
            Br[rows, c + 1] = n1[:, 1]
            Dr[rows, c] = d1[0] * 2.0 / hr[c]
            Dr[rows, c + 1] = d1[1] * 2.0 / hr[c]
        Bp = np.zeros((ncp * nq1, self.nphi))
        Dp = np.zeros((ncp * nq1, self.nphi))
        for c in range(ncp):
            rows = slice(c * nq1, (c + 1) * nq1)
            Bp[rows, c] = n1[:, 0]
            Bp[rows, c + 1] = n1[:, 1]
            Dp[rows, c] = d1[0] * 2.0 / hp[c]
            Dp[rows, c + 1] = d1[1] * 2.0 / hp[c]
        object.__setattr__(self, "_Br", Br)
        object.__setattr__(self, "_Dr", Dr)
        object.__setattr__(self, "_Bp", Bp)
        object.__setattr__(self, "_Dp", Dp)

        # element tables used by the assembly routines
        # local node order: (i, j), (i+1, j), (i, j+1), (i+1, j+1)
        a_idx, b_idx = np.meshgrid(np.arange(nq1), np.arange(nq1), indexing="ij")
        a_idx, b_idx = a_idx.ravel(), b_idx.ravel()  # quad point (a, b)
        loc_i = np.array([0, 1, 0, 1])
        loc_j = np.array([0, 0, 1, 1])
        N = n1[a_idx][:, loc_i] * n1[b_idx][:, loc_j]  # (nq, 4)
        dNa = d1[loc_i][None, :] * n1[b_idx][:, loc_j]  # d/dxi  (nq, 4)
        dNb = n1[a_idx][:, loc_i] * d1[loc_j][None, :]  # d/deta (nq, 4)
        ci, cj = np.meshgrid(np.arange(ncr), np.arange(ncp), indexing="ij")
        ci, cj = ci.ravel(), cj.ravel()
        conn = (ci[:, None] + loc_i[None, :]) * self.nphi + (cj[:, None] + loc_j[None, :])
        object.__setattr__(self, "cell_conn", conn)  # (ncells, 4)
        object.__setattr__(self, "ref_N", N)
        object.__setattr__(self, "cell_dNdr", dNa[None, :, :] * (2.0 / hr[ci])[:, None, None])
        object.__setattr__(self, "cell_dNdphi", dNb[None, :, :] * (2.0 / hp[cj])[:, None, None])
        object.__setattr__(self, "cell_r", rq[ci][:, a_idx])  # (ncells, nq)
        object.__setattr__(self, "cell_phi", pq[cj][:, b_idx])
        object.__setattr__(self, "cell_w", wr[ci][:, a_idx] * wp[cj][:, b_idx])  # dr dphi weights
        object.__setattr__(self, "_cell_tq", (ci[:, None] * nq1 + a_idx[None, :], cj[:, None] * nq1 + b_idx[None, :]))

    # ------------------------------------------------------------------
    # shapes and helpers
    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.nphi)

    @property
    def n_nodes(self) -> int:
        return self.nr * self.nphi

    @property
    def cell_diagonal(self) -> float:
        """Largest Euclidean cell diagonal in the meridional plane."""
        hr = np.diff(self.r_nodes).max()
        hp = np.diff(self.phi_nodes).max()
        return float(np.hypot(hr, self.R * hp))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(r, phi)`` as arrays of shape ``(nr, nphi)``."""
        return np.meshgrid(self.r_nodes, self.phi_nodes, indexing="ij")

    def quad_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Tensor quadrature abscissae as arrays of shape ``(nrq, nphiq)``."""
        return np.meshgrid(self.rq1, self.pq1, indexing="ij")

    def quad_weights(self) -> np.ndarray:
        """Tensor weights for dr dphi, shape ``(nrq, nphiq)``."""
        return np.outer(self.wr1, self.wp1)

    def to_quad(self, values: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of nodal values to quadrature points."""
        return self._Br @ np.asarray(values, dtype=float) @ self._Bp.T

    def ddr_quad(self, values: np.ndarray) -> np.ndarray:
        return self._Dr @ np.asarray(values, dtype=float) @ self._Bp.T

    def ddphi_quad(self, values: np.ndarray) -> np.ndarray:
        return self._Br @ np.asarray(values, dtype=float) @ self._Dp.T

    def cells(self, tensor_values: np.ndarray) -> np.ndarray:
        """Reorder tensor quadrature values to the per-cell layout ``(ncells, nq)``."""
        ti, tj = self._cell_tq
        return np.asarray(tensor_values)[ti, tj]

    def integrate(self, fq: np.ndarray, gamma: float = 0.0, eta: float = 0.0) -> float:
        """Quadrature of tensor quadrature values against the weighted measure."""
        R, P = self.quad_mesh()
        wt = self.quad_weights() * R ** (1.0 - eta)
        if gamma != 0.0:
            wt = wt * tent(P) ** (-gamma)
        return float(np.sum(np.asarray(fq) * wt))

    def field(self, values) -> "ScalarField":
        return ScalarField(self, values)

    def sample(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        """Evaluate ``func(r, phi)`` at the nodes."""
        Rm, Pm = self.mesh()
        return ScalarField(self, np.broadcast_to(func(Rm, Pm), self.shape).copy())

    def boundary_load(self, g: Callable[[np.ndarray], np.ndarray], side: str) -> np.ndarray:
        """Nodal load vector of ``int g(phi) psi ds`` on the circle r = 1 or r = R.

        ``ds = r dphi``; the result has one entry per node (flattened).
        """
        i = 0 if side == "inner" else self.nr - 1
        rad = self.r_nodes[i]
        vals = g(self.pq1)
        load_phi = self._Bp.T @ (vals * self.wp1) * rad
        out = np.zeros(self.shape)
        out[i, :] = load_phi
        return out.ravel()


def assemble_cells(grid: PolarGrid, local: np.ndarray):
    """Sum per-cell 4x4 matrices ``local[c, I, J]`` into a global CSR matrix.

    ``I`` indexes test functions (rows) and ``J`` trial functions (columns).
    Duplicate entries are summed in a fixed order, so repeated assembly is
    bitwise reproducible.
    """
    from scipy.sparse import coo_matrix

    conn = grid.cell_conn
    rows = np.repeat(conn[:, :, None], 4, axis=2).ravel()
    cols = np.repeat(conn[:, None, :], 4, axis=1).ravel()
    n = grid.n_nodes
    return coo_matrix((np.asarray(local).ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_load(grid: PolarGrid, local: np.ndarray) -> np.ndarray:
    """Sum per-cell load vectors ``local[c, I]`` into a nodal vector."""
    out = np.zeros(grid.n_nodes)
    np.add.at(out, grid.cell_conn.ravel(), np.asarray(local).ravel())
    return out


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal real values on a :class:`PolarGrid`."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.n_nodes:
            raise ValueError(f"expected {self.grid.n_nodes} nodal values, got {v.size}")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))

    def at_quad(self) -> np.ndarray:
        return self.grid.to_quad(self.values)

    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        return gradient(self)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - _values(other))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + _values(other))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


@dataclass(frozen=True)
class WeightSpec:
    """Exponents of a weighted Lebesgue or Sobolev norm.

    ``c`` scales the radial derivative in gradient norms (the weighted
    gradient is ``(c d_r, r^-1 d_phi)``).
    """

    gamma: float = 0.0
    eta: float = 0.0
    c: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("integration exponent p must be >= 1")
        if self.gamma > GAMMA_MAX:
            raise ValueError(f"tent exponent gamma > {GAMMA_MAX} is not supported")


def gradient(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Polar gradient ``(d_r f, r^-1 d_phi f)`` at the tensor quadrature points."""
    g = f.grid
    R, _ = g.quad_mesh()
    return g.ddr_quad(f.values), g.ddphi_quad(f.values) / R


QuadOrField = Union[ScalarField, np.ndarray, Sequence[np.ndarray]]


def weighted_norm(f: QuadOrField, w: WeightSpec, grid: PolarGrid | None = None) -> float:
    """(int |f|^p tent^-gamma dphi r^(1-eta) dr)^(1/p) by cell quadrature.

    ``f`` may be a :class:`ScalarField`, an array of quadrature values, or a
    pair ``(g_r, g_phi)`` of gradient components at quadrature points (the
    radial part is scaled by ``w.c``).
    """
    if isinstance(f, ScalarField):
        grid = f.grid
        mag = np.abs(f.at_quad())
        if not np.all(np.isfinite(f.values)):
            raise ValueError("weighted_norm: non-finite nodal values")
    elif isinstance(f, (tuple, list)):
        if grid is None:
            raise ValueError("grid required for gradient arguments")
        gr, gp = (np.asarray(a, dtype=float) for a in f)
        mag = np.hypot(w.c * gr, gp)
    else:
        if grid is None:
            raise ValueError("grid required for quadrature-value arguments")
        mag = np.abs(np.asarray(f, dtype=float))
    if not np.all(np.isfinite(mag)):
        raise ValueError("weighted_norm: non-finite values")
    scale = mag.max() if mag.size else 0.0
    if scale == 0.0:
        return 0.0
    # factor out the maximum so large p cannot overflow
    val = grid.integrate((mag / scale) ** w.p, gamma=w.gamma, eta=w.eta)
    return float(scale * val ** (1.0 / w.p))
