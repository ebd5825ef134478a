"""Frozen-coefficient linearized problem on Q_R.

For a frozen argument w and the data function Omega, find u with u = 0 on
the axis walls such that for all test functions psi

    int grad u . grad psi dmu
      + int (u - Omega) (c_r d_r psi + c_phi r^-1 d_phi psi) dmu = 0,

    c_r   = (a_zeta cot(phi) + a_rho) / r,
    c_phi = (a_rho cot(phi) - a_zeta) / r,

with a = a[w - Omega] and dmu = dphi r dr.  The u-part collects the
1/(r tan phi) term and the 1/r lower-order term; the Omega-part is the
right-hand side Omega/(r sin phi) (a_r d_r psi + a_phi r^-1 d_phi psi).
The circles r = 1 and r = R carry the natural boundary condition, so their
nodes stay unknowns.  Q1 elements with the grid's Gauss rule are used, and
all coefficients are evaluated at quadrature points only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .conjugate_pair import DataFunction
from .nonlinearity import a_rho, a_zeta
from .polar_grid import PolarGrid, ScalarField, assemble_cells, assemble_load


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, msg: str, sigma_min: float | None = None):
        super().__init__(msg)
        self.sigma_min = sigma_min


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    grid: PolarGrid
    A: sp.csr_matrix = field(repr=False)
    b: np.ndarray = field(repr=False)
    free: np.ndarray = field(repr=False)  # boolean mask over flattened nodes

    @property
    def n_dofs(self) -> int:
        return int(self.free.sum())

    def dump_coo(self, path: str | Path) -> None:
        """Write the matrix as 'row col value' lines (0-based DOF indices)."""
        coo = self.A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        data = np.column_stack([coo.row[order], coo.col[order], coo.data[order]])
        np.savetxt(path, data, fmt=["%d", "%d", "%.17g"], header=f"{self.A.shape[0]} {self.A.shape[1]} {coo.nnz}")


def free_mask(grid: PolarGrid) -> np.ndarray:
    m = np.ones(grid.shape, dtype=bool)
    m[:, 0] = m[:, -1] = False
    return m.ravel()


def coefficient_fields(grid: PolarGrid, w: ScalarField, omega: DataFunction):
    """(c_r, c_phi) at quadrature points in per-cell layout, plus Omega there."""
    wq = grid.cells(grid.to_quad(w.values))
    om = grid.cells(omega.quad)
    x = wq - om
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite frozen argument w - Omega at a quadrature point")
    az, ar = a_zeta(x), a_rho(x)
    r, phi = grid.cell_r, grid.cell_phi
    cot = np.cos(phi) / np.sin(phi)
    return (az * cot + ar) / r, (ar * cot - az) / r, om


def assemble(w: ScalarField, omega: DataFunction, grid: PolarGrid | None = None,
             source_quad: np.ndarray | None = None,
             boundary_flux: tuple | None = None) -> AssembledSystem:
    """Assemble the linearized system for frozen argument ``w``.

    ``source_quad`` (tensor quadrature values F) adds int F psi dmu to the
    right-hand side; ``boundary_flux = (g_inner, g_outer)`` adds
    int g psi ds on the two circles.  Both exist for manufactured solutions.
    """
    grid = grid or w.grid
    wv = w.values
    if np.any(wv[:, 0] != 0) or np.any(wv[:, -1] != 0):
        raise ValueError("frozen argument must vanish on the axis walls")
    c_r, c_phi, om = coefficient_fields(grid, w, omega)
    r = grid.cell_r
    W = grid.cell_w * r  # dmu weights
    dNr = grid.cell_dNdr
    dNp = grid.cell_dNdphi / r[:, :, None]  # r^-1 d_phi N
    flux = c_r[:, :, None] * dNr + c_phi[:, :, None] * dNp  # c . grad psi_I
    local = (np.einsum("cq,cqi,cqj->cij", W, dNr, dNr) + np.einsum("cq,cqi,cqj->cij", W, dNp, dNp)
             + np.einsum("cq,cqi,qj->cij", W, flux, grid.ref_N))
    rhs_local = np.einsum("cq,cq,cqi->ci", W, om, flux)
    if source_quad is not None:
        F = grid.cells(source_quad)
        rhs_local = rhs_local + np.einsum("cq,cq,qi->ci", W, F, grid.ref_N)
    K = assemble_cells(grid, local)
    b = assemble_load(grid, rhs_local)
    if boundary_flux is not None:
        g_in, g_out = boundary_flux
        if g_in is not None:
            b = b + grid.boundary_load(g_in, "inner")
        if g_out is not None:
            b = b + grid.boundary_load(g_out, "outer")
    free = free_mask(grid)
    A = K[free][:, free].tocsr()
    return AssembledSystem(grid, A, b[free], free)


def _estimate_sigma_min(lu, n: int, iters: int = 30, seed: int = 0) -> float:
    """Smallest singular value of A from power iteration on (A^T A)^-1 using its LU factors."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        y = lu.solve(lu.solve(v), trans="T")
        lam = np.linalg.norm(y)
        if not np.isfinite(lam) or lam == 0:
            return 0.0
        v = y / lam
    return float(1.0 / np.sqrt(lam))


def smallest_singular_value(sys: AssembledSystem) -> float:
    try:
        lu = splu(sys.A.tocsc())
    except RuntimeError:
        return 0.0
    return _estimate_sigma_min(lu, sys.n_dofs)


def solve(sys: AssembledSystem, rtol: float = 1e-10) -> ScalarField:
    """Sparse direct solve with iterative refinement and a GMRES fallback."""
    A = sys.A.tocsc()
    b = sys.b
    bnorm = np.linalg.norm(b)
    grid = sys.grid
    out = np.zeros(grid.n_nodes)
    if bnorm == 0.0:
        return ScalarField(grid, out)
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"linearized system is singular: {exc}", 0.0) from exc
    x = lu.solve(b)
    for _ in range(3):
        res = b - A @ x
        if np.linalg.norm(res) <= rtol * bnorm:
            break
        x = x + lu.solve(res)
    res_norm = np.linalg.norm(b - A @ x) / bnorm
    if not np.isfinite(res_norm) or res_norm > rtol:
        M = LinearOperator(A.shape, matvec=lu.solve)
        x2, info = gmres(A, b, x0=np.nan_to_num(x), M=M, rtol=rtol * 0.1, atol=0.0, maxiter=200)
        res2 = np.linalg.norm(b - A @ x2) / bnorm
        if info != 0 or res2 > rtol:
            raise SingularSystemError(f"linear solve residual {min(res_norm, res2):.2e} exceeds {rtol:.0e}",
                                      _estimate_sigma_min(lu, sys.n_dofs))
        x = x2
    out[sys.free] = x
    return ScalarField(grid, out)
