"""Zero factor h(z), the angle field Psi and rotation-number bookkeeping.

The field is sought as f = h(z) exp((p + i q)/2) with the explicit factor

    h(z) = z^(-ro) * prod_n (z - z_n)(z - conj(z_n)),

which carries the prescribed zeros z_n (upper half plane, mirrored
implicitly) and the inner rotation number ro.  The angle Psi is defined by
exp(i Psi) = conj(h)/h.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polar_grid import PolarGrid, ScalarField


class ZeroDataError(ValueError):
    """Inconsistent zero positions or rotation numbers."""


class ZeroProximityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ZeroData:
    """Prescribed zeros and rotation data.

    ``zeros_upper`` holds points (zeta_n, rho_n) with rho_n > 0.  In the
    bounded case ``ro_hat`` is the outer rotation number.  In the exterior
    case ``delta_tilde`` is the exact decay order and ``ro_hat`` equals
    ``delta_tilde - 1``.
    """

    zeros_upper: tuple[complex, ...] = ()
    ro: int = 1
    ro_hat: int = 1
    delta_tilde: int | None = None
    R: float | None = None

    def __post_init__(self):
        zs = tuple(complex(z[0], z[1]) if not np.iscomplexobj(z) and np.ndim(z) == 1 else complex(z)
                   for z in self.zeros_upper)
        object.__setattr__(self, "zeros_upper", zs)
        for z in zs:
            if not z.imag > 0:
                raise ZeroDataError(f"zero {z} must lie strictly in the upper half plane (rho > 0)")
            if not abs(z) > 1.0:
                raise ZeroDataError(f"zero {z} must lie outside the unit circle")
            if self.R is not None and not abs(z) < self.R:
                raise ZeroDataError(f"zero {z} must lie inside the circle of radius {self.R}")
        if self.delta_tilde is not None:
            if int(self.delta_tilde) < 2:
                raise ZeroDataError("decay order delta_tilde must be an integer >= 2")
            if self.ro_hat != self.delta_tilde - 1:
                raise ZeroDataError("exterior case requires ro_hat = delta_tilde - 1")
        if self.ro - self.ro_hat != 2 * len(zs):
            raise ZeroDataError(
                f"ro - ro_hat = {self.ro - self.ro_hat} but 2N = {2 * len(zs)} for {len(zs)} zero pair(s)")

    @classmethod
    def bounded(cls, zeros: Sequence = (), ro_hat: int = 1, ro: int | None = None, R: float | None = None):
        n = len(zeros)
        ro = ro_hat + 2 * n if ro is None else ro
        return cls(tuple(zeros), ro=ro, ro_hat=ro_hat, R=R)

    @classmethod
    def exterior(cls, zeros: Sequence = (), delta_tilde: int = 2, ro: int | None = None):
        n = len(zeros)
        ro_hat = delta_tilde - 1
        ro = ro_hat + 2 * n if ro is None else ro
        return cls(tuple(zeros), ro=ro, ro_hat=ro_hat, delta_tilde=delta_tilde)

    @property
    def N(self) -> int:
        return len(self.zeros_upper)

    @property
    def all_zeros(self) -> np.ndarray:
        z = np.array(self.zeros_upper, dtype=complex)
        return np.concatenate([z, np.conj(z)])


def eval_h(zd: ZeroData, z):
    """h(z) = z^(-ro) prod (z - z_n)(z - conj z_n); rejects z = 0."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("h is singular at z = 0")
    out = z ** (-zd.ro)
    for zn in zd.all_zeros:
        out = out * (z - zn)
    return out[()] if out.ndim == 0 else out


def log_abs_zero_product(zd: ZeroData, z) -> np.ndarray:
    """Sum over all 2N zeros of ln|z - z_n|."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros(z.shape)
    for zn in zd.all_zeros:
        acc = acc + np.log(np.abs(z - zn))
    return acc


def psi_values(zd: ZeroData, r, phi, branch: str = "arg") -> np.ndarray:
    """Psi at arbitrary polar points.

    ``branch="arg"`` (default) returns the principal argument of conj(h)/h in
    (-pi, pi], so that exp(i Psi) = conj(h)/h holds exactly.  ``branch="arctan"``
    returns arctan(w/v) in (-pi/2, pi/2], which only fixes Psi modulo pi; it is
    kept to document why it cannot be used in the field equations.
    """
    z = np.asarray(r) * np.exp(1j * np.asarray(phi))
    h = eval_h(zd, z)
    ah2 = np.abs(h) ** 2
    if np.any(ah2 == 0):
        raise ZeroDataError("h vanishes at an evaluation point; reposition zeros or refine")
    hb2 = np.conj(h) ** 2
    v = np.real((hb2 + h**2) / (2 * ah2))
    w = np.real((hb2 - h**2) / (2j * ah2))
    if branch == "arg":
        return np.arctan2(w, v)
    if branch == "arctan":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.arctan(w / v)
        # v = 0: take the limit from v > 0, i.e. +/- pi/2 by the sign of w
        return np.where(v == 0, np.sign(w) * np.pi / 2, out)
    raise ValueError(f"unknown branch {branch!r}")


def psi_vw(zd: ZeroData, r, phi) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts (v, w) of conj(h)/h."""
    z = np.asarray(r) * np.exp(1j * np.asarray(phi))
    h = eval_h(zd, z)
    q = np.conj(h) / h
    return q.real, q.imag


@dataclass(frozen=True, eq=False)
class PsiField:
    field: ScalarField
    K_psi: float
    quad: np.ndarray = field(repr=False)
    branch: str = "arg"
    jump_nodes: np.ndarray = field(default=None, repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def eval_psi(zd: ZeroData, grid: PolarGrid, branch: str = "arg", proximity: float = 0.1) -> PsiField:
    """Psi at the nodes and the tensor quadrature points of ``grid``.

    ``K_psi = max |Psi| / sin(phi)`` over interior nodes.  Nodes where the
    branch cut of Psi passes exactly through the node (v < 0, w = 0 for the
    default branch; v = 0 for the arctan branch) are flagged in
    ``jump_nodes``.  A warning is raised when a prescribed zero sits closer
    than ``proximity`` cell diagonals to a node.
    """
    Rn, Pn = grid.mesh()
    for zn in zd.zeros_upper:
        d = np.abs(Rn * np.exp(1j * Pn) - zn).min()
        if d < proximity * grid.cell_diagonal:
            warnings.warn(f"zero {zn} lies within {d:.3g} of a grid node", ZeroProximityWarning, stacklevel=2)
    vals = psi_values(zd, Rn, Pn, branch)
    v, w = psi_vw(zd, Rn, Pn)
    if branch == "arg":
        jumps = (v < 0) & (np.abs(w) < 1e-12)
    else:
        jumps = np.abs(v) < 1e-12
    Rq, Pq = grid.quad_mesh()
    quad = psi_values(zd, Rq, Pq, branch)
    inner = vals[:, 1:-1] / np.sin(Pn[:, 1:-1])
    K = float(np.max(np.abs(inner))) if inner.size else 0.0
    return PsiField(ScalarField(grid, vals), K, quad, branch, jumps)


def rotation_consistency(zd: ZeroData) -> int:
    """Number nu of zeros implied by the rotation data; must equal 2N."""
    if zd.delta_tilde is not None:
        nu = zd.ro - zd.delta_tilde + 1
    else:
        nu = zd.ro - zd.ro_hat
    if nu != 2 * zd.N:
        raise ZeroDataError(f"rotation data imply {nu} zeros but {2 * zd.N} are prescribed")
    return nu
