"""Post-solve checks of a computed meridional field.

Harmonicity of (H_zeta, H_rho) in the meridional plane means

    curl: d_zeta H_rho - d_rho H_zeta = 0,
    div:  d_zeta H_zeta + d_rho H_rho + H_rho / rho = 0,

evaluated here with polar finite differences.  Rotation numbers and zero
indices are winding numbers of the field vector, obtained from unwrapped
atan2 increments.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .polar_grid import PolarGrid
from .reconstruction import MeridionalField


class WindingError(ValueError):
    """The field (nearly) vanishes on a sampled contour."""


class UnmatchedZeroError(RuntimeError):
    pass


def harmonic_residual(H: MeridionalField, grid: PolarGrid | None = None) -> tuple[float, float]:
    """Discrete L2 norms of curl and divergence over interior nodes (r dr dphi measure)."""
    g = grid or H.grid
    r, phi = g.r_nodes, g.phi_nodes
    hz, hr = H.H_zeta.values, H.H_rho.values
    if g.nr < 3 or g.nphi < 3:
        raise ValueError("need at least 3 nodes in each direction")
    # centred differences on interior nodes
    dr = lambda v: (v[2:, 1:-1] - v[:-2, 1:-1]) / (r[2:, None] - r[:-2, None])  # noqa: E731
    dp = lambda v: (v[1:-1, 2:] - v[1:-1, :-2]) / (phi[None, 2:] - phi[None, :-2])  # noqa: E731
    ri = r[1:-1, None]
    pi_ = phi[None, 1:-1]
    c, s = np.cos(pi_), np.sin(pi_)

    def d_zeta(v):
        return c * dr(v) - s / ri * dp(v)

    def d_rho(v):
        return s * dr(v) + c / ri * dp(v)

    curl = d_zeta(hr) - d_rho(hz)
    div = d_zeta(hz) + d_rho(hr) + hr[1:-1, 1:-1] / (ri * s)
    hr_w = np.gradient(r)[1:-1, None]
    hp_w = np.gradient(phi)[None, 1:-1]
    w = ri * hr_w * hp_w
    return float(np.sqrt(np.sum(curl**2 * w))), float(np.sqrt(np.sum(div**2 * w)))


def _winding(vx: np.ndarray, vy: np.ndarray, min_modulus: float) -> tuple[int, float]:
    mod = np.hypot(vx, vy)
    if np.min(mod) <= min_modulus:
        raise WindingError(f"field modulus {np.min(mod):.3e} on the contour is too small for a winding count")
    ang = np.arctan2(vy, vx)
    steps = np.diff(np.concatenate([ang, ang[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    total = steps.sum() / (2 * np.pi)
    n = int(np.round(total))
    return n, float(abs(total - n))


def _circle_samples(H: MeridionalField, r: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Field on the full circle phi in (-pi, pi] using the symmetric continuation."""
    if H.evaluator is not None:
        t = np.linspace(-np.pi, np.pi, n, endpoint=False)
        hz, hr = H.evaluator(np.full(t.shape, r), t)
        return np.asarray(hz), np.asarray(hr)
    g = H.grid
    i = int(np.argmin(np.abs(g.r_nodes - r)))
    hz, hr = H.H_zeta.values[i], H.H_rho.values[i]
    # phi in [0, pi] plus the mirror image (-phi): H_zeta even, H_rho odd
    full_z = np.concatenate([hz[::-1][:-1], hz[:-1]])
    full_r = np.concatenate([-hr[::-1][:-1], hr[:-1]])
    return full_z, full_r


def rotation_number(H: MeridionalField, circle_r: float, grid: PolarGrid | None = None,
                    samples: int = 1024, min_rel_modulus: float = 1e-8, return_residual: bool = False):
    """Winding of (H_zeta, H_rho) around the circle of radius ``circle_r`` (counter-clockwise)."""
    hz, hr = _circle_samples(H, circle_r, samples)
    scale = np.max(np.hypot(hz, hr))
    n, res = _winding(hz, hr, min_rel_modulus * scale)
    if res > 0.05:
        raise WindingError(f"winding rounding residual {res:.3f} exceeds 0.05")
    return (n, res) if return_residual else n


@dataclass(frozen=True)
class DetectedZero:
    zeta: float
    rho: float
    index: int
    modulus: float

    @property
    def position(self) -> complex:
        return complex(self.zeta, self.rho)


def _field_at_points(H: MeridionalField, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r, phi = np.abs(z), np.angle(z)
    if H.evaluator is None:
        raise ValueError("zero refinement needs a field evaluator")
    return H.evaluator(r, phi)


def _zero_index(H: MeridionalField, z0: complex, radius: float, n: int = 256) -> int:
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = z0 + radius * np.exp(1j * t)
    hz, hr = _field_at_points(H, pts)
    scale = np.max(np.hypot(hz, hr))
    k, _ = _winding(hz, hr, 1e-12 * scale)
    return k


def find_zeros(H: MeridionalField, grid: PolarGrid | None = None, threshold: float = 1e-3,
               prescribed: Sequence[complex] = (), mirror: bool = True) -> list[DetectedZero]:
    """Zeros of H in the closed upper half plane of Q_R, with winding indices.

    Candidate cells are those where both components change sign and the
    nodal modulus is small compared with the median.  Each candidate is
    refined by a least-squares root solve on the field evaluator; it is
    accepted when the refined modulus is below ``threshold * median |H|``.
    With ``mirror`` the reflected zeros (rho < 0) are appended.  Each
    ``prescribed`` zero must be matched within one cell diagonal.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    g = grid or H.grid
    hz, hr = H.H_zeta.values, H.H_rho.values
    mod = np.hypot(hz, hr)
    med = float(np.median(mod))
    Rm, Pm = g.mesh()
    Z = Rm * np.exp(1j * Pm)

    def changes(v):
        blk = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
        return (blk.min(axis=0) <= 0) & (blk.max(axis=0) >= 0)

    # the walls are excluded: H_rho vanishes identically there
    cand = changes(hz) & changes(hr)
    cand[:, 0] = cand[:, -1] = False
    cells = np.argwhere(cand)
    found: list[DetectedZero] = []
    diag = g.cell_diagonal
    for i, j in cells:
        z0 = Z[i:i + 2, j:j + 2].mean()

        def resid(v):
            hz_, hr_ = _field_at_points(H, np.array([complex(v[0], v[1])]))
            return np.array([hz_[0], hr_[0]])

        sol = least_squares(resid, [z0.real, z0.imag], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        zr = complex(sol.x[0], sol.x[1])
        m = float(np.hypot(*resid(sol.x)))
        if m > threshold * med or abs(zr - z0) > 2 * diag:
            continue
        if not (1.0 < abs(zr) < g.R) or zr.imag <= 0:
            continue
        if any(abs(zr - f.position) < 0.25 * diag for f in found):
            continue
        radius = 0.25 * min(diag, zr.imag, abs(zr) - 1.0, g.R - abs(zr))
        idx = _zero_index(H, zr, radius)
        found.append(DetectedZero(zr.real, zr.imag, idx, m))
    for zp in prescribed:
        if not any(abs(f.position - complex(zp)) <= diag for f in found):
            raise UnmatchedZeroError(f"prescribed zero {complex(zp)} not detected within {diag:.3g}")
    if mirror:
        found = found + [DetectedZero(f.zeta, -f.rho, f.index, f.modulus) for f in found]
    return found


def decay_fit(H: MeridionalField, grid: PolarGrid | None = None) -> float:
    """Least-squares slope of log(mean_phi |H|) against log r on the middle third."""
    g = grid or H.grid
    r = g.r_nodes
    lo, hi = r[0] + (r[-1] - r[0]) / 3, r[0] + 2 * (r[-1] - r[0]) / 3
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 4:
        raise ValueError("decay fit needs at least 4 radial stations in the middle third")
    m = H.modulus
    w = np.gradient(g.phi_nodes)
    mean = (m * w[None, :]).sum(axis=1) / w.sum()
    slope, _ = np.polyfit(np.log(r[sel]), np.log(mean[sel]), 1)
    return float(slope)


def radial_sign_test(H: MeridionalField, grid: PolarGrid | None = None, rel_tol: float = 1e-10) -> int:
    """Sign changes of H . e_r along the inner circle, over the full circle (-pi, pi].

    Values below ``rel_tol * max`` are treated as zero and skipped.
    """
    g = grid or H.grid
    phi = g.phi_nodes
    hr_radial = H.H_zeta.values[0] * np.cos(phi) + H.H_rho.values[0] * np.sin(phi)
    # H . e_r is even in phi under the symmetric continuation
    full = np.concatenate([hr_radial[::-1][:-1], hr_radial[:-1]])
    scale = np.max(np.abs(full))
    s = np.sign(np.where(np.abs(full) <= rel_tol * scale, 0.0, full))
    s = s[s != 0]
    if s.size == 0:
        return 0
    return int(np.sum(s != np.roll(s, 1)))


def intensity_error(H: MeridionalField, I: Callable, side: str = "inner", scale: float = 1.0) -> float:
    g = H.grid
    i = 0 if side == "inner" else g.nr - 1
    target = scale * np.asarray(I(g.phi_nodes), dtype=float)
    return float(np.max(np.abs(H.modulus[i] - target) / target))


def field_error(H: MeridionalField, reference: Callable, fit_scale: bool = True) -> tuple[float, float]:
    """Relative nodal L2 distance to ``reference(r, phi) -> (H_zeta, H_rho)``.

    With ``fit_scale`` the reference is first multiplied by the least-squares
    constant c (which absorbs the sign and normalization conventions); the
    pair (c, error) is returned.
    """
    Rm, Pm = H.grid.mesh()
    ez, er = (np.broadcast_to(v, Rm.shape) for v in reference(Rm, Pm))
    hz, hr = H.H_zeta.values, H.H_rho.values
    den = float(np.sum(ez**2 + er**2))
    if den == 0.0:
        raise ValueError("reference field vanishes on the grid")
    c = float(np.sum(hz * ez + hr * er)) / den if fit_scale else 1.0
    err = np.sqrt(np.sum((hz - c * ez) ** 2 + (hr - c * er) ** 2) / (c**2 * den))
    return c, float(err)


@dataclass
class VerificationReport:
    curl_norm: float
    div_norm: float
    intensity_err_inner: float
    intensity_err_outer: float | None
    zeros_found: list[dict] = field(default_factory=list)
    ro_measured: int | None = None
    ro_hat_measured: int | None = None
    decay_fit: float | None = None
    radial_sign_changes: int = 0
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True, default=float)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def all_finite(self) -> bool:
        vals = [self.curl_norm, self.div_norm, self.intensity_err_inner]
        if self.intensity_err_outer is not None:
            vals.append(self.intensity_err_outer)
        if self.decay_fit is not None:
            vals.append(self.decay_fit)
        return bool(np.all(np.isfinite(vals)))


def verify(H: MeridionalField, I: Callable, I_hat: Callable | None = None, I0: float = 1.0,
           prescribed: Sequence[complex] = (), threshold: float = 1e-3, with_decay: bool = False,
           extras: dict | None = None) -> VerificationReport:
    g = H.grid
    curl, div = harmonic_residual(H)
    err_in = intensity_error(H, I, "inner")
    err_out = intensity_error(H, I_hat, "outer", I0) if I_hat is not None else None
    zeros = find_zeros(H, threshold=threshold, prescribed=prescribed)
    r_in = g.r_nodes[0]
    r_out = g.r_nodes[-1]
    ro = rotation_number(H, r_in)
    ro_hat = rotation_number(H, r_out)
    decay = decay_fit(H) if with_decay else None
    signs = radial_sign_test(H)
    zl = [dict(zeta=z.zeta, rho=z.rho, index=z.index, modulus=z.modulus) for z in zeros]
    return VerificationReport(curl, div, err_in, err_out, zl, ro, ro_hat, decay, signs, dict(extras or {}))
