"""Coefficient functions of the semilinear operator.

With x = u - Omega the nonlinearity appears through

    a_zeta(x) = (1 - cos x) / x,     a_rho(x) = sin x / x,

and their rotation to the polar frame,

    a_r = a_zeta cos(phi) + a_rho sin(phi),
    a_phi = -a_zeta sin(phi) + a_rho cos(phi).

Both are entire functions of x; the removable singularity at 0 is handled
by short Taylor series for |x| < 1e-4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SERIES_SWITCH = 1e-4


def a_zeta(x):
    """(1 - cos x)/x with the series x/2 - x^3/24 near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    # 1 - cos x = 2 sin^2(x/2) avoids cancellation at moderate x
    out = np.where(small, x / 2.0 - x**3 / 24.0, 2.0 * np.sin(safe / 2.0) ** 2 / safe)
    return out[()] if out.ndim == 0 else out


def a_rho(x):
    """sin(x)/x with the series 1 - x^2/6 near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x**2 / 6.0, np.sin(safe) / safe)
    return out[()] if out.ndim == 0 else out


def rotate_to_polar(az, ar, phi):
    """Rotate (a_zeta, a_rho) into the polar frame; returns (a_r, a_phi)."""
    c, s = np.cos(phi), np.sin(phi)
    return az * c + ar * s, -az * s + ar * c


def polar_coefficients(x, phi):
    """(a_r, a_phi) evaluated at argument ``x`` and angle ``phi``."""
    return rotate_to_polar(a_zeta(x), a_rho(x), phi)


@dataclass(frozen=True)
class BoundsReport:
    min_a_rho: float
    argmin_a_rho: float
    max_a_rho: float
    argmax_a_rho: float
    max_abs_a_zeta: float
    argmax_abs_a_zeta: float
    sup_dev_alpha: float
    alpha: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def certify_bounds(scan_range: float = 100.0, step: float = 1e-3, alpha: float = 0.39) -> BoundsReport:
    """Dense scan of the coefficient functions on [-scan_range, scan_range].

    Each grid extremum is polished with a bounded scalar minimization over
    its neighbouring interval, so the reported extrema do not depend on the
    step beyond the polishing tolerance.
    """
    from scipy.optimize import minimize_scalar

    if step <= 0:
        raise ValueError("step must be positive")
    x = np.arange(-scan_range, scan_range + step / 2, step)
    ar = a_rho(x)
    az = a_zeta(x)

    def polish(fun, x0):
        lo, hi = max(x0 - step, -scan_range), min(x0 + step, scan_range)
        res = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        return (res.x, res.fun) if res.fun < fun(x0) else (x0, fun(x0))

    i = int(np.argmin(ar))
    xm, vm = polish(lambda t: float(a_rho(t)), x[i])
    j = int(np.argmax(ar))
    xM, vM = polish(lambda t: -float(a_rho(t)), x[j])
    k = int(np.argmax(np.abs(az)))
    xz, vz = polish(lambda t: -abs(float(a_zeta(t))), x[k])
    # sup |a_rho - alpha| is attained at one of the a_rho extrema
    sup_dev = max(abs(-vM - alpha), abs(vm - alpha), float(np.max(np.abs(ar - alpha))))
    min_ar, max_ar, max_az = vm, -vM, -vz
    passed = (min_ar > -0.22) and (max_ar <= 1.0 + 1e-15) and (max_az < 0.73) and (sup_dev <= 0.61 + 1e-12)
    return BoundsReport(min_ar, abs(xm), max_ar, xM, max_az, abs(xz), sup_dev, alpha, bool(passed))
