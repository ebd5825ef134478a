"""Acceptance criteria 1-9; each test prints one PASS/FAIL line.

The lines are echoed in the pytest terminal summary; running this file
directly as a script prints them as well.
"""

import time

import numpy as np
import pytest

from axintensity.analytic_data import rotation_consistency
from axintensity.certificates import (CoercivityInputs, comparison_CF, find_dphi, hardy_harness, lower_bound_LB,
                                      supersolution_check)
from axintensity.nonlinearity import certify_bounds
from axintensity.picard_solver import uniqueness_probe
from axintensity.verification import (decay_fit, field_error, find_zeros, harmonic_residual, intensity_error,
                                      radial_sign_test, rotation_number)

from conftest import ACCEPTANCE_LINES, dipole_field, exterior, monopole_field, solved
from manufactured import max_error, rates


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_coercivity_gap():
    t0 = time.perf_counter()
    inp = CoercivityInputs(0.39, 0.6, 1e-3, 0.1, 1.2)
    lb = lower_bound_LB(inp)
    cf = comparison_CF(0.39, 0.6, 0.61)
    delta = lb.value - cf
    dt = time.perf_counter() - t0
    ok = 0.023 <= delta <= 0.06 and dt <= 5.0
    report(1, ok, f"Delta = LB - CF = {lb.value:.6f} - {cf:.6f} = {delta:.6f}, required [0.023, 0.06]; {dt:.2f} s")


def test_criterion_2_coefficient_bounds():
    t0 = time.perf_counter()
    b = certify_bounds()
    dt = time.perf_counter() - t0
    ok = (b.passed and abs(b.min_a_rho - (-0.21723)) <= 1e-4 and abs(b.max_abs_a_zeta - 0.72461) <= 1e-4
          and abs(b.argmin_a_rho - 4.4934) <= 1e-3 and abs(b.argmax_abs_a_zeta - 2.3311) <= 1e-3 and dt <= 2.0)
    report(2, ok, f"min a_rho {b.min_a_rho:.6f} at {b.argmin_a_rho:.4f}, max|a_zeta| {b.max_abs_a_zeta:.6f} at "
                  f"{b.argmax_abs_a_zeta:.4f}, sup|a_rho - 0.39| {b.sup_dev_alpha:.4f}; {dt:.2f} s")


def test_criterion_3_supersolution():
    t0 = time.perf_counter()
    d_phi = find_dphi()
    rep = supersolution_check(eps=0.3, R0=5.0, R=10.0, d_r=0.09, n=10_000)
    dt = time.perf_counter() - t0
    failed = [k for k, v in rep["checks"].items() if not v]
    ok = abs(d_phi - 0.1945) <= 5e-4 and rep["D"] > 0.1 and not failed and dt <= 5.0
    report(3, ok, f"d_phi {d_phi:.6f}, D {rep['D']:.6f}, failed checks {failed or 'none'}; {dt:.2f} s")


def test_criterion_4_monopole():
    s = solved("monopole")
    err_in = intensity_error(s.H, s.I, "inner")
    err_out = intensity_error(s.H, s.I, "outer", s.I0)
    c, err = field_error(s.H, monopole_field)
    ro, ro_hat = rotation_number(s.H, 1.0), rotation_number(s.H, 4.0)
    zeros = find_zeros(s.H)
    ok = (s.trace.n_iter <= 50 and max(err_in, err_out) <= 0.01 and err <= 0.01 and (ro, ro_hat) == (1, 1)
          and not zeros and s.seconds <= 60)
    report(4, ok, f"{s.trace.n_iter} iterations, intensity errors {err_in:.1e}/{err_out:.1e}, field error {err:.1e} "
                  f"(scale {c:.4f}), ro {ro}/{ro_hat}, {len(zeros)} zeros; {s.seconds:.1f} s")


def test_criterion_5_dipole():
    s = solved("dipole")
    c, err = field_error(s.H, dipole_field)
    ro, ro_hat = rotation_number(s.H, 1.0), rotation_number(s.H, 4.0)
    seq, H_ext, t_ext = exterior("dipole")
    slope = decay_fit(H_ext)
    total = s.seconds + t_ext
    ok = err <= 0.02 and (ro, ro_hat) == (2, 2) and abs(slope + 3) <= 0.15 and total <= 300
    report(5, ok, f"field error {err:.1e} (scale {c:.4f}), ro {ro}/{ro_hat}, decay slope {slope:.4f} on R = 2, 4, 8; "
                  f"{total:.1f} s")


def test_criterion_6_prescribed_zero():
    t0 = time.perf_counter()
    s = solved("zero_pair")
    zeros = find_zeros(s.H, prescribed=[2j])
    diag = s.grid.cell_diagonal
    near = [z for z in zeros if min(abs(z.position - 2j), abs(z.position + 2j)) <= diag]
    ro, ro_hat = rotation_number(s.H, 1.0), rotation_number(s.H, 4.0)
    nu = rotation_consistency(s.zd)
    signs = radial_sign_test(s.H)
    dt = s.seconds + time.perf_counter() - t0
    ok = (len(zeros) == 2 and len(near) == 2 and all(z.index == -1 for z in zeros) and nu == 2
          and ro - ro_hat == 2 and ro == 3 and signs >= 2 and dt <= 120)
    pos = ", ".join(f"({z.zeta:+.4f}, {z.rho:+.4f}) index {z.index}" for z in zeros)
    report(6, ok, f"zeros {pos}; ro {ro}/{ro_hat}, nu {nu}; {signs} sign changes of H.e_r on S_1; {dt:.1f} s")


def test_criterion_7_uniqueness():
    out = {}
    for name in ("monopole", "dipole", "zero_pair"):
        s = solved(name)
        out[name] = uniqueness_probe(s.data.omega, s.grid, s.params, n_starts=3, seed=1)
    tol = solved("monopole").params.tol
    ok = max(out.values()) <= 10 * tol
    report(7, ok, ", ".join(f"{k} {v:.1e}" for k, v in out.items()) + f" (bound {10 * tol:.0e})")


def test_criterion_8_hardy():
    t0 = time.perf_counter()
    rep = hardy_harness(n=100, p_list=(2, 4, 29), gamma_list=(0.0, 0.2, 0.99))
    dt = time.perf_counter() - t0
    ok = rep.failures == 0 and dt <= 10
    report(8, ok, f"{rep.failures} violations, worst ratio {max(rep.max_ratio.values()):.5f}; {dt:.2f} s")


def test_criterion_9_convergence_orders():
    sizes = [(32, 64), (64, 128), (128, 256)]
    lin = [max_error(3.0, nr, nphi, frozen=True) for nr, nphi in sizes]
    curl, div = zip(*(harmonic_residual(solved("dipole", nr, nphi).H) for nr, nphi in sizes))
    r_lin, r_curl, r_div = rates(lin), rates(curl), rates(div)
    worst = min(r_lin.min(), r_curl.min(), r_div.min())
    ok = worst >= 1.8
    fmt = lambda a: "/".join(f"{v:.2f}" for v in a)  # noqa: E731
    report(9, ok, f"rates linear {fmt(r_lin)}, dipole curl {fmt(r_curl)}, dipole div {fmt(r_div)} "
                  f"(32x64 -> 128x256)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
