"""Command line interface and run orchestration.

Configurations are single JSON documents; the defaults describe the
monopole on the annulus 1 < r < 4.  Example::

    {
      "kind": "bounded",
      "intensity": {"type": "constant", "value": 1.0},
      "zeros": [[0.0, 2.0]],
      "ro_hat": 1,
      "R": 4.0,
      "grid": {"nr": 64, "nphi": 128}
    }

Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analytic_data import ZeroData, ZeroDataError
from .conjugate_pair import IntensityProfile
from .polar_grid import PolarGrid

log = logging.getLogger("axintensity")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4
FIELD_COLUMNS = ["r", "phi", "H_zeta", "H_rho", "p", "q", "u", "wp", "Omega"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    kind: str = "bounded"
    intensity: dict = field(default_factory=lambda: {"type": "constant", "value": 1.0})
    outer_intensity: dict | None = None
    zeros: list = field(default_factory=list)
    ro_hat: int | None = 1
    delta_tilde: int | None = None
    ro: int | None = None
    R: float = 4.0
    R_list: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    grid: dict = field(default_factory=lambda: {"nr": 64, "nphi": 128})
    solver: dict = field(default_factory=dict)
    output: str = "out"
    seed: int = 0
    uniqueness_starts: int = 0
    series_terms: int = 64
    tolerances: dict = field(default_factory=lambda: {"intensity": 0.01})

    def profile(self, which: str = "inner") -> IntensityProfile:
        spec = self.intensity if which == "inner" else (self.outer_intensity or self.intensity)
        return build_profile(spec, which)

    def zero_data(self) -> ZeroData:
        zs = [tuple(map(float, z)) for z in self.zeros]
        if self.kind == "bounded":
            return ZeroData.bounded(zs, ro_hat=int(self.ro_hat), ro=self.ro, R=float(self.R))
        return ZeroData.exterior(zs, delta_tilde=int(self.delta_tilde), ro=self.ro)

    def solver_params(self):
        from .picard_solver import SolverParams

        return SolverParams(**self.solver)

    def make_grid(self, R: float | None = None) -> PolarGrid:
        g = dict(self.grid)
        return PolarGrid(float(R if R is not None else self.R), int(g.get("nr", 64)), int(g.get("nphi", 128)),
                         stretch=g.get("stretch"), spacing=g.get("spacing", "uniform"))


def build_profile(spec: Any, label: str = "intensity") -> IntensityProfile:
    if isinstance(spec, (int, float)):
        spec = {"type": "constant", "value": float(spec)}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{label}: expected an object with a 'type' field")
    kind = spec["type"]
    if kind == "constant":
        value = float(spec.get("value", 1.0))
        if not value > 0:
            raise ConfigError(f"{label}: intensity must be positive, got {value}")
        prof = IntensityProfile.constant(value)
    elif kind == "dipole":
        prof = IntensityProfile.dipole(float(spec.get("scale", 1.0)))
    elif kind in ("expression", "custom-expression"):
        try:
            prof = IntensityProfile.expression(str(spec["expr"]))
        except (KeyError, SyntaxError, ValueError) as exc:
            raise ConfigError(f"{label}: bad expression ({exc})") from exc
    elif kind == "table":
        try:
            if "pairs" in spec:
                phi, vals = np.asarray(spec["pairs"], dtype=float).T
            else:
                phi, vals = spec["phi"], spec["values"]
            prof = IntensityProfile.table(phi, vals)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{label}: bad table ({exc})") from exc
    else:
        raise ConfigError(f"{label}: unknown intensity type {kind!r}")
    try:
        prof.check_positive()
    except ValueError as exc:
        raise ConfigError(f"{label}: {exc}") from exc
    return prof


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig(**raw)
    if cfg.kind not in ("bounded", "exterior"):
        raise ConfigError(f"kind: expected 'bounded' or 'exterior', got {cfg.kind!r}")
    if cfg.kind == "exterior":
        if cfg.delta_tilde is None:
            cfg.delta_tilde = int(cfg.ro_hat) + 1 if cfg.ro_hat is not None else 2
        Rl = [float(r) for r in cfg.R_list]
        if len(Rl) < 2 or np.any(np.diff(Rl) <= 0):
            raise ConfigError("R_list: needs at least two increasing radii")
        cfg.ro_hat = None
    else:
        if cfg.ro_hat is None:
            raise ConfigError("ro_hat: required for the bounded problem")
        if not float(cfg.R) > 1:
            raise ConfigError("R: must exceed 1")
    for k, z in enumerate(cfg.zeros):
        if not (isinstance(z, (list, tuple)) and len(z) == 2):
            raise ConfigError(f"zeros[{k}]: expected [zeta, rho]")
        if not float(z[1]) > 0:
            raise ConfigError(f"zeros[{k}]: give the upper zero (rho > 0); its mirror image is implied")
    cfg.profile("inner")
    if cfg.kind == "bounded":
        cfg.profile("outer")
    try:
        cfg.zero_data()
    except ZeroDataError as exc:
        raise ConfigError(f"zeros/rotation data: {exc}") from exc
    try:
        cfg.solver_params()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from exc
    g = cfg.grid
    if int(g.get("nr", 64)) < 3 or int(g.get("nphi", 128)) < 5:
        raise ConfigError("grid: need nr >= 3 and nphi >= 5")
    return cfg


# ----------------------------------------------------------------------
# pipeline
# ----------------------------------------------------------------------
@dataclass
class RunResult:
    status: int
    report: dict
    fields: dict | None = None
    trace: Any = None
    message: str = ""


def write_fields_csv(path: Path, grid: PolarGrid, cols: dict[str, np.ndarray]) -> None:
    Rm, Pm = grid.mesh()
    data = {"r": Rm, "phi": Pm, **cols}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_COLUMNS)
        flat = [np.asarray(data[c]).ravel() for c in FIELD_COLUMNS]
        for row in zip(*flat):
            w.writerow([repr(float(v)) for v in row])


def _pipeline(cfg: RunConfig, grid: PolarGrid | None = None):
    """Omega build, Picard iteration and reconstruction for a bounded grid."""
    from .picard_solver import ProblemSpec, picard, prepare
    from .reconstruction import assemble_field, integrate_wp

    zd = cfg.zero_data()
    I = cfg.profile("inner")
    spec = ProblemSpec(I, zd, cfg.profile("outer") if cfg.kind == "bounded" else None)
    grid = grid or cfg.make_grid()
    params = cfg.solver_params()
    data = prepare(spec, grid, cfg.series_terms)
    u, trace = picard(data.omega, grid, params)
    wp, consts = integrate_wp(u, data.omega, data.bd, data.zd.ro)
    p, q, H, I0 = assemble_field(wp, u, data.p_l, data.q_l, data.zd, consts)
    return dict(spec=spec, data=data, u=u, trace=trace, wp=wp, consts=consts, p=p, q=q, H=H, I0=I0, params=params)


def run(cfg: RunConfig, out_dir: str | Path | None = None, write: bool = True) -> RunResult:
    """Execute the full pipeline and write fields.csv, trace.csv and report.json."""
    from .picard_solver import NonConvergenceError, exterior_sequence, log_grid_factory, uniqueness_probe
    from .verification import UnmatchedZeroError, WindingError, decay_fit, verify

    out = Path(out_dir or cfg.output)
    t0 = time.perf_counter()
    stage = "solve"
    try:
        extra: dict[str, Any] = {}
        if cfg.kind == "bounded":
            res = _pipeline(cfg)
        else:
            stage = "exterior_sequence"
            g = cfg.grid
            factory = log_grid_factory(int(g.get("nodes_per_octave", 16)), int(g.get("nphi", 129)))
            zd = cfg.zero_data()
            from .picard_solver import ProblemSpec

            seq = exterior_sequence(ProblemSpec(cfg.profile("inner"), zd), cfg.R_list, cfg.solver_params(), factory)
            extra.update(cauchy_distances=seq.distances, energies=seq.energies, cauchy_monotone=seq.monotone,
                         energy_variation=seq.energy_variation)
            res = _pipeline(cfg, factory(float(cfg.R_list[-1])))
        stage = "verification"
        H, consts = res["H"], res["consts"]
        I = res["spec"].I
        I_hat = res["spec"].I_hat
        prescribed = [complex(z[0], z[1]) for z in cfg.zeros]
        rep = verify(H, I, I_hat, res["I0"], prescribed=prescribed, with_decay=cfg.kind == "exterior",
                     extras=dict(extra, constants=consts.as_dict(), iterations=res["trace"].n_iter,
                                 iteration_seconds=res["trace"].seconds,
                                 final_increment=res["trace"].increments[-1], K=res["data"].omega.K))
        if cfg.uniqueness_starts >= 2:
            stage = "uniqueness_probe"
            rep.extras["uniqueness_distance"] = uniqueness_probe(res["data"].omega, None, res["params"],
                                                                 cfg.uniqueness_starts, cfg.seed)
    except NonConvergenceError as exc:
        return _failure(out, write, EXIT_NONCONVERGENCE, f"{stage}: {exc}", exc.trace)
    except (UnmatchedZeroError, WindingError) as exc:
        return _failure(out, write, EXIT_VERIFY, f"{stage}: {exc}", None)
    zd = res["data"].zd
    report = rep.as_dict()
    report["runtime_seconds"] = time.perf_counter() - t0
    report["ro_expected"], report["ro_hat_expected"] = zd.ro, zd.ro_hat
    problems = []
    tol = float(cfg.tolerances.get("intensity", 0.01))
    if rep.intensity_err_inner > tol:
        problems.append(f"inner intensity error {rep.intensity_err_inner:.3g} > {tol}")
    if rep.ro_measured != zd.ro or rep.ro_hat_measured != zd.ro_hat:
        problems.append(f"rotation numbers {rep.ro_measured}/{rep.ro_hat_measured} != {zd.ro}/{zd.ro_hat}")
    if len(rep.zeros_found) != 2 * zd.N:
        problems.append(f"{len(rep.zeros_found)} zeros found, {2 * zd.N} expected")
    if not rep.all_finite():
        problems.append("non-finite verification entries")
    report["problems"] = problems
    status = EXIT_VERIFY if problems else EXIT_OK
    fields_out = dict(H_zeta=res["H"].H_zeta.values, H_rho=res["H"].H_rho.values, p=res["p"].values,
                      q=res["q"].values, u=res["u"].values, wp=res["wp"].values,
                      Omega=res["data"].omega.omega.values)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        write_fields_csv(out / "fields.csv", res["H"].grid, fields_out)
        res["trace"].write_csv(out / "trace.csv")
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    return RunResult(status, report, fields_out, res["trace"], "; ".join(problems))


def _failure(out: Path, write: bool, status: int, msg: str, trace) -> RunResult:
    report = {"error": msg, "status": status}
    if write:
        out.mkdir(parents=True, exist_ok=True)
        if trace is not None:
            trace.write_csv(out / "trace.csv")
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return RunResult(status, report, None, trace, msg)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------
def _load_config(path: str | None) -> RunConfig:
    text = Path(path).read_text() if path else "{}"
    return parse_config(text)


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    res = run(cfg, args.out)
    if res.status == EXIT_OK:
        r = res.report
        print(f"converged in {r['extras']['iterations']} iterations; "
              f"intensity error {r['intensity_err_inner']:.2e}; ro {r['ro_measured']}/{r['ro_hat_measured']}")
    else:
        print(f"run failed: {res.message}", file=sys.stderr)
    return res.status


def cmd_certify(args) -> int:
    from .certificates import CoercivityInputs, comparison_CF, constant_C, gamma_sweep, lower_bound_LB
    from .nonlinearity import certify_bounds

    t0 = time.perf_counter()
    inp = CoercivityInputs(args.alpha, args.gamma, args.eta, args.d, args.e)
    bounds = certify_bounds(alpha=args.alpha)
    dev = min(bounds.sup_dev_alpha, 0.61) if args.cap_deviation else bounds.sup_dev_alpha
    lb = lower_bound_LB(inp)
    cf = comparison_CF(inp.alpha, inp.gamma, dev)
    delta = lb.value - cf
    gammas = np.round(np.arange(0.0, 1.6 + 1e-9, args.gamma_step), 10)
    rows = gamma_sweep(gammas, args.alpha, args.eta, args.d, args.e, dev)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "certify.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "LB", "CF"])
        for g, a, b in rows:
            w.writerow([repr(float(g)), repr(float(a)), repr(float(b))])
    print(f"coefficient bounds: min a_rho {bounds.min_a_rho:.5f}, max |a_zeta| {bounds.max_abs_a_zeta:.5f}, "
          f"sup |a_rho - alpha| {bounds.sup_dev_alpha:.5f}")
    print(f"LB = {lb.value:.6f} at s = {lb.s:.6g}, t = {lb.t:.6g}, tau = {lb.tau:.6g}")
    print(f"CF = {cf:.6f}")
    print(f"Delta = {delta:.6f} (target >= {args.target})")
    if delta > 0:
        print(f"C = {constant_C(inp):.6f}, M = C/Delta = {constant_C(inp) / delta:.6f}")
    print(f"runtime {time.perf_counter() - t0:.2f} s")
    return EXIT_OK if delta >= args.target else EXIT_VERIFY


def cmd_hardy(args) -> int:
    from .certificates import hardy_harness

    rep = hardy_harness(args.n, args.p, args.gammas, args.eta, args.R, args.seed)
    for case in rep.cases:
        print(f"p={case['p']:g} gamma={case['gamma']:g}: max ratio {case['max_ratio']:.6f}")
    print(f"{rep.failures} violation(s) over {rep.n_functions} functions")
    return EXIT_OK if rep.failures == 0 else EXIT_VERIFY


def cmd_supersolution(args) -> int:
    from .certificates import supersolution_check

    rep = supersolution_check(args.eps, args.R0, args.R, args.d_r, args.n)
    print(f"d_phi = {rep['d_phi']:.6f}")
    print(f"D = d_phi - d_r = {rep['D']:.6f}")
    for k, v in rep["checks"].items():
        print(f"  {k}: {'ok' if v else 'FAILED'}")
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


def read_fields_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {h: body[:, k] for k, h in enumerate(header)}


def cmd_verify(args) -> int:
    """Re-verify a fields.csv written by ``solve`` against its configuration."""
    from .reconstruction import MeridionalField, field_from_pq
    from .polar_grid import ScalarField
    from .verification import UnmatchedZeroError, WindingError, verify

    cfg = _load_config(args.config)
    data = read_fields_csv(args.fields)
    r = np.unique(data["r"])
    phi = np.unique(data["phi"])
    grid = PolarGrid(float(r[-1]), r.size, phi.size, spacing=cfg.grid.get("spacing", "uniform")
                     if cfg.kind == "bounded" else "log")
    shape = grid.shape
    zd = cfg.zero_data()
    from scipy.interpolate import RectBivariateSpline

    sp_p = RectBivariateSpline(r, phi, data["p"].reshape(shape))
    sp_q = RectBivariateSpline(r, phi, data["q"].reshape(shape))

    def ev(rr, pp):
        rr, pp = np.asarray(rr, float), np.asarray(pp, float)
        sgn = np.where(pp < 0, -1.0, 1.0)
        pa = np.abs(pp)
        return field_from_pq(zd, rr, pp, sp_p.ev(rr, pa), sgn * sp_q.ev(rr, pa))

    H = MeridionalField(ScalarField(grid, data["H_zeta"]), ScalarField(grid, data["H_rho"]), ev)
    I = cfg.profile("inner")
    try:
        rep = verify(H, I, prescribed=[complex(*z) for z in cfg.zeros], with_decay=cfg.kind == "exterior")
    except (UnmatchedZeroError, WindingError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    text = rep.to_json(Path(args.out) if args.out else None)
    print(text)
    ok = rep.intensity_err_inner <= float(cfg.tolerances.get("intensity", 0.01)) and rep.ro_measured == zd.ro
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args) -> int:
    """Grid refinement sweep of a configuration."""
    cfg = _load_config(args.config)
    from .verification import harmonic_residual

    rows = []
    for n in args.nr:
        c = RunConfig(**{**asdict(cfg), "grid": {**cfg.grid, "nr": n, "nphi": 2 * n}})
        res = _pipeline(c)
        curl, div = harmonic_residual(res["H"])
        rows.append((n, 2 * n, res["trace"].n_iter, curl, div, res["consts"].wp_S1_dev, res["consts"].wp_SR_dev))
        print(f"nr={n} nphi={2 * n}: iterations {rows[-1][2]}, curl {curl:.3e}, div {div:.3e}, "
              f"wp_S1_dev {rows[-1][5]:.3e}, wp_SR_dev {rows[-1][6]:.3e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["nr", "nphi", "iterations", "curl", "div", "wp_S1_dev", "wp_SR_dev"])
            w.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="axintensity", description="Axisymmetric field intensity solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the solver pipeline for a JSON configuration")
    p.add_argument("config", nargs="?", help="JSON configuration (defaults: monopole)")
    p.add_argument("--out", help="output directory (overrides the configuration)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="coercivity gap and the LB/CF sweep")
    p.add_argument("--alpha", type=float, default=0.39)
    p.add_argument("--gamma", type=float, default=0.6)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--d", type=float, default=0.1)
    p.add_argument("--e", type=float, default=1.2)
    p.add_argument("--target", type=float, default=0.023)
    p.add_argument("--gamma-step", type=float, default=0.02)
    p.add_argument("--no-cap", dest="cap_deviation", action="store_false",
                   help="use the raw scanned sup |a_rho - alpha| instead of 0.61")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("hardy", help="Hardy/Poincare property harness")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, nargs="+", default=[2, 4, 29])
    p.add_argument("--gammas", type=float, nargs="+", default=[0.0, 0.2, 0.99])
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hardy)

    p = sub.add_parser("supersolution", help="Kummer supersolution checks")
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--R0", type=float, default=5.0)
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--d-r", dest="d_r", type=float, default=0.09)
    p.add_argument("--n", type=int, default=10_000)
    p.set_defaults(func=cmd_supersolution)

    p = sub.add_parser("verify", help="re-verify a written fields.csv")
    p.add_argument("fields")
    p.add_argument("--config")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="grid refinement sweep")
    p.add_argument("config", nargs="?")
    p.add_argument("--nr", type=int, nargs="+", default=[16, 32, 64])
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return int(args.func(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
