import functools
import time

import numpy as np
import pytest

from axintensity.analytic_data import ZeroData
from axintensity.conjugate_pair import IntensityProfile
from axintensity.picard_solver import ProblemSpec, SolverParams, picard, prepare
from axintensity.polar_grid import PolarGrid
from axintensity.reconstruction import assemble_field, integrate_wp

ACCEPTANCE_LINES: list[str] = []


def monopole_field(r, phi):
    return np.cos(phi) / r**2, np.sin(phi) / r**2


def dipole_field(r, phi):
    c, s = np.cos(phi), np.sin(phi)
    return (3 * c**2 - 1) / r**3, 3 * s * c / r**3


CASES = {
    "monopole": (IntensityProfile.constant(1.0), dict(zeros=(), ro_hat=1)),
    "dipole": (IntensityProfile.dipole(), dict(zeros=(), ro_hat=2)),
    "zero_pair": (IntensityProfile.constant(1.0), dict(zeros=[(0.0, 2.0)], ro_hat=1)),
}


class Solved:
    """Everything produced by one bounded pipeline run."""

    def __init__(self, name, nr=64, nphi=128, R=4.0):
        t0 = time.perf_counter()
        I, zkw = CASES[name]
        self.name = name
        self.I = I
        self.zd = ZeroData.bounded(zkw["zeros"], ro_hat=zkw["ro_hat"], R=R)
        self.grid = PolarGrid(R, nr, nphi)
        self.spec = ProblemSpec(I, self.zd, I)
        self.params = SolverParams()
        self.data = prepare(self.spec, self.grid)
        self.u, self.trace = picard(self.data.omega, self.grid, self.params)
        self.wp, self.consts = integrate_wp(self.u, self.data.omega, self.data.bd, self.zd.ro)
        self.p, self.q, self.H, self.I0 = assemble_field(self.wp, self.u, self.data.p_l, self.data.q_l,
                                                         self.zd, self.consts)
        self.seconds = time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def solved(name, nr=64, nphi=128, R=4.0) -> Solved:
    return Solved(name, nr, nphi, R)


@functools.lru_cache(maxsize=None)
def exterior(name, R_list=(2.0, 4.0, 8.0), nphi=129):
    """Truncation sequence for the exterior version of a case, plus the last field."""
    from axintensity.picard_solver import exterior_sequence, log_grid_factory

    t0 = time.perf_counter()
    I, zkw = CASES[name]
    zd = ZeroData.exterior(zkw["zeros"], delta_tilde=zkw["ro_hat"] + 1)
    seq = exterior_sequence(ProblemSpec(I, zd), list(R_list), SolverParams(), log_grid_factory(16, nphi))
    d, u = seq.data[-1], seq.solutions[-1]
    wp, consts = integrate_wp(u, d.omega, d.bd, d.zd.ro)
    _, _, H, _ = assemble_field(wp, u, d.p_l, d.q_l, d.zd, consts)
    return seq, H, time.perf_counter() - t0


@pytest.fixture(scope="session")
def mono():
    return solved("monopole")


@pytest.fixture(scope="session")
def dip():
    return solved("dipole")


@pytest.fixture(scope="session")
def zpair():
    return solved("zero_pair")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
