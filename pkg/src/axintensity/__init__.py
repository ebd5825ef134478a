"""Axisymmetric magnetic fields with prescribed boundary intensity.

The package solves for a meridional field H = (H_zeta, H_rho) on the
annulus 1 < r < R (or its exterior limit) whose modulus matches a given
intensity on the inner circle, with prescribed zeros and rotation numbers.
The nonlinear problem for the argument u is attacked by a frozen
coefficient fixed-point iteration on a bilinear finite element grid.
"""

from .analytic_data import ZeroData
from .conjugate_pair import IntensityProfile
from .picard_solver import ProblemSpec, SolverParams, picard, prepare
from .polar_grid import PolarGrid, ScalarField

__all__ = ["IntensityProfile", "PolarGrid", "ProblemSpec", "ScalarField", "SolverParams", "ZeroData",
           "picard", "prepare"]
__version__ = "0.1.0"
