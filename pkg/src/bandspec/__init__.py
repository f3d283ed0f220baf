"""Squared singular value laws of random band matrices.

Sampling (:mod:`~bandspec.ensemble`), in-house eigen- and singular value
solvers (:mod:`~bandspec.spectra`), the limiting Stieltjes transform
(:mod:`~bandspec.solver`), the closed-form triangular law
(:mod:`~bandspec.trilaw`) and an experiment harness
(:mod:`~bandspec.harness`) comparing the two sides.
"""

from .ensemble import EnsembleSpec, band_mask, gram, sample_matrix
from .errors import BandspecError, ConfigError, ConvergenceError, InvariantError
from .harness import ExperimentConfig, emit, run, run_compare, run_concentration, run_corollary_test
from .profile import (
    BandProfile,
    constant_profile,
    convolution_u,
    expansion_coefficients,
    is_periodic_square,
    make_indicator_profile,
    squared_l2_norm,
)
from .solver import (
    GridSolution,
    QuarterCircleLaw,
    SpectralDensity,
    aggregate,
    apply_T,
    continuation_path,
    density_from_transform,
    quarter_circle_density,
    solve_fixed_point,
    solve_quarter_circle_transform,
)
from .spectra import empirical_measure, empirical_stieltjes, ks_distance, singular_values, symmetric_eigenvalues
from .trilaw import TriangularLaw, support_from_inverse, triangular_cdf, triangular_density, triangular_transform

__version__ = "0.1.0"
