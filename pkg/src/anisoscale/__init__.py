from .core import Verifier, VerificationReport, full_report, summary_rows, aggregate_verdict
from .config import RunConfig, DEFAULT_THRESHOLDS
from .errors import (InvalidParametersException, BoundaryRejectionException, ExistenceConditionException,
                     TruncationException, QuadratureException, WindowTooSmallException, InsufficientRangeException,
                     NotAValidCheckException, MissingConfigException, NotAvailableForFamilyException)
from .model import ModelParams, TruncationBox, CovarianceEstimate, admissibility, coefficient, coefficient_grid, rho
from .model import covariance_exact, envelope_ratio, envelope_constants, choose_radius, tail_fraction
from .geometry import (ScalingVector, Scenario, balance_cell, region, discriminants, existence_condition, exponents,
                       classify_scenario, sorting_permutation, isotropic_table, increment_properties)
from .field import (FieldWindow, DiscreteKernel, simulate_window, partial_sum, rectangle_extents, discrete_kernel,
                    discrete_kernel_direct, variance_exact, discretization_scales, rescaled_kernel, rescaled_norm,
                    replicate_partial_sums, projected_variance, ProjectedVariance)
from .limits import (QuadratureSpec, QuadratureResult, Rectangle, LimitKernel, kernel_eval, limit_variance,
                     limit_covariance, increment_covariance, fbs_covariance, theta_density, self_similar_corner,
                     truncation_extent, truncated_tail)
from .checks import CheckResult, slope_check, l2_convergence_check, covariance_match, summability_diagnostics

from collections import namedtuple

VersionInfo = namedtuple('VersionInfo', 'major minor micro releaselevel serial')
version_info = VersionInfo(major=0, minor=1, micro=0, releaselevel="final", serial=0)

__version__ = "{}.{}.{}".format(version_info.major, version_info.minor, version_info.micro)
