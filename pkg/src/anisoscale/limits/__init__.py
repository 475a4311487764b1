from .quadrature import QuadratureSpec, QuadratureResult
from .families import FAMILIES, LimitFamily
from .kernel import (Rectangle, LimitKernel, kernel_eval, limit_variance, limit_covariance, increment_covariance,
                     corner_covariance_sum, fbs_covariance, theta_density, self_similar_corner,
                     stationary_increment_gap, truncation_extent, truncated_tail, resolve_family)
