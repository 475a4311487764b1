"""Exact discrete covariances of the normalized partial sums against the limit covariances."""
# stdlib
from collections import namedtuple
import logging
import math

from anisoscale.checks.base import Check, CheckResult
from anisoscale.checks.slope import resolve_radius
from anisoscale.field import discrete_kernel, rectangle_extents
from anisoscale.lattice import extrapolate_tail
from anisoscale.limits import LimitKernel, QuadratureSpec, Rectangle, limit_covariance, limit_variance
from anisoscale.model import tail_exponent
from anisoscale.errors import InvalidParametersException

CovarianceRow = namedtuple("CovarianceRow", ["x", "y", "discrete", "limit", "ratio", "sigma", "passed"])
"""One compared pair.

.. py:attribute:: discrete

    Σ h_x(s) h_y(s) with its extrapolated tail.

.. py:attribute:: limit

    The limit covariance by quadrature.

.. py:attribute:: ratio

    ``discrete / limit``; ``None`` for a pair with zero limit covariance.

.. py:attribute:: sigma

    sqrt(Var Y(x) Var Y(y)), the scale of the absolute criterion.

"""

# Set up logger
logger = logging.getLogger(__name__)


def as_rectangle(point):
    """A corner (box from the origin), a ``{"lower", "upper"}`` dict or a :class:`Rectangle` as a :class:`Rectangle`."""
    if isinstance(point, Rectangle):
        return Rectangle(tuple(point.lower), tuple(point.upper))
    if isinstance(point, dict):
        return Rectangle(tuple(point["lower"]), tuple(point["upper"]))
    return Rectangle((0.0, 0.0, 0.0), tuple(point))


def _describe(rect):
    if not any(rect.lower):
        return list(rect.upper)
    return {"lower": list(rect.lower), "upper": list(rect.upper)}


def discrete_covariance(scenario, lam, K, K2, R="auto", radius_factor=1.0, threads=None):
    """Cov(λ^{-H} S over K, λ^{-H} S over K2) as Σ h h' over a common box, with a tail estimate."""
    upper = [max(a, b) for a, b in zip(rectangle_extents(scenario.gamma, lam, K.upper),
                                       rectangle_extents(scenario.gamma, lam, K2.upper))]
    box = resolve_radius(R, upper, radius_factor)
    boxes = [box, box.halved(), box.halved().halved()]
    sums = []
    for current in boxes:
        hx = discrete_kernel(scenario.params, scenario.gamma, lam, K.upper, scenario.H, current,
                             box_extents=upper, lower=K.lower, threads=threads)
        hy = discrete_kernel(scenario.params, scenario.gamma, lam, K2.upper, scenario.H, current,
                             box_extents=upper, lower=K2.lower, threads=threads)
        sums.append(hx.inner(hy))
    full, half, quarter = sums
    return full + extrapolate_tail(full, half, quarter, tail_exponent(scenario.params))


def covariance_match(scenario, pairs, lam, R="auto", quad=None, tolerance=0.1, abs_tolerance=0.02,
                     radius_factor=1.0, threads=None):
    """Compare discrete and limit covariances on pairs of corners or rectangles.

    Pairs with zero limit covariance pass when |discrete| <= ``abs_tolerance`` σ_x σ_y,
    all others when the ratio is within ``tolerance`` of 1.

    :param pairs: ``(x, y)`` pairs; entries are corners or :class:`Rectangle` instances.
    :return: List of :class:`CovarianceRow`.
    """
    spec = quad or QuadratureSpec()
    if not pairs:
        raise InvalidParametersException("covariance_match needs at least one pair")
    kernels = {}

    def kernel(rect):
        if rect not in kernels:
            kernels[rect] = LimitKernel(scenario.family, scenario.params, rect.upper, scenario.pi, rect.lower, spec)
        return kernels[rect]

    rows = []
    for x, y in pairs:
        K, K2 = as_rectangle(x), as_rectangle(y)
        discrete = discrete_covariance(scenario, lam, K, K2, R, radius_factor, threads)
        limit = limit_covariance(kernel(K), kernel(K2), spec, threads).value
        sigma = math.sqrt(limit_variance(kernel(K), spec, threads).value * limit_variance(kernel(K2), spec, threads).value)
        if abs(limit) <= 1e-12 * sigma or sigma == 0.0:
            ratio = None
            passed = abs(discrete) <= abs_tolerance * sigma
        else:
            ratio = discrete / limit
            passed = abs(ratio - 1.0) <= tolerance
        logger.info("[%s] lambda=%g cov(%s, %s): discrete %.6g, limit %.6g", scenario.family, lam,
                    _describe(K), _describe(K2), discrete, limit)
        rows.append(CovarianceRow(_describe(K), _describe(K2), discrete, limit, ratio, sigma, passed))
    return rows


class CovarianceMatchCheck(Check):
    """Passes when every configured pair matches at the largest λ of the grid."""
    name = "covariance"
    needs = ("lambda_grid", "pairs")

    def __init__(self, config):
        self.lam = max(config.lambda_grid)
        self.pairs = config.pairs
        self.R = getattr(config, "radius", "auto")
        self.quad = QuadratureSpec.from_dict(getattr(config, "quadrature", None))
        self.threads = getattr(config, "threads", None)
        self.tolerance = self.threshold(config, "covariance", 0.1)
        self.abs_tolerance = self.threshold(config, "covariance_abs", 0.02)

    def run(self, scenario):
        rows = covariance_match(scenario, self.pairs, self.lam, self.R, self.quad, self.tolerance,
                                self.abs_tolerance, threads=self.threads)
        verdict = "pass" if all(row.passed for row in rows) else "fail"
        metrics = {"lambda": self.lam, "rows": [row._asdict() for row in rows]}
        return CheckResult(self.name, verdict, metrics,
                           {"covariance": self.tolerance, "covariance_abs": self.abs_tolerance}, None)
