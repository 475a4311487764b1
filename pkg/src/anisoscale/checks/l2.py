"""L² distance between the rescaled discrete kernel and the limit kernel."""
# stdlib
from collections import namedtuple
import logging
import math

# External modules
import numpy as np

from anisoscale.checks.base import Check, CheckResult
from anisoscale.field import discrete_kernel, discretization_scales, rectangle_extents, rescaled_kernel
from anisoscale.limits import LimitKernel, QuadratureSpec, truncated_tail, truncation_extent
from anisoscale.limits.quadrature import finite_rule, tensor_grid
from anisoscale.model import TruncationBox
from anisoscale.errors import TruncationException

L2Point = namedtuple("L2Point", ["lam", "D", "norm_ratio", "scales", "radius"])
"""One point of the L² curve.

.. py:attribute:: D

    ∫ (h̃_λ - f)² / ∫ f² over the truncated u-box.

.. py:attribute:: norm_ratio

    ∫ h̃_λ² / ∫ f² over the same box.

"""

L2Curve = namedtuple("L2Curve", ["points", "domain", "tail", "level", "decreasing", "passed"])
"""The L² curve over one u-box.

.. py:attribute:: tail

    Largest share of ∫ f² left outside the u-box along one axis. Exceeds the
    budget when the cap binds.

"""

KERNEL_POINTS = 5 * 10 ** 7
"""Largest discrete kernel box accepted for one λ."""

# Set up logger
logger = logging.getLogger(__name__)


def _domain_rule(domain, x, spec, level):
    rules = []
    for lo, hi, xi in zip(domain.lower, domain.upper, x):
        cuts = sorted(set(v for v in (lo, 0.0, xi, hi) if lo <= v <= hi))
        parts = [finite_rule(a, b, spec, level) for a, b in zip(cuts[:-1], cuts[1:])]
        rules.append((np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])))
    return tensor_grid(rules)


def _covering_radius(domain, x, extents, m):
    """Kernel margins reaching every u in the domain."""
    radius = []
    for lo, hi, xi, n, mi in zip(domain.lower, domain.upper, x, extents, m):
        reach = max(-lo * mi, hi * mi - n, 0.0)
        radius.append(int(math.ceil(reach)) + 1)
    return TruncationBox(*radius)


def l2_convergence_check(scenario, lambda_grid, x, R="auto", quad=None, budget=0.01, cap=8.0, level=2,
                         threshold=0.1, threads=None):
    """The curve D(λ) = ∫ (h̃_λ - f)² du / ∫ f² du over the truncated u-box.

    The u-box leaves out the power tails of f² beyond ``budget`` of the total
    (at most ``cap`` spans per axis). The limit kernel is evaluated once on the
    quadrature grid and reused for every λ.

    :param R: Kernel box margins, or ``"auto"`` for margins covering the u-box.
    :raises TruncationException: A kernel box covering the u-box is too large.
    :rtype: L2Curve
    """
    spec = quad or QuadratureSpec()
    lambdas = sorted(float(v) for v in lambda_grid)
    if min(x) <= 0:
        points = [L2Point(lam, 0.0, 0.0, None, None) for lam in lambdas]
        return L2Curve(points, None, 0.0, 0, True, True)
    k = LimitKernel(scenario.family, scenario.params, x, scenario.pi, inner=spec)
    domain = truncation_extent(k, budget, cap)
    tail = truncated_tail(k, domain)
    if tail > budget * (1 + 1e-9):
        logger.warning("[%s] the u-box leaves %.3g of the limit norm outside (budget %g)", scenario.family, tail, budget)
    U, weights = _domain_rule(domain, x, spec, level)
    f = k.values(U)
    limit_norm = float(np.sum(weights * f ** 2))
    points = []
    for lam in lambdas:
        m = discretization_scales(scenario, lam)
        extents = rectangle_extents(scenario.gamma, lam, x)
        box = _covering_radius(domain, x, extents, m) if R is None or R == "auto" else TruncationBox.of(R)
        size = np.prod([n + 2 * r for n, r in zip(extents, box)])
        if size > KERNEL_POINTS:
            raise TruncationException("covering the u-box at lambda = %g needs a kernel box of %d points" % (lam, size))
        kernel = discrete_kernel(scenario.params, scenario.gamma, lam, x, scenario.H, box, threads=threads)
        h = rescaled_kernel(scenario, lam, x, U, box, kernel)
        D = float(np.sum(weights * (h - f) ** 2)) / limit_norm
        ratio = float(np.sum(weights * h ** 2)) / limit_norm
        logger.info("[%s] lambda=%g: D = %.4g, norm ratio %.4f (m = %s)", scenario.family, lam, D, ratio, m)
        points.append(L2Point(lam, D, ratio, list(m), list(box)))
    values = [p.D for p in points]
    decreasing = all(b < a for a, b in zip(values[:-1], values[1:]))
    return L2Curve(points, [list(domain.lower), list(domain.upper)], tail, level, decreasing,
                   decreasing and values[-1] < threshold)


class L2ConvergenceCheck(Check):
    """Passes when D(λ) strictly decreases and D(λ_max) is below ``thresholds["l2"]``.

    The decreasing criterion stands in for the unknown convergence rate.
    """
    name = "l2"
    needs = ("lambda_grid", "corners")

    def __init__(self, config):
        self.lambda_grid = config.lambda_grid
        self.x = config.corners[0]
        self.R = getattr(config, "radius", "auto")
        self.quad = QuadratureSpec.from_dict(getattr(config, "quadrature", None))
        self.threads = getattr(config, "threads", None)
        self.tolerance = self.threshold(config, "l2", 0.1)

    def run(self, scenario):
        curve = l2_convergence_check(scenario, self.lambda_grid, self.x, self.R, self.quad,
                                     threshold=self.tolerance, threads=self.threads)
        metrics = {
            "curve": [p._asdict() for p in curve.points],
            "domain": curve.domain,
            "tail": curve.tail,
            "decreasing": curve.decreasing,
        }
        return CheckResult(self.name, "pass" if curve.passed else "fail", metrics, {"l2": self.tolerance},
                           "decreasing D(lambda) is a surrogate for an unknown rate")
