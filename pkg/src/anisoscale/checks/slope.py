"""Growth of the exact partial-sum variance against the classified exponent H."""
# stdlib
from collections import namedtuple
import logging
import math

# External modules
import numpy as np
from scipy import stats

from anisoscale.checks.base import Check, CheckResult
from anisoscale.field import auto_radius, projected_variance, rectangle_extents
from anisoscale.model import TruncationBox
from anisoscale.errors import InsufficientRangeException

PROJECTION_FLOOR = 1e-9
"""Projected variances below this share of the raw variance are treated as zero."""

SlopeFit = namedtuple("SlopeFit", ["slope", "H_est", "stderr", "r2", "H", "variances",
                                   "projected_slope", "H_projected", "projected_variances"])
"""Least squares fits of log Var S_λ(x) on log λ.

.. py:attribute:: slope

    The fitted slope of the raw variances, an estimate of 2H.

.. py:attribute:: H_est

    ``slope / 2``.

.. py:attribute:: stderr

    Standard error of the slope.

.. py:attribute:: r2

    Coefficient of determination.

.. py:attribute:: H

    The classified exponent.

.. py:attribute:: variances

    List of ``(λ, Var S_λ(x))`` pairs, unnormalized.

.. py:attribute:: projected_slope

    Slope of the projected variances, or None when they vanish.

.. py:attribute:: H_projected

    ``projected_slope / 2``, or None.

.. py:attribute:: projected_variances

    List of ``(λ, projected variance)`` pairs.

"""

# Set up logger
logger = logging.getLogger(__name__)


def resolve_radius(R, extents, factor=1.0):
    """A fixed radius, or margins proportional to the rectangle for ``"auto"``."""
    if R is None or R == "auto":
        return auto_radius(extents, factor)
    return TruncationBox.of(R)


def slope_check(scenario, lambda_grid, x, R="auto", threads=None, radius_factor=1.0):
    """Fit the variance growth exponent over ``lambda_grid``.

    Two fits are made. The raw one regresses log Var S_λ(x). The projected one
    regresses the variance left after removing the innovation sum over the
    rectangle, which drops the lattice constant that biases short grids. When
    the projected variances vanish (i.i.d. sums) only the raw fit is reported.

    :param scenario: The classified (q, γ) pair.
    :type scenario: Scenario
    :param lambda_grid: At least three scales spanning three octaves.
    :param x: Rectangle corner.
    :param R: Kernel box margins, or ``"auto"`` for margins of ``radius_factor`` times the rectangle.
    :raises InsufficientRangeException: The grid is too short or a rectangle is empty.
    :rtype: SlopeFit
    """
    lambdas = sorted(float(v) for v in lambda_grid)
    if len(lambdas) < 3 or math.log2(lambdas[-1] / lambdas[0]) < 3.0 - 1e-9:
        raise InsufficientRangeException("the lambda grid %s must hold 3 values spanning 3 octaves" % lambdas)
    variances = []
    projected = []
    for lam in lambdas:
        extents = rectangle_extents(scenario.gamma, lam, x)
        if min(extents) < 1:
            raise InsufficientRangeException("the rectangle is empty at lambda = %g" % lam)
        box = resolve_radius(R, extents, radius_factor)
        estimate = projected_variance(scenario.params, scenario.gamma, lam, x, 0.0, box, threads=threads)
        variances.append((lam, estimate.variance))
        projected.append((lam, estimate.value))
    log_lambda = np.log(lambdas)
    fit = stats.linregress(log_lambda, np.log([v for _, v in variances]))
    logger.info("[%s] slope %.4f ± %.4f, 2H = %.4f", scenario.family, fit.slope, fit.stderr, 2 * scenario.H)
    projected_slope = None
    if all(value > PROJECTION_FLOOR * raw for (_, value), (_, raw) in zip(projected, variances)):
        projected_slope = float(stats.linregress(log_lambda, np.log([v for _, v in projected])).slope)
        logger.info("[%s] projected slope %.4f", scenario.family, projected_slope)
    else:
        logger.debug("[%s] projected variances vanish, keeping the raw fit", scenario.family)
    return SlopeFit(float(fit.slope), float(fit.slope) / 2.0, float(fit.stderr), float(fit.rvalue ** 2),
                    scenario.H, variances, projected_slope,
                    projected_slope / 2.0 if projected_slope is not None else None, projected)


class SlopeCheck(Check):
    """Passes when the fitted exponent is within ``thresholds["slope"]`` of H.

    The projected estimate is judged when it exists, the raw one otherwise.

    :param config: Uses ``lambda_grid``, ``corners``, ``radius``, ``threads`` and ``thresholds``.
    """
    name = "slope"
    needs = ("lambda_grid", "corners")

    def __init__(self, config):
        self.lambda_grid = config.lambda_grid
        self.x = config.corners[0]
        self.R = getattr(config, "radius", "auto")
        self.threads = getattr(config, "threads", None)
        self.tolerance = self.threshold(config, "slope", 0.05)

    def run(self, scenario):
        fit = slope_check(scenario, self.lambda_grid, self.x, self.R, self.threads)
        estimator = "projected" if fit.H_projected is not None else "raw"
        estimate = fit.H_projected if fit.H_projected is not None else fit.H_est
        verdict = "pass" if abs(estimate - fit.H) <= self.tolerance else "fail"
        metrics = dict(fit._asdict(), x=list(self.x), estimator=estimator)
        return CheckResult(self.name, verdict, metrics, {"slope": self.tolerance}, None)
