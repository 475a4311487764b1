"""Partial sums of |r(t)| along the t3 axis and over the (t2, t3) plane.

The sums run over ρ-adapted sections: the axis section at half-width N is
|t3| <= N, the plane section is |t2| <= ⌊N^{q3/q2}⌋, |t3| <= N. The covariances
on the largest section are computed exactly in one batched convolution on a
ρ-adapted truncation box, with the box tail extrapolated from the boxes at half
and quarter ρ-level. Growth exponents in N are fitted on the increments
S(N) - S(N - 1) of the measured partial sums. A divergent section must grow;
a convergent one must pass a Cauchy-tail test at N_max.
"""
# stdlib
from collections import namedtuple
import logging
import math

# External modules
import numpy as np
from scipy import signal, stats

from anisoscale.checks.base import Check, CheckResult
from anisoscale.geometry import region
from anisoscale.lattice import extrapolate_tails, fft_workers
from anisoscale.model import TruncationBox, coefficient_on_ranges
from anisoscale.errors import InsufficientRangeException

SECTIONS = ("axis", "plane")

FFT_FLOOR = 1e-12
"""Covariances below this share of the largest one are set to zero."""

DIVERGENT = {
    "I": (),
    "II": ("plane",),
    "III": ("axis", "plane"),
}
"""Sections whose sums diverge in each region."""

SectionFit = namedtuple("SectionFit", ["section", "sums", "growth", "predicted_growth", "expected", "observed",
                                       "measured_tail", "cauchy_tail", "extrapolated", "passed"])
"""Partial sums of one section and their verdict.

.. py:attribute:: sums

    S(N) for N = 0 .. N_top.

.. py:attribute:: growth

    Exponent g of S(N) ~ N^g (divergent) or of the tail ~ N^g (convergent),
    fitted on the increments. None when every increment vanishes.

.. py:attribute:: measured_tail

    (S(N_top) - S(N_top // 2)) / S(N_top).

.. py:attribute:: cauchy_tail

    Relative tail beyond N_max for convergent sections, else ``None``. Equal to
    the measured (S(N_max) - S(N_max // 2)) / S(N_max) when N_max was reached,
    otherwise summed from the fitted increment law.

.. py:attribute:: extrapolated

    Whether ``cauchy_tail`` comes from the fitted law.

"""

SummabilityDiagnostics = namedtuple("SummabilityDiagnostics", ["region", "N_max", "N_top", "r0", "sections", "verdict"])

# Set up logger
logger = logging.getLogger(__name__)


def plane_extents(params, N):
    """Half-widths (e2, e3) of the plane section at axis half-width ``N``."""
    return int(math.floor(N ** (params.q[2] / params.q[1]) + 1e-9)), int(N)


def plane_covariances(params, box, extents, threads=None):
    """r(0, t2, t3) = Σ_{s in box} a(s) a(t - s) for |t2| <= e2, |t3| <= e3.

    The truncation matches :func:`anisoscale.model.covariance_exact`: only s is
    restricted to the box. Entry ``[t2 + e2, t3 + e3]`` holds lag (0, t2, t3).

    :type box: TruncationBox
    :param extents: Half-widths (e2, e3).
    :rtype: numpy.ndarray
    """
    r1, r2, r3 = box
    e2, e3 = extents
    inner = coefficient_on_ranges(params, np.arange(-r1, r1 + 1), np.arange(-r2, r2 + 1), np.arange(-r3, r3 + 1))
    # a(t - s) with t1 = 0 pairs s1 with -s1
    outer = coefficient_on_ranges(params, np.arange(r1, -r1 - 1, -1), np.arange(-r2 - e2, r2 + e2 + 1),
                                  np.arange(-r3 - e3, r3 + e3 + 1))
    with fft_workers(threads):
        slices = signal.fftconvolve(inner, outer, mode="valid", axes=(1, 2))
    return slices.sum(axis=0)


def _section_level(params, extents):
    e2, e3 = extents
    return max(e2 ** params.q[1], e3 ** params.q[2], 1.0)


def section_covariances(params, N, level_factor=16.0, threads=None):
    """r on the plane section at half-width ``N``, with the box tail extrapolated.

    The boxes sit at ρ-levels ``level_factor`` L, half and a quarter of it, L being
    the level of the section; the tail shrinks by 2^{-(2 - Q)} per halving.
    """
    extents = plane_extents(params, N)
    level = level_factor * _section_level(params, extents)
    full, half, quarter = (plane_covariances(params, TruncationBox.from_level(params, level / 2 ** k), extents, threads)
                           for k in range(3))
    grid = full + extrapolate_tails(full, half, quarter, 2.0 - params.Q)
    # below FFT round-off
    return np.where(np.abs(grid) > FFT_FLOOR * np.abs(grid).max(), grid, 0.0)


def partial_sums(params, grid, N):
    """S_axis(n) and S_plane(n) for n = 0 .. N from the plane covariances ``grid``."""
    e2, e3 = plane_extents(params, N)
    magnitude = np.abs(grid)
    axis, plane = [], []
    for n in range(N + 1):
        f2, f3 = plane_extents(params, n)
        axis.append(float(magnitude[e2, e3 - n:e3 + n + 1].sum()))
        plane.append(float(magnitude[e2 - f2:e2 + f2 + 1, e3 - n:e3 + n + 1].sum()))
    return axis, plane


def predicted_growth(params, section):
    """Growth exponent in N from the envelope ρ(t)^{-(2 - Q)}."""
    q2, q3 = params.q[1:]
    decay = q3 * (2.0 - params.Q)
    return 1.0 - decay if section == "axis" else 1.0 + q3 / q2 - decay


def reachable_width(params, N_max, level_factor=16.0, point_budget=2e6):
    """Largest N <= N_max whose outermost box holds at most ``point_budget`` points."""
    def fits(n):
        level = level_factor * _section_level(params, plane_extents(params, n))
        return TruncationBox.from_level(params, level).points <= point_budget

    lo, hi = 0, int(N_max)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _fit_section(params, name, sums, N_max, expected, cauchy_tol, growth_tol):
    N_top = len(sums) - 1
    sums = np.asarray(sums)
    increments = np.diff(sums)
    window = np.arange(max(2, int(math.ceil(N_top / 4.0))), N_top + 1)
    steps = increments[window - 1]
    predicted = predicted_growth(params, name)
    measured = float((sums[N_top] - sums[N_top // 2]) / sums[N_top]) if sums[N_top] > 0 else 0.0
    if not steps.any():
        # finitely many non-zero covariances
        growth, observed, tail, extrapolated = None, "convergent", 0.0, N_max > N_top
    else:
        if len(window) < 3 or np.any(steps <= 0):
            raise InsufficientRangeException("section %s: N = %d leaves no stable growth fit" % (name, N_top))
        fit = stats.linregress(np.log(window), np.log(steps))
        growth = float(fit.slope) + 1.0
        observed = "divergent" if growth > 0 else "convergent"
        if N_max <= N_top:
            tail, extrapolated = float((sums[N_max] - sums[N_max // 2]) / sums[N_max]), False
        elif growth < 0:
            # Σ_{n > N_max} c n^{g - 1} ≈ c N_max^g / (-g)
            tail = math.exp(fit.intercept) * N_max ** growth / (-growth) / float(sums[N_top])
            extrapolated = True
        else:
            tail, extrapolated = 1.0, True
    if expected == "divergent":
        passed = growth is not None and growth > 0 and abs(growth - predicted) <= growth_tol
        tail = None
    else:
        passed = observed == "convergent" and tail <= cauchy_tol
    logger.info("[summability] %s: growth %s (predicted %.4f), %s (expected %s), tail %s",
                name, "none" if growth is None else "%.4f" % growth, predicted, observed, expected, tail)
    return SectionFit(name, sums.tolist(), growth, predicted, expected, observed, measured, tail, extrapolated, passed)


def summability_diagnostics(params, N_max=10 ** 4, level_factor=16.0, point_budget=2e6, cauchy_tol=1e-3,
                            growth_tol=0.1, threads=None):
    """Region-consistency of the partial sums of |r| on the t3 axis and the (t2, t3) plane.

    :param params: Model parameters.
    :type params: ModelParams
    :param N_max: Half-width along t3 up to which the sums are judged.
    :param level_factor: ρ-level of the truncation box relative to the section.
    :param point_budget: Largest truncation box evaluated.
    :raises InsufficientRangeException: The budget leaves too few half-widths for a stable fit.
    :rtype: SummabilityDiagnostics
    """
    reg = region(params, params.eps_q)
    N_top = reachable_width(params, N_max, level_factor, point_budget)
    if N_top < 4:
        raise InsufficientRangeException("the point budget reaches only N = %d (need 4)" % N_top)
    grid = section_covariances(params, N_top, level_factor, threads)
    e2, e3 = plane_extents(params, N_top)
    r0 = float(grid[e2, e3])
    axis, plane = partial_sums(params, grid, N_top)
    sections = {}
    for name, sums in zip(SECTIONS, (axis, plane)):
        expected = "divergent" if name in DIVERGENT[reg] else "convergent"
        sections[name] = _fit_section(params, name, sums, N_max, expected, cauchy_tol, growth_tol)
    verdict = "pass" if all(fit.passed for fit in sections.values()) else "fail"
    return SummabilityDiagnostics(reg, N_max, N_top, r0, sections, verdict)


class SummabilityCheck(Check):
    """Passes when every section converges or diverges as the region predicts."""
    name = "summability"
    needs = ("summability_max",)

    def __init__(self, config):
        self.N_max = config.summability_max
        self.threads = getattr(config, "threads", None)
        self.cauchy_tol = self.threshold(config, "cauchy", 1e-3)
        self.growth_tol = self.threshold(config, "growth", 0.1)

    def run(self, scenario):
        result = summability_diagnostics(scenario.params, self.N_max, cauchy_tol=self.cauchy_tol,
                                         growth_tol=self.growth_tol, threads=self.threads)
        metrics = {
            "region": result.region,
            "N_max": result.N_max,
            "N_top": result.N_top,
            "r0": result.r0,
            "sections": {name: fit._asdict() for name, fit in result.sections.items()},
        }
        return CheckResult(self.name, result.verdict, metrics, {"cauchy": self.cauchy_tol, "growth": self.growth_tol}, None)
