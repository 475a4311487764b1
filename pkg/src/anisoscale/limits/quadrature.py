"""One-dimensional Gauss–Legendre building blocks and the adaptive driver.

Every rule is built from ``nodes`` Gauss–Legendre points on each of ``2**level``
equal panels of (0, 1), pushed through a map onto the target segment:

* finite segments use the sigmoidal grading w ↦ w^m / (w^m + (1 - w)^m), which
  clusters nodes at both ends;
* semi-infinite segments use w ↦ a ± ℓ w^m / (1 - w)^k.
"""
# stdlib
from collections import namedtuple
import functools
import logging
import math
import warnings

# External modules
import numpy as np

# Exceptions
from anisoscale.errors import InvalidParametersException, QuadratureException

SCHEMES = ("tensor-gauss-legendre",)

QuadratureResult = namedtuple("QuadratureResult", ["value", "error", "level", "nodes"])
"""The result of an adaptive quadrature.

.. py:attribute:: value

    The integral at the finest level reached.

.. py:attribute:: error

    Absolute difference between the two finest levels.

.. py:attribute:: level

    Refinement level of ``value``.

.. py:attribute:: nodes

    Number of integrand evaluations at that level.

"""

# Set up logger
logger = logging.getLogger(__name__)


class QuadratureSpec:
    """Settings of a tensor Gauss–Legendre rule with adaptive halving.

    :param nodes: Gauss–Legendre points per panel, at least 8. With the default
        ``max_level`` the finest level carries 8 × 2³ = 64 points per segment.
    :type nodes: int
    :param grading: Order m of the endpoint grading.
    :type grading: int
    :param tail_power: Exponent k of the tail map; chosen from the decay of the integrand when ``None``.
    :type tail_power: Optional[float]
    :param target: Relative agreement required between the two finest levels.
    :type target: float
    :param max_level: Finest level tried; level ℓ uses 2^ℓ panels per segment.
    :type max_level: int
    :param scheme: Only ``"tensor-gauss-legendre"``.
    :param on_failure: ``"raise"`` or ``"warn"`` when ``max_level`` is reached unconverged.
    """
    def __init__(self, nodes=8, grading=4, tail_power=None, target=1e-3, max_level=3,
                 scheme="tensor-gauss-legendre", on_failure="raise"):
        if int(nodes) < 8:
            raise InvalidParametersException("quadrature needs at least 8 nodes per panel, got %r" % nodes)
        if not target > 0:
            raise InvalidParametersException("quadrature target must be positive, got %r" % target)
        if int(grading) < 1 or int(max_level) < 1:
            raise InvalidParametersException("grading and max_level must be at least 1")
        if tail_power is not None and not tail_power > 0:
            raise InvalidParametersException("tail_power must be positive")
        if scheme not in SCHEMES:
            raise InvalidParametersException("unknown quadrature scheme %r" % scheme)
        if on_failure not in ("raise", "warn"):
            raise InvalidParametersException("on_failure must be 'raise' or 'warn'")
        self.nodes = int(nodes)
        self.grading = int(grading)
        self.tail_power = tail_power
        self.target = float(target)
        self.max_level = int(max_level)
        self.scheme = scheme
        self.on_failure = on_failure

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data):
        if data is None:
            return cls()
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, QuadratureSpec) and self.__dict__ == other.__dict__

    def __repr__(self):
        return "QuadratureSpec(%s)" % ", ".join("%s=%r" % item for item in sorted(self.__dict__.items()))


@functools.lru_cache(maxsize=None)
def unit_panels(nodes, level):
    """Composite Gauss–Legendre rule on (0, 1) with 2**level panels."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    panels = 2 ** level
    edges = np.arange(panels) / panels
    points = (edges[:, None] + (x[None, :] + 1.0) / (2.0 * panels)).ravel()
    weights = np.tile(w / (2.0 * panels), panels)
    return points, weights


@functools.lru_cache(maxsize=None)
def graded_unit(nodes, level, grading):
    """The graded rule on (0, 1): nodes φ(w), complements 1 - φ(w) and weights φ'(w)·ω.

    The complements are computed directly; near w = 1 they underflow to tiny
    positive numbers where 1 - φ would round to 0.
    """
    w, omega = unit_panels(nodes, level)
    m = grading
    num = w ** m
    rest = (1.0 - w) ** m
    den = num + rest
    dphi = m * w ** (m - 1) * (1.0 - w) ** (m - 1) / den ** 2
    return num / den, rest / den, dphi * omega


def finite_rule(a, b, spec, level, grading=None):
    """Graded rule on the segment (a, b); empty when b <= a."""
    if not b > a:
        return np.empty(0), np.empty(0)
    phi, _, weight = graded_unit(spec.nodes, level, grading or spec.grading)
    return a + (b - a) * phi, (b - a) * weight


def tail_rule(a, scale, direction, spec, level, k, grading=None):
    """Rule on [a, ∞) (``direction=1``) or (-∞, a] (``direction=-1``) with length scale ``scale``."""
    w, omega = unit_panels(spec.nodes, level)
    m = grading or spec.grading
    one = 1.0 - w
    offset = scale * w ** m / one ** k
    jac = scale * (m * w ** (m - 1) / one ** k + k * w ** m / one ** (k + 1))
    return a + direction * offset, jac * omega


def tail_power(spec, decay):
    """Exponent k of the tail map for an integrand decaying like |u|^(-decay)."""
    if spec.tail_power is not None:
        return float(spec.tail_power)
    if decay <= 1.0:
        return 6.0
    return float(min(6.0, max(1.0, 2.0 / (decay - 1.0))))


def line_rule(breakpoints, scale, spec, level, k, grading=None):
    """Rule on the real line split at ``breakpoints``, with mapped tails on both sides."""
    points = sorted(set(float(b) for b in breakpoints))
    parts = [tail_rule(points[0], scale, -1, spec, level, k, grading)]
    for a, b in zip(points[:-1], points[1:]):
        parts.append(finite_rule(a, b, spec, level, grading))
    parts.append(tail_rule(points[-1], scale, 1, spec, level, k, grading))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def halfline_rule(scale, spec, level, k, grading=None):
    """Rule on (0, ∞) for an even integrand folded onto the half line; weights carry the factor 2."""
    x, w = tail_rule(0.0, scale, 1, spec, level, k, grading)
    return x, 2.0 * w


def adaptive(evaluate, spec, label="quadrature"):
    """Run ``evaluate(level) -> (value, nodes)`` at increasing levels until two agree.

    :raises QuadratureException: No agreement by ``spec.max_level`` and ``spec.on_failure == "raise"``.
    :rtype: QuadratureResult
    """
    previous, _ = evaluate(0)
    for level in range(1, spec.max_level + 1):
        value, count = evaluate(level)
        error = abs(value - previous)
        logger.debug("[%s] level %d: %.10g (change %.3g)", label, level, value, error)
        if error <= spec.target * abs(value) or (value == 0.0 and error == 0.0):
            return QuadratureResult(value, error, level, count)
        previous = value
    message = "%s did not reach relative error %.1e by level %d (last change %.3g of %.6g)" % (
        label, spec.target, spec.max_level, error, value)
    if spec.on_failure == "raise":
        raise QuadratureException(message)
    warnings.warn(message, RuntimeWarning)
    logger.warning("[%s] %s", label, message)
    return QuadratureResult(value, error, spec.max_level, count)


def tensor_grid(rules):
    """Tensor product of 1-D ``(nodes, weights)`` pairs: points of shape (N, d) and weights (N,)."""
    meshes = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    weights = functools.reduce(np.multiply.outer, [r[1] for r in rules])
    return np.stack([m.ravel() for m in meshes], axis=-1), np.asarray(weights).ravel()


def clamp_order(order, lo=1, hi=16):
    return int(min(hi, max(lo, math.ceil(order))))
