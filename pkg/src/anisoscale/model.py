# stdlib
from collections import namedtuple
import functools
import logging
import math

# External modules
import numpy as np

# Lattice helpers
from anisoscale.lattice import blockwise_sum, extrapolate_tail, slab_ranges

# Exceptions
from anisoscale.errors import InvalidParametersException, BoundaryRejectionException, TruncationException

EPS_Q = 1e-6
"""Exclusion margin around the endpoints Q = 1 and Q = 2."""

G_MODES = ("constant-one", "user")

Admissibility = namedtuple("Admissibility", ["Q", "valid"])
"""Result of :func:`admissibility`.

.. py:attribute:: Q

    The sum of the reciprocal tail exponents.

.. py:attribute:: valid

    True iff ``1 + eps < Q < 2 - eps``.

"""

CovarianceEstimate = namedtuple("CovarianceEstimate", ["value", "error", "extrapolated", "radius"])
"""A truncated lattice sum with its tail estimate.

.. py:attribute:: value

    The sum over the truncation box.

.. py:attribute:: error

    Absolute estimate of the part of the sum outside the box.

.. py:attribute:: extrapolated

    ``value`` plus the signed tail estimate.

.. py:attribute:: radius

    The :class:`TruncationBox` used.

"""

# Set up logger
logger = logging.getLogger(__name__)


def _positive_triple(values, name):
    try:
        triple = tuple(float(v) for v in values)
    except TypeError:
        raise InvalidParametersException("%s must be a triple of numbers" % name)
    if len(triple) != 3:
        raise InvalidParametersException("%s must have exactly three entries" % name)
    if not all(math.isfinite(v) and v > 0 for v in triple):
        raise InvalidParametersException("%s must be positive, got %r" % (name, triple))
    return triple


def admissibility(params, eps=EPS_Q):
    """Compute Q = Σ 1/q_i and check 1 < Q < 2.

    :param params: Model parameters or a triple of tail exponents.
    :type params: Union[ModelParams, Sequence[float]]
    :param eps: Exclusion margin around the endpoints.
    :type eps: float
    :raises InvalidParametersException: An exponent is not positive.
    :raises BoundaryRejectionException: Q is within ``eps`` of 1 or 2.
    :rtype: Admissibility
    """
    q = params.q if isinstance(params, ModelParams) else _positive_triple(params, "q")
    Q = sum(1.0 / qi for qi in q)
    if abs(Q - 1.0) < eps or abs(Q - 2.0) < eps:
        raise BoundaryRejectionException("Q = %.9g lies on the boundary of 1 < Q < 2" % Q)
    return Admissibility(Q, 1.0 + eps < Q < 2.0 - eps)


class ModelParams:
    """The law of the linear field X(t) = Σ a(t - s) ε(s).

    :param q: Tail exponents (q1, q2, q3).
    :type q: Sequence[float]
    :param c: Axis weights (c1, c2, c3).
    :type c: Sequence[float]
    :param nu: Shape exponent of the coefficient denominator.
    :type nu: float
    :param g: Optional bounded factor ``g(t1, t2, t3)`` acting on integer arrays, with limit 1 at infinity.
    :type g: Optional[function]
    :param g_bound: Declared bound of ``|g|``. Required with ``g``.
    :type g_bound: Optional[float]
    :param eps_q: Exclusion margin for Q.
    :type eps_q: float
    :raises InvalidParametersException: Non-positive values or Q outside (1, 2).
    :raises BoundaryRejectionException: Q within ``eps_q`` of 1 or 2.
    """
    def __init__(self, q, c=(1.0, 1.0, 1.0), nu=1.0, g=None, g_bound=None, eps_q=EPS_Q):
        self.q = _positive_triple(q, "q")
        self.c = _positive_triple(c, "c")
        self.nu = float(nu)
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise InvalidParametersException("nu must be positive, got %r" % nu)
        self.eps_q = eps_q
        result = admissibility(self.q, eps_q)
        if not result.valid:
            raise InvalidParametersException("Q = %.6g is outside 1 < Q < 2" % result.Q)
        self.Q = result.Q
        self.g = g
        if g is None:
            self.g_mode = "constant-one"
            self.g_bound = 1.0
        else:
            if g_bound is None:
                raise InvalidParametersException("a user supplied g must declare g_bound")
            self.g_mode = "user"
            self.g_bound = float(g_bound)
            self._sample_g()

    @property
    def p(self):
        """The per-axis powers q_j / ν used inside the denominator."""
        return tuple(qj / self.nu for qj in self.q)

    def _sample_g(self):
        """Sample g for the declared bound and the unit limit. Nothing is proven."""
        near = np.arange(-3.0, 4.0)
        t1, t2, t3 = np.meshgrid(near, near, near, indexing="ij")
        values = np.asarray(self.g(t1, t2, t3), dtype=float)
        if np.any(np.abs(values) > self.g_bound):
            logger.warning("[g] sampled values exceed the declared bound %s", self.g_bound)
        far = 1e6 * np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1], [1, -1, 1]], dtype=float)
        limits = np.asarray(self.g(far[:, 0], far[:, 1], far[:, 2]), dtype=float)
        if np.any(np.abs(limits - 1.0) > 1e-3):
            logger.warning("[g] sampled far values %s do not approach 1", limits)

    def permuted(self, pi):
        """Parameters with axes reordered so that new axis k is old axis ``pi[k]``."""
        pi = tuple(pi)
        g = None
        if self.g is not None:
            inverse = [pi.index(axis) for axis in range(3)]
            original = self.g

            def g(*t):
                return original(*(t[inverse[axis]] for axis in range(3)))
        return ModelParams([self.q[k] for k in pi], [self.c[k] for k in pi], self.nu,
                           g=g, g_bound=self.g_bound if g is not None else None, eps_q=self.eps_q)

    def to_dict(self):
        """Key-value form with the fields q1, q2, q3, c1, c2, c3, nu, g_mode."""
        return {
            "q1": self.q[0], "q2": self.q[1], "q3": self.q[2],
            "c1": self.c[0], "c2": self.c[1], "c3": self.c[2],
            "nu": self.nu, "g_mode": self.g_mode,
        }

    @classmethod
    def from_dict(cls, data, g=None, g_bound=None):
        """Build parameters from the key-value form of :meth:`to_dict`.

        :raises InvalidParametersException: Missing keys, unknown ``g_mode``, or a
            ``user`` mode document without a callable.
        """
        try:
            q = (data["q1"], data["q2"], data["q3"])
        except (KeyError, TypeError):
            raise InvalidParametersException("model needs the keys q1, q2, q3")
        c = (data.get("c1", 1.0), data.get("c2", 1.0), data.get("c3", 1.0))
        mode = data.get("g_mode", "constant-one")
        if mode not in G_MODES:
            raise InvalidParametersException("unknown g_mode %r" % mode)
        if mode == "user" and g is None:
            raise InvalidParametersException("g_mode 'user' needs a g callable")
        return cls(q, c, data.get("nu", 1.0), g=g if mode == "user" else None, g_bound=g_bound)

    @classmethod
    def white_noise(cls, q=(2.0, 2.0, 2.0), c=(1.0, 1.0, 1.0), nu=1.0):
        """Degenerate parameters whose coefficients vanish off the origin, with a(0) = 1.

        Only meant as a test hook: the partial sums are i.i.d. sums.
        """
        origin = sum(c) ** nu

        def g(t1, t2, t3):
            return np.where((np.asarray(t1) == 0) & (np.asarray(t2) == 0) & (np.asarray(t3) == 0), origin, 0.0)
        return cls(q, c, nu, g=g, g_bound=origin)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (self.q, self.c, self.nu, self.g_mode, self.g) == (other.q, other.c, other.nu, other.g_mode, other.g)

    def __hash__(self):
        return hash((self.q, self.c, self.nu, self.g_mode))

    def __repr__(self):
        return "ModelParams(q=%r, c=%r, nu=%r, g_mode=%r)" % (self.q, self.c, self.nu, self.g_mode)


class TruncationBox(namedtuple("TruncationBox", ["r1", "r2", "r3"])):
    """Per-axis truncation radii: the box ∏ [-r_i, r_i]."""
    __slots__ = ()

    @classmethod
    def of(cls, radius):
        """Coerce an int (isotropic box), a triple or a box.

        :raises InvalidParametersException: A radius below 1.
        """
        if isinstance(radius, TruncationBox):
            return radius
        if np.ndim(radius) == 0:
            radius = (radius,) * 3
        radii = tuple(int(r) for r in radius)
        if len(radii) != 3 or min(radii) < 1:
            raise InvalidParametersException("truncation radii must be three integers >= 1, got %r" % (radius,))
        return cls(*radii)

    @classmethod
    def from_level(cls, params, level):
        """The box whose faces all sit at ρ-level ``level``: r_i = ⌈level^{1/q_i}⌉."""
        return cls(*(max(1, int(math.ceil(level ** (1.0 / qi)))) for qi in params.q))

    def halved(self):
        return TruncationBox(*(max(1, r // 2) for r in self))

    @property
    def points(self):
        return int(np.prod([2 * r + 1 for r in self]))


def coefficient_on_ranges(params, t1, t2, t3):
    """Coefficients a on the outer product of three 1-D coordinate arrays."""
    t1 = np.asarray(t1, dtype=float)[:, None, None]
    t2 = np.asarray(t2, dtype=float)[None, :, None]
    t3 = np.asarray(t3, dtype=float)[None, None, :]
    return coefficient_axes(params, t1, t2, t3)


def coefficient_axes(params, t1, t2, t3):
    """Coefficients a(t) for broadcastable coordinate arrays."""
    total = 0.0
    for weight, power, t in zip(params.c, params.p, (t1, t2, t3)):
        total = total + weight * np.maximum(np.abs(t), 1.0) ** power
    a = total ** (-params.nu)
    if params.g is not None:
        a = np.asarray(params.g(t1, t2, t3), dtype=float) * a
    return a


def coefficient(params, t):
    """The moving-average coefficient a(t) = g(t) / (Σ_j c_j |t_j|₊^{q_j/ν})^ν.

    :param params: Model parameters.
    :type params: ModelParams
    :param t: A lattice point, or an array of points along the last axis.
    :return: A float for a single point, an array otherwise.
    """
    t = np.asarray(t, dtype=float)
    value = coefficient_axes(params, t[..., 0], t[..., 1], t[..., 2])
    return float(value) if np.ndim(value) == 0 else value


def coefficient_grid(params, radius):
    """Dense array of a(s) for s in the truncation box, centre at index ``radius``."""
    box = TruncationBox.of(radius)
    return coefficient_on_ranges(params, *(np.arange(-r, r + 1) for r in box))


def rho(params, t):
    """The shape function ρ(t) = Σ_j |t_j|^{q_j}.

    :param params: Model parameters or a triple of tail exponents.
    :param t: A point (or points along the last axis) of R³.
    """
    q = params.q if isinstance(params, ModelParams) else tuple(params)
    t = np.asarray(t, dtype=float)
    value = sum(np.abs(t[..., j]) ** q[j] for j in range(3))
    return float(value) if np.ndim(value) == 0 else value


def envelope_constants(params):
    """Constants with C1/ρ(t) <= a(t) <= C2/ρ(t) for every nonzero lattice point.

    For a user supplied g the lower constant is 0 and the upper one carries the
    declared bound.

    :rtype: Tuple[float, float]
    """
    upper = 3.0 * min(params.c) ** (-params.nu)
    if params.g is not None:
        return 0.0, upper * params.g_bound
    return (3.0 * max(params.c)) ** (-params.nu), upper


def tail_exponent(params):
    """Decay exponent min_i q_i (2 - Q) of truncated sums in the radius."""
    return min(params.q) * (2.0 - params.Q)


def _covariance_slab(params, t, box, inner_boxes, bounds):
    start, stop = bounds
    s1 = np.arange(start, stop)
    s2 = np.arange(-box.r2, box.r2 + 1)
    s3 = np.arange(-box.r3, box.r3 + 1)
    product = coefficient_on_ranges(params, s1, s2, s3) * coefficient_on_ranges(params, t[0] - s1, t[1] - s2, t[2] - s3)
    sums = [float(product.sum())]
    for inner in inner_boxes:
        rows = np.abs(s1) <= inner.r1
        if not rows.any():
            sums.append(0.0)
            continue
        block = product[rows][:, box.r2 - inner.r2:box.r2 + inner.r2 + 1, box.r3 - inner.r3:box.r3 + inner.r3 + 1]
        sums.append(float(block.sum()))
    return tuple(sums)


def covariance_exact(params, t, radius, tolerance=None, threads=None):
    """The covariance r(t) = Σ_s a(t - s) a(s), truncated to ``|s_i| <= radius``.

    The tail beyond the box is estimated from the sums over the half and quarter
    boxes, falling back on the envelope rate min_i q_i (2 - Q).

    :param params: Model parameters.
    :type params: ModelParams
    :param t: The lag.
    :param radius: Truncation radius, an int, a triple or a :class:`TruncationBox`.
    :param tolerance: Maximal relative tail estimate accepted.
    :type tolerance: Optional[float]
    :param threads: Worker count for the slab summation.
    :type threads: Optional[int]
    :raises TruncationException: The tail estimate exceeds ``tolerance``.
    :rtype: CovarianceEstimate
    """
    box = TruncationBox.of(radius)
    t = tuple(int(v) for v in t)
    half = box.halved()
    quarter = half.halved()
    blocks = slab_ranges(-box.r1, box.r1, (2 * box.r2 + 1) * (2 * box.r3 + 1))
    full, half_sum, quarter_sum = blockwise_sum(
        functools.partial(_covariance_slab, params, t, box, (half, quarter)), blocks, threads)
    if half == box:
        tail = 0.0
    else:
        tail = extrapolate_tail(full, half_sum, quarter_sum if quarter != half else None, tail_exponent(params))
    error = abs(tail)
    logger.debug("[r%s] radius %s: value %.6g, tail %.3g", t, tuple(box), full, tail)
    if tolerance is not None and error > tolerance * abs(full):
        raise TruncationException("radius %s leaves a relative tail of %.3g > %.3g at lag %s"
                                  % (tuple(box), error / abs(full), tolerance, t))
    return CovarianceEstimate(full, error, full + tail, box)


def envelope_ratio(params, t, radius, tolerance=None, threads=None):
    """The ratio r(t) ρ(t)^{2 - Q}, bounded away from 0 and infinity as |t| grows.

    :raises InvalidParametersException: ``t`` is the origin.
    :raises TruncationException: Propagated from :func:`covariance_exact`.
    """
    if not any(t):
        raise InvalidParametersException("the envelope ratio is defined for t != 0")
    estimate = covariance_exact(params, t, radius, tolerance, threads)
    return estimate.value * rho(params, t) ** (2.0 - params.Q)


def tail_fraction(params, radius, threads=None):
    """Estimated share of Σ a(s)² lying outside the truncation box."""
    estimate = covariance_exact(params, (0, 0, 0), radius, threads=threads)
    return estimate.error / estimate.extrapolated


def choose_radius(params, target=1e-3, max_radius=4096, pilot=8, threads=None):
    """Smallest isotropic radius whose Σ a² tail is below ``target`` of the total.

    A pilot sum fixes the constant of the power-law tail C·R^{-α}.

    :raises TruncationException: The radius needed exceeds ``max_radius``.
    :rtype: int
    """
    estimate = covariance_exact(params, (0, 0, 0), pilot, threads=threads)
    if estimate.error <= target * estimate.extrapolated:
        return pilot
    alpha = tail_exponent(params)
    radius = pilot * (estimate.error / (target * estimate.extrapolated)) ** (1.0 / alpha)
    radius = int(math.ceil(radius))
    if radius > max_radius:
        raise TruncationException("a tail target of %.3g needs radius %d > %d" % (target, radius, max_radius))
    logger.info("[radius] target %.3g -> radius %d", target, radius)
    return radius
