"""Pointwise evaluation and L² quadrature of the limit kernels.

Every limit field is Y(x) = ∫ f_x(u) W(du) with

    f_x(u) = Π_ind 1(lo_j < u_j < hi_j) · Π_pref (hi_j - lo_j)
             · ∫_{R^ind} ∫_{box} (Σ_pref c|u|^p + Σ_box c|t - u|^p + Σ_ind c|t|^p)^(-ν) dt,

p_j = q_j/ν, written in the coordinates where the products γ_i q_i increase.
Indicator axes integrate out in closed form, which lowers the exponent to
μ = ν - Σ_ind 1/p_j. The last box axis is integrated with the incomplete Beta
function and the remaining box axes with graded Gauss–Legendre rules split at
t = u.
"""
# stdlib
from collections import namedtuple
import itertools
import logging
import math
import warnings

# External modules
import numpy as np
from scipy import special

# Limits
from anisoscale.limits.families import FAMILIES, LimitFamily, BOX, INDICATOR, PREFACTOR
from anisoscale.limits.quadrature import (QuadratureSpec, QuadratureResult, adaptive, clamp_order, graded_unit,
                                          halfline_rule, line_rule, tail_power, tail_rule, tensor_grid)
from anisoscale.lattice import blockwise_sum

# Exceptions
from anisoscale.errors import (ExistenceConditionException, InvalidParametersException, NotAvailableForFamilyException,
                               QuadratureException)

Rectangle = namedtuple("Rectangle", ["lower", "upper"])
"""The box ∏ (lower_i, upper_i] in lattice coordinates."""

CHUNK = 1 << 20
"""Largest number of inner integrand evaluations held in memory at once."""

# Set up logger
logger = logging.getLogger(__name__)


def resolve_family(family):
    """Return the :class:`LimitFamily` descriptor for a name or descriptor.

    :raises InvalidParametersException: Unknown family name.
    """
    if isinstance(family, LimitFamily):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise InvalidParametersException("unknown limit family %r, expected one of %s" % (family, tuple(FAMILIES)))


class LimitKernel:
    """The kernel f_x of one limit field at a corner (or over a rectangle).

    :param family: Family name or descriptor.
    :param params: Model parameters in lattice coordinates.
    :type params: ModelParams
    :param corner: Upper corner x in lattice coordinates.
    :param pi: Permutation ordering the products γ_i q_i (canonical axis ``k`` is lattice axis ``pi[k]``).
    :param lower: Lower corner of a rectangle; the origin by default.
    :param inner: Settings of the inner t-quadrature.
    :type inner: Optional[QuadratureSpec]
    :raises ExistenceConditionException: The family is not defined for the permuted exponents.
    """
    def __init__(self, family, params, corner, pi=(0, 1, 2), lower=None, inner=None):
        self.family = resolve_family(family)
        self.params = params
        self.pi = tuple(int(k) for k in pi)
        if sorted(self.pi) != [0, 1, 2]:
            raise InvalidParametersException("pi must be a permutation of (0, 1, 2), got %r" % (pi,))
        self.corner = tuple(float(v) for v in corner)
        self.lower = tuple(float(v) for v in lower) if lower is not None else (0.0, 0.0, 0.0)
        if any(l > x for l, x in zip(self.lower, self.corner)):
            raise InvalidParametersException("rectangle lower corner %r exceeds upper corner %r" % (self.lower, self.corner))
        self.inner = inner or QuadratureSpec()

        canonical = params.permuted(self.pi)
        self.q = canonical.q
        self.c = canonical.c
        self.nu = canonical.nu
        self.p = canonical.p
        self.hi = tuple(self.corner[k] for k in self.pi)
        self.lo = tuple(self.lower[k] for k in self.pi)

        holds, description = self.family.existence(self.q)
        if not holds:
            raise ExistenceConditionException("%s existence condition %s violated for q = %r"
                                              % (self.family.family_id, description, self.q))
        self.indicator = self.family.axes(INDICATOR)
        self.prefactor_axes = self.family.axes(PREFACTOR)
        self.box = self.family.axes(BOX)
        self.outer = tuple(j for j in range(3) if j not in self.indicator)
        self.mu = self.nu - sum(1.0 / self.p[j] for j in self.indicator)
        if self.mu <= 0:
            raise ExistenceConditionException("%s kernel exponent ν - Σ ν/q_j = %.6g is not positive"
                                              % (self.family.family_id, self.mu))
        log_marginal = special.gammaln(self.mu) - special.gammaln(self.nu)
        for j in self.indicator:
            log_marginal += math.log(2.0 / self.p[j]) + special.gammaln(1.0 / self.p[j]) - math.log(self.c[j]) / self.p[j]
        self.marginal = math.exp(log_marginal)
        self.prefactor = float(np.prod([self.hi[j] - self.lo[j] for j in self.prefactor_axes]))
        self.degenerate = any(h == l for h, l in zip(self.hi, self.lo))
        self._inner_level = None

    @property
    def family_id(self):
        return self.family.family_id

    @property
    def spans(self):
        """Side lengths hi - lo in canonical coordinates."""
        return tuple(h - l for h, l in zip(self.hi, self.lo))

    def with_rectangle(self, rectangle):
        """A kernel of the same field over another rectangle (lattice coordinates)."""
        return LimitKernel(self.family, self.params, rectangle.upper, self.pi, rectangle.lower, self.inner)

    def decay(self, j):
        """Exponent of the power decay of f² along canonical axis ``j`` after integrating the other outer axes."""
        remaining = 1.0 - sum(1.0 / self.q[i] for i in self.indicator)
        others = sum(1.0 / self.q[i] for i in self.outer if i != j)
        return self.q[j] * (2.0 * remaining - others)

    def inner_grading(self, position):
        """Grading order for the ``position``-th numerically integrated box axis."""
        j = self.box[position]
        after = sum(1.0 / self.p[b] for b in self.box[position + 1:])
        s = self.p[j] * (after - self.mu)
        if s >= 0:
            return self.inner.grading
        return max(self.inner.grading, clamp_order(3.0 / (s + 1.0)))

    def outer_grading(self, j):
        """Grading order for canonical outer axis ``j`` at its breakpoints."""
        if j in self.box:
            return None
        after = sum(1.0 / self.p[b] for b in self.box)
        others = sum(1.0 / self.p[k] for k in self.prefactor_axes if k != j)
        # exponent of the marginal of f² at u_j = 0
        s = self.p[j] * (2.0 * (after - self.mu) + others)
        if s >= 0:
            return None
        if s <= -0.9:
            return 16
        return clamp_order(3.0 / (s + 1.0))

    # Last box axis, closed form

    def _primitive(self, B, L):
        """∫_0^L (B + c s^p)^(-μ) ds on the last box axis, elementwise."""
        j = self.box[-1]
        mu, p, c = self.mu, self.p[j], self.c[j]
        a = 1.0 / p
        positive = B > 0
        Bs = np.where(positive, B, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            V = L * (c / Bs) ** a
            scale = Bs ** (a - mu) * c ** (-a)
            if mu * p > 1.0:
                x = 1.0 / (1.0 + V ** (-p))
                psi = a * special.beta(a, mu - a) * special.betainc(a, mu - a, x)
                at_zero = np.where(L > 0, np.inf, 0.0)
            else:
                psi = V * special.hyp2f1(mu, a, 1.0 + a, -V ** p)
                at_zero = c ** (-mu) * L ** (1.0 - mu * p) / (1.0 - mu * p)
            return np.where(positive, scale * psi, at_zero)

    def _upper_tail(self, B, L):
        """∫_L^∞ (B + c s^p)^(-μ) ds, finite when μp > 1."""
        j = self.box[-1]
        mu, p, c = self.mu, self.p[j], self.c[j]
        a = 1.0 / p
        positive = B > 0
        Bs = np.where(positive, B, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            V = L * (c / Bs) ** a
            x = 1.0 / (1.0 + V ** p)
            value = Bs ** (a - mu) * c ** (-a) * a * special.beta(a, mu - a) * special.betainc(mu - a, a, x)
            at_zero = c ** (-mu) * L ** (1.0 - mu * p) / (mu * p - 1.0)
            return np.where(positive, value, at_zero)

    def _last_axis(self, B, u):
        """∫_lo^hi (B + c|t - u|^p)^(-μ) dt on the last box axis, elementwise."""
        j = self.box[-1]
        u = np.broadcast_to(u, np.shape(B))
        left = self.lo[j] - u
        right = self.hi[j] - u
        straddle = (left < 0) & (right > 0)
        near = np.where(left >= 0, left, -right)
        far = np.where(left >= 0, right, -left)
        near = np.where(straddle, 0.0, np.maximum(near, 0.0))
        if self.mu * self.p[j] > 1.0:
            one_sided = self._upper_tail(B, near) - self._upper_tail(B, far)
        else:
            one_sided = self._primitive(B, far) - self._primitive(B, near)
        both = self._primitive(B, np.maximum(right, 0.0)) + self._primitive(B, np.maximum(-left, 0.0))
        return np.where(straddle, both, one_sided)

    # Inner box axes, graded Gauss–Legendre split at t = u

    def _inner_nodes(self, position, u, level):
        """Offsets t - u and weights of the split rule on one numeric box axis."""
        j = self.box[position]
        phi, rest, weight = graded_unit(self.inner.nodes, level, self.inner_grading(position))
        lo, hi = self.lo[j], self.hi[j]
        u = u[:, None]
        m = np.clip(u, lo, hi)
        # offsets stay nonzero where a node lands next to u
        offsets = np.concatenate([(m - u) - (m - lo) * rest, (m - u) + (hi - m) * phi], axis=1)
        weights = np.concatenate([(m - lo) * weight, (hi - m) * weight], axis=1)
        return offsets, weights

    def _evaluate(self, U, level):
        """Kernel values at canonical points ``U`` of shape (N, 3) with inner level ``level``."""
        U = np.asarray(U, dtype=float)
        if self.degenerate:
            return np.zeros(len(U))
        A = np.zeros(len(U))
        for j in self.prefactor_axes:
            A = A + self.c[j] * np.abs(U[:, j]) ** self.p[j]
        mask = np.ones(len(U), dtype=bool)
        for j in self.indicator:
            mask &= (U[:, j] > self.lo[j]) & (U[:, j] < self.hi[j])
        last = U[:, self.box[-1]]
        numeric = len(self.box) - 1
        if numeric == 0:
            G = self._last_axis(A, last)
        elif numeric == 1:
            j = self.box[0]
            D, W = self._inner_nodes(0, U[:, j], level)
            B = A[:, None] + self.c[j] * np.abs(D) ** self.p[j]
            G = np.sum(np.where(W > 0, W * self._last_axis(B, last[:, None]), 0.0), axis=1)
        else:
            j, k = self.box[0], self.box[1]
            D1, W1 = self._inner_nodes(0, U[:, j], level)
            D2, W2 = self._inner_nodes(1, U[:, k], level)
            B = (A[:, None, None] + self.c[j] * np.abs(D1)[:, :, None] ** self.p[j]
                 + self.c[k] * np.abs(D2)[:, None, :] ** self.p[k])
            W = W1[:, :, None] * W2[:, None, :]
            G = np.sum(np.where(W > 0, W * self._last_axis(B, last[:, None, None]), 0.0), axis=(1, 2))
        return np.where(mask, self.prefactor * self.marginal * G, 0.0)

    def _inner_points(self, level):
        per_axis = 2 * self.inner.nodes * 2 ** level
        return per_axis ** (len(self.box) - 1)

    def evaluate_chunked(self, U, level=None):
        """Kernel values at canonical points, in memory-bounded chunks."""
        level = self.inner_level() if level is None else level
        size = max(1, CHUNK // self._inner_points(level))
        if len(U) <= size:
            return self._evaluate(U, level)
        return np.concatenate([self._evaluate(U[i:i + size], level) for i in range(0, len(U), size)])

    def _converge(self, U, spec):
        previous = self.evaluate_chunked(U, 0)
        change = 0.0
        for level in range(1, spec.max_level + 1):
            current = self.evaluate_chunked(U, level)
            scale = float(np.max(np.abs(current))) if len(current) else 0.0
            change = float(np.max(np.abs(current - previous))) if len(current) else 0.0
            if change <= spec.target * scale:
                return current, level
            previous = current
        message = "%s inner quadrature did not converge to %.1e (relative change %.3g)" % (
            self.family_id, spec.target, change / scale if scale else change)
        if spec.on_failure == "raise":
            raise QuadratureException(message)
        warnings.warn(message, RuntimeWarning)
        logger.warning("[%s] %s", self.family_id, message)
        return current, spec.max_level

    def _pilot_points(self):
        scale = self.length_scales(self)
        choices = []
        for j in range(3):
            lo, hi = self.lo[j], self.hi[j]
            span = hi - lo
            if j in self.indicator:
                choices.append([lo + 0.5 * span])
            elif j in self.prefactor_axes:
                choices.append([0.01 * scale[j], scale[j], 5.0 * scale[j]])
            else:
                choices.append([lo + 0.01 * span, lo + 0.5 * span, hi + 0.5 * span, lo - 2.0 * span])
        return np.array(list(itertools.product(*choices)), dtype=float)

    def inner_level(self):
        """Inner refinement level, fixed once on a set of pilot points."""
        if self._inner_level is None:
            if len(self.box) == 1 or self.degenerate:
                self._inner_level = 0
            else:
                _, self._inner_level = self._converge(self._pilot_points(), self.inner)
                logger.debug("[%s] inner level %d", self.family_id, self._inner_level)
        return self._inner_level

    def length_scales(self, other):
        """Per canonical axis, the distance at which f² starts its power decay."""
        rho = sum(self.c[b] * max(self.spans[b], other.spans[b]) ** self.p[b] for b in self.box)
        return tuple((rho / self.c[j]) ** (1.0 / self.p[j]) for j in range(3))

    def values(self, u):
        """Kernel values at lattice points ``u`` (shape (..., 3)) at the pilot inner level."""
        u = np.asarray(u, dtype=float)
        flat = u[..., list(self.pi)].reshape(-1, 3)
        return self.evaluate_chunked(flat).reshape(u.shape[:-1])


def kernel_eval(k, u, inner_quad=None):
    """Evaluate the limit kernel f at lattice points ``u``.

    The inner t-quadrature is refined by doubling until two levels agree.

    :param k: The kernel.
    :type k: LimitKernel
    :param u: A point or array of points (last axis of length 3).
    :param inner_quad: Inner settings; the kernel's own by default.
    :raises QuadratureException: The inner quadrature did not converge.
    """
    u = np.asarray(u, dtype=float)
    flat = u[..., list(k.pi)].reshape(-1, 3)
    if len(k.box) == 1 or k.degenerate:
        values = k._evaluate(flat, 0)
    else:
        values, _ = k._converge(flat, inner_quad or k.inner)
    values = values.reshape(u.shape[:-1])
    return float(values) if values.ndim == 0 else values


def _compatible(k, k2):
    if k.family_id != k2.family_id or k.pi != k2.pi or (k.q, k.c, k.nu) != (k2.q, k2.c, k2.nu):
        raise InvalidParametersException("covariances need kernels of one field (same family, parameters and pi)")


def _outer_rule(k, k2, j, spec, level, scales):
    kpow = tail_power(spec, k.decay(j))
    grading = k.outer_grading(j)
    if grading is not None:
        grading = max(spec.grading, grading)
    if j in k.prefactor_axes:
        return halfline_rule(scales[j], spec, level, kpow, grading)
    points = (k.lo[j], k.hi[j], k2.lo[j], k2.hi[j])
    return line_rule(points, scales[j], spec, level, kpow, grading)


def _product_integral(k, k2, spec, threads, label):
    _compatible(k, k2)
    if k.degenerate or k2.degenerate:
        return QuadratureResult(0.0, 0.0, 0, 0)
    overlap = 1.0
    middle = {}
    for j in k.indicator:
        a, b = max(k.lo[j], k2.lo[j]), min(k.hi[j], k2.hi[j])
        overlap *= max(0.0, b - a)
        middle[j] = 0.5 * (a + b)
    if overlap == 0.0:
        return QuadratureResult(0.0, 0.0, 0, 0)
    spec = spec or QuadratureSpec()
    level_inner = max(k.inner_level(), k2.inner_level())
    scales = k.length_scales(k2)

    def evaluate(level):
        pts, weights = tensor_grid([_outer_rule(k, k2, j, spec, level, scales) for j in k.outer])
        U = np.empty((len(weights), 3))
        U[:, list(k.outer)] = pts
        for j, value in middle.items():
            U[:, j] = value
        size = max(1, CHUNK // k._inner_points(level_inner))
        blocks = [slice(i, i + size) for i in range(0, len(weights), size)]

        def block(sl):
            f1 = k._evaluate(U[sl], level_inner)
            f2 = f1 if k2 is k else k2._evaluate(U[sl], level_inner)
            return float(np.sum(weights[sl] * f1 * f2))
        return overlap * blockwise_sum(block, blocks, threads), len(weights)
    result = adaptive(evaluate, spec, label)
    logger.info("[%s] %s = %.8g ± %.2g (level %d, %d nodes)", k.family_id, label, result.value, result.error,
                result.level, result.nodes)
    return result


def limit_variance(k, outer_quad=None, threads=None):
    """Var Y(x) = ∫ f_x(u)² du.

    :rtype: QuadratureResult
    """
    return _product_integral(k, k, outer_quad, threads, "variance")


def limit_covariance(k, k2, outer_quad=None, threads=None):
    """Cov(Y(x), Y(y)) = ∫ f_x f_y du for two kernels of the same field.

    :rtype: QuadratureResult
    """
    return _product_integral(k, k2, outer_quad, threads, "covariance")


def increment_covariance(k, K, K2, outer_quad=None, threads=None):
    """Covariance of the rectangular increments of Y over ``K`` and ``K2``.

    Kernels are linear in the rectangle, so this equals the alternating sum over
    the 8 × 8 corner covariances. A degenerate rectangle gives 0.

    :param k: Any kernel of the field.
    :param K: :class:`Rectangle` in lattice coordinates.
    :param K2: :class:`Rectangle` in lattice coordinates.
    :rtype: QuadratureResult
    """
    return limit_covariance(k.with_rectangle(K), k.with_rectangle(K2), outer_quad, threads)


def _corners(rect):
    for choice in itertools.product((0, 1), repeat=3):
        corner = tuple(rect.upper[i] if e else rect.lower[i] for i, e in enumerate(choice))
        yield corner, (-1) ** (3 - sum(choice))


def corner_covariance_sum(k, K, K2, outer_quad=None, threads=None):
    """The literal alternating sum of corner covariances for rectangles in the positive octant."""
    kernels = {}

    def kernel(corner):
        if corner not in kernels:
            kernels[corner] = LimitKernel(k.family, k.params, corner, k.pi, inner=k.inner)
        return kernels[corner]
    value, error, level, nodes = 0.0, 0.0, 0, 0
    for x, sign_x in _corners(K):
        for y, sign_y in _corners(K2):
            result = limit_covariance(kernel(x), kernel(y), outer_quad, threads)
            value += sign_x * sign_y * result.value
            error += result.error
            level = max(level, result.level)
            nodes += result.nodes
    return QuadratureResult(value, error, level, nodes)


def fbs_covariance(H, x, y):
    """Covariance (1/8) Π (x_i^{2H_i} + y_i^{2H_i} - |x_i - y_i|^{2H_i}) of a fractional Brownian sheet."""
    H = (H,) * 3 if np.ndim(H) == 0 else tuple(H)
    value = 0.125
    for h, xi, yi in zip(H, x, y):
        value *= abs(xi) ** (2 * h) + abs(yi) ** (2 * h) - abs(xi - yi) ** (2 * h)
    return value


def theta_density(k, t, quad=None):
    """The inner covariance density θ(t) = ∫ G(u) G(t - u) du of Y1, G(u) = K|u|^β.

    :raises NotAvailableForFamilyException: ``k`` is not a Y1 kernel.
    :rtype: QuadratureResult
    """
    if k.family_id != "Y1":
        raise NotAvailableForFamilyException("theta density only exists for Y1, not %s" % k.family_id)
    if t == 0:
        raise InvalidParametersException("theta density is infinite at t = 0")
    spec = quad or QuadratureSpec()
    beta = k.family.beta(k.q)
    constant = k.marginal * k.c[0] ** (-k.mu)
    grading = max(spec.grading, clamp_order(3.0 / (beta + 1.0)))
    kpow = tail_power(spec, -2.0 * beta)
    span = abs(t)

    def evaluate(level):
        # θ is even, so integrate over the singular points 0 and |t| by distances to both
        phi, rest, weight = graded_unit(spec.nodes, level, grading)
        off, jac = tail_rule(0.0, span, 1, spec, level, kpow, grading)
        near = np.concatenate([span * phi, span + off, off])
        far = np.concatenate([span * rest, off, span + off])
        w = np.concatenate([span * weight, jac, jac])
        integrand = near ** beta * far ** beta
        return constant ** 2 * float(np.sum(w * integrand)), len(w)
    return adaptive(evaluate, spec, "theta(%g)" % t)


def self_similar_corner(family, q, x, scales):
    """The corner reached by the family's self-similarity and the variance factor.

    :param q: Exponents in the family's coordinates.
    :param scales: One scale per free direction (3 for Y1, Y2, Y3; 2 for Y12, Y23; 1 for Y0).
    :return: ``(corner, factor)`` with Var Y(corner) = factor · Var Y(x).
    """
    family = resolve_family(family)
    if len(scales) != family.scale_count:
        raise InvalidParametersException("%s self-similarity takes %d scales" % (family.family_id, family.scale_count))
    return family.self_similar_corner(q, x, scales)


def stationary_increment_gap(k, K, shift, quad=None, threads=None):
    """Var of the increment over ``K`` minus Var over ``K`` shifted by ``shift``.

    :rtype: QuadratureResult
    """
    moved = Rectangle(tuple(a + s for a, s in zip(K.lower, shift)), tuple(b + s for b, s in zip(K.upper, shift)))
    first = limit_variance(k.with_rectangle(K), quad, threads)
    second = limit_variance(k.with_rectangle(moved), quad, threads)
    return QuadratureResult(first.value - second.value, first.error + second.error,
                            max(first.level, second.level), first.nodes + second.nodes)


def truncation_extent(k, budget=0.01, cap=None):
    """The u-box outside which the power tails of f² hold less than ``budget`` of ∫ f².

    Each outer axis extends ``T_j = ℓ_j · budget^(-1/(decay_j - 1))`` beyond the
    kernel's own breakpoints; indicator axes stay on their support.

    :param cap: Largest T_j as a multiple of the axis span.
    :raises InvalidParametersException: ``budget`` outside (0, 1).
    :return: :class:`Rectangle` in lattice coordinates.
    """
    if not 0 < budget < 1:
        raise InvalidParametersException("tail budget must lie in (0, 1)")
    scales = k.length_scales(k)
    lower, upper = [0.0] * 3, [0.0] * 3
    for j in range(3):
        lo, hi = k.lo[j], k.hi[j]
        if j in k.indicator:
            a, b = lo, hi
        else:
            rate = k.decay(j) - 1.0
            extent = scales[j] * budget ** (-1.0 / rate) if rate > 0 else math.inf
            if cap is not None and extent > cap * max(hi - lo, scales[j]):
                extent = cap * max(hi - lo, scales[j])
                logger.warning("[%s] axis %d: the cap of %g spans leaves more than the tail budget %g outside the u-box",
                               k.family_id, k.pi[j], cap, budget)
            if not math.isfinite(extent):
                raise InvalidParametersException("%s kernel has no finite truncation along axis %d" % (k.family_id, j))
            if j in k.prefactor_axes:
                a, b = -extent, extent
            else:
                a, b = lo - extent, hi + extent
        axis = k.pi[j]
        lower[axis], upper[axis] = a, b
    return Rectangle(tuple(lower), tuple(upper))


def truncated_tail(k, rectangle):
    """The largest share of ∫ f² left outside ``rectangle`` along one outer axis.

    Inverts the tail law of :func:`truncation_extent`: an axis reaching ``T_j``
    beyond the breakpoints leaves ``(T_j / ℓ_j)^-(decay_j - 1)``. Without a cap
    this returns the budget the rectangle was built for.
    """
    scales = k.length_scales(k)
    tail = 0.0
    for j in k.outer:
        axis = k.pi[j]
        reach = rectangle.upper[axis] if j in k.prefactor_axes else rectangle.upper[axis] - k.hi[j]
        rate = k.decay(j) - 1.0
        if rate <= 0 or reach <= 0:
            return 1.0
        tail = max(tail, (reach / scales[j]) ** (-rate))
    return min(tail, 1.0)
