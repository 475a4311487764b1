# stdlib
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
import itertools
import json
import logging
import math

# External modules
import numpy as np
from scipy import signal, stats

# Model
from anisoscale.model import TruncationBox, coefficient_grid, coefficient_on_ranges, tail_exponent
from anisoscale.model import tail_fraction as model_tail_fraction
from anisoscale.lattice import extrapolate_tail, fft_workers, substreams, tree_sum

# Exceptions
from anisoscale.errors import InvalidParametersException, TruncationException, WindowTooSmallException

LAWS = ("normal", "rademacher", "zero")

VarianceEstimate = namedtuple("VarianceEstimate", ["value", "error", "extrapolated"])
"""Σ h(s)² over the kernel box with its tail estimate.

.. py:attribute:: value

    The sum over the box.

.. py:attribute:: error

    Absolute tail estimate.

.. py:attribute:: extrapolated

    ``value`` plus the signed tail estimate.

"""

ProjectedVariance = namedtuple("ProjectedVariance", ["variance", "rectangle_sum", "cells", "value"])
"""Variance of S left after projecting out the innovation sum over K.

Var(S - β E_K) with E_K = Σ_{s in K} ε(s) and the optimal β, so
``value = variance - rectangle_sum² / cells``. A constant added to the kernel on K
cancels exactly.

.. py:attribute:: variance

    The extrapolated Σ h(s)².

.. py:attribute:: rectangle_sum

    Σ_{s in K} h(s).

.. py:attribute:: cells

    |K|.

.. py:attribute:: value

    The projected variance, never negative.

"""

ReplicateStats = namedtuple("ReplicateStats", ["lam", "values", "seeds", "mean", "variance", "stderr", "skewness", "kurtosis"])
"""Monte Carlo replicates of the normalized partial sum.

.. py:attribute:: values

    One value per replicate, in replicate order.

.. py:attribute:: seeds

    Substream labels ``"<seed>:<i>"``, one per replicate.

.. py:attribute:: stderr

    Standard error of ``variance`` from the sample fourth moment.

.. py:attribute:: kurtosis

    Excess kurtosis.

"""

# Set up logger
logger = logging.getLogger(__name__)


def rectangle_extents(gamma, lam, x):
    """Side lengths ⌊λ^{γ_i} x_i⌋ of the summation rectangle."""
    # 1e-9 absorbs rounding in λ^γ for exact powers
    return tuple(max(0, int(math.floor(lam ** g * xi + 1e-9))) for g, xi in zip(gamma, x))


def auto_radius(extents, factor=1.0, minimum=4):
    """Box margins proportional to the rectangle: r_i = max(minimum, ⌈factor·n_i⌉)."""
    return TruncationBox(*(max(minimum, int(math.ceil(factor * n))) for n in extents))


class FieldWindow:
    """Field values X(t) on ∏ [1, n_i] with their provenance.

    :ivar extents: The window sizes (n1, n2, n3).
    :ivar values: ``numpy`` array of shape ``extents``; ``values[i, j, k]`` is X(i+1, j+1, k+1).
    :ivar provenance: ``dict`` with ``seed``, ``radius``, ``law`` and ``params``.
    """
    def __init__(self, extents, values, provenance):
        self.extents = tuple(int(n) for n in extents)
        self.values = values
        self.provenance = provenance

    def export(self, path):
        """Write ``<path>.bin`` (little-endian float64, C order) and a ``<path>.json`` header."""
        np.ascontiguousarray(self.values, dtype="<f8").tofile(path + ".bin")
        with open(path + ".json", "w") as handle:
            json.dump({"extents": list(self.extents), "dtype": "<f8", "order": "C",
                       "provenance": self.provenance}, handle, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path + ".json") as handle:
            header = json.load(handle)
        values = np.fromfile(path + ".bin", dtype=header["dtype"]).reshape(header["extents"])
        return cls(header["extents"], values, header["provenance"])


def _innovations(rng, shape, law):
    if law == "normal":
        return rng.standard_normal(shape)
    if law == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if law == "zero":
        return np.zeros(shape)
    raise InvalidParametersException("unknown innovation law %r, expected one of %s" % (law, LAWS))


def simulate_window(params, extents, seed, R, law="normal", tail_fraction=1e-4, check_tail=True, threads=None,
                    innovations=None):
    """Simulate X(t) = Σ_{|s_i| <= R} a(s) ε(t - s) on the window ∏ [1, n_i].

    Innovations are drawn on the window enlarged by R on every side, so no value
    is truncated one-sidedly.

    :param params: Model parameters.
    :type params: ModelParams
    :param extents: Window sizes (n1, n2, n3).
    :param seed: Seed (int or ``numpy.random.SeedSequence``).
    :param R: Truncation radius (int, triple or :class:`TruncationBox`).
    :param law: ``"normal"``, ``"rademacher"`` or ``"zero"``.
    :param tail_fraction: Largest accepted share of Σ a(s)² outside the box.
    :param check_tail: Skip the tail estimate when False.
    :param innovations: Pre-drawn innovations of shape (n_i + 2 r_i); ``seed`` and ``law`` are then ignored.
    :raises TruncationException: The neglected share exceeds ``tail_fraction``.
    :rtype: FieldWindow
    """
    box = TruncationBox.of(R)
    extents = tuple(int(n) for n in extents)
    if min(extents) < 1:
        raise InvalidParametersException("window extents must be positive, got %r" % (extents,))
    if check_tail:
        share = model_tail_fraction(params, box, threads)
        if share > tail_fraction:
            raise TruncationException("radius %s neglects %.3g of Σa², more than %.3g" % (tuple(box), share, tail_fraction))
    shape = tuple(n + 2 * r for n, r in zip(extents, box))
    if innovations is None:
        eps = _innovations(np.random.default_rng(seed), shape, law)
    else:
        eps = np.asarray(innovations, dtype=float)
        if eps.shape != shape:
            raise InvalidParametersException("innovations must have shape %s, got %s" % (shape, eps.shape))
    a = coefficient_grid(params, box)
    with fft_workers(threads):
        values = signal.fftconvolve(eps, a, mode="valid")
    provenance = {
        "seed": seed if isinstance(seed, int) else str(seed),
        "radius": list(box),
        "law": law,
        "params": params.to_dict(),
    }
    return FieldWindow(extents, values, provenance)


def partial_sum(window, gamma, lam, x):
    """Sum of X over the rectangle ∏ [1, ⌊λ^{γ_i} x_i⌋].

    :raises WindowTooSmallException: The rectangle is larger than the window.
    :return: 0 for an empty rectangle.
    """
    n = rectangle_extents(gamma, lam, x)
    if min(n) < 1:
        return 0.0
    if any(ni > wi for ni, wi in zip(n, window.extents)):
        raise WindowTooSmallException("rectangle %s does not fit the window %s" % (n, window.extents))
    return float(window.values[:n[0], :n[1], :n[2]].sum())


def empirical_covariance(window, lag):
    """Average of X(t) X(t + lag) over the window, for a lag with nonnegative entries."""
    lag = tuple(int(v) for v in lag)
    if any(v < 0 for v in lag):
        raise InvalidParametersException("lag entries must be nonnegative")
    n = window.extents
    head = window.values[:n[0] - lag[0], :n[1] - lag[1], :n[2] - lag[2]]
    tail = window.values[lag[0]:, lag[1]:, lag[2]:]
    return float(np.mean(head * tail))


class DiscreteKernel:
    """The lattice kernel h(s) = λ^{-H} Σ_{t in K} a(t - s) on a box around K.

    ``values[i, j, k]`` is h at ``origin + (i, j, k)``.

    :ivar origin: Lattice point of index (0, 0, 0), equal to (1 - r_i).
    :ivar values: Kernel values on the box.
    :ivar normalization: The factor λ^{-H} applied.
    :ivar extents: Box sizes N; the box is ∏ [1 - r_i, N_i + r_i].
    :ivar rectangle: Lattice rectangle K as ``(lower, upper)`` inclusive corners.
    :ivar radius: The :class:`TruncationBox` of margins around the box extents.
    """
    def __init__(self, origin, values, normalization, lam, gamma, x, H, extents, rectangle, radius):
        self.origin = tuple(origin)
        self.values = values
        self.normalization = normalization
        self.lam = lam
        self.gamma = tuple(gamma)
        self.x = tuple(x)
        self.H = H
        self.extents = tuple(extents)
        self.rectangle = rectangle
        self.radius = radius

    def norm2(self):
        """Σ h(s)² over the box."""
        return tree_sum(np.sum(self.values ** 2, axis=(1, 2)))

    def inner(self, other):
        """Σ h(s) h'(s) for a kernel on the same box."""
        if self.origin != other.origin or self.values.shape != other.values.shape:
            raise InvalidParametersException("kernels live on different boxes")
        return tree_sum(np.sum(self.values * other.values, axis=(1, 2)))

    def rectangle_sum(self):
        """Σ h(s) over the rectangle K."""
        lo, hi = self.rectangle
        if any(h < l for l, h in zip(lo, hi)):
            return 0.0
        start = [l - o for l, o in zip(lo, self.origin)]
        stop = [h - o + 1 for h, o in zip(hi, self.origin)]
        block = self.values[start[0]:stop[0], start[1]:stop[1], start[2]:stop[2]]
        return tree_sum(np.sum(block, axis=(1, 2)))

    def cells(self):
        """|K|."""
        lo, hi = self.rectangle
        return int(np.prod([max(0, h - l + 1) for l, h in zip(lo, hi)]))

    def value_at(self, s):
        """h at lattice points ``s`` (last axis of length 3); zero outside the box."""
        s = np.asarray(s)
        index = s - np.asarray(self.origin)
        shape = np.asarray(self.values.shape)
        inside = np.all((index >= 0) & (index < shape), axis=-1)
        safe = np.where(inside[..., None], index, 0)
        return np.where(inside, self.values[safe[..., 0], safe[..., 1], safe[..., 2]], 0.0)


def _kernel_layout(gamma, lam, x, R, box_extents, lower):
    upper = rectangle_extents(gamma, lam, x)
    low = rectangle_extents(gamma, lam, lower) if lower is not None else (0, 0, 0)
    box = TruncationBox.of(R)
    extents = tuple(box_extents) if box_extents is not None else upper
    if any(e < u for e, u in zip(extents, upper)):
        raise InvalidParametersException("box extents %s do not contain the rectangle %s" % (extents, upper))
    # K = ∏ [low_i + 1, upper_i]
    return tuple(l + 1 for l in low), upper, box, extents


def _difference_grid(params, lo, hi, box, extents):
    """a(k) on k_i in [lo_i - N_i - r_i, hi_i - 1 + r_i], reversed on every axis."""
    ranges = [np.arange(l - n - r, h - 1 + r + 1) for l, h, n, r in zip(lo, hi, extents, box)]
    return coefficient_on_ranges(params, *ranges)[::-1, ::-1, ::-1]


def discrete_kernel(params, gamma, lam, x, H, R, method="fft", box_extents=None, lower=None, threads=None):
    """The normalized discrete kernel h of the partial sum over K_{λ,γ}(x).

    h(s) = λ^{-H} Σ_{t in K} a(t - s) for s in ∏ [1 - r_i, N_i + r_i], where N are the
    rectangle sides (or ``box_extents``). Values on the box are exact; only points
    outside it are dropped.

    :param params: Model parameters.
    :param gamma: Scaling exponents.
    :param lam: Scale λ.
    :param x: Upper corner.
    :param H: Normalization exponent.
    :param R: Box margins (int, triple or :class:`TruncationBox`).
    :param method: ``"fft"`` (fast convolution) or ``"direct"`` (reference summation).
    :param box_extents: Box sizes N when several kernels must share one box.
    :param lower: Lower corner for the kernel of a rectangular increment.
    :rtype: DiscreteKernel
    """
    lo, hi, box, extents = _kernel_layout(gamma, lam, x, R, box_extents, lower)
    shape = tuple(n + 2 * r for n, r in zip(extents, box))
    sides = tuple(h - l + 1 for l, h in zip(lo, hi))
    normalization = lam ** (-H)
    if min(sides) < 1:
        values = np.zeros(shape)
    else:
        reversed_a = _difference_grid(params, lo, hi, box, extents)
        if method == "fft":
            with fft_workers(threads):
                values = signal.fftconvolve(np.ones(sides), reversed_a, mode="valid")
        elif method == "direct":
            values = np.zeros(shape)
            for t in itertools.product(*(range(l, h + 1) for l, h in zip(lo, hi))):
                o = [h - ti for h, ti in zip(hi, t)]
                values += reversed_a[o[0]:o[0] + shape[0], o[1]:o[1] + shape[1], o[2]:o[2] + shape[2]]
        else:
            raise InvalidParametersException("unknown kernel method %r" % method)
        values = normalization * values
    origin = tuple(1 - r for r in box)
    return DiscreteKernel(origin, values, normalization, lam, gamma, x, H, extents, (lo, hi), box)


def discrete_kernel_direct(params, gamma, lam, x, H, R, box_extents=None, lower=None):
    """Direct-summation reference for :func:`discrete_kernel`."""
    return discrete_kernel(params, gamma, lam, x, H, R, method="direct", box_extents=box_extents, lower=lower)


def variance_exact(params, gamma, lam, x, H, R, tolerance=None, lower=None, threads=None):
    """Var(λ^{-H} S_λ(x)) = Σ_s h(s)², with a tail estimate.

    The tail outside the box is extrapolated from the kernels with halved and
    quartered margins.

    :raises TruncationException: The relative tail exceeds ``tolerance``.
    :rtype: VarianceEstimate
    """
    return _variance_with_kernel(params, gamma, lam, x, H, R, tolerance, lower, threads)[0]


def _variance_with_kernel(params, gamma, lam, x, H, R, tolerance, lower, threads):
    box = TruncationBox.of(R)
    boxes = [box, box.halved(), box.halved().halved()]
    sums = []
    kernel = None
    for current in boxes:
        if sums and current == boxes[len(sums) - 1]:
            sums.append(sums[-1])
            continue
        step = discrete_kernel(params, gamma, lam, x, H, current, lower=lower, threads=threads)
        if kernel is None:
            kernel = step
        sums.append(step.norm2())
    full, half, quarter = sums
    tail = extrapolate_tail(full, half, quarter, tail_exponent(params))
    error = abs(tail)
    logger.info("[lambda=%s] Σh² = %.6g, tail %.3g (radius %s)", lam, full, tail, tuple(box))
    if tolerance is not None and full > 0 and error > tolerance * full:
        raise TruncationException("radius %s leaves a relative variance tail of %.3g > %.3g"
                                  % (tuple(box), error / full, tolerance))
    return VarianceEstimate(full, error, full + tail), kernel


def projected_variance(params, gamma, lam, x, H, R, tolerance=None, lower=None, threads=None):
    """Var(S) minus the part explained by the innovation sum over K.

    The discrete kernel differs from its continuum limit by a lattice constant on K.
    That constant lives entirely in the E_K direction, so the projected variance
    grows like λ^{2H} with smaller boundary corrections.

    :raises TruncationException: Propagated from :func:`variance_exact`.
    :rtype: ProjectedVariance
    """
    estimate, kernel = _variance_with_kernel(params, gamma, lam, x, H, R, tolerance, lower, threads)
    cells = kernel.cells()
    total = kernel.rectangle_sum()
    value = estimate.extrapolated - (total ** 2 / cells if cells else 0.0)
    return ProjectedVariance(estimate.extrapolated, total, cells, max(value, 0.0))


def discretization_scales(scenario, lam):
    """Grid scales m of the rescaled kernel for the scenario's case, in lattice order."""
    q = [scenario.params.q[k] for k in scenario.pi]
    g = [scenario.gamma[k] for k in scenario.pi]

    def up(v):
        return max(1, int(math.ceil(v - 1e-9)))

    family = scenario.family
    if family in ("Y1", "Y0"):
        permuted = [up(lam ** gi) for gi in g]
    elif family in ("Y2", "Y12"):
        permuted = [max(1, int(math.floor(lam ** (g[1] * q[1] / q[0]) + 1e-9))), up(lam ** g[1]), up(lam ** g[2])]
    else:
        permuted = [up(lam ** (g[2] * q[2] / qi)) for qi in q]
    m = [0, 0, 0]
    for k, axis in enumerate(scenario.pi):
        m[axis] = permuted[k]
    return tuple(m)


def rescaled_kernel(scenario, lam, x, u, R, kernel=None):
    """The rescaled kernel (m1 m2 m3)^{1/2} h(⌈m1 u1⌉, ⌈m2 u2⌉, ⌈m3 u3⌉).

    :param u: Points of R³ along the last axis.
    :param kernel: A precomputed :class:`DiscreteKernel` for (λ, x).
    """
    m = np.asarray(discretization_scales(scenario, lam), dtype=float)
    if kernel is None:
        kernel = discrete_kernel(scenario.params, scenario.gamma, lam, x, scenario.H, R)
    u = np.asarray(u, dtype=float)
    s = np.ceil(m * u).astype(np.int64)
    value = math.sqrt(float(np.prod(m))) * kernel.value_at(s)
    return float(value) if np.ndim(value) == 0 else value


def rescaled_norm(scenario, kernel):
    """∫ h̃(u)² du over the kernel box, on the grid of the scenario's scales m.

    h̃ is evaluated once per cell ∏ ((s_i - 1)/m_i, s_i/m_i] through
    :func:`rescaled_kernel`; each cell carries volume 1/(m1 m2 m3). The result
    equals Σ h(s)² when the cell map u -> ⌈m u⌉ is consistent.
    """
    m = np.asarray(discretization_scales(scenario, kernel.lam), dtype=float)
    index = np.stack(np.meshgrid(*(np.arange(n) for n in kernel.values.shape), indexing="ij"), axis=-1)
    midpoints = (index + np.asarray(kernel.origin) - 0.5) / m
    values = rescaled_kernel(scenario, kernel.lam, kernel.x, midpoints, kernel.radius, kernel=kernel)
    return tree_sum(np.sum(values ** 2, axis=(1, 2))) / float(np.prod(m))


def _replicate_by_kernel(kernel, law, rng):
    eps = _innovations(rng, kernel.values.shape, law)
    return float(np.dot(kernel.values.ravel(), eps.ravel()))


def replicate_partial_sums(params, gamma, lam, x, H, R, n_rep, seed, law="normal", method="kernel", threads=None):
    """Monte Carlo replicates of λ^{-H} S_λ(x).

    ``method="kernel"`` draws S = Σ h(s) ε(s) from the discrete kernel; ``"window"``
    simulates a field window and sums it. Replicate ``i`` always consumes
    substream ``i`` of ``seed``.

    :rtype: ReplicateStats
    """
    if n_rep < 2:
        raise InvalidParametersException("need at least two replicates")
    rngs = substreams(seed, n_rep)
    if method == "kernel":
        kernel = discrete_kernel(params, gamma, lam, x, H, R)

        def one(i):
            return _replicate_by_kernel(kernel, law, rngs[i])
    elif method == "window":
        extents = tuple(max(1, n) for n in rectangle_extents(gamma, lam, x))
        children = np.random.SeedSequence(seed).spawn(n_rep)

        def one(i):
            window = simulate_window(params, extents, children[i], R, law, check_tail=False)
            return lam ** (-H) * partial_sum(window, gamma, lam, x)
    else:
        raise InvalidParametersException("unknown replicate method %r" % method)
    if threads is None or threads <= 1:
        values = [one(i) for i in range(n_rep)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(n_rep)))
    values = np.asarray(values)
    variance = float(np.var(values, ddof=1))
    centred = values - values.mean()
    m4 = float(np.mean(centred ** 4))
    stderr = math.sqrt(max(m4 - variance ** 2, 0.0) / n_rep)
    logger.info("[lambda=%s] %d replicates (%s, %s): variance %.6g ± %.3g", lam, n_rep, law, method, variance, stderr)
    seeds = ["%s:%d" % (seed, i) for i in range(n_rep)]
    return ReplicateStats(lam, values, seeds, float(values.mean()), variance, stderr,
                          float(stats.skew(values)), float(stats.kurtosis(values)))


def gaussian_moment_bands(n, width=3.0):
    """Half-widths of ``width``-standard-error bands for sample skewness and excess kurtosis of n Gaussian draws."""
    skew_se = math.sqrt(6.0 * (n - 2) / ((n + 1) * (n + 3)))
    kurt_se = math.sqrt(24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5)))
    return width * skew_se, width * kurt_se
