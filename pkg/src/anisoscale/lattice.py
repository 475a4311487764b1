"""Deterministic lattice reductions shared by the model and field modules.

Large sums over Z³ boxes are split into slabs along the first axis. Slabs may be
evaluated on worker threads, but their partial results are always combined in
the same pairwise order, so a sum never depends on the thread count.
"""
# stdlib
from concurrent.futures import ThreadPoolExecutor
import contextlib
import logging

# External modules
import numpy as np
import scipy.fft

# Set up logger
logger = logging.getLogger(__name__)

SLAB_POINTS = 1 << 21
"""Target number of lattice points evaluated per slab."""


def tree_sum(values):
    """Pairwise (tree) sum of a sequence of floats in a fixed order.

    :param values: Partial sums in block order.
    :type values: Sequence[float]
    :rtype: float
    """
    values = [float(v) for v in values]
    if not values:
        return 0.0
    while len(values) > 1:
        paired = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            paired.append(values[-1])
        values = paired
    return values[0]


def slab_ranges(lo, hi, points_per_row):
    """Split the inclusive index range [lo, hi] into consecutive slabs.

    :param int lo: First index.
    :param int hi: Last index (inclusive).
    :param int points_per_row: Number of lattice points behind one index of the axis.
    :return: List of ``(start, stop)`` pairs, ``stop`` exclusive.
    """
    rows = max(1, SLAB_POINTS // max(1, points_per_row))
    return [(start, min(start + rows, hi + 1)) for start in range(lo, hi + 1, rows)]


def blockwise_sum(func, blocks, threads=None):
    """Evaluate ``func`` on every block and tree-sum the results.

    ``func`` may return a float or a tuple of floats; tuples are reduced
    component-wise.

    :param func: Callable applied to each block.
    :param blocks: Block descriptors, in reduction order.
    :param threads: Worker count. ``None`` or 1 runs inline.
    :type threads: Optional[int]
    """
    blocks = list(blocks)
    if threads is None or threads <= 1 or len(blocks) == 1:
        partials = [func(block) for block in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(func, blocks))
    if partials and isinstance(partials[0], tuple):
        return tuple(tree_sum(column) for column in zip(*partials))
    return tree_sum(partials)


def extrapolate_tail(full, half, quarter=None, alpha=None):
    """Estimate the part of a convergent sum missed by truncation.

    Uses Aitken's rate estimate from three nested truncations when it is
    usable, otherwise the known power-law rate ``alpha`` for radius halving.

    :param float full: Sum at radius R.
    :param float half: Sum at radius R/2.
    :param quarter: Sum at radius R/4.
    :type quarter: Optional[float]
    :param alpha: Decay exponent of the tail in the radius.
    :type alpha: Optional[float]
    :return: The signed tail estimate, to be added to ``full``.
    :rtype: float
    """
    d_full = full - half
    if d_full == 0.0:
        return 0.0
    if quarter is not None:
        d_half = half - quarter
        if d_half != 0.0:
            ratio = d_full / d_half
            if 0.0 < ratio < 1.0:
                return d_full * ratio / (1.0 - ratio)
    if alpha is None or alpha <= 0:
        # no usable rate: report the last increment
        return d_full
    return d_full / (2.0 ** alpha - 1.0)


def extrapolate_tails(full, half, quarter, alpha):
    """Elementwise :func:`extrapolate_tail` for arrays of nested truncated sums."""
    full, half, quarter = (np.asarray(v, dtype=float) for v in (full, half, quarter))
    d_full = full - half
    d_half = half - quarter
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d_half != 0.0, d_full / d_half, 0.0)
        aitken = d_full * ratio / (1.0 - ratio)
    fallback = d_full / (2.0 ** alpha - 1.0)
    usable = (ratio > 0.0) & (ratio < 1.0)
    return np.where(d_full == 0.0, 0.0, np.where(usable, aitken, fallback))


def substreams(seed, n):
    """Independent generators for ``n`` replicates derived from one seed.

    Replicate ``i`` always receives the ``i``-th child of the seed sequence,
    whatever order the replicates are run in.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(child) for child in children]


@contextlib.contextmanager
def fft_workers(threads=None):
    """Context manager capping the worker count of ``scipy.fft``."""
    if threads is None:
        yield
        return
    with scipy.fft.set_workers(max(1, int(threads))):
        yield
