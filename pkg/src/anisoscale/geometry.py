"""Scaling geometry of the parameter pair (q, γ).

Balance conditions are read in the form γ_i q_i = γ_j q_j: the threshold of the
ratio γ_i/γ_j is γ⁰_ij = q_j/q_i. Regions are decided by the two discriminants

    D1 = 1/(2q1) + 1/q2 + 1/q3,    D2 = 1/(2q1) + 1/(2q2) + 1/q3,

always evaluated in the coordinates ordered by the products γ_i q_i.
"""
# stdlib
from collections import namedtuple
import logging
import math

# Model
from anisoscale.model import ModelParams, EPS_Q

# Exceptions
from anisoscale.errors import InvalidParametersException, BoundaryRejectionException, ExistenceConditionException

FAMILIES = ("Y1", "Y2", "Y3", "Y12", "Y23", "Y0")

BALANCE_CELLS = (
    "000", "011", "110", "10-1", "0-1-1", "-1-10", "-101",
    "111", "11-1", "1-1-1", "-1-1-1", "-1-11", "-111",
)
"""The 13 sign patterns (k21, k31, k32) of the balance partition."""

EPS_BAL = 1e-12

Discriminants = namedtuple("Discriminants", ["D1", "D2", "half_sum", "Q"])
"""The quantities deciding regions and existence conditions.

.. py:attribute:: D1

    1/(2q1) + 1/q2 + 1/q3

.. py:attribute:: D2

    1/(2q1) + 1/(2q2) + 1/q3

.. py:attribute:: half_sum

    Σ 1/(2q_i)

.. py:attribute:: Q

    Σ 1/q_i

"""

Exponents = namedtuple("Exponents", ["calH", "H"])
"""Both exponent lists, as dicts keyed by family name (``"Y1"`` ... ``"Y0"``)."""

BalanceCell = namedtuple("BalanceCell", ["label", "signs"])
"""A cell of the balance partition.

.. py:attribute:: label

    Sign string such as ``"000"`` or ``"-1-10"``.

.. py:attribute:: signs

    The integer triple (k21, k31, k32).

"""


class Scenario(namedtuple("Scenario", ["params", "gamma", "pi", "region", "cell", "family", "H", "calH", "exponents"])):
    """A classified pair (q, γ).

    .. py:attribute:: pi

        Permutation sorting the products γ_i q_i; permuted axis ``k`` is lattice axis ``pi[k]``.

    .. py:attribute:: region

        ``"I"``, ``"II"`` or ``"III"`` in permuted coordinates.

    .. py:attribute:: family

        The limit family name.

    .. py:attribute:: H

        Normalization exponent of the partial sums.

    .. py:attribute:: calH

        The family's self-similarity exponent 𝓗.

    .. py:attribute:: exponents

        :class:`Exponents` in permuted coordinates.

    """
    __slots__ = ()

    def to_dict(self):
        return scenario_to_dict(self)


CONDITIONS = {
    "Y1": "1/(2q1)+1/q2+1/q3 < 1 < 1/q1+1/q2+1/q3",
    "Y2": "1/(2q1)+1/(2q2)+1/q3 < 1 < 1/(2q1)+1/q2+1/q3",
    "Y3": "1/(2q1)+1/(2q2)+1/(2q3) < 1 < 1/(2q1)+1/(2q2)+1/q3",
    "Y12": "1/(2q1)+1/(2q2)+1/q3 < 1 < 1/q1+1/q2+1/q3",
    "Y23": "1/(2q1)+1/(2q2)+1/(2q3) < 1 < 1/(2q1)+1/q2+1/q3",
    "Y0": "1/(2q1)+1/(2q2)+1/(2q3) < 1 < 1/q1+1/q2+1/q3",
}

# Set up logger
logger = logging.getLogger(__name__)


class ScalingVector:
    """The exponents γ of the rectangle sides λ^{γ_i} x_i.

    :param gamma: Triple of positive reals.
    :raises InvalidParametersException: A non-positive entry.
    """
    def __init__(self, gamma):
        gamma = tuple(float(g) for g in gamma)
        if len(gamma) != 3 or not all(math.isfinite(g) and g > 0 for g in gamma):
            raise InvalidParametersException("gamma must be three positive reals, got %r" % (gamma,))
        self.gamma = gamma

    def __iter__(self):
        return iter(self.gamma)

    def __getitem__(self, index):
        return self.gamma[index]

    def __eq__(self, other):
        return isinstance(other, ScalingVector) and self.gamma == other.gamma

    def __hash__(self):
        return hash(self.gamma)

    def __repr__(self):
        return "ScalingVector(%r)" % (self.gamma,)

    def products(self, params):
        """The products γ_i q_i."""
        return tuple(g * q for g, q in zip(self.gamma, params.q))

    def permuted(self, pi):
        return ScalingVector([self.gamma[k] for k in pi])

    def scaled(self, kappa):
        return ScalingVector([kappa * g for g in self.gamma])


def _as_gamma(gamma):
    return gamma if isinstance(gamma, ScalingVector) else ScalingVector(gamma)


def _sign(a, b, eps):
    if abs(a - b) <= eps * max(abs(a), abs(b)):
        return 0
    return 1 if a > b else -1


def balance_cell(params, gamma, eps_bal=EPS_BAL):
    """The cell of the balance partition containing γ.

    k_ij = sign(γ_i q_i - γ_j q_j) for (i, j) = (2, 1), (3, 1), (3, 2), with a
    relative tolerance ``eps_bal`` for equality.

    :rtype: BalanceCell
    """
    p = _as_gamma(gamma).products(params)
    signs = (_sign(p[1], p[0], eps_bal), _sign(p[2], p[0], eps_bal), _sign(p[2], p[1], eps_bal))
    return BalanceCell("".join(str(s) for s in signs), signs)


def discriminants(q):
    """:rtype: Discriminants"""
    q1, q2, q3 = q.q if isinstance(q, ModelParams) else q
    half = 1 / (2 * q1) + 1 / (2 * q2) + 1 / (2 * q3)
    return Discriminants(1 / (2 * q1) + 1 / q2 + 1 / q3, 1 / (2 * q1) + 1 / (2 * q2) + 1 / q3,
                         half, 2 * half)


def _check_margin(value, name, eps):
    if abs(value - 1.0) < eps:
        raise BoundaryRejectionException(
            "%s = %.9g lies on a region boundary; the limit there may need a logarithmic normalization" % (name, value))


def region(params, eps=EPS_Q):
    """Parameter region of q in the given coordinate order.

    :return: ``"I"`` if D1 < 1, ``"II"`` if D2 < 1 < D1, ``"III"`` if D2 > 1.
    :raises BoundaryRejectionException: D1 or D2 within ``eps`` of 1.
    """
    d = discriminants(params)
    _check_margin(d.D1, "D1", eps)
    _check_margin(d.D2, "D2", eps)
    if d.D1 < 1:
        return "I"
    if d.D2 < 1:
        return "II"
    return "III"


def existence_condition(family, q):
    """Whether the limit field ``family`` is well defined for exponents ``q``.

    :return: ``(holds, description)``; the description is the defining inequality.
    """
    d = discriminants(q)
    lower, upper = {
        "Y1": (d.D1, d.Q),
        "Y2": (d.D2, d.D1),
        "Y3": (d.half_sum, d.D2),
        "Y12": (d.D2, d.Q),
        "Y23": (d.half_sum, d.D1),
        "Y0": (d.half_sum, d.Q),
    }[family]
    return lower < 1.0 < upper, CONDITIONS[family]


def require_existence(family, q):
    """:raises ExistenceConditionException: The condition of ``family`` fails for ``q``."""
    holds, description = existence_condition(family, q)
    if not holds:
        raise ExistenceConditionException("%s existence condition %s violated for q = %r" % (family, description, tuple(q)))


def hurst_exponents(q):
    """The six self-similarity exponents 𝓗, keyed by family name."""
    q1, q2, q3 = q
    return {
        "Y1": 1.5 - q1 * (1 - 1 / q2 - 1 / q3),
        "Y2": 1.5 - q2 * (1 - 1 / (2 * q1) - 1 / q3),
        "Y3": 1.5 - q3 * (1 - 1 / (2 * q1) - 1 / (2 * q2)),
        "Y12": 3 / (2 * q1) + 3 / (2 * q2) + 1 / q3 - 1,
        "Y23": 1 / (2 * q1) + 3 / (2 * q2) + 3 / (2 * q3) - 1,
        "Y0": 3 / (2 * q1) + 3 / (2 * q2) + 3 / (2 * q3) - 1,
    }


def exponents(params, gamma):
    """Self-similarity exponents 𝓗 and normalization exponents H of all six families.

    :rtype: Exponents
    """
    q1, q2, q3 = params.q
    g1, g2, g3 = _as_gamma(gamma)
    calH = hurst_exponents(params.q)
    H = {
        "Y1": g1 * calH["Y1"] + (g2 + g3) / 2,
        "Y2": g1 + g2 * calH["Y2"] + g3 / 2,
        "Y3": g1 + g2 + g3 * calH["Y3"],
        "Y12": g1 * q1 * calH["Y12"] + g3 / 2,
        "Y23": g1 + g2 * q2 * calH["Y23"],
        "Y0": g1 * q1 * calH["Y0"],
    }
    return Exponents(calH, H)


def sorting_permutation(params, gamma):
    """Stable ascending order of the products γ_i q_i."""
    p = _as_gamma(gamma).products(params)
    return tuple(sorted(range(3), key=lambda k: p[k]))


def _family(cell, d):
    k21, k31, k32 = cell.signs
    if k21 == 0 and k32 == 0:
        return "Y0"
    if k21 == 0:
        return "Y12" if d.D2 < 1 else "Y3"
    if k32 == 0:
        return "Y1" if d.D1 < 1 else "Y23"
    if d.D1 < 1:
        return "Y1"
    if d.D2 < 1:
        return "Y2"
    return "Y3"


def classify_scenario(params, gamma, eps_bal=EPS_BAL):
    """Classify (q, γ): permutation, region, balance cell, limit family and H.

    :param params: Model parameters.
    :type params: ModelParams
    :param gamma: Scaling exponents.
    :type gamma: Union[ScalingVector, Sequence[float]]
    :raises BoundaryRejectionException: The permuted exponents sit on a region boundary.
    :raises ExistenceConditionException: The selected family is not defined (cannot happen off boundaries).
    :rtype: Scenario
    """
    gamma = _as_gamma(gamma)
    pi = sorting_permutation(params, gamma)
    permuted_params = params.permuted(pi)
    permuted_gamma = gamma.permuted(pi)
    reg = region(permuted_params, params.eps_q)
    cell = balance_cell(permuted_params, permuted_gamma, eps_bal)
    family = _family(cell, discriminants(permuted_params))
    require_existence(family, permuted_params.q)
    exps = exponents(permuted_params, permuted_gamma)
    logger.info("[%s] q=%s gamma=%s -> pi=%s region %s cell %s", family, params.q, gamma.gamma, pi, reg,
                balance_cell(params, gamma, eps_bal).label)
    return Scenario(params, gamma, pi, reg, balance_cell(params, gamma, eps_bal), family,
                    exps.H[family], exps.calH[family], exps)


def scenario_to_dict(scenario):
    """Key-value form of a :class:`Scenario` for documents."""
    return {
        "model": scenario.params.to_dict(),
        "gamma": list(scenario.gamma.gamma),
        "pi": [k + 1 for k in scenario.pi],
        "region": scenario.region,
        "cell": scenario.cell.label,
        "family": scenario.family,
        "H": scenario.H,
        "calH": scenario.calH,
        "exponents": {"calH": scenario.exponents.calH, "H": scenario.exponents.H},
    }


def isotropic_table(q, eps=EPS_Q):
    """Limit families for q1 = q2 = q3 = q by ordering of γ.

    :return: ``(region, {ordering: family}, calH)`` where ``calH`` holds the closed
        forms 7/2 - q, 3 - q and 5/2 - q.
    :raises InvalidParametersException: q outside (3/2, 3).
    """
    if not 1.5 < q < 3.0:
        raise InvalidParametersException("isotropic q must lie in (3/2, 3), got %r" % q)
    reg = region((q, q, q), eps)
    table = {
        "I": {"g1<g2<=g3": "Y1", "g1=g2<g3": "Y12", "g1=g2=g3": "Y0"},
        "II": {"g1<g2<g3": "Y2", "g1=g2<g3": "Y12", "g1<g2=g3": "Y23", "g1=g2=g3": "Y0"},
        "III": {"g1<=g2<g3": "Y3", "g1<g2=g3": "Y23", "g1=g2=g3": "Y0"},
    }[reg]
    return reg, table, {"Y1": 3.5 - q, "Y2": 3.0 - q, "Y3": 2.5 - q}


INCREMENTS = {
    "Y1": {"independent": (1, 2), "invariant": ()},
    "Y2": {"independent": (2,), "invariant": (0,)},
    "Y3": {"independent": (), "invariant": (0, 1)},
    "Y12": {"independent": (2,), "invariant": ()},
    "Y23": {"independent": (), "invariant": (0,)},
    "Y0": {"independent": (), "invariant": ()},
}


def increment_properties(family):
    """Axes (0-based, permuted coordinates) along which ``family`` has independent or invariant increments."""
    return INCREMENTS[family]
