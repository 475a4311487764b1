# stdlib
import hashlib
import json

# Model
from anisoscale.model import ModelParams, TruncationBox
from anisoscale.geometry import ScalingVector
from anisoscale.limits import QuadratureSpec

# Exceptions
from anisoscale.errors import InvalidParametersException

DEFAULT_THRESHOLDS = {
    "slope": 0.05,
    "covariance": 0.1,
    "covariance_abs": 0.02,
    "l2": 0.1,
    "cauchy": 1e-3,
    "growth": 0.1,
}
"""Verdict thresholds used when a configuration leaves them out."""

KNOWN_KEYS = ("model", "gamma", "corners", "pairs", "lambda_grid", "radius", "tail_target", "quadrature",
              "inner_quadrature", "seed", "threads", "out", "thresholds", "replicates", "law", "summability_max")


class RunConfig:
    """
    Configuration object for :class:`Verifier` and the command line.

    Every key is optional at construction; :meth:`validate` checks the ones present.
    Check the relevant check class for the keys it needs.

    :param model: Model parameters with the keys q1, q2, q3, c1, c2, c3, nu, g_mode.
    :type model: dict
    :param gamma: The scaling exponents (γ1, γ2, γ3).
    :type gamma: list
    :param corners: Rectangle corners x; the first one is used by :class:`SlopeCheck` and :class:`L2ConvergenceCheck`.
    :type corners: list
    :param pairs: ``[x, y]`` pairs for :class:`CovarianceMatchCheck`; entries are corners or ``{"lower", "upper"}`` dicts.
    :type pairs: list
    :param lambda_grid: Scales λ (required for the slope, L² and covariance checks).
    :type lambda_grid: list
    :param radius: Kernel margins: an int, a triple or ``"auto"``.
    :type radius: Union[int, list, str]
    :param tail_target: Largest accepted share of Σ a² outside a simulation radius.
    :type tail_target: float
    :param quadrature: Keyword arguments of the outer :class:`QuadratureSpec`.
    :type quadrature: dict
    :param inner_quadrature: Keyword arguments of the inner :class:`QuadratureSpec`.
    :type inner_quadrature: dict
    :param seed: Master seed of every random draw.
    :type seed: int
    :param threads: Worker threads for lattice sums and FFTs.
    :type threads: int
    :param out: Output directory.
    :type out: str
    :param thresholds: Overrides of :data:`DEFAULT_THRESHOLDS`.
    :type thresholds: dict
    :param replicates: Monte Carlo replicate count.
    :type replicates: int
    :param law: Innovation law, ``"normal"`` or ``"rademacher"``.
    :type law: str
    :param summability_max: N_max of :class:`SummabilityCheck`.
    :type summability_max: int
    """
    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)

    @classmethod
    def from_dict(cls, data):
        """Build a configuration from a decoded JSON document.

        :raises InvalidParametersException: The document is not an object or holds unknown keys.
        """
        if not isinstance(data, dict):
            raise InvalidParametersException("a configuration document must be an object")
        unknown = sorted(set(data) - set(KNOWN_KEYS))
        if unknown:
            raise InvalidParametersException("unknown configuration keys: %s" % ", ".join(unknown))
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        """Read a JSON configuration document.

        :raises InvalidParametersException: The file is not valid JSON.
        """
        with open(path) as handle:
            try:
                data = json.load(handle)
            except ValueError as e:
                raise InvalidParametersException("%s is not a valid configuration document: %s" % (path, e))
        return cls.from_dict(data)

    def to_dict(self):
        return {key: value for key, value in self.__dict__.items() if not key.startswith("_")}

    def config_hash(self):
        """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def effective_thresholds(self):
        return dict(DEFAULT_THRESHOLDS, **(getattr(self, "thresholds", None) or {}))

    def params(self):
        """The :class:`ModelParams` of the ``model`` key."""
        if not hasattr(self, "model"):
            raise InvalidParametersException("the configuration has no model")
        return ModelParams.from_dict(self.model)

    def scaling(self):
        """The :class:`ScalingVector` of the ``gamma`` key."""
        if not hasattr(self, "gamma"):
            raise InvalidParametersException("the configuration has no gamma")
        return ScalingVector(self.gamma)

    def validate(self):
        """Validate every value present before anything is computed.

        :raises InvalidParametersException: A malformed or out of range value.
        :raises BoundaryRejectionException: Q on the boundary of (1, 2).
        :return: ``self``
        """
        if hasattr(self, "model"):
            self.params()
        if hasattr(self, "gamma"):
            self.scaling()
        for key in ("quadrature", "inner_quadrature"):
            if getattr(self, key, None) is not None:
                try:
                    QuadratureSpec.from_dict(getattr(self, key))
                except TypeError as e:
                    raise InvalidParametersException("%s: %s" % (key, e))
        if getattr(self, "radius", "auto") != "auto":
            TruncationBox.of(self.radius)
        if hasattr(self, "lambda_grid"):
            if not self.lambda_grid or any(float(v) < 1.0 for v in self.lambda_grid):
                raise InvalidParametersException("lambda_grid needs scales of at least 1, got %r" % (self.lambda_grid,))
        for corner in getattr(self, "corners", []):
            if len(corner) != 3 or any(float(v) < 0 for v in corner):
                raise InvalidParametersException("corner %r must be three non-negative numbers" % (corner,))
        for pair in getattr(self, "pairs", []):
            if len(pair) != 2:
                raise InvalidParametersException("pair %r must hold two corners or rectangles" % (pair,))
        for key in ("replicates", "threads", "summability_max"):
            value = getattr(self, key, None)
            if value is not None and (not isinstance(value, int) or value < 1):
                raise InvalidParametersException("%s must be a positive integer, got %r" % (key, value))
        unknown = set(getattr(self, "thresholds", None) or {}) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise InvalidParametersException("unknown thresholds: %s" % ", ".join(sorted(unknown)))
        return self
