from anisoscale.geometry import existence_condition, exponents, hurst_exponents
from anisoscale.model import ModelParams

BOX = "box"
INDICATOR = "indicator"
PREFACTOR = "prefactor"


class LimitFamily:
    """Base class describing one limit field.

    All family descriptors derive from this class. Axes are given in the
    coordinates where the products γ_i q_i increase.
    """
    family_id = None
    """The family name, ``"Y1"`` ... ``"Y0"``."""

    roles = (None, None, None)
    """How each axis enters the kernel.

    ``box`` axes integrate t over (0, x_j) against |t_j - u_j|, ``indicator`` axes
    restrict u_j to (0, x_j) and integrate t_j over R against |t_j|, and
    ``prefactor`` axes contribute the factor x_j and the term |u_j|."""

    fbs_capable = False
    """Whether the field is a multiple of a fractional Brownian sheet.

    If this is false, :meth:`fbs_hurst` may not necessarily exist."""

    scale_count = 3
    """Number of free scales in the self-similarity of :meth:`self_similar_corner`."""

    def existence(self, q):
        """``(holds, description)`` of the condition under which the field is defined."""
        return existence_condition(self.family_id, q)

    def hurst(self, q):
        """The self-similarity exponent 𝓗."""
        return hurst_exponents(q)[self.family_id]

    def scaling_exponent(self, q, gamma):
        """The normalization exponent H(γ, q) of the partial sums."""
        return exponents(ModelParams(q), gamma).H[self.family_id]

    def fbs_hurst(self, q):
        """Hurst triple of the matching fractional Brownian sheet."""
        raise NotImplementedError("%s is not a fractional Brownian sheet." % self.family_id)

    def self_similar_corner(self, q, x, scales): # pragma: no cover
        """The scaled corner and the factor Var Y(scaled) / Var Y(x)."""
        raise NotImplementedError("Expand this method with the family's self-similarity.")

    def axes(self, role):
        return tuple(j for j, r in enumerate(self.roles) if r == role)
