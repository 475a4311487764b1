from .base import LimitFamily, BOX, INDICATOR, PREFACTOR


class Y2(LimitFamily):
    """Region II: linear in x1, fractional in x2, white in x3."""
    family_id = "Y2"
    roles = (PREFACTOR, BOX, INDICATOR)
    fbs_capable = True

    def fbs_hurst(self, q):
        return (1.0, self.hurst(q), 0.5)

    def self_similar_corner(self, q, x, scales):
        l1, l2, l3 = scales
        return (l1 * x[0], l2 * x[1], l3 * x[2]), l1 ** 2 * l2 ** (2 * self.hurst(q)) * l3
