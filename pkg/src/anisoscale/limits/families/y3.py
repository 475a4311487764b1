from .base import LimitFamily, BOX, PREFACTOR


class Y3(LimitFamily):
    """Region III: linear in x1 and x2, fractional in x3."""
    family_id = "Y3"
    roles = (PREFACTOR, PREFACTOR, BOX)
    fbs_capable = True

    def fbs_hurst(self, q):
        return (1.0, 1.0, self.hurst(q))

    def self_similar_corner(self, q, x, scales):
        l1, l2, l3 = scales
        return (l1 * x[0], l2 * x[1], l3 * x[2]), l1 ** 2 * l2 ** 2 * l3 ** (2 * self.hurst(q))
