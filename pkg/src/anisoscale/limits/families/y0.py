from .base import LimitFamily, BOX


class Y0(LimitFamily):
    """Full balance γ1 q1 = γ2 q2 = γ3 q3, defined in all three regions."""
    family_id = "Y0"
    roles = (BOX, BOX, BOX)
    scale_count = 1

    def self_similar_corner(self, q, x, scales):
        lam, = scales
        corner = tuple(lam ** (1 / qi) * xi for qi, xi in zip(q, x))
        return corner, lam ** (2 * self.hurst(q))
