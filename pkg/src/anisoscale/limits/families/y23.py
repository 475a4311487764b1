from .base import LimitFamily, BOX, PREFACTOR


class Y23(LimitFamily):
    """Balance γ2 q2 = γ3 q3 above γ1 q1 in Regions II and III.

    Self-similar under (λ x1, μ^(1/q2) x2, μ^(1/q3) x3) with variance factor λ² μ^(2𝓗).
    """
    family_id = "Y23"
    roles = (PREFACTOR, BOX, BOX)
    scale_count = 2

    def self_similar_corner(self, q, x, scales):
        lam, mu = scales
        corner = (lam * x[0], mu ** (1 / q[1]) * x[1], mu ** (1 / q[2]) * x[2])
        return corner, lam ** 2 * mu ** (2 * self.hurst(q))
