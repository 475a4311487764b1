from .base import LimitFamily, BOX, INDICATOR


class Y12(LimitFamily):
    """Balance γ1 q1 = γ2 q2 below γ3 q3 in Regions I and II.

    Self-similar under (λ^(1/q1) x1, λ^(1/q2) x2, μ x3) with variance factor λ^(2𝓗) μ.
    """
    family_id = "Y12"
    roles = (BOX, BOX, INDICATOR)
    scale_count = 2

    def self_similar_corner(self, q, x, scales):
        lam, mu = scales
        corner = (lam ** (1 / q[0]) * x[0], lam ** (1 / q[1]) * x[1], mu * x[2])
        return corner, lam ** (2 * self.hurst(q)) * mu
