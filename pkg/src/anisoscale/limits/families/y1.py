import numpy as np
from scipy import special

from .base import LimitFamily, BOX, INDICATOR


class Y1(LimitFamily):
    """Region I: fractional in x1, white in x2 and x3.

    With β = -q1(1 - 1/q2 - 1/q3) the kernel has the closed form

        f(u) = K 1(0<u2<x2) 1(0<u3<x3) [sgn(x1-u1)|x1-u1|^(β+1) + sgn(u1)|u1|^(β+1)] / (β+1).
    """
    family_id = "Y1"
    roles = (BOX, INDICATOR, INDICATOR)
    fbs_capable = True

    def fbs_hurst(self, q):
        return (self.hurst(q), 0.5, 0.5)

    def self_similar_corner(self, q, x, scales):
        l1, l2, l3 = scales
        return (l1 * x[0], l2 * x[1], l3 * x[2]), l1 ** (2 * self.hurst(q)) * l2 * l3

    @staticmethod
    def beta(q):
        q1, q2, q3 = q
        return -q1 * (1 - 1 / q2 - 1 / q3)

    def closed_form(self, constant, q, lower, upper, u):
        """Kernel values at canonical points ``u`` (shape (..., 3)) for the rectangle (lower, upper]."""
        b1 = self.beta(q) + 1.0
        u = np.asarray(u, dtype=float)

        def s(v):
            return np.sign(v) * np.abs(v) ** b1

        inside = np.ones(u.shape[:-1], dtype=bool)
        for j in (1, 2):
            inside &= (u[..., j] > lower[j]) & (u[..., j] < upper[j])
        return np.where(inside, constant * (s(upper[0] - u[..., 0]) - s(lower[0] - u[..., 0])) / b1, 0.0)

    def theta_shape(self, q):
        """∫ |w|^β |1 - w|^β dw over R, so that θ(t) = K² · theta_shape · |t|^(2β+1)."""
        b = self.beta(q)
        return special.beta(b + 1, b + 1) + 2.0 * special.beta(b + 1, -2 * b - 1)
