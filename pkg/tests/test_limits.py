import itertools
import math
import os

import pytest
import anisoscale
from anisoscale import limits
from anisoscale.limits import quadrature
from anisoscale.limits.families import FAMILIES
import numpy as np

# Logging
import logging
logging.basicConfig(level=logging.DEBUG)

# Long quadratures
slow = os.environ.get('ANISOSCALE_SLOW')

LOPSIDED = anisoscale.ModelParams((1.8, 3.0, 6.0))
BALANCED = anisoscale.ModelParams((2.7, 2.7, 2.7))
MIDDLE = anisoscale.ModelParams((2.2, 2.2, 2.2))
STEEP = anisoscale.ModelParams((1.8, 1.8, 1.8))
UNIT = (1.0, 1.0, 1.0)
FINE = anisoscale.QuadratureSpec(target=1e-6, max_level=7, on_failure="warn")
COARSE = anisoscale.QuadratureSpec(target=1e-3, max_level=3, on_failure="warn")


def y1_kernel(corner=UNIT, lower=None):
    return anisoscale.LimitKernel("Y1", LOPSIDED, corner, lower=lower)


def test_quadrature_spec_validation():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.QuadratureSpec(nodes=4)
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.QuadratureSpec(target=0.0)
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.QuadratureSpec(scheme="monte-carlo")
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.QuadratureSpec(on_failure="ignore")
    assert anisoscale.QuadratureSpec.from_dict(None) == anisoscale.QuadratureSpec()
    assert anisoscale.QuadratureSpec().grading == 4
    assert anisoscale.QuadratureSpec.from_dict({"nodes": 12}).nodes == 12

def test_default_rule_has_64_nodes_per_segment():
    spec = anisoscale.QuadratureSpec()
    x, w = quadrature.finite_rule(0.0, 1.0, spec, spec.max_level)
    assert len(x) == 64
    assert np.sum(w) == pytest.approx(1.0)

def test_finite_rule():
    spec = anisoscale.QuadratureSpec()
    x, w = quadrature.finite_rule(0.0, 2.0, spec, 2)
    assert np.sum(w * x ** 2) == pytest.approx(8 / 3, rel=1e-9)
    x, w = quadrature.finite_rule(1.0, 1.0, spec, 2)
    assert len(x) == 0

def test_halfline_rule():
    spec = anisoscale.QuadratureSpec()
    x, w = quadrature.halfline_rule(1.0, spec, 3, 2.0)
    assert np.sum(w * np.exp(-x ** 2)) == pytest.approx(math.sqrt(math.pi), rel=1e-5)

def test_line_rule():
    spec = anisoscale.QuadratureSpec()
    x, w = quadrature.line_rule((0.0, 1.0), 1.0, spec, 3, 2.0)
    assert np.sum(w / (1.0 + x ** 2)) == pytest.approx(math.pi, rel=1e-5)

def test_adaptive_converges():
    result = quadrature.adaptive(lambda level: (2.5, 10), anisoscale.QuadratureSpec())
    assert result.value == 2.5
    assert result.level == 1

def test_adaptive_failure():
    spec = anisoscale.QuadratureSpec(max_level=2)
    with pytest.raises(anisoscale.QuadratureException):
        quadrature.adaptive(lambda level: (float(level), 1), spec)
    spec = anisoscale.QuadratureSpec(max_level=2, on_failure="warn")
    with pytest.warns(RuntimeWarning):
        result = quadrature.adaptive(lambda level: (float(level), 1), spec)
    assert result.level == 2

def test_fbs_covariance():
    assert anisoscale.fbs_covariance(0.5, UNIT, UNIT) == pytest.approx(1.0)
    value = anisoscale.fbs_covariance((0.8, 0.5, 0.5), UNIT, (2.0, 1.0, 1.0))
    assert value == pytest.approx(2 ** 1.6 / 2)

def test_unknown_family():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.LimitKernel("Y9", LOPSIDED, UNIT)

def test_kernel_existence():
    with pytest.raises(anisoscale.ExistenceConditionException):
        anisoscale.LimitKernel("Y1", STEEP, UNIT)

def test_kernel_rectangle_order():
    with pytest.raises(anisoscale.InvalidParametersException):
        y1_kernel(lower=(2.0, 0.0, 0.0))

def test_y1_matches_closed_form():
    k = y1_kernel()
    assert k.mu == pytest.approx(0.5)
    points = np.array([[-0.5, 0.5, 0.5], [0.3, 0.2, 0.9], [0.7, 0.5, 0.5], [1.5, 0.5, 0.5], [2.0, 0.1, 0.3]])
    constant = k.marginal * k.c[0] ** (-k.mu)
    expected = FAMILIES["Y1"].closed_form(constant, k.q, k.lo, k.hi, points)
    assert np.allclose(anisoscale.kernel_eval(k, points), expected, rtol=1e-10, atol=0)

def test_y1_kernel_vanishes_off_support():
    k = y1_kernel()
    assert anisoscale.kernel_eval(k, (0.5, 1.5, 0.5)) == 0.0
    assert anisoscale.kernel_eval(k, (0.5, 0.5, -0.1)) == 0.0

def test_y1_variance_doubles_with_white_axis():
    first = anisoscale.limit_variance(y1_kernel(), FINE)
    second = anisoscale.limit_variance(y1_kernel((1.0, 2.0, 1.0)), FINE)
    assert first.value > 0
    assert second.value == pytest.approx(2 * first.value, rel=1e-9)

def test_y1_self_similar():
    calH = FAMILIES["Y1"].hurst(LOPSIDED.q)
    assert calH == pytest.approx(0.6)
    corner, factor = anisoscale.self_similar_corner("Y1", LOPSIDED.q, UNIT, (2.0, 1.0, 1.0))
    assert corner == (2.0, 1.0, 1.0)
    assert factor == pytest.approx(2 ** 1.2)
    base = anisoscale.limit_variance(y1_kernel(), FINE).value
    scaled = anisoscale.limit_variance(y1_kernel(corner), FINE).value
    assert scaled == pytest.approx(factor * base, rel=1e-3)

def test_self_similar_scale_count():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.self_similar_corner("Y0", BALANCED.q, UNIT, (2.0, 1.0))

FBS_CORNERS = [UNIT, (0.5, 2.0, 1.0), (2.0, 0.5, 1.5)]


@pytest.mark.parametrize("family, params", [
    ("Y1", LOPSIDED),
    ("Y2", MIDDLE),
    pytest.param("Y3", STEEP, marks=pytest.mark.skipif(not slow, reason="Three dimensional quadrature")),
])
def test_fractional_brownian_sheet_grid(family, params):
    kernels = [anisoscale.LimitKernel(family, params, x) for x in FBS_CORNERS]
    hurst = FAMILIES[family].fbs_hurst(params.q)
    variance = anisoscale.limit_variance(kernels[0], COARSE).value
    for i, j in itertools.combinations_with_replacement(range(3), 2):
        covariance = anisoscale.limit_covariance(kernels[i], kernels[j], COARSE).value
        expected = anisoscale.fbs_covariance(hurst, FBS_CORNERS[i], FBS_CORNERS[j])
        assert covariance / variance == pytest.approx(expected, rel=2e-2)

def test_fbs_hurst_needs_sheet():
    assert FAMILIES["Y3"].fbs_hurst(STEEP.q)[:2] == (1.0, 1.0)
    for family in ("Y12", "Y23", "Y0"):
        assert not FAMILIES[family].fbs_capable
        with pytest.raises(NotImplementedError):
            FAMILIES[family].fbs_hurst(MIDDLE.q)

@pytest.mark.parametrize("family, params, scales", [
    ("Y2", MIDDLE, (1.5, 2.0, 0.5)),
    ("Y12", MIDDLE, (2.0, 1.5)),
    pytest.param("Y3", STEEP, (2.0, 0.5, 1.5),
                 marks=pytest.mark.skipif(not slow, reason="Three dimensional quadrature")),
    pytest.param("Y23", MIDDLE, (1.5, 2.0),
                 marks=pytest.mark.skipif(not slow, reason="Three dimensional quadrature")),
])
def test_self_similar(family, params, scales):
    corner, factor = anisoscale.self_similar_corner(family, params.q, UNIT, scales)
    base = anisoscale.limit_variance(anisoscale.LimitKernel(family, params, UNIT), COARSE).value
    scaled = anisoscale.limit_variance(anisoscale.LimitKernel(family, params, corner), COARSE).value
    assert base > 0
    assert scaled == pytest.approx(factor * base, rel=1e-2)

def test_covariance_needs_one_field():
    other = anisoscale.LimitKernel("Y1", LOPSIDED, UNIT, pi=(0, 2, 1))
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.limit_covariance(y1_kernel(), other)

def test_theta_scales():
    k = y1_kernel()
    beta = FAMILIES["Y1"].beta(k.q)
    near = anisoscale.theta_density(k, 0.5, FINE).value
    far = anisoscale.theta_density(k, 2.0, FINE).value
    assert far / near == pytest.approx(4.0 ** (2 * beta + 1), rel=1e-9)

def test_theta_closed_form():
    k = y1_kernel()
    constant = k.marginal * k.c[0] ** (-k.mu)
    expected = constant ** 2 * FAMILIES["Y1"].theta_shape(k.q)
    assert anisoscale.theta_density(k, 1.0, FINE).value == pytest.approx(expected, rel=2e-2)

def test_theta_errors():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.theta_density(y1_kernel(), 0.0)
    k = anisoscale.LimitKernel("Y12", BALANCED, UNIT)
    with pytest.raises(anisoscale.NotAvailableForFamilyException):
        anisoscale.theta_density(k, 1.0)

def test_degenerate_increment():
    K = anisoscale.Rectangle((0.0, 0.0, 0.0), (0.0, 1.0, 1.0))
    result = anisoscale.increment_covariance(y1_kernel(), K, K)
    assert result.value == 0.0

def test_y12_disjoint_white_axis():
    k = anisoscale.LimitKernel("Y12", BALANCED, UNIT)
    K = anisoscale.Rectangle((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    K2 = anisoscale.Rectangle((0.0, 0.0, 1.0), (1.0, 1.0, 2.0))
    assert anisoscale.increment_covariance(k, K, K2).value == 0.0

def test_increment_matches_corner_sum():
    k = y1_kernel()
    K = anisoscale.Rectangle((0.5, 0.0, 0.0), (1.0, 1.0, 1.0))
    K2 = anisoscale.Rectangle((0.0, 0.0, 0.0), (1.5, 0.5, 1.0))
    direct = anisoscale.increment_covariance(k, K, K2, FINE).value
    corners = limits.corner_covariance_sum(k, K, K2, FINE).value
    assert direct == pytest.approx(corners, rel=1e-3)

def test_y3_prefactor():
    small = anisoscale.LimitKernel("Y3", STEEP, UNIT)
    large = anisoscale.LimitKernel("Y3", STEEP, (2.0, 1.0, 1.0))
    points = np.array([[0.3, 0.5, 0.5], [2.0, 1.0, 3.0], [0.0, 0.1, -1.0]])
    assert np.allclose(anisoscale.kernel_eval(large, points), 2 * anisoscale.kernel_eval(small, points), rtol=1e-12)

def test_truncation_extent():
    rect = anisoscale.truncation_extent(y1_kernel(), budget=0.01)
    assert rect.lower[1] == 0.0
    assert rect.upper[2] == 1.0
    assert rect.upper[0] == pytest.approx(1.0 + 100 ** 1.25)
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.truncation_extent(y1_kernel(), budget=1.0)

def test_truncation_cap_reports_tail(caplog):
    k = y1_kernel()
    assert anisoscale.truncated_tail(k, anisoscale.truncation_extent(k, budget=0.01)) == pytest.approx(0.01)
    with caplog.at_level(logging.WARNING):
        rect = anisoscale.truncation_extent(k, budget=0.01, cap=8.0)
    assert "tail budget" in caplog.text
    assert rect.upper[0] == pytest.approx(9.0)
    assert anisoscale.truncated_tail(k, rect) == pytest.approx(8.0 ** -0.8)

def test_y0_kernel_off_box():
    k = anisoscale.LimitKernel("Y0", BALANCED, UNIT)
    x, w = np.polynomial.legendre.leggauss(24)
    t, w = (x + 1.0) / 2.0, w / 2.0
    u = 2.0
    T1, T2, T3 = np.meshgrid(t, t, t, indexing="ij")
    weights = np.multiply.outer(np.multiply.outer(w, w), w)
    p = BALANCED.p
    integrand = (np.abs(T1 - u) ** p[0] + np.abs(T2 - u) ** p[1] + np.abs(T3 - u) ** p[2]) ** (-BALANCED.nu)
    expected = float(np.sum(weights * integrand))
    spec = anisoscale.QuadratureSpec(target=1e-8, max_level=6, on_failure="warn")
    assert anisoscale.kernel_eval(k, (u, u, u), spec) == pytest.approx(expected, rel=1e-6)

@pytest.mark.skipif(not slow, reason="Three dimensional quadrature")
def test_y0_variance_self_similar():
    corner, factor = anisoscale.self_similar_corner("Y0", BALANCED.q, UNIT, (2.0,))
    spec = anisoscale.QuadratureSpec(target=1e-3, max_level=4, on_failure="warn")
    base = anisoscale.limit_variance(anisoscale.LimitKernel("Y0", BALANCED, UNIT), spec).value
    scaled = anisoscale.limit_variance(anisoscale.LimitKernel("Y0", BALANCED, corner), spec).value
    assert scaled == pytest.approx(factor * base, rel=1e-2)

@pytest.mark.skipif(not slow, reason="Three dimensional quadrature")
def test_y23_invariant_along_first_axis():
    k = anisoscale.LimitKernel("Y23", STEEP, UNIT)
    K = anisoscale.Rectangle((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    moved = anisoscale.Rectangle((3.0, 0.0, 0.0), (4.0, 1.0, 1.0))
    variance = anisoscale.limit_variance(k.with_rectangle(K), COARSE).value
    covariance = anisoscale.increment_covariance(k, K, moved, COARSE).value
    assert variance > 0
    assert covariance == pytest.approx(variance, rel=1e-9)
    gap = limits.stationary_increment_gap(k, K, (3.0, 0.0, 0.0), COARSE)
    assert gap.value == pytest.approx(0.0, abs=1e-12 * variance)
