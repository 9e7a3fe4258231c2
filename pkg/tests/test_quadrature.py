import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afcharges.catalog import Flat, SchwarzschildIsotropic
from afcharges.errors import DegenerateMetricError, InteriorPointError
from afcharges.quadrature import (
    annulus_integral,
    build_sphere_rule,
    chart_family,
    ellipsoid_chart,
    flux_integral,
    metric_surface_element,
    shifted_sphere_chart,
    sphere_chart,
    surface_geometry,
)
from afcharges.tensors import MetricJet
from afcharges.verify import sphere_monomial_integral


def test_monomial_integral_oracle():
    assert sphere_monomial_integral(0, 0, 0) == pytest.approx(4 * math.pi)
    assert sphere_monomial_integral(2, 0, 0) == pytest.approx(4 * math.pi / 3)
    assert sphere_monomial_integral(2, 2, 0) == pytest.approx(4 * math.pi / 15)
    assert sphere_monomial_integral(1, 2, 0) == 0.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 20), data=st.data())
def test_rule_exact_up_to_degree(n, data):
    rule = build_sphere_rule(n)
    a = data.draw(st.integers(0, 2 * n - 1))
    b = data.draw(st.integers(0, 2 * n - 1 - a))
    c = data.draw(st.integers(0, 2 * n - 1 - a - b))
    x, y, z = rule.points.T
    assert rule.integrate(x**a * y**b * z**c) == pytest.approx(
        sphere_monomial_integral(a, b, c), abs=1e-12)


def test_rule_is_antipodally_symmetric():
    rule = build_sphere_rule(9)
    pts = {tuple(np.round(p, 12)) for p in rule.points}
    assert all(tuple(np.round(-p, 12)) in pts for p in rule.points)


def test_rule_rejects_small_order():
    with pytest.raises(ValueError):
        build_sphere_rule(1)
    with pytest.raises(ValueError):
        build_sphere_rule(3.5)


def test_flat_sphere_area():
    rule = build_sphere_rule(8)
    area = flux_integral(Flat(), sphere_chart(7.0), lambda g: np.ones(len(g.points)), rule)
    assert area == pytest.approx(4 * math.pi * 49, rel=1e-14)


@pytest.mark.parametrize("axes", [(3.0, 4.0, 5.0), (10.0, 12.0, 15.0)])
def test_ellipsoid_volume_by_divergence(axes):
    # int x . nu dsigma = 3 Vol = 4 pi a b c
    rule = build_sphere_rule(24)
    val = flux_integral(Flat(interior_radius=0.5), ellipsoid_chart(axes),
                        lambda g: np.einsum("ni,ni->n", g.points, g.normal), rule)
    assert val == pytest.approx(4 * math.pi * np.prod(axes), rel=1e-12)


def test_shifted_sphere_volume():
    rule = build_sphere_rule(12)
    chart = shifted_sphere_chart(10.0, (1.0, -2.0, 0.5))
    val = flux_integral(Flat(), chart,
                        lambda g: np.einsum("ni,ni->n", g.points, g.normal), rule)
    assert val == pytest.approx(4 * math.pi * 1000.0, rel=1e-13)


def test_schwarzschild_metric_area():
    # induced area of |x| = r is u^4 * 4 pi r^2 with u = 1 + m/2r
    m, r = 1.0, 20.0
    rule = build_sphere_rule(8)
    area = flux_integral(SchwarzschildIsotropic(m), sphere_chart(r),
                         lambda g: np.ones(len(g.points)), rule, metric_measure=True)
    assert area == pytest.approx((1 + m / (2 * r)) ** 4 * 4 * math.pi * r**2, rel=1e-13)


def test_metric_normal_is_unit():
    spec = SchwarzschildIsotropic(1.0, (1.0, 2.0, 3.0))
    geom = surface_geometry(spec, ellipsoid_chart((30.0, 36.0, 45.0)), build_sphere_rule(6))
    norm2 = np.einsum("ni,nij,nj->n", geom.normal, geom.jet.g, geom.normal)
    assert np.allclose(norm2, 1.0, atol=1e-14)


def test_degenerate_induced_metric():
    jet = MetricJet.flat((1,))
    g = jet.g.copy()
    g[0, 1, 1] = 1e-20
    with pytest.raises(DegenerateMetricError):
        metric_surface_element(MetricJet(g, jet.dg, jet.ddg), np.array([[0.0, 0.0, 1.0]]))


def test_chart_inside_interior_rejected():
    with pytest.raises(InteriorPointError):
        surface_geometry(SchwarzschildIsotropic(1.0, (1, 2, 3)), sphere_chart(3.0),
                         build_sphere_rule(4))


def test_nonfinite_integrand_rejected():
    with pytest.raises(FloatingPointError):
        flux_integral(Flat(), sphere_chart(5.0), lambda g: np.full(len(g.points), np.nan),
                      build_sphere_rule(4))


def test_chart_family_kinds():
    assert chart_family("sphere", 10).axes == (10.0, 10.0, 10.0)
    assert chart_family("ellipsoid", 10, (1, 1.2, 1.5)).axes == (10.0, 12.0, 15.0)
    assert chart_family("shifted", 10, shift=(1, 0, 0)).center == (1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        chart_family("torus", 10)


def test_annulus_volume():
    rule = build_sphere_rule(4)
    val = annulus_integral(lambda p: np.ones(len(p)), 2.0, 5.0, 4, rule, interior_radius=1.0)
    assert val == pytest.approx(4 * math.pi / 3 * (125 - 8), rel=1e-14)
    with pytest.raises(InteriorPointError):
        annulus_integral(lambda p: np.ones(len(p)), 0.5, 5.0, 4, rule, interior_radius=1.0)
