import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afcharges.errors import KernelObstructionError
from afcharges.harmonics import (
    SphericalBasis,
    SphericalField,
    apply_L,
    solve_L,
    sphere_laplacian,
)


@pytest.fixture(scope="module")
def basis():
    return SphericalBasis(10, 14)


def test_orthonormal(basis):
    gram = basis.Y.T @ (basis.rule.weights[:, None] * basis.Y)
    assert np.allclose(gram, np.eye(basis.size), atol=1e-13)


def test_degree_one_band_spans_coordinates(basis):
    x = basis.rule.points
    f = basis.field(x[:, 0] + 2 * x[:, 1] - x[:, 2])
    off = f.coeffs.copy()
    off[basis.band(1)] = 0.0
    assert np.max(np.abs(off)) < 1e-13
    # index l^2 + l + m = 3 carries the x coefficient
    assert f.coeffs[3] == pytest.approx(np.sqrt(4 * np.pi / 3), rel=1e-13)


def test_laplacian_from_nodal_derivatives(basis):
    th = basis.rule.theta
    st_, ct = np.sin(th)[:, None], np.cos(th)[:, None]
    lap = basis.ddY[0, 0] + ct / st_ * basis.dY[0] + basis.ddY[1, 1] / st_**2
    l = basis.degree
    assert np.max(np.abs(lap + l * (l + 1) * basis.Y)) < 1e-10


def test_derivatives_match_differences(basis):
    # d/dphi of Y at shifted phi, by central differences in the angle
    x = basis.rule.points
    f = basis.field(x[:, 0] * x[:, 2] + x[:, 1] ** 3)
    _, df, _ = f.derivatives()
    th, ph = basis.rule.theta, basis.rule.phi
    h = 1e-5

    def g(t, p):
        s = np.sin(t)
        X, Y, Z = s * np.cos(p), s * np.sin(p), np.cos(t)
        return X * Z + Y**3

    assert np.allclose(df[0], (g(th + h, ph) - g(th - h, ph)) / (2 * h), atol=1e-9)
    assert np.allclose(df[1], (g(th, ph + h) - g(th, ph - h)) / (2 * h), atol=1e-9)


def test_laplacian_and_L_bands(basis):
    c = np.random.default_rng(0).normal(size=basis.size)
    f = SphericalField(c, basis)
    l = basis.degree
    assert np.allclose(sphere_laplacian(f).coeffs, -l * (l + 1) * c)
    assert np.allclose(apply_L(f).coeffs, (l * (l + 1) - 2) * c)
    assert np.all(apply_L(f).band_coeffs(1) == 0)


def test_kernel_obstruction(basis):
    x = basis.rule.points
    rhs = basis.field(x[:, 2] + x[:, 0] * x[:, 1])
    with pytest.raises(KernelObstructionError):
        solve_L(rhs, project=False)
    psi = solve_L(rhs, project=True)
    assert np.all(psi.band_coeffs(1) == 0)


def test_order_must_resolve_degree():
    with pytest.raises(ValueError):
        SphericalBasis(10, 8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_solve_inverts_L_off_kernel(seed):
    basis = SphericalBasis(6, 8)
    c = np.random.default_rng(seed).normal(size=basis.size)
    c[basis.band(1)] = 0.0
    f = SphericalField(c, basis)
    assert np.allclose(solve_L(apply_L(f)).coeffs, c, atol=1e-12)
    assert np.allclose(apply_L(solve_L(f)).coeffs, c, atol=1e-12)


def test_field_arithmetic(basis):
    a = SphericalField.zeros(basis)
    b = basis.field(np.ones(basis.rule.size))
    assert (a + b - b).sup_norm() == 0.0
    assert b.scaled(2.0).sup_norm() == pytest.approx(2.0, rel=1e-13)
