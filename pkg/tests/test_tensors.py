import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afcharges.catalog import SchwarzschildIsotropic
from afcharges.errors import DegenerateMetricError, MissingMomentumError
from afcharges.tensors import (
    MetricJet,
    christoffel,
    christoffel_derivative,
    constraint_residual,
    einstein_tensor,
    lie_operator,
    parity_decompose,
    ricci,
    scalar_curvature,
    vector_divergence,
)
from afcharges.verify import bianchi_residual, polynomial_metric

from conftest import fd_derivative


def conformal_jet(u_fn, du_fn, ddu_fn, x):
    u, du, ddu = u_fn(x), du_fn(x), ddu_fn(x)
    eye = np.eye(3)
    g = (u**4)[..., None, None] * eye
    dg = (4 * u**3)[..., None, None, None] * du[..., None, None, :] * eye[:, :, None]
    ddg = ((12 * u**2)[..., None, None] * np.einsum("...k,...l->...kl", du, du)
           + (4 * u**3)[..., None, None] * ddu)[..., None, None, :, :] * eye[:, :, None, None]
    return MetricJet(g, dg, ddg)


# u = 1 + s |x|^2: non-harmonic, so curvature is non-trivial
S = 0.1


def u_quad(x):
    return 1 + S * np.sum(x * x, axis=-1)


def du_quad(x):
    return 2 * S * x


def ddu_quad(x):
    return np.broadcast_to(2 * S * np.eye(3), x.shape[:-1] + (3, 3))


def stereographic(x):
    """Unit 3-sphere metric 4/(1+|x|^2)^2 delta as u^4 delta."""
    def u(y):
        return np.sqrt(2.0 / (1 + np.sum(y * y, axis=-1)))

    def du(y):
        q = 1 + np.sum(y * y, axis=-1)
        return -(np.sqrt(2.0) * q ** -1.5)[..., None] * y

    def ddu(y):
        q = 1 + np.sum(y * y, axis=-1)
        return (3 * np.sqrt(2.0) * q ** -2.5)[..., None, None] * np.einsum("...k,...l->...kl", y, y) \
            - (np.sqrt(2.0) * q ** -1.5)[..., None, None] * np.eye(3)

    return conformal_jet(u, du, ddu, x)


POINTS = np.array([[0.3, -0.2, 0.5], [1.0, 0.4, -0.7], [-0.6, 0.9, 0.1]])


def test_flat_jet_has_no_curvature():
    jet = MetricJet.flat((4,))
    assert np.all(christoffel(jet) == 0)
    assert np.all(ricci(jet) == 0)
    assert np.all(scalar_curvature(jet) == 0)


def test_christoffel_conformal_closed_form():
    jet = conformal_jet(u_quad, du_quad, ddu_quad, POINTS)
    w = du_quad(POINTS) / u_quad(POINTS)[:, None]  # d log u
    eye = np.eye(3)
    expected = 2 * (np.einsum("ik,nj->nkij", eye, w) + np.einsum("jk,ni->nkij", eye, w)
                    - np.einsum("ij,nk->nkij", eye, w))
    assert np.allclose(christoffel(jet), expected, atol=1e-14)


def test_christoffel_derivative_matches_differences():
    jet_fn = polynomial_metric(np.random.default_rng(1))
    x = POINTS * 0.5
    fd = fd_derivative(lambda y: christoffel(jet_fn(y)), x, h=1e-3)
    assert np.allclose(christoffel_derivative(jet_fn(x)), fd, atol=1e-10)


def test_scalar_curvature_conformal_formula():
    # R = -8 u^-5 Lap u for g = u^4 delta
    jet = conformal_jet(u_quad, du_quad, ddu_quad, POINTS)
    expected = -8 * u_quad(POINTS) ** -5 * (6 * S)
    assert np.allclose(scalar_curvature(jet), expected, rtol=1e-12)


def test_unit_three_sphere_is_einstein():
    jet = stereographic(POINTS)
    assert np.allclose(scalar_curvature(jet), 6.0, rtol=1e-12)
    assert np.allclose(ricci(jet), 2.0 * jet.g, atol=1e-12)
    assert np.allclose(einstein_tensor(jet), -jet.g, atol=1e-12)


def test_schwarzschild_is_scalar_flat():
    spec = SchwarzschildIsotropic(1.0, (1.0, 2.0, 3.0))
    x = np.array([[10.0, 0.0, 0.0], [-7.0, 8.0, 30.0], [0.0, 0.0, 100.0]])
    assert np.max(np.abs(scalar_curvature(spec.evaluate(x)))) < 1e-15


def test_bianchi_identity_random_metric():
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.5, 0.5, size=(10, 3))
    assert bianchi_residual(polynomial_metric(rng), pts) <= 1e-6


def test_degenerate_metric_rejected():
    jet = MetricJet.flat((2,))
    g = jet.g.copy()
    g[1, 2, 2] = 0.0
    with pytest.raises(DegenerateMetricError):
        christoffel(MetricJet(g, jet.dg, jet.ddg))
    g[1, 2, 2] = np.nan
    with pytest.raises(DegenerateMetricError):
        ricci(MetricJet(g, jet.dg, jet.ddg))


def test_constraint_residual_needs_momentum():
    with pytest.raises(MissingMomentumError):
        constraint_residual(MetricJet.flat(()))


def test_constraint_residual_time_symmetric_schwarzschild():
    jet = SchwarzschildIsotropic(2.0).evaluate(np.array([[5.0, 1.0, 0.0], [0.0, 9.0, 3.0]]))
    jet = jet.with_momentum(np.zeros_like(jet.g), np.zeros_like(jet.dg))
    ham, mom = constraint_residual(jet)
    assert np.max(np.abs(ham)) < 1e-14 and np.max(np.abs(mom)) == 0


def test_constraint_residual_quadratic_terms():
    # flat metric, constant pi: residual is (trpi^2/2 - |pi|^2, 0)
    jet = MetricJet.flat(())
    pi = np.array([[1.0, 0.5, 0.0], [0.5, -2.0, 0.0], [0.0, 0.0, 3.0]])
    ham, mom = constraint_residual(jet.with_momentum(pi, np.zeros((3, 3, 3))))
    assert ham == pytest.approx(0.5 * 2.0**2 - np.sum(pi * pi))
    assert np.all(mom == 0)


def test_lie_operator_killing_and_dilation():
    jet = MetricJet.flat((3,))
    x = POINTS
    # rotation about z is Killing: L_X delta = 0, div X = 0
    X = np.stack([-x[:, 1], x[:, 0], np.zeros(3)], -1)
    dX = np.broadcast_to(np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], float), (3, 3, 3))
    assert np.allclose(lie_operator(jet, X, dX), 0)
    # dilation X = x: L_X delta = 2 delta, div X = 3
    dX = np.broadcast_to(np.eye(3), (3, 3, 3))
    assert np.allclose(lie_operator(jet, x, dX), -np.eye(3))
    assert np.allclose(vector_divergence(jet, x, dX), 3.0)


def test_parity_decomposition():
    x = POINTS
    f = lambda y: y[:, 0] ** 2 + y[:, 1] ** 3
    pair = parity_decompose(f(x), f(-x))
    assert np.allclose(pair.even_part, 2 * x[:, 0] ** 2)
    assert np.allclose(pair.odd_part, 2 * x[:, 1] ** 3)
    assert np.allclose(pair.at_x(), f(x))
    assert np.allclose(pair.at_minus_x(), f(-x))


def test_batched_and_scalar_agree():
    jet_fn = polynomial_metric(np.random.default_rng(5))
    batch = einstein_tensor(jet_fn(POINTS))
    for n, p in enumerate(POINTS):
        assert np.allclose(einstein_tensor(jet_fn(p)), batch[n], atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_curvature_symmetries(seed):
    rng = np.random.default_rng(seed)
    jet = polynomial_metric(rng)(rng.uniform(-0.4, 0.4, size=(5, 3)))
    ric = ricci(jet)
    G = einstein_tensor(jet)
    ginv = np.linalg.inv(jet.g)
    R = scalar_curvature(jet)
    assert np.allclose(ric, np.swapaxes(ric, -1, -2), atol=1e-12)
    # trace of G is -R/2 in three dimensions
    assert np.allclose(np.einsum("nij,nij->n", ginv, G), -0.5 * R, atol=1e-11)
    Gam = christoffel(jet)
    assert np.allclose(Gam, np.swapaxes(Gam, -1, -2), atol=1e-14)
