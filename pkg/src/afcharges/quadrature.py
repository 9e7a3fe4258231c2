"""Surface and volume quadrature for flux integrals.

Closed surfaces are parametrized over the unit sphere, y = c + A w with A a
diagonal matrix of semi-axes.  Their Euclidean outward normal is proportional
to A^{-1} w (the gradient of the level function sum(((y - c)_i / a_i)^2)) and
the Euclidean area element is det(A) |A^{-1} w| dOmega.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError, InteriorPointError
from .tensors import _inverse

__all__ = [
    "SphereRule",
    "SurfaceChart",
    "SurfaceGeometry",
    "build_sphere_rule",
    "sphere_chart",
    "ellipsoid_chart",
    "shifted_sphere_chart",
    "chart_family",
    "metric_surface_element",
    "surface_geometry",
    "flux_integral",
    "annulus_integral",
    "INDUCED_DETERMINANT_FLOOR",
]

INDUCED_DETERMINANT_FLOOR = 1e-14


@dataclass(frozen=True)
class SphereRule:
    """Gauss-Legendre in cos(theta) times a uniform azimuthal rule.

    ``n`` polar nodes and ``2n`` azimuthal nodes; exact for spherical
    polynomials of degree <= 2n - 1.  Node order is polar-major and fixed,
    which keeps every weighted sum reproducible.
    """

    order: int
    theta: np.ndarray
    phi: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.weights.size

    def integrate(self, values):
        """Sum of weights times values over the leading node axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def build_sphere_rule(n):
    if int(n) != n or n < 2:
        raise ValueError(f"quadrature order must be an integer >= 2, got {n}")
    n = int(n)
    t, wt = np.polynomial.legendre.leggauss(n)
    theta_1d = np.arccos(t)
    phi_1d = (np.arange(2 * n) + 0.5) * (np.pi / n)
    theta, phi = np.meshgrid(theta_1d, phi_1d, indexing="ij")
    w = np.outer(wt, np.full(2 * n, np.pi / n))
    st = np.sin(theta)
    points = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    return SphereRule(n, theta.ravel(), phi.ravel(), points.reshape(-1, 3), w.ravel())


@dataclass(frozen=True)
class SurfaceChart:
    """Closed surface y = center + diag(axes) w over the unit sphere."""

    kind: str
    center: tuple
    axes: tuple

    @property
    def min_radius(self):
        """Lower bound for |y| over the surface."""
        return float(min(self.axes) - np.linalg.norm(self.center))


def sphere_chart(radius, center=(0.0, 0.0, 0.0)):
    return SurfaceChart("sphere", tuple(map(float, center)), (float(radius),) * 3)


def ellipsoid_chart(semi_axes, center=(0.0, 0.0, 0.0)):
    return SurfaceChart("ellipsoid", tuple(map(float, center)), tuple(map(float, semi_axes)))


def shifted_sphere_chart(radius, shift):
    return SurfaceChart("shifted", tuple(map(float, shift)), (float(radius),) * 3)


def chart_family(kind, r, ratios=(1.0, 1.2, 1.5), shift=(0.0, 0.0, 0.0)):
    """Member of a surface family at ladder radius ``r``."""
    if kind == "sphere":
        return sphere_chart(r)
    if kind == "ellipsoid":
        return ellipsoid_chart(tuple(r * np.asarray(ratios, float)))
    if kind == "shifted":
        return shifted_sphere_chart(r, shift)
    raise ValueError(f"unknown chart kind {kind!r}")


@dataclass
class SurfaceGeometry:
    """Node data for one chart: positions, normals and area elements.

    ``normal`` is the metric unit normal vector (upper index) when the metric
    measure is selected, otherwise the Euclidean unit normal; ``area`` is the
    corresponding area element per unit dOmega, already multiplied into the
    quadrature ``weights``.
    """

    points: np.ndarray
    jet: object
    normal: np.ndarray
    normal_euclid: np.ndarray
    weights: np.ndarray
    metric_measure: bool


def _euclidean_frame(chart, rule):
    A = np.asarray(chart.axes)
    w = rule.points
    y = np.asarray(chart.center) + w * A
    grad = w / A  # A^{-1} w, proportional to the level-function gradient
    norm = np.linalg.norm(grad, axis=-1)
    nu0 = grad / norm[:, None]
    dsig0 = np.prod(A) * norm
    return y, nu0, dsig0


def _tangent_basis(nu0):
    ref = np.where(np.abs(nu0[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(nu0, ref)
    e1 /= np.linalg.norm(e1, axis=-1)[:, None]
    e2 = np.cross(nu0, e1)
    return e1, e2


def metric_surface_element(jet, nu0):
    """Metric unit normal and area ratio for surfaces with Euclidean normal nu0.

    ``nu0`` is the Euclidean unit normal (equivalently the normalized level-set
    gradient covector).  Returns ``(nu_g, ratio)`` where nu_g^i = g^ij n_j /
    |n|_g and ``ratio`` = d sigma_g / d sigma_0, the square root of the
    determinant of the induced metric on an orthonormal Euclidean tangent frame.
    """
    ginv = _inverse(jet.g)
    up = np.einsum("...ij,...j->...i", ginv, nu0)
    nu_g = up / np.sqrt(np.einsum("...i,...i->...", up, nu0))[..., None]
    e1, e2 = _tangent_basis(np.atleast_2d(nu0))
    e1 = e1.reshape(np.shape(nu0))
    e2 = e2.reshape(np.shape(nu0))
    h11 = np.einsum("...i,...ij,...j->...", e1, jet.g, e1)
    h12 = np.einsum("...i,...ij,...j->...", e1, jet.g, e2)
    h22 = np.einsum("...i,...ij,...j->...", e2, jet.g, e2)
    det = h11 * h22 - h12**2
    if np.any(det < INDUCED_DETERMINANT_FLOOR):
        raise DegenerateMetricError("induced surface metric is degenerate")
    return nu_g, np.sqrt(det)


def surface_geometry(spec, chart, rule, metric_measure=True):
    if chart.min_radius <= spec.interior_radius:
        raise InteriorPointError(
            f"{chart.kind} chart reaches |y| = {chart.min_radius:.4g} "
            f"<= interior radius {spec.interior_radius:.4g}"
        )
    y, nu0, dsig0 = _euclidean_frame(chart, rule)
    jet = spec.evaluate(y)
    if metric_measure:
        nu, ratio = metric_surface_element(jet, nu0)
        weights = rule.weights * dsig0 * ratio
    else:
        nu, weights = nu0, rule.weights * dsig0
    return SurfaceGeometry(y, jet, nu, nu0, weights, metric_measure)


def flux_integral(spec, chart, integrand, rule, metric_measure=True):
    """Quadrature of ``integrand(geometry)`` over a closed chart.

    ``integrand`` returns per-node values with shape ``(N,)`` or ``(N, k)``.
    """
    geom = surface_geometry(spec, chart, rule, metric_measure)
    values = np.asarray(integrand(geom), dtype=float)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("integrand is not finite at some node")
    return np.tensordot(geom.weights, values, axes=(0, 0))


def annulus_integral(integrand, r_inner, r_outer, radial_order, rule, interior_radius=0.0):
    """Volume integral of ``integrand(points)`` over r_inner <= |x| <= r_outer.

    Gauss-Legendre in the radius times the sphere rule, with Euclidean volume
    element r^2 dr dOmega.
    """
    if r_inner <= interior_radius:
        raise InteriorPointError("annulus reaches the interior region")
    if r_inner >= r_outer:
        raise ValueError("annulus requires r_inner < r_outer")
    t, wt = np.polynomial.legendre.leggauss(int(radial_order))
    half = 0.5 * (r_outer - r_inner)
    radii = r_inner + half * (t + 1.0)
    total = 0.0
    for r, w in zip(radii, wt):
        vals = np.asarray(integrand(r * rule.points), dtype=float)
        total = total + w * half * r * r * rule.integrate(vals)
    return total
