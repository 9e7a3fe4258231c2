r"""Constant mean curvature spheres in asymptotically Schwarzschild data.

The surfaces are radial graphs over coordinate spheres,

.. math::

    z(\omega) = p + (R + \lambda \psi(\omega))\,\omega, \qquad \lambda = R^{-a},

i.e. level sets of |y - p| - lambda psi((y - p)/|y - p|) with normal taken from
the level-set gradient.  The mean curvature is evaluated exactly from metric
jets through the first and second fundamental forms of the parametrization.

One solve alternates two steps until psi stops changing:

1. move the center p until the degree-1 projection of H - H_target vanishes
   (the kernel of L = -Lap_0 - 2 is the degree-1 band, and a shift dp changes
   that projection by about 8 pi m dp / R^3);
2. update psi <- psi - L^{-1}[R^{2+a} (H - H_target)] on the complement of
   the kernel.

The target is H_target = 2/R - 4m/R^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InteriorPointError, UndefinedProblemError
from .harmonics import SphericalBasis, SphericalField, solve_L
from .tensors import _inverse, christoffel

__all__ = [
    "CmcProblem",
    "CmcSolution",
    "CentroidSample",
    "target_mean_curvature",
    "surface_embedding",
    "mean_curvature_surface",
    "mean_curvature_expansion",
    "saf_perturbation",
    "lemma_flux_check",
    "center_update",
    "solve_cmc",
    "centroid",
]


def target_mean_curvature(m, R):
    return 2.0 / R - 4.0 * m / R**2


@dataclass
class CmcProblem:
    spec: object
    R: float
    a_exp: float = 0.5
    lmax: int = 16
    tol: float = 1e-10
    max_iters: int = 50
    order: int | None = None
    mass: float | None = None
    p0: tuple | None = None
    center_tol: float = 1e-12
    center_iters: int = 30

    def __post_init__(self):
        if self.mass is None:
            self.mass = float(self.spec.mass)
        if not self.mass > 0:
            raise UndefinedProblemError(
                f"CMC construction needs positive mass, got m = {self.mass}"
            )
        if not 0.0 < self.a_exp < 1.0:
            raise ValueError("a_exp must lie in (0, 1)")
        if not self.R > 4.0 * self.spec.interior_radius:
            raise ValueError(
                f"R = {self.R} must exceed 4 x interior radius "
                f"({4 * self.spec.interior_radius})"
            )

    @property
    def lam(self):
        return self.R ** (-self.a_exp)

    @property
    def target(self):
        return target_mean_curvature(self.mass, self.R)

    def make_basis(self):
        return SphericalBasis(self.lmax, self.order or 2 * self.lmax + 2)


@dataclass
class CmcSolution:
    """Converged center, radial perturbation and measured mean curvature."""

    p: np.ndarray
    psi: SphericalField
    H: np.ndarray
    target: float
    residual: float
    iterations: int
    R: float
    lam: float
    history: list = field(default_factory=list)
    center_history: list = field(default_factory=list)

    @property
    def relative_deviation(self):
        return self.residual / abs(self.target)

    @property
    def relative_std(self):
        return float(np.std(self.H) / abs(self.target))

    def summary(self):
        return {
            "R": self.R,
            "lambda": self.lam,
            "center": np.asarray(self.p).tolist(),
            "target_H": self.target,
            "residual": self.residual,
            "relative_deviation": self.relative_deviation,
            "iterations": self.iterations,
            "psi_sup": self.psi.sup_norm(),
            "psi_degree1_max": float(np.max(np.abs(self.psi.band_coeffs(1)))),
        }


@dataclass
class CentroidSample:
    R: float
    centroid: np.ndarray


def surface_embedding(p, R, lam, psi):
    """Positions and (theta, phi) partials of z = p + (R + lam psi) w.

    Returns ``(z, dz, ddz)`` with ``dz[a]`` the first partials and
    ``ddz[a, b]`` the second partials, a, b in (theta, phi).
    """
    b = psi.basis
    th, ph = b.rule.theta, b.rule.phi
    f, df, ddf = psi.derivatives()
    r = R + lam * f
    dr = lam * df
    ddr = lam * ddf
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    zero = np.zeros_like(th)
    w = np.stack([st * cp, st * sp, ct], -1)
    w_t = np.stack([ct * cp, ct * sp, -st], -1)
    w_p = np.stack([-st * sp, st * cp, zero], -1)
    w_tt = -w
    w_tp = np.stack([-ct * sp, ct * cp, zero], -1)
    w_pp = np.stack([-st * cp, -st * sp, zero], -1)
    col = lambda s: s[:, None]
    z = np.asarray(p, float) + col(r) * w
    z_t = col(dr[0]) * w + col(r) * w_t
    z_p = col(dr[1]) * w + col(r) * w_p
    z_tt = col(ddr[0, 0]) * w + 2 * col(dr[0]) * w_t + col(r) * w_tt
    z_tp = col(ddr[0, 1]) * w + col(dr[0]) * w_p + col(dr[1]) * w_t + col(r) * w_tp
    z_pp = col(ddr[1, 1]) * w + 2 * col(dr[1]) * w_p + col(r) * w_pp
    dz = np.stack([z_t, z_p])
    ddz = np.stack([np.stack([z_tt, z_tp]), np.stack([z_tp, z_pp])])
    return z, dz, ddz


def _check_surface(spec, p, R, lam, psi):
    if lam * psi.sup_norm() >= 0.5 * R:
        raise InteriorPointError("radial perturbation too large: surface may self-intersect")
    if R - lam * psi.sup_norm() - np.linalg.norm(p) <= spec.interior_radius:
        raise InteriorPointError("perturbed sphere enters the interior region")


def mean_curvature_surface(spec, p, R, psi, lam):
    """Mean curvature (outward normal, spheres positive) at the basis nodes."""
    _check_surface(spec, p, R, lam, psi)
    z, dz, ddz = surface_embedding(p, R, lam, psi)
    jet = spec.evaluate(z)
    ginv = _inverse(jet.g)
    Gam = christoffel(jet, ginv)
    h = np.einsum("anj,nij,bni->nab", dz, jet.g, dz)
    hinv = np.linalg.inv(h)
    n = np.cross(dz[0], dz[1])
    n = n / np.sqrt(np.einsum("ni,nij,nj->n", n, ginv, n))[:, None]
    acc = ddz + np.einsum("nkij,ani,bnj->abnk", Gam, dz, dz)
    K = np.einsum("nk,abnk->nab", n, acc)
    return -np.einsum("nab,nab->n", hinv, K)


def saf_perturbation(spec, y, mass=None):
    """p_ij = g_ij - (1 + 2m/|y|) delta_ij and its first partials."""
    m = spec.mass if mass is None else mass
    jet = spec.evaluate(y)
    r = np.linalg.norm(y, axis=-1)
    base = 1.0 + 2.0 * m / r
    dbase = -2.0 * m * y / r[..., None] ** 3
    eye = np.eye(3)
    P = jet.g - base[..., None, None] * eye
    dP = jet.dg - dbase[..., None, None, :] * eye[:, :, None]
    return P, dP


def mean_curvature_expansion(spec, p, R, basis, mass=None):
    """Truncated expansion of the mean curvature of S_R(p) in SAF data.

    2/R - 4m/R^2 + 6m (y-p).p/R^4 + 9m^2/R^3 + G(y), with G the five
    perturbation flux terms; used as an independent check of the exact
    evaluation.
    """
    m = spec.mass if mass is None else mass
    w = basis.rule.points
    y = np.asarray(p, float) + R * w
    return (2.0 / R - 4.0 * m / R**2 + 6.0 * m * (R * w @ np.asarray(p, float)) / R**4
            + 9.0 * m**2 / R**3 + _g_terms(spec, y, w, R, m))


def _g_terms(spec, y, w, R, m):
    P, dP = saf_perturbation(spec, y, m)
    return (0.5 * np.einsum("nijk,ni,nj,nk->n", dP, w, w, w)
            + 2.0 * np.einsum("nij,ni,nj->n", P, w, w) / R
            - np.einsum("niji,nj->n", dP, w)
            - np.einsum("nii->n", P) / R
            + 0.5 * np.einsum("niij,nj->n", dP, w))


def lemma_flux_check(spec, p, R, order=32, mass=None):
    """int_{|y-p|=R} (y - p)^a G(y) d sigma_0, approximately -8 pi m C_CS."""
    from .quadrature import build_sphere_rule

    m = spec.mass if mass is None else mass
    rule = build_sphere_rule(order)
    w = rule.points
    y = np.asarray(p, float) + R * w
    G = _g_terms(spec, y, w, R, m)
    return R**3 * rule.integrate(w * G[:, None])


def _degree1_projection(basis, values):
    """int w^a f dOmega over the unit sphere."""
    return basis.rule.integrate(basis.rule.points * np.asarray(values)[:, None])


def center_update(spec, R, psi, p0=None, lam=None, mass=None, a_exp=0.5,
                  tol=1e-12, max_iter=30):
    """Center p making the degree-1 part of H - H_target vanish for fixed psi.

    Uses the model slope 8 pi m / R^3 of the projection with respect to p,
    iterated until the step falls below ``tol * R``.
    """
    return _center_iterate(spec, R, psi, p0, lam, mass, a_exp, tol, max_iter)[0]


def _center_iterate(spec, R, psi, p0, lam, mass, a_exp, tol, max_iter):
    m = spec.mass if mass is None else mass
    if not m > 0:
        raise UndefinedProblemError("center update needs positive mass")
    lam = R ** (-a_exp) if lam is None else lam
    target = target_mean_curvature(m, R)
    p = np.zeros(3) if p0 is None else np.asarray(p0, dtype=float).copy()
    gain = R**3 / (8.0 * math.pi * m)
    steps = []
    for _ in range(max_iter):
        H = mean_curvature_surface(spec, p, R, psi, lam)
        step = gain * _degree1_projection(psi.basis, H - target)
        p = p - step
        steps.append(float(np.max(np.abs(step))))
        if steps[-1] <= tol * R:
            break
    return p, steps


def solve_cmc(problem, basis=None):
    """Fixed-point construction of the CMC sphere of radius R."""
    spec, R, lam = problem.spec, problem.R, problem.lam
    m, target = problem.mass, problem.target
    basis = basis or problem.make_basis()
    psi = SphericalField.zeros(basis)
    p = np.zeros(3) if problem.p0 is None else np.asarray(problem.p0, float)
    scale = R ** (2.0 + problem.a_exp)
    history, centers = [], []
    for it in range(1, problem.max_iters + 1):
        p, _ = _center_iterate(spec, R, psi, p, lam, m, problem.a_exp,
                             problem.center_tol, problem.center_iters)
        H = mean_curvature_surface(spec, p, R, psi, lam)
        delta = solve_L(basis.field(scale * (H - target)), project=True).scaled(-1.0)
        psi = psi + delta
        history.append(delta.sup_norm())
        centers.append(p.copy())
        if not np.isfinite(history[-1]):
            break
        if history[-1] < problem.tol:
            p, _ = _center_iterate(spec, R, psi, p, lam, m, problem.a_exp,
                                 problem.center_tol, problem.center_iters)
            H = mean_curvature_surface(spec, p, R, psi, lam)
            return CmcSolution(p, psi, H, target, float(np.max(np.abs(H - target))),
                               it, R, lam, history, centers)
    last = CmcSolution(p, psi, None, target, math.nan, len(history), R, lam, history, centers)
    raise DivergenceError(
        f"CMC iteration did not reach tol {problem.tol:.1e} in {problem.max_iters} "
        f"iterations (last step {history[-1]:.3e})", last)


def centroid(solution):
    """Euclidean area centroid of the solved surface."""
    basis = solution.psi.basis
    z, dz, _ = surface_embedding(solution.p, solution.R, solution.lam, solution.psi)
    area = np.linalg.norm(np.cross(dz[0], dz[1]), axis=-1) / np.sin(basis.rule.theta)
    w = basis.rule.weights * area
    return CentroidSample(solution.R, (w @ z) / w.sum())
