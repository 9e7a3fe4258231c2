"""Analytic asymptotically flat initial data with closed-form jets.

Every family is an immutable dataclass exposing ``evaluate(x)`` which returns a
:class:`~afcharges.tensors.MetricJet` at a batch of points.  Derivatives are
exact: each family is assembled from *radial monomials*

    f(x) = (x - c)^e / |x - c|^s,

whose first and second partials are available in closed form.

Families
--------
Flat
    g = delta.
SchwarzschildIsotropic(m, p)
    g = (1 + m / (2|x - p|))^4 delta.
SAF(m, terms)
    g = (1 + 2m/|x|) delta + sum of perturbation terms.
HarmonicAsymptotics(a, b, c, d)
    g = u^4 delta, pi = u^2 (L_X delta - div(X) delta) with
    u = 1 + a/|x| + c.x/|x|^3 and X^i = b^i/|x| + d^(i).x/|x|^3.
Pullback(inner, motion)
    the inner data expressed in the coordinates x' = O x + a.
Sum(base, terms)
    base data plus perturbation terms for the metric and momentum.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateMetricError,
    InteriorPointError,
    MissingMomentumError,
    NonPositiveConformalFactorError,
    PlanError,
)
from .tensors import MetricJet, _inverse, parity_decompose

__all__ = [
    "RadialMonomial",
    "PerturbationTerm",
    "RigidMotion",
    "InitialData",
    "Flat",
    "SchwarzschildIsotropic",
    "SAF",
    "HarmonicAsymptotics",
    "Pullback",
    "Sum",
    "NonVacuumWarning",
    "evaluate_jet",
    "momentum_tensor",
    "pullback",
    "parity_at",
    "parity_profile",
    "ParityReport",
    "spec_to_dict",
    "spec_from_dict",
    "builtin_specs",
    "rotation_matrix",
]

SCHEMA = "afcharges/spec-v1"


class NonVacuumWarning(UserWarning):
    """Charges evaluated on data that solve the constraints only approximately."""


# ---------------------------------------------------------------------------
# radial monomials


def _power(z, n):
    if n < 0:
        return np.zeros_like(z)
    return z**n


def _monomial_jet(z, e):
    e = tuple(int(k) for k in e)
    zs = [z[..., i] for i in range(3)]
    M = _power(zs[0], e[0]) * _power(zs[1], e[1]) * _power(zs[2], e[2])
    dM = np.zeros(z.shape)
    ddM = np.zeros(z.shape + (3,))
    for k in range(3):
        if e[k] == 0:
            continue
        f = [_power(zs[i], e[i]) for i in range(3)]
        f[k] = e[k] * _power(zs[k], e[k] - 1)
        dM[..., k] = f[0] * f[1] * f[2]
        for l in range(3):
            if l == k:
                if e[k] < 2:
                    continue
                h = [_power(zs[i], e[i]) for i in range(3)]
                h[k] = e[k] * (e[k] - 1) * _power(zs[k], e[k] - 2)
            else:
                if e[l] == 0:
                    continue
                h = list(f)
                h[l] = e[l] * _power(zs[l], e[l] - 1)
            ddM[..., k, l] = h[0] * h[1] * h[2]
    return M, dM, ddM


@dataclass(frozen=True)
class RadialMonomial:
    """Scalar ``coeff * (x - center)^exponents / |x - center|^power``."""

    exponents: tuple = (0, 0, 0)
    power: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    coeff: float = 1.0

    @property
    def decay(self):
        """Homogeneity degree, i.e. f = O(|x|^decay)."""
        return sum(self.exponents) - self.power

    def jet(self, x):
        """Value, gradient ``(..., 3)`` and Hessian ``(..., 3, 3)`` at x."""
        z = np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)
        r2 = np.einsum("...i,...i->...", z, z)
        s = float(self.power)
        q = r2 ** (-0.5 * s)
        dq = -s * (r2 ** (-0.5 * s - 1.0))[..., None] * z
        ddq = (-s * (r2 ** (-0.5 * s - 1.0))[..., None, None] * np.eye(3)
               + s * (s + 2.0) * (r2 ** (-0.5 * s - 2.0))[..., None, None]
               * z[..., :, None] * z[..., None, :])
        M, dM, ddM = _monomial_jet(z, self.exponents)
        f = M * q
        df = dM * q[..., None] + M[..., None] * dq
        ddf = (ddM * q[..., None, None]
               + dM[..., :, None] * dq[..., None, :]
               + dq[..., :, None] * dM[..., None, :]
               + M[..., None, None] * ddq)
        c = self.coeff
        return c * f, c * df, c * ddf


def _sum_jets(x, monomials):
    shape = np.shape(x)[:-1]
    f = np.zeros(shape)
    df = np.zeros(shape + (3,))
    ddf = np.zeros(shape + (3, 3))
    for mono in monomials:
        a, b, c = mono.jet(x)
        f = f + a
        df = df + b
        ddf = ddf + c
    return f, df, ddf


@dataclass(frozen=True)
class PerturbationTerm:
    """Symmetric matrix times a radial monomial: A_ij (x-c)^e / |x-c|^s."""

    matrix: tuple
    exponents: tuple = (0, 0, 0)
    power: float = 2.0
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.shape != (3, 3) or not np.allclose(A, A.T, rtol=0, atol=0):
            raise ValueError("perturbation matrix must be a symmetric 3x3")

    @property
    def monomial(self):
        return RadialMonomial(tuple(self.exponents), self.power, tuple(self.center))

    @property
    def decay(self):
        return self.monomial.decay

    @property
    def parity(self):
        """+1 for even, -1 for odd terms (centered at the origin only)."""
        return 1 if sum(self.exponents) % 2 == 0 else -1

    def jet(self, x):
        A = np.asarray(self.matrix, dtype=float)
        f, df, ddf = self.monomial.jet(x)
        return (f[..., None, None] * A,
                A[:, :, None] * df[..., None, None, :],
                A[:, :, None, None] * ddf[..., None, None, :, :])


def _terms_jet(x, terms):
    shape = np.shape(x)[:-1]
    h = np.zeros(shape + (3, 3))
    dh = np.zeros(shape + (3, 3, 3))
    ddh = np.zeros(shape + (3, 3, 3, 3))
    for term in terms:
        a, b, c = term.jet(x)
        h = h + a
        dh = dh + b
        ddh = ddh + c
    return h, dh, ddh


def _conformal_jet(u, du, ddu):
    if np.any(u <= 0):
        raise NonPositiveConformalFactorError(
            f"conformal factor reached {np.min(u):.3e}"
        )
    eye = np.eye(3)
    g = (u**4)[..., None, None] * eye
    dg = (4 * u**3)[..., None, None, None] * du[..., None, None, :] * eye[:, :, None]
    ddu4 = (12 * u**2)[..., None, None] * du[..., :, None] * du[..., None, :] \
        + (4 * u**3)[..., None, None] * ddu
    ddg = ddu4[..., None, None, :, :] * eye[:, :, None, None]
    return g, dg, ddg


# ---------------------------------------------------------------------------
# rigid motions


def rotation_matrix(axis, angle):
    """Rotation by ``angle`` about ``axis`` (Rodrigues formula)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


@dataclass(frozen=True)
class RigidMotion:
    """Orthogonal map plus translation, x' = O x + a."""

    O: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    a: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        O = np.asarray(self.O, dtype=float)
        if O.shape != (3, 3):
            raise ValueError("O must be 3x3")
        if np.linalg.norm(O.T @ O - np.eye(3)) > 1e-12:
            raise ValueError("O is not orthogonal to 1e-12")

    @classmethod
    def from_arrays(cls, O, a):
        O = np.asarray(O, dtype=float)
        return cls(tuple(map(tuple, O.tolist())), tuple(np.asarray(a, float).tolist()))

    @classmethod
    def random(cls, rng, max_shift=10.0, allow_reflection=True):
        """Haar-random orthogonal matrix with a shift of norm at most ``max_shift``."""
        Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
        Q = Q * np.sign(np.diag(R))
        if not allow_reflection and np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        d = rng.standard_normal(3)
        d *= max_shift * rng.uniform() ** (1 / 3) / np.linalg.norm(d)
        # re-orthogonalize so the 1e-12 check survives roundoff
        U, _, Vt = np.linalg.svd(Q)
        return cls.from_arrays(U @ Vt, d)

    def apply(self, x):
        return np.asarray(x, float) @ np.asarray(self.O).T + np.asarray(self.a)

    def inverse(self):
        O = np.asarray(self.O)
        return RigidMotion.from_arrays(O.T, -O.T @ np.asarray(self.a))


# ---------------------------------------------------------------------------
# families


def _vec(v):
    return tuple(float(t) for t in v)


class InitialData:
    """Common evaluation logic.  Subclasses implement ``_metric`` and friends."""

    name: str
    interior_radius: float
    decay_rate: float

    @property
    def mass(self):
        raise NotImplementedError

    @property
    def vacuum(self):
        return False

    @property
    def has_momentum(self):
        return False

    def _metric(self, x):
        raise NotImplementedError

    def _momentum(self, x):
        return None, None

    def evaluate(self, x, check=True):
        """Jet at points ``x`` of shape ``(..., 3)``."""
        x = np.asarray(x, dtype=float)
        if check:
            r = np.linalg.norm(x, axis=-1)
            if not np.all(r > self.interior_radius):
                raise InteriorPointError(
                    f"point at |x| = {np.min(r):.4g} inside interior radius "
                    f"{self.interior_radius:.4g}"
                )
        g, dg, ddg = self._metric(x)
        pi, dpi = self._momentum(x) if self.has_momentum else (None, None)
        return MetricJet(g, dg, ddg, pi, dpi)


@dataclass(frozen=True)
class Flat(InitialData):
    interior_radius: float = 1.0
    decay_rate: float = 1.0
    name: str = "flat"

    mass = property(lambda self: 0.0)
    vacuum = property(lambda self: True)

    def _metric(self, x):
        h, dh, ddh = _terms_jet(x, ())
        return h + np.eye(3), dh, ddh


@dataclass(frozen=True)
class SchwarzschildIsotropic(InitialData):
    m: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    interior_radius: float = -1.0
    decay_rate: float = 1.0
    name: str = "schwarzschild"

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mass must be non-negative")
        object.__setattr__(self, "center", _vec(self.center))
        if self.interior_radius < 0:
            object.__setattr__(self, "interior_radius",
                               float(np.linalg.norm(self.center)) + 1.0)

    mass = property(lambda self: float(self.m))
    vacuum = property(lambda self: True)

    def conformal_factor(self, x):
        u, du, ddu = RadialMonomial((0, 0, 0), 1.0, self.center, 0.5 * self.m).jet(x)
        return u + 1.0, du, ddu

    def _metric(self, x):
        return _conformal_jet(*self.conformal_factor(x))


@dataclass(frozen=True)
class SAF(InitialData):
    m: float = 1.0
    terms: tuple = ()
    momentum_terms: tuple = ()
    interior_radius: float = 2.0
    decay_rate: float = 1.0
    name: str = "saf"

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mass must be non-negative")
        for t in self.terms:
            if t.decay > -2 + 1e-12:
                raise ValueError(f"SAF perturbation must decay like |x|^-2, got {t.decay}")
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "momentum_terms", tuple(self.momentum_terms))

    mass = property(lambda self: float(self.m))
    has_momentum = property(lambda self: bool(self.momentum_terms))
    vacuum = property(lambda self: self.m == 0 and not self.terms and not self.momentum_terms)

    def _metric(self, x):
        f, df, ddf = RadialMonomial((0, 0, 0), 1.0, (0, 0, 0), 2.0 * self.m).jet(x)
        eye = np.eye(3)
        h, dh, ddh = _terms_jet(x, self.terms)
        g = (1.0 + f)[..., None, None] * eye + h
        dg = df[..., None, None, :] * eye[:, :, None] + dh
        ddg = ddf[..., None, None, :, :] * eye[:, :, None, None] + ddh
        _check_positive(g)
        return g, dg, ddg

    def _momentum(self, x):
        pi, dpi, _ = _terms_jet(x, self.momentum_terms)
        return pi, dpi


def _check_positive(g):
    eig = np.linalg.eigvalsh(g)
    if np.any(eig[..., 0] <= 0):
        raise DegenerateMetricError("summed metric is not positive definite")


@dataclass(frozen=True)
class HarmonicAsymptotics(InitialData):
    """Leading-order harmonic asymptotics (u, X)."""

    a: float = 0.5
    b: tuple = (0.0, 0.0, 0.0)
    c: tuple = (0.0, 0.0, 0.0)
    d: tuple = ((0.0, 0.0, 0.0),) * 3
    interior_radius: float = -1.0
    decay_rate: float = 1.0
    name: str = "harmonic"

    def __post_init__(self):
        object.__setattr__(self, "b", _vec(self.b))
        object.__setattr__(self, "c", _vec(self.c))
        object.__setattr__(self, "d", tuple(_vec(row) for row in self.d))
        if self.interior_radius < 0:
            scale = abs(self.a) + math.sqrt(np.linalg.norm(self.c)) + 1.0
            object.__setattr__(self, "interior_radius", 2.0 * scale)

    mass = property(lambda self: 2.0 * float(self.a))

    @property
    def has_momentum(self):
        return True

    @property
    def vacuum(self):
        return not any(self.b) and not any(v for row in self.d for v in row)

    def _u_monomials(self):
        monos = [RadialMonomial((0, 0, 0), 1.0, (0, 0, 0), self.a)]
        for k in range(3):
            if self.c[k]:
                e = [0, 0, 0]
                e[k] = 1
                monos.append(RadialMonomial(tuple(e), 3.0, (0, 0, 0), self.c[k]))
        return monos

    def _x_monomials(self, i):
        monos = []
        if self.b[i]:
            monos.append(RadialMonomial((0, 0, 0), 1.0, (0, 0, 0), self.b[i]))
        for k in range(3):
            if self.d[i][k]:
                e = [0, 0, 0]
                e[k] = 1
                monos.append(RadialMonomial(tuple(e), 3.0, (0, 0, 0), self.d[i][k]))
        return monos

    def conformal_factor(self, x):
        u, du, ddu = _sum_jets(x, self._u_monomials())
        return u + 1.0, du, ddu

    def shift_vector(self, x):
        """X, dX[..., i, k] = X^i_,k and ddX[..., i, k, l]."""
        parts = [_sum_jets(x, self._x_monomials(i)) for i in range(3)]
        X = np.stack([p[0] for p in parts], axis=-1)
        dX = np.stack([p[1] for p in parts], axis=-2)
        ddX = np.stack([p[2] for p in parts], axis=-3)
        return X, dX, ddX

    def _metric(self, x):
        return _conformal_jet(*self.conformal_factor(x))

    def _momentum(self, x):
        u, du, _ = self.conformal_factor(x)
        _, dX, ddX = self.shift_vector(x)
        eye = np.eye(3)
        div = np.einsum("...kk->...", dX)
        Q = dX + np.swapaxes(dX, -1, -2) - div[..., None, None] * eye
        # dQ[..., i, j, k] = X_j,ik + X_i,jk - X_l,lk delta_ij
        ddiv = np.einsum("...llk->...k", ddX)
        dQ = (np.einsum("...jik->...ijk", ddX) + ddX
              - ddiv[..., None, None, :] * eye[:, :, None])
        u2 = u**2
        pi = u2[..., None, None] * Q
        dpi = (2 * u)[..., None, None, None] * du[..., None, None, :] * Q[..., None] \
            + u2[..., None, None, None] * dQ
        return pi, dpi


@dataclass(frozen=True)
class Pullback(InitialData):
    """Inner data re-expressed in coordinates x' = O x + a.

    The jets at x' are the tensor transform of the inner jets at
    x = O^T (x' - a), so an inner center C moves to O C + a.
    """

    inner: InitialData = None
    motion: RigidMotion = field(default_factory=RigidMotion)
    interior_radius: float = -1.0
    name: str = "pullback"

    def __post_init__(self):
        if self.interior_radius < 0:
            object.__setattr__(self, "interior_radius",
                               self.inner.interior_radius + float(np.linalg.norm(self.motion.a)))

    decay_rate = property(lambda self: self.inner.decay_rate)
    mass = property(lambda self: self.inner.mass)
    vacuum = property(lambda self: self.inner.vacuum)
    has_momentum = property(lambda self: self.inner.has_momentum)

    def _inner_points(self, x):
        O = np.asarray(self.motion.O)
        return (np.asarray(x) - np.asarray(self.motion.a)) @ O

    def _metric(self, x):
        B = np.asarray(self.motion.O).T
        g, dg, ddg = self.inner._metric(self._inner_points(x))
        return (np.einsum("...kl,ki,lj->...ij", g, B, B),
                np.einsum("...kln,ki,lj,nm->...ijm", dg, B, B, B),
                np.einsum("...klnp,ki,lj,nm,pq->...ijmq", ddg, B, B, B, B))

    def _momentum(self, x):
        B = np.asarray(self.motion.O).T
        pi, dpi = self.inner._momentum(self._inner_points(x))
        return (np.einsum("...kl,ki,lj->...ij", pi, B, B),
                np.einsum("...kln,ki,lj,nm->...ijm", dpi, B, B, B))


@dataclass(frozen=True)
class Sum(InitialData):
    """Base data plus perturbation terms, added linearly to h and pi."""

    base: InitialData = None
    terms: tuple = ()
    momentum_terms: tuple = ()
    interior_radius: float = -1.0
    name: str = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "momentum_terms", tuple(self.momentum_terms))
        if self.interior_radius < 0:
            object.__setattr__(self, "interior_radius", self.base.interior_radius)

    decay_rate = property(lambda self: self.base.decay_rate)
    mass = property(lambda self: self.base.mass)
    has_momentum = property(lambda self: self.base.has_momentum or bool(self.momentum_terms))
    vacuum = property(lambda self: self.base.vacuum and not self.terms and not self.momentum_terms)

    def _metric(self, x):
        g, dg, ddg = self.base._metric(x)
        h, dh, ddh = _terms_jet(x, self.terms)
        g = g + h
        _check_positive(g)
        return g, dg + dh, ddg + ddh

    def _momentum(self, x):
        shape = np.shape(x)[:-1]
        if self.base.has_momentum:
            pi, dpi = self.base._momentum(x)
        else:
            pi, dpi = np.zeros(shape + (3, 3)), np.zeros(shape + (3, 3, 3))
        q, dq, _ = _terms_jet(x, self.momentum_terms)
        return pi + q, dpi + dq


# ---------------------------------------------------------------------------
# operations


def evaluate_jet(spec, x):
    """Closed-form metric jet (with momentum where defined) at ``x``."""
    return spec.evaluate(x)


def momentum_tensor(spec, x):
    """Momentum tensor pi and its first partials at ``x``."""
    if not spec.has_momentum:
        raise MissingMomentumError(f"{spec.name} carries no momentum tensor")
    jet = spec.evaluate(x)
    return jet.pi, jet.dpi


def pullback(spec, motion):
    return Pullback(inner=spec, motion=motion, name=f"{spec.name}@motion")


def parity_at(spec, x):
    """Parity split of the metric and momentum jets at x and -x.

    Returns a dict of :class:`ParityPair` for ``g``, ``dg`` (derivative of the
    parity parts, so the odd part of dg is d(g^odd)) and ``pi`` when present.
    """
    x = np.asarray(x, dtype=float)
    jp = spec.evaluate(x)
    jm = spec.evaluate(-x)
    out = {
        "g": parity_decompose(jp.g, jm.g),
        # d/dx [f(x) -/+ f(-x)] = f'(x) +/- f'(-x)
        "dg": parity_decompose(jp.dg, -jm.dg),
    }
    if jp.has_momentum:
        out["pi"] = parity_decompose(jp.pi, jm.pi)
    return out


@dataclass
class ParityReport:
    """Measured log-log decay slopes of parity parts on a radius ladder.

    ``slopes[key]`` is ``None`` when the part vanishes identically ("exact
    zero").  ``expected`` holds the exponents implied by the declared decay
    rate: g^odd ~ r^-(1+d), d(g^odd) ~ r^-(2+d), pi^even ~ r^-(2+d).
    """

    radii: list
    sup_norms: dict
    slopes: dict
    expected: dict
    tolerance: float = 0.3

    def status(self, key):
        s = self.slopes[key]
        return "exact zero" if s is None else f"{s:.3f}"

    def compliant(self, key):
        s = self.slopes[key]
        return s is None or s <= self.expected[key] + self.tolerance

    def matches(self, key):
        s = self.slopes[key]
        return s is None or abs(s - self.expected[key]) <= self.tolerance

    @property
    def af_rt(self):
        return all(self.compliant(k) for k in self.slopes)


ZERO_FLOOR = 1e-13


def parity_profile(spec, radii, order=8):
    """Sup-norms of g^odd, d(g^odd) and pi^even over spheres of the given radii."""
    from .quadrature import build_sphere_rule

    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("empty radius ladder")
    if min(radii) <= spec.interior_radius:
        raise InteriorPointError("ladder radius inside the interior region")
    rule = build_sphere_rule(order)
    keys = ["g_odd", "dg_odd"] + (["pi_even"] if spec.has_momentum else [])
    sups = {k: [] for k in keys}
    for r in radii:
        parts = parity_at(spec, r * rule.points)
        sups["g_odd"].append(float(np.max(np.abs(parts["g"].odd_part))))
        sups["dg_odd"].append(float(np.max(np.abs(parts["dg"].odd_part))))
        if "pi_even" in sups:
            sups["pi_even"].append(float(np.max(np.abs(parts["pi"].even_part))))
    slopes = {}
    for k, vals in sups.items():
        if max(vals) <= ZERO_FLOOR:
            slopes[k] = None
        else:
            v = np.maximum(np.asarray(vals), 1e-300)
            slopes[k] = float(np.polyfit(np.log(radii), np.log(v), 1)[0])
    delta = spec.decay_rate
    expected = {"g_odd": -(1 + delta), "dg_odd": -(2 + delta), "pi_even": -(2 + delta)}
    return ParityReport(radii, sups, slopes, {k: expected[k] for k in keys})


def warn_if_nonvacuum(spec):
    if not spec.vacuum:
        warnings.warn(f"{spec.name}: data are not an exact vacuum solution",
                      NonVacuumWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# serialization


def _term_to_dict(t):
    return {"matrix": [list(map(float, row)) for row in t.matrix],
            "exponents": [int(e) for e in t.exponents],
            "power": float(t.power),
            "center": [float(c) for c in t.center]}


def _term_from_dict(d, path):
    try:
        return PerturbationTerm(
            matrix=tuple(tuple(float(v) for v in row) for row in d["matrix"]),
            exponents=tuple(int(e) for e in d.get("exponents", (0, 0, 0))),
            power=float(d.get("power", 2.0)),
            center=tuple(float(c) for c in d.get("center", (0.0, 0.0, 0.0))),
        )
    except KeyError as exc:
        raise PlanError(f"{path}.{exc.args[0]}", "missing field") from None
    except (TypeError, ValueError) as exc:
        raise PlanError(path, str(exc)) from None


def spec_to_dict(spec):
    """Plain-data representation; floats round-trip exactly through YAML/JSON."""
    if isinstance(spec, Flat):
        d = {"family": "flat"}
    elif isinstance(spec, SchwarzschildIsotropic):
        d = {"family": "schwarzschild", "m": spec.m, "center": list(spec.center)}
    elif isinstance(spec, SAF):
        d = {"family": "saf", "m": spec.m,
             "terms": [_term_to_dict(t) for t in spec.terms],
             "momentum_terms": [_term_to_dict(t) for t in spec.momentum_terms]}
    elif isinstance(spec, HarmonicAsymptotics):
        d = {"family": "harmonic", "a": spec.a, "b": list(spec.b),
             "c": list(spec.c), "d": [list(r) for r in spec.d]}
    elif isinstance(spec, Pullback):
        d = {"family": "pullback", "inner": spec_to_dict(spec.inner),
             "rotation": [list(r) for r in spec.motion.O],
             "translation": list(spec.motion.a)}
    elif isinstance(spec, Sum):
        d = {"family": "sum", "base": spec_to_dict(spec.base),
             "terms": [_term_to_dict(t) for t in spec.terms],
             "momentum_terms": [_term_to_dict(t) for t in spec.momentum_terms]}
    else:
        raise TypeError(f"cannot serialize {type(spec).__name__}")
    d["name"] = spec.name
    d["interior_radius"] = float(spec.interior_radius)
    if not isinstance(spec, (Pullback, Sum)):
        d["decay_rate"] = float(spec.decay_rate)
    return d


def _require(d, key, path):
    if key not in d:
        raise PlanError(f"{path}.{key}", "missing field")
    return d[key]


def spec_from_dict(d, path="spec"):
    """Inverse of :func:`spec_to_dict` with field-path diagnostics."""
    if not isinstance(d, dict):
        raise PlanError(path, "expected a mapping")
    family = _require(d, "family", path)
    common = {}
    if "name" in d:
        common["name"] = str(d["name"])
    if "interior_radius" in d:
        common["interior_radius"] = float(d["interior_radius"])
    if "decay_rate" in d and family not in ("pullback", "sum"):
        common["decay_rate"] = float(d["decay_rate"])
    try:
        if family == "flat":
            return Flat(**common)
        if family == "schwarzschild":
            return SchwarzschildIsotropic(
                m=float(_require(d, "m", path)),
                center=tuple(float(v) for v in d.get("center", (0, 0, 0))), **common)
        if family == "saf":
            return SAF(
                m=float(_require(d, "m", path)),
                terms=tuple(_term_from_dict(t, f"{path}.terms[{i}]")
                            for i, t in enumerate(d.get("terms", []))),
                momentum_terms=tuple(_term_from_dict(t, f"{path}.momentum_terms[{i}]")
                                     for i, t in enumerate(d.get("momentum_terms", []))),
                **common)
        if family == "harmonic":
            return HarmonicAsymptotics(
                a=float(_require(d, "a", path)),
                b=tuple(float(v) for v in d.get("b", (0, 0, 0))),
                c=tuple(float(v) for v in d.get("c", (0, 0, 0))),
                d=tuple(tuple(float(v) for v in row)
                        for row in d.get("d", ((0, 0, 0),) * 3)),
                **common)
        if family == "pullback":
            motion = RigidMotion(
                O=tuple(tuple(float(v) for v in row)
                        for row in _require(d, "rotation", path)),
                a=tuple(float(v) for v in d.get("translation", (0, 0, 0))))
            inner = spec_from_dict(_require(d, "inner", path), f"{path}.inner")
            return Pullback(inner=inner, motion=motion, **common)
        if family == "sum":
            base = spec_from_dict(_require(d, "base", path), f"{path}.base")
            return Sum(
                base=base,
                terms=tuple(_term_from_dict(t, f"{path}.terms[{i}]")
                            for i, t in enumerate(d.get("terms", []))),
                momentum_terms=tuple(_term_from_dict(t, f"{path}.momentum_terms[{i}]")
                                     for i, t in enumerate(d.get("momentum_terms", []))),
                **common)
    except PlanError:
        raise
    except (TypeError, ValueError) as exc:
        raise PlanError(path, str(exc)) from None
    raise PlanError(f"{path}.family", f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# shipped catalog


def _diag(*v):
    return tuple(tuple(float(v[i]) if i == j else 0.0 for j in range(3)) for i in range(3))


def _sym(entries):
    A = np.zeros((3, 3))
    for (i, j), v in entries.items():
        A[i, j] = A[j, i] = v
    return tuple(map(tuple, A.tolist()))


def builtin_specs():
    """Named data sets used by the shipped plans and verification suites."""
    eye = _diag(1, 1, 1)
    specs = [
        Flat(name="flat"),
        SchwarzschildIsotropic(1.0, (0, 0, 0), name="schwarzschild_m1"),
        SchwarzschildIsotropic(1.0, (1, 2, 3), name="schwarzschild_p123"),
        SchwarzschildIsotropic(1.0, (1, 0, 0), name="schwarzschild_p100"),
        Sum(SchwarzschildIsotropic(1.0), (PerturbationTerm(eye, (0, 0, 0), 2.0),),
            name="schwarzschild_even_iso"),
        Sum(SchwarzschildIsotropic(2.0, (-1.0, 0.5, 2.0)),
            (PerturbationTerm(_diag(1, -1, 0), (0, 0, 0), 2.0),
             PerturbationTerm(_sym({(0, 1): 3.0, (2, 2): 1.0}), (1, 1, 0), 4.0)),
            name="schwarzschild_even_aniso"),
        HarmonicAsymptotics(a=0.5, c=(0.5, 1.0, 1.5), name="harmonic_center123"),
        HarmonicAsymptotics(a=0.75, b=(0.4, -0.2, 0.1), c=(-0.3, 0.6, 0.15),
                            d=((0.0, 0.5, -0.2), (-0.5, 0.0, 0.3), (0.2, -0.3, 0.0)),
                            name="harmonic_momentum"),
        SAF(1.0, (PerturbationTerm(_diag(1, -1, 0), (0, 0, 0), 2.0),), name="saf_even"),
        Sum(SchwarzschildIsotropic(1.0, (1, 2, 3)),
            (PerturbationTerm(_diag(1, -1, 0), (0, 0, 0), 2.0),), name="saf_schwarzschild_p123"),
    ]
    return {s.name: s for s in specs}
