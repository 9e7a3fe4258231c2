"""Flux charges of asymptotically flat data and their large-radius limits.

Each charge is a surface integral evaluated on a ladder of radii and then
extrapolated with the model v(r) = v_inf + c1 r^-q1 + c2 r^-q2:

* ADM mass, coordinate form  (1/16pi) int (g_ij,i - g_ii,j) nu^j
* ADM mass, Einstein form    (1/16pi) int G_ij (-2 x^i) nu^j
* linear momentum            (1/8pi)  int pi_ij nu^j
* angular momentum           (1/8pi)  int pi_jk Z_a^j nu^k
* intrinsic center           (1/16pi m) int G_ij Y_a^i nu^j
* Corvino-Schoen center      (1/16pi m) int x^a (g_ij,i - g_ii,j) nu^j
                                         - (h_ia nu^i - h_ii nu^a)

with Y_a = |x|^2 e_a - 2 x^a x and Z_a = e_a x x.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .catalog import parity_profile, pullback, warn_if_nonvacuum
from .errors import CenterUndefinedError, MissingMomentumError
from .quadrature import build_sphere_rule, chart_family, flux_integral
from .tensors import einstein_tensor

__all__ = [
    "MASS_THRESHOLD",
    "DEFAULT_EXPONENTS",
    "LadderResult",
    "ChargeReport",
    "EquivarianceReport",
    "default_ladder",
    "validate_ladder",
    "extrapolate",
    "translation_field",
    "rotation_field",
    "dilation_field",
    "INTEGRANDS",
    "ladder_flux",
    "adm_mass_coordinate",
    "adm_mass_einstein",
    "linear_momentum",
    "angular_momentum",
    "center_intrinsic",
    "center_corvino_schoen",
    "compute_charges",
    "check_equivariance",
]

MASS_THRESHOLD = 1e-6
DEFAULT_EXPONENTS = (1.0, 2.0)
DEFAULT_ORDER = 32
_EPS = np.finfo(float).eps

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


# ---------------------------------------------------------------------------
# conformal Killing fields


def dilation_field(x):
    """-2 x, shape (..., 3)."""
    return -2.0 * np.asarray(x)


def translation_field(x):
    """Y[..., a, i] = |x|^2 delta_ai - 2 x^a x^i."""
    x = np.asarray(x)
    r2 = np.einsum("...i,...i->...", x, x)
    return r2[..., None, None] * np.eye(3) - 2.0 * x[..., :, None] * x[..., None, :]


def rotation_field(x):
    """Z[..., a, j] = (e_a x x)^j; Z_1 = x^2 d_3 - x^3 d_2."""
    return np.einsum("jal,...l->...aj", _LEVI_CIVITA, np.asarray(x))


# ---------------------------------------------------------------------------
# integrands: callables on a SurfaceGeometry


def _mass_vector(dg):
    """g_ij,i - g_ii,j as a covector."""
    return np.einsum("...iji->...j", dg) - np.einsum("...iij->...j", dg)


def _mass_coordinate(geom):
    return np.einsum("...j,...j->...", _mass_vector(geom.jet.dg), geom.normal)


def _mass_einstein(geom):
    G = einstein_tensor(geom.jet)
    return np.einsum("...ij,...i,...j->...", G, dilation_field(geom.points), geom.normal)


def _center_intrinsic(geom):
    G = einstein_tensor(geom.jet)
    Y = translation_field(geom.points)
    return np.einsum("...ij,...ai,...j->...a", G, Y, geom.normal)


def _center_cs(geom):
    jet, nu, x = geom.jet, geom.normal, geom.points
    first = x * np.einsum("...j,...j->...", _mass_vector(jet.dg), nu)[..., None]
    h = jet.g - np.eye(3)
    second = np.einsum("...ia,...i->...a", h, nu) \
        - np.einsum("...ii->...", h)[..., None] * nu
    return first - second


def _momentum(geom):
    if geom.jet.pi is None:
        raise MissingMomentumError("data carry no momentum tensor")
    return np.einsum("...ij,...j->...i", geom.jet.pi, geom.normal)


def _angular(geom):
    if geom.jet.pi is None:
        raise MissingMomentumError("data carry no momentum tensor")
    Z = rotation_field(geom.points)
    return np.einsum("...jk,...aj,...k->...a", geom.jet.pi, Z, geom.normal)


INTEGRANDS = {
    "mass_coordinate": (_mass_coordinate, 1.0 / (16 * math.pi)),
    "mass_einstein": (_mass_einstein, 1.0 / (16 * math.pi)),
    "center_intrinsic": (_center_intrinsic, 1.0 / (16 * math.pi)),
    "center_corvino_schoen": (_center_cs, 1.0 / (16 * math.pi)),
    "linear_momentum": (_momentum, 1.0 / (8 * math.pi)),
    "angular_momentum": (_angular, 1.0 / (8 * math.pi)),
}


# ---------------------------------------------------------------------------
# ladders and extrapolation


def default_ladder(spec):
    scale = max(1.0, spec.interior_radius / 25.0)
    return [50.0 * scale, 100.0 * scale, 200.0 * scale, 400.0 * scale]


def validate_ladder(radii, interior_radius=0.0):
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("radius ladder needs at least 3 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radius ladder must be strictly increasing")
    if radii[0] <= interior_radius:
        raise ValueError(
            f"smallest ladder radius {radii[0]} not outside interior radius {interior_radius}"
        )
    return radii


def extrapolate(radii, values, exponents=DEFAULT_EXPONENTS):
    """Least-squares limit of v(r) = v_inf + sum_k c_k r^-q_k.

    ``values`` has shape ``(len(radii),)`` or ``(len(radii), ncomp)``.
    Returns ``(limit, residual)`` where the residual is the largest absolute
    fit defect over ladder points and components, floored at the roundoff
    level of the data.  A rank-deficient fit warns and falls back to the
    last value, reporting the last increment as the residual.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    vec = v.ndim == 2
    V = v if vec else v[:, None]
    A = np.column_stack([np.ones_like(r)] + [r ** (-float(q)) for q in exponents])
    scale = np.max(np.abs(A), axis=0)
    As = A / scale
    if len(r) < A.shape[1] or np.linalg.matrix_rank(As) < A.shape[1]:
        warnings.warn("rank-deficient extrapolation; using the last ladder value",
                      RuntimeWarning, stacklevel=2)
        limit = V[-1]
        residual = float(np.max(np.abs(V[-1] - V[-2]))) if len(r) > 1 else math.inf
    else:
        coef, *_ = np.linalg.lstsq(As, V, rcond=None)
        limit = coef[0]
        defect = As @ coef - V
        floor = 64 * _EPS * np.max(np.abs(V), initial=0.0) * np.linalg.cond(As)
        residual = float(max(np.max(np.abs(defect)), floor))
    return (limit if vec else float(limit[0])), residual


@dataclass
class LadderResult:
    """Per-radius flux values of one quantity plus the extrapolated limit."""

    quantity: str
    radii: list
    values: np.ndarray
    limit: object
    residual: float
    exponents: tuple
    order: int
    chart: str = "sphere"
    measure: str = "metric"
    spec: str = ""

    def to_dict(self):
        vals = np.asarray(self.values)
        return {
            "quantity": self.quantity,
            "spec": self.spec,
            "chart": self.chart,
            "measure": self.measure,
            "quadrature_order": self.order,
            "radii": list(self.radii),
            "values": vals.tolist(),
            "limit": np.asarray(self.limit).tolist(),
            "residual": self.residual,
            "exponents": list(self.exponents),
        }


def ladder_flux(spec, quantity, radii, order=DEFAULT_ORDER, metric_measure=True,
                chart="sphere", ratios=(1.0, 1.2, 1.5), shift=(0.0, 0.0, 0.0),
                exponents=DEFAULT_EXPONENTS, normalization=1.0):
    """Evaluate one named flux on every ladder radius and extrapolate."""
    integrand, factor = INTEGRANDS[quantity]
    radii = validate_ladder(radii, spec.interior_radius)
    rule = build_sphere_rule(order)
    values = np.array([
        factor * normalization
        * flux_integral(spec, chart_family(chart, r, ratios, shift), integrand, rule,
                        metric_measure)
        for r in radii
    ])
    limit, residual = extrapolate(radii, values, exponents)
    return LadderResult(quantity, radii, values, limit, residual, tuple(exponents),
                        order, chart, "metric" if metric_measure else "euclidean",
                        spec.name)


def adm_mass_coordinate(spec, radii=None, order=DEFAULT_ORDER, metric_measure=True,
                        exponents=DEFAULT_EXPONENTS):
    """ADM mass from the coordinate flux; returns ``(m, LadderResult)``."""
    warn_if_nonvacuum(spec)
    res = ladder_flux(spec, "mass_coordinate", radii or default_ladder(spec), order,
                      metric_measure, exponents=exponents)
    return res.limit, res


def adm_mass_einstein(spec, radii=None, order=DEFAULT_ORDER, metric_measure=True,
                      exponents=DEFAULT_EXPONENTS):
    """ADM mass from the Einstein-tensor flux with the dilation field."""
    warn_if_nonvacuum(spec)
    res = ladder_flux(spec, "mass_einstein", radii or default_ladder(spec), order,
                      metric_measure, exponents=exponents)
    return res.limit, res


def linear_momentum(spec, radii=None, order=DEFAULT_ORDER, metric_measure=True,
                    exponents=DEFAULT_EXPONENTS):
    if not spec.has_momentum:
        raise MissingMomentumError(f"{spec.name} carries no momentum tensor")
    warn_if_nonvacuum(spec)
    res = ladder_flux(spec, "linear_momentum", radii or default_ladder(spec), order,
                      metric_measure, exponents=exponents)
    return res.limit, res


def angular_momentum(spec, radii=None, order=DEFAULT_ORDER, metric_measure=True,
                     exponents=DEFAULT_EXPONENTS):
    if not spec.has_momentum:
        raise MissingMomentumError(f"{spec.name} carries no momentum tensor")
    radii = radii or default_ladder(spec)
    warn_if_nonvacuum(spec)
    if not parity_profile(spec, radii).af_rt:
        warnings.warn(f"{spec.name}: parity decay does not meet the AF-RT condition; "
                      "angular momentum may not converge", RuntimeWarning, stacklevel=2)
    res = ladder_flux(spec, "angular_momentum", radii, order, metric_measure,
                      exponents=exponents)
    return res.limit, res


def _resolve_mass(spec, radii, order, mass, mass_residual):
    if mass is None:
        mass, res = adm_mass_coordinate(spec, radii, order)
        mass_residual = res.residual
    if abs(mass) < MASS_THRESHOLD:
        raise CenterUndefinedError(mass, MASS_THRESHOLD)
    return mass, mass_residual


def _with_mass_error(res, m, mass_residual):
    # C = F / m, so dC = dF / m + |C| dm / m; the flux part is already divided by m
    res.residual = float(res.residual + np.max(np.abs(res.limit)) * mass_residual / abs(m))
    return res


def center_intrinsic(spec, radii=None, chart="sphere", order=DEFAULT_ORDER,
                     metric_measure=True, ratios=(1.0, 1.2, 1.5), shift=(0.0, 0.0, 0.0),
                     exponents=DEFAULT_EXPONENTS, mass=None, mass_residual=0.0):
    """Intrinsic (Einstein-tensor) center of mass; returns ``(C_I, LadderResult)``.

    ``mass`` defaults to the extrapolated coordinate ADM mass on the same
    ladder.  The reported residual includes the mass residual propagated
    through the 1/m normalization.  Raises CenterUndefinedError when
    |m| < MASS_THRESHOLD.
    """
    radii = radii or default_ladder(spec)
    warn_if_nonvacuum(spec)
    m, dm = _resolve_mass(spec, radii, order, mass, mass_residual)
    res = ladder_flux(spec, "center_intrinsic", radii, order, metric_measure, chart,
                      ratios, shift, exponents, normalization=1.0 / m)
    return res.limit, _with_mass_error(res, m, dm)


def center_corvino_schoen(spec, radii=None, order=DEFAULT_ORDER, metric_measure=False,
                          exponents=DEFAULT_EXPONENTS, mass=None, mass_residual=0.0):
    """Corvino-Schoen center; Euclidean normal and area element by default."""
    radii = radii or default_ladder(spec)
    warn_if_nonvacuum(spec)
    m, dm = _resolve_mass(spec, radii, order, mass, mass_residual)
    res = ladder_flux(spec, "center_corvino_schoen", radii, order, metric_measure,
                      exponents=exponents, normalization=1.0 / m)
    return res.limit, _with_mass_error(res, m, dm)


@dataclass
class ChargeReport:
    """All charges of one data set on one ladder.

    Centers are ``None`` with ``center_status`` set to ``"undefined"`` when the
    mass falls below :data:`MASS_THRESHOLD`.
    """

    spec: str
    radii: list
    order: int
    mass: float
    mass_einstein: float
    momentum: np.ndarray | None
    angular: np.ndarray | None
    center_intrinsic: np.ndarray | None
    center_cs: np.ndarray | None
    center_status: str
    results: list = field(default_factory=list)

    def summary(self):
        arr = lambda v: None if v is None else np.asarray(v).tolist()
        return {
            "spec": self.spec,
            "radii": list(self.radii),
            "quadrature_order": self.order,
            "mass": self.mass,
            "mass_einstein": self.mass_einstein,
            "linear_momentum": arr(self.momentum),
            "angular_momentum": arr(self.angular),
            "center_intrinsic": arr(self.center_intrinsic),
            "center_corvino_schoen": arr(self.center_cs),
            "center_status": self.center_status,
        }

    def to_dict(self):
        d = self.summary()
        d["ladders"] = [r.to_dict() for r in self.results]
        return d

    def to_csv(self):
        return ladder_csv(self.results)


CSV_COLUMNS = ["spec", "quantity", "row", "radius", "quadrature_order", "chart",
               "measure", "value_1", "value_2", "value_3", "residual"]


def ladder_csv(results, prefix_columns=()):
    """CSV text: one row per radius, then a ``limit`` footer row per quantity.

    Column order is ``CSV_COLUMNS``; scalar quantities leave value_2/value_3
    empty.  Floats are written with ``repr`` so values round-trip exactly.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for c, _ in prefix_columns] + CSV_COLUMNS)
    pre = [v for _, v in prefix_columns]

    def comps(v):
        v = np.atleast_1d(np.asarray(v, dtype=float)).tolist()
        return [repr(c) for c in v] + [""] * (3 - len(v))

    for res in results:
        head = [res.spec, res.quantity]
        tail = [res.order, res.chart, res.measure]
        for r, v in zip(res.radii, res.values):
            w.writerow(pre + head + ["radius", repr(float(r))] + tail + comps(v) + [""])
        w.writerow(pre + head + ["limit", ""] + tail + comps(res.limit)
                   + [repr(float(res.residual))])
    return buf.getvalue()


def compute_charges(spec, radii=None, order=DEFAULT_ORDER, exponents=DEFAULT_EXPONENTS):
    """Mass (both forms), momenta where defined, and both centers."""
    radii = validate_ladder(radii or default_ladder(spec), spec.interior_radius)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        m, r_m = adm_mass_coordinate(spec, radii, order, exponents=exponents)
        me, r_me = adm_mass_einstein(spec, radii, order, exponents=exponents)
    results = [r_m, r_me]
    P = J = None
    if spec.has_momentum:
        P, r_p = linear_momentum(spec, radii, order, exponents=exponents)
        J, r_j = angular_momentum(spec, radii, order, exponents=exponents)
        results += [r_p, r_j]
    CI = CCS = None
    status = "undefined"
    if abs(m) >= MASS_THRESHOLD:
        dm = r_m.residual
        CI, r_ci = center_intrinsic(spec, radii, order=order, exponents=exponents, mass=m,
                                    mass_residual=dm)
        CCS, r_cs = center_corvino_schoen(spec, radii, order=order, exponents=exponents,
                                          mass=m, mass_residual=dm)
        results += [r_ci, r_cs]
        status = "defined"
    return ChargeReport(spec.name, radii, order, m, me, P, J, CI, CCS, status, results)


@dataclass
class EquivarianceReport:
    """C_I before and after a rigid motion and the defect from O C + a."""

    center: np.ndarray
    moved_center: np.ndarray
    expected: np.ndarray
    defect: float

    def to_dict(self):
        return {"center": self.center.tolist(), "moved_center": self.moved_center.tolist(),
                "expected": self.expected.tolist(), "defect": self.defect}


def check_equivariance(spec, motion, radii=None, order=DEFAULT_ORDER, tolerance=None):
    """Compare C_I of the moved data with O C_I + a.

    With ``tolerance`` set, raises AssertionError when the componentwise defect
    exceeds it.
    """
    moved = pullback(spec, motion)
    radii = radii or default_ladder(moved)
    C, _ = center_intrinsic(spec, radii, order=order)
    Cm, _ = center_intrinsic(moved, radii, order=order)
    expected = np.asarray(motion.O) @ C + np.asarray(motion.a)
    defect = float(np.max(np.abs(Cm - expected)))
    if tolerance is not None and defect > tolerance:
        raise AssertionError(f"equivariance defect {defect:.3e} exceeds {tolerance:.1e}")
    return EquivarianceReport(np.asarray(C), np.asarray(Cm), expected, defect)
