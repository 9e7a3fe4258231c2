"""Acceptance and invariant batteries.

Each ``criterion_*`` function runs one numbered acceptance check and returns a
list of :class:`Check` records; :data:`SUITES` groups them for the command
line.  Bounds are fixed here and never adjusted by callers.
"""

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .catalog import (
    RigidMotion,
    SchwarzschildIsotropic,
    builtin_specs,
    parity_profile,
)
from .charges import (
    adm_mass_coordinate,
    adm_mass_einstein,
    center_corvino_schoen,
    center_intrinsic,
    check_equivariance,
    default_ladder,
    ladder_flux,
)
from .cmc import CmcProblem, centroid, lemma_flux_check, solve_cmc
from .harmonics import SphericalBasis, apply_L, solve_L
from .quadrature import build_sphere_rule
from .tensors import MetricJet, constraint_residual, einstein_tensor, tensor_divergence

__all__ = [
    "Check",
    "SUITES",
    "CRITERIA",
    "run_suite",
    "decay_exponent",
    "polynomial_metric",
    "sphere_monomial_integral",
]

LADDER = (50.0, 100.0, 200.0, 400.0)
ORDER = 32
CMC_RADII = (100.0, 200.0, 400.0)
CMC_LMAX = 12
# centroid defects below this are roundoff; a decay fit on them is meaningless
ROUNDOFF_FLOOR = 1e-9

# AF-RT catalog data with m >= 0.1 used by the center comparisons
CENTER_SPECS = (
    "schwarzschild_m1",
    "schwarzschild_p123",
    "schwarzschild_p100",
    "schwarzschild_even_iso",
    "schwarzschild_even_aniso",
    "harmonic_center123",
    "harmonic_momentum",
    "saf_even",
    "saf_schwarzschild_p123",
)


@dataclass
class Check:
    """Outcome of one numeric check.

    ``kind`` is ``"max"`` when ``value`` must not exceed ``bound`` and
    ``"min"`` when it must reach it.
    """

    name: str
    value: float
    bound: float
    kind: str = "max"
    detail: str = ""
    override: bool | None = None

    @property
    def passed(self):
        if self.override is not None:
            return self.override
        if not math.isfinite(self.value):
            return False
        return self.value <= self.bound if self.kind == "max" else self.value >= self.bound

    @property
    def margin(self):
        return self.bound - self.value if self.kind == "max" else self.value - self.bound

    def line(self):
        rel = "<=" if self.kind == "max" else ">="
        text = (f"{'PASS' if self.passed else 'FAIL'}  {self.name}: "
                f"{self.value:.3e} {rel} {self.bound:.3e} (margin {self.margin:+.3e})")
        return text + (f"  [{self.detail}]" if self.detail else "")

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "bound": self.bound, "kind": self.kind, "margin": self.margin,
                "detail": self.detail}


def decay_exponent(radii, defects):
    """Exponent q of a log-log fit defect ~ c R^-q."""
    slope = np.polyfit(np.log(np.asarray(radii, float)),
                       np.log(np.asarray(defects, float)), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# 1. Schwarzschild ground truth


def criterion_schwarzschild(order=ORDER, ladder=LADDER):
    t0 = time.perf_counter()
    spec = builtin_specs()["schwarzschild_p123"]
    truth = np.array([1.0, 2.0, 3.0])
    m, _ = adm_mass_coordinate(spec, list(ladder), order)
    me, _ = adm_mass_einstein(spec, list(ladder), order)
    ci, _ = center_intrinsic(spec, list(ladder), order=order, mass=m)
    cs, _ = center_corvino_schoen(spec, list(ladder), order=order, mass=m)
    elapsed = time.perf_counter() - t0
    return [
        Check("1 mass (coordinate flux) = 1", abs(m - 1.0), 2e-3, detail=f"m={m:.9f}"),
        Check("1 mass (Einstein flux) = 1", abs(me - 1.0), 2e-3, detail=f"m={me:.9f}"),
        Check("1 C_I = (1,2,3)", float(np.max(np.abs(ci - truth))), 1e-2,
              detail=f"C_I={np.round(ci, 7).tolist()}"),
        Check("1 C_CS = (1,2,3)", float(np.max(np.abs(cs - truth))), 1e-2,
              detail=f"C_CS={np.round(cs, 7).tolist()}"),
        Check("1 runtime [s]", elapsed, 60.0),
    ]


# ---------------------------------------------------------------------------
# 2. C_I = C_CS


def criterion_centers_agree(order=ORDER, names=CENTER_SPECS):
    specs = builtin_specs()
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            spec = specs[name]
            ladder = default_ladder(spec)
            if not parity_profile(spec, ladder).af_rt:
                checks.append(Check(f"2 {name} AF-RT", math.inf, 0.0, detail="not AF-RT"))
                continue
            m, _ = adm_mass_coordinate(spec, ladder, order)
            ci, _ = center_intrinsic(spec, ladder, order=order, mass=m)
            cs, _ = center_corvino_schoen(spec, ladder, order=order, mass=m)
            checks.append(Check(f"2 |C_I - C_CS| {name}", float(np.max(np.abs(ci - cs))),
                                2e-2, detail=f"C_I={np.round(ci, 6).tolist()}"))
    checks.append(Check("2 number of specs compared", float(len(names)), 5.0, kind="min"))
    return checks


# ---------------------------------------------------------------------------
# 3. equivariance under rigid motions


def criterion_equivariance(seed=2024, count=10, order=ORDER):
    rng = np.random.default_rng(seed)
    spec = SchwarzschildIsotropic(1.0, (1.0, 0.0, 0.0), name="schwarzschild_p100")
    checks = []
    for k in range(count):
        motion = RigidMotion.random(rng, max_shift=10.0, allow_reflection=False)
        if k % 2:
            # odd draws cover improper motions
            motion = RigidMotion.from_arrays(-np.asarray(motion.O), motion.a)
        rep = check_equivariance(spec, motion, order=order)
        checks.append(Check(f"3 motion {k}: |C_I' - (O C_I + a)|", rep.defect, 2e-2,
                            detail=f"|a|={np.linalg.norm(motion.a):.2f} "
                                   f"det O={np.linalg.det(motion.O):+.0f}"))
    return checks


# ---------------------------------------------------------------------------
# 4. CMC centroids


def _cmc_centroids(spec, radii, lmax):
    sols, cents = [], []
    for R in radii:
        sol = solve_cmc(CmcProblem(spec, R, lmax=lmax))
        sols.append(sol)
        cents.append(centroid(sol).centroid)
    return sols, np.array(cents)


def criterion_cmc_centroids(radii=CMC_RADII, lmax=CMC_LMAX):
    t0 = time.perf_counter()
    specs = builtin_specs()
    checks = []
    # exact family, then the same center with an even perturbation added
    for name in ("schwarzschild_p123", "saf_schwarzschild_p123"):
        spec = specs[name]
        ref = np.array([1.0, 2.0, 3.0])
        sols, cents = _cmc_centroids(spec, radii, lmax)
        defects = np.max(np.abs(cents - ref), axis=1)
        for R, sol in zip(radii, sols):
            checks.append(Check(f"4 {name} R={R:g} relative sup |H - H_target|",
                                sol.relative_deviation, 1e-4))
        checks.append(Check(f"4 {name} final centroid defect", float(defects[-1]), 5e-2,
                            detail=f"centroid={np.round(cents[-1], 8).tolist()}"))
        if np.max(defects) <= ROUNDOFF_FLOOR:
            checks.append(Check(f"4 {name} centroid decay exponent", math.nan, 0.4, "min",
                                detail=f"defects {np.max(defects):.1e} are at roundoff; "
                                       "exponent not identifiable",
                                override=True))
        else:
            q = decay_exponent(radii, defects)
            checks.append(Check(f"4 {name} centroid decay exponent", q, 0.4, "min",
                                detail="defects " + ", ".join(f"{d:.2e}" for d in defects)))
    checks.append(Check("4 runtime [s]", time.perf_counter() - t0, 300.0))
    return checks


# ---------------------------------------------------------------------------
# 5. lemma flux identity


def criterion_lemma(radii=(200.0, 400.0), order=ORDER):
    spec = builtin_specs()["schwarzschild_p123"]
    C = np.array([1.0, 2.0, 3.0])
    rel, absd = [], []
    for R in radii:
        v = lemma_flux_check(spec, np.zeros(3), R, order) / (-8.0 * math.pi * spec.mass)
        rel.append(float(np.linalg.norm(v - C) / np.linalg.norm(C)))
        absd.append(float(np.max(np.abs(v - C))))
    ratio = rel[1] / rel[0]
    return [
        Check(f"5 relative defect at R={radii[0]:g}", rel[0], 5.0 / radii[0],
              detail=f"componentwise absolute {absd[0]:.3e}"),
        Check(f"5 defect ratio R={radii[1]:g}/R={radii[0]:g} (upper)", ratio, 0.5 * 1.5),
        Check(f"5 defect ratio R={radii[1]:g}/R={radii[0]:g} (lower)", ratio, 0.5 / 1.5, "min"),
    ]


# ---------------------------------------------------------------------------
# 6. surface independence


def criterion_surface_independence(order=ORDER,
                                   names=("schwarzschild_p123", "schwarzschild_even_aniso",
                                          "harmonic_center123", "saf_schwarzschild_p123"),
                                   ratios=((1.0, 1.2, 1.5), (1.5, 1.0, 1.25))):
    specs = builtin_specs()
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            spec = specs[name]
            ladder = default_ladder(spec)
            m, _ = adm_mass_coordinate(spec, ladder, order)
            ref, _ = center_intrinsic(spec, ladder, order=order, mass=m)
            for rat in ratios:
                c, _ = center_intrinsic(spec, ladder, chart="ellipsoid", order=order,
                                        ratios=rat, mass=m)
                checks.append(Check(f"6 {name} ellipsoid {rat} vs sphere",
                                    float(np.max(np.abs(c - ref))), 2e-2))
    return checks


# ---------------------------------------------------------------------------
# 7. invariant suites


def sphere_monomial_integral(a, b, c):
    """Exact integral of x^a y^b z^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    la = gammaln((a + 1) / 2) + gammaln((b + 1) / 2) + gammaln((c + 1) / 2)
    return 2.0 * math.exp(la - gammaln((a + b + c + 3) / 2))


def _quadrature_exactness(orders=(2, 4, 8, 16)):
    worst = 0.0
    for n in orders:
        rule = build_sphere_rule(n)
        x, y, z = rule.points.T
        for a, b in itertools.product(range(2 * n), repeat=2):
            for c in range(2 * n - a - b):
                approx = rule.integrate(x**a * y**b * z**c)
                worst = max(worst, abs(approx - sphere_monomial_integral(a, b, c)))
    return Check("7 quadrature exactness, degree <= 2n-1", worst, 1e-12)


def polynomial_metric(rng, scale=0.1):
    """Random quadratic metric g = I + A x + x B x with its exact jet function."""
    A = rng.normal(size=(3, 3, 3)) * scale
    B = rng.normal(size=(3, 3, 3, 3)) * scale
    A = 0.5 * (A + A.transpose(1, 0, 2))
    B = 0.5 * (B + B.transpose(1, 0, 2, 3))
    B = 0.5 * (B + B.transpose(0, 1, 3, 2))

    def jet(x):
        x = np.asarray(x, float)
        g = (np.eye(3) + np.einsum("ijk,...k->...ij", A, x)
             + np.einsum("ijkl,...k,...l->...ij", B, x, x))
        dg = A + 2.0 * np.einsum("ijkl,...l->...ijk", B, x)
        ddg = np.broadcast_to(2.0 * B, x.shape[:-1] + (3, 3, 3, 3)).copy()
        return MetricJet(g, dg, ddg)

    return jet


def bianchi_residual(jet_fn, points, h=1e-3):
    """max |div_g G| with the derivative of G taken by 4th-order differences."""
    points = np.asarray(points, float)
    dG = np.zeros(points.shape[:-1] + (3, 3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        Gs = [einstein_tensor(jet_fn(points + s * e)) for s in (-2, -1, 1, 2)]
        dG[..., k] = (Gs[0] - 8 * Gs[1] + 8 * Gs[2] - Gs[3]) / (12 * h)
    jet = jet_fn(points)
    return float(np.max(np.abs(tensor_divergence(jet, einstein_tensor(jet), dG))))


def _bianchi(seed=7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        jet_fn = polynomial_metric(rng)
        pts = rng.uniform(-0.5, 0.5, size=(20, 3))
        worst = max(worst, bianchi_residual(jet_fn, pts))
    return Check("7 contracted Bianchi residual (random polynomial metrics)", worst, 1e-6)


def _constraints():
    rule = build_sphere_rule(8)
    worst, names = 0.0, []
    for name, spec in builtin_specs().items():
        if not spec.vacuum:
            continue
        names.append(name)
        r0 = max(5.0, spec.interior_radius + 1.0)
        for r in (r0, 4 * r0, 50 * r0):
            jet = spec.evaluate(r * rule.points)
            if not jet.has_momentum:
                jet = jet.with_momentum(np.zeros_like(jet.g), np.zeros_like(jet.dg))
            ham, mom = constraint_residual(jet)
            worst = max(worst, float(np.max(np.abs(ham))), float(np.max(np.abs(mom))))
    return Check("7 constraint residual on vacuum specs", worst, 1e-8,
                 detail=", ".join(names))


def _band_identities(lmax=16, seed=3):
    basis = SphericalBasis(lmax, lmax + 4)
    th = basis.rule.theta
    st, ct = np.sin(th)[:, None], np.cos(th)[:, None]
    lap = basis.ddY[0, 0] + ct / st * basis.dY[0] + basis.ddY[1, 1] / st**2
    l = basis.degree
    eig = float(np.max(np.abs(lap + l * (l + 1) * basis.Y)))
    rng = np.random.default_rng(seed)
    f = basis.field(basis.synthesize(rng.normal(size=basis.size)))
    back = apply_L(solve_L(f))
    proj = f.coeffs.copy()
    proj[l == 1] = 0.0
    inv = float(np.max(np.abs(back.coeffs - proj)))
    c = rng.normal(size=basis.size)
    rt = float(np.max(np.abs(basis.analyze(basis.synthesize(c)) - c)))
    return [
        Check("7 Laplacian of Y_lm = -l(l+1) Y_lm", eig, 1e-10),
        Check("7 L solve_L f = f off the kernel", inv, 1e-10),
        Check("7 harmonic analysis/synthesis round trip", rt, 1e-10),
    ]


def _parity():
    worst, bad = 0.0, []
    for name, spec in builtin_specs().items():
        rep = parity_profile(spec, default_ladder(spec))
        for key, s in rep.slopes.items():
            if s is not None:
                dev = abs(s - rep.expected[key])
                worst = max(worst, dev)
                if not rep.matches(key):
                    bad.append(f"{name}.{key}")
    return Check("7 parity decay slopes vs declared", worst, 0.3,
                 detail="mismatch: " + ", ".join(bad) if bad else "")


def _measure_agreement(order=ORDER, names=CENTER_SPECS):
    specs = builtin_specs()
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            spec = specs[name]
            ladder = default_ladder(spec)
            for q in ("mass_coordinate", "center_intrinsic"):
                norm = 1.0 if q.startswith("mass") else 1.0 / spec.mass
                a = ladder_flux(spec, q, ladder, order, True, normalization=norm)
                b = ladder_flux(spec, q, ladder, order, False, normalization=norm)
                diff = float(np.max(np.abs(np.asarray(a.limit) - np.asarray(b.limit))))
                checks.append(Check(f"7 metric vs Euclidean limit {name} {q}",
                                    diff, a.residual + b.residual,
                                    detail="bound = sum of fit residuals"))
    return checks


def criterion_properties():
    t0 = time.perf_counter()
    checks = [_quadrature_exactness(), _bianchi(), _constraints()]
    checks += _band_identities()
    checks.append(_parity())
    checks += _measure_agreement()
    checks.append(Check("7 runtime [s]", time.perf_counter() - t0, 600.0))
    return checks


CRITERIA = {
    1: criterion_schwarzschild,
    2: criterion_centers_agree,
    3: criterion_equivariance,
    4: criterion_cmc_centroids,
    5: criterion_lemma,
    6: criterion_surface_independence,
    7: criterion_properties,
}

SUITES = {
    "theorem1": (2,),
    "theorem2": (4, 5),
    "equivariance": (3,),
    "oracle": (1, 6, 7),
    "all": (1, 2, 3, 4, 5, 6, 7),
}


def run_suite(name, emit=print, seed=None):
    """Run a named suite, emitting one line per check; returns the checks."""
    if name not in SUITES:
        raise KeyError(name)
    checks = []
    for k in SUITES[name]:
        fn = CRITERIA[k]
        batch = fn(seed=seed) if (k == 3 and seed is not None) else fn()
        for c in batch:
            emit(c.line())
        checks += batch
    return checks
