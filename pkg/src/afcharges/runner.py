"""YAML experiment plans: validation, dispatch and reproducible reports.

A plan names data sets (built-in catalog names or inline definitions) and a
list of experiments, each running one or more operations on one data set::

    schema: afcharges/plan-v1
    name: demo
    seed: 12345
    quadrature_order: 32
    ladder: [50, 100, 200, 400]
    exponents: [1, 2]
    specs:
      shifted: {family: schwarzschild, m: 1.0, center: [1, 2, 3]}
    experiments:
      - name: charges
        spec: shifted
        operations: [mass, momentum, centers]
      - name: cmc
        spec: shifted
        operations: [cmc]
        cmc: {radii: [100, 200, 400], a_exp: 0.5, lmax: 12}

Outputs go to ``<out_dir>/<plan name>/``: ``report.json`` with the resolved
configuration and every result, plus one CSV per experiment and table.
"""

import copy
import csv
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .catalog import RigidMotion, builtin_specs, spec_from_dict, spec_to_dict
from .charges import check_equivariance, compute_charges, ladder_csv
from .cmc import CmcProblem, centroid, lemma_flux_check, solve_cmc
from .errors import (
    CenterUndefinedError,
    DegenerateMetricError,
    DivergenceError,
    InteriorPointError,
    KernelObstructionError,
    MissingMomentumError,
    NonPositiveConformalFactorError,
    PlanError,
    UndefinedProblemError,
)

__all__ = [
    "PLAN_SCHEMA",
    "REPORT_SCHEMA",
    "OPERATIONS",
    "ResolvedPlan",
    "ExperimentOutcome",
    "RunResult",
    "load_plan",
    "parse_plan",
    "resolve_plan",
    "run_plan",
    "shipped_plan",
    "shipped_plans",
]

PLAN_SCHEMA = "afcharges/plan-v1"
REPORT_SCHEMA = "afcharges/report-v1"
OPERATIONS = ("mass", "momentum", "centers", "equivariance", "cmc", "lemma")

ORDER_RANGE = (4, 256)
LMAX_RANGE = (2, 64)

CMC_DEFAULTS = {"radii": [100.0, 200.0, 400.0], "a_exp": 0.5, "lmax": 12,
                "tol": 1e-10, "max_iters": 50}
EQUIVARIANCE_DEFAULTS = {"motions": 3, "max_shift": 10.0, "tolerance": 2e-2,
                         "allow_reflection": True}
LEMMA_DEFAULTS = {"radii": [200.0, 400.0], "center": [0.0, 0.0, 0.0]}

NUMERICAL_ERRORS = (DivergenceError, DegenerateMetricError, FloatingPointError,
                    CenterUndefinedError, KernelObstructionError,
                    NonPositiveConformalFactorError, np.linalg.LinAlgError)
VALIDATION_ERRORS = (PlanError, InteriorPointError, MissingMomentumError,
                     UndefinedProblemError, ValueError)


# ---------------------------------------------------------------------------
# loading and validation


def shipped_plans():
    """Names of plans bundled with the package."""
    root = resources.files("afcharges") / "data" / "plans"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def shipped_plan(name):
    return resources.files("afcharges") / "data" / "plans" / f"{name}.yaml"


def load_plan(path):
    """Read a plan file, or a shipped plan when ``path`` is a bare plan name."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and str(path) in shipped_plans():
        text = shipped_plan(str(path)).read_text()
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise PlanError("plan", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise PlanError("plan", f"YAML parse error at {where}: "
                        f"{getattr(exc, 'problem', exc)}") from None
    return data


def _num(value, path, lo=-math.inf, hi=math.inf, integer=False, open_lo=False,
         open_hi=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PlanError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise PlanError(path, f"expected an integer, got {value!r}")
    v = int(value) if integer else float(value)
    if (not math.isfinite(v) or v < lo or v > hi or (open_lo and v == lo)
            or (open_hi and v == hi)):
        bounds = f"{'(' if open_lo else '['}{lo}, {hi}{')' if open_hi else ']'}"
        raise PlanError(path, f"value {value!r} outside {bounds}")
    return v


def _list(value, path, min_len=1):
    if not isinstance(value, (list, tuple)):
        raise PlanError(path, "expected a list")
    if len(value) < min_len:
        raise PlanError(path, f"expected at least {min_len} entries")
    return list(value)


def _radii(value, path, min_len):
    radii = [_num(r, f"{path}[{i}]", 0.0, open_lo=True)
             for i, r in enumerate(_list(value, path, min_len))]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise PlanError(path, "radii must be strictly increasing")
    return radii


def _section(exp, key, defaults, path):
    raw = exp.get(key, {}) or {}
    if not isinstance(raw, dict):
        raise PlanError(path, "expected a mapping")
    unknown = set(raw) - set(defaults)
    if unknown:
        raise PlanError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    out = copy.deepcopy(defaults)
    out.update(raw)
    return out


@dataclass
class ResolvedPlan:
    """Validated plan with every default filled in."""

    name: str
    seed: int
    order: int
    ladder: list
    exponents: list
    specs: dict
    experiments: list

    def config(self):
        """Plain-data configuration embedded verbatim in every report."""
        used = sorted({e["spec"] for e in self.experiments})
        return {
            "schema": PLAN_SCHEMA,
            "name": self.name,
            "seed": self.seed,
            "quadrature_order": self.order,
            "ladder": list(self.ladder),
            "exponents": list(self.exponents),
            "specs": {n: spec_to_dict(self.specs[n]) for n in used},
            "experiments": copy.deepcopy(self.experiments),
        }


def parse_plan(data, overrides=None):
    """Validate plan data; ``overrides`` may set order, ladder, seed."""
    overrides = overrides or {}
    if not isinstance(data, dict):
        raise PlanError("plan", "expected a mapping at top level")
    schema = data.get("schema", PLAN_SCHEMA)
    if schema != PLAN_SCHEMA:
        raise PlanError("plan.schema", f"unsupported schema {schema!r}; expected {PLAN_SCHEMA!r}")
    known = {"schema", "name", "seed", "quadrature_order", "ladder", "exponents",
             "specs", "experiments"}
    unknown = set(data) - known
    if unknown:
        raise PlanError(f"plan.{sorted(unknown)[0]}", "unknown field")
    name = str(data.get("name", "plan"))
    seed = overrides.get("seed")
    if seed is None:
        seed = data.get("seed", 0)
    seed = _num(seed, "plan.seed", 0, 2**63 - 1, integer=True)
    order = overrides.get("order")
    if order is None:
        order = data.get("quadrature_order", 32)
    order = _num(order, "plan.quadrature_order", *ORDER_RANGE, integer=True)
    ladder = overrides.get("ladder")
    if ladder is None:
        if "ladder" not in data:
            raise PlanError("plan.ladder", "missing field (radius ladder is required)")
        ladder = data["ladder"]
    ladder = _radii(ladder, "plan.ladder", 3)
    exponents = [_num(q, f"plan.exponents[{i}]", 0.0, open_lo=True)
                 for i, q in enumerate(_list(data.get("exponents", [1, 2]), "plan.exponents"))]
    if len(ladder) < len(exponents) + 1:
        raise PlanError("plan.ladder", "need more radii than fitted coefficients")

    specs = builtin_specs()
    inline = data.get("specs", {}) or {}
    if not isinstance(inline, dict):
        raise PlanError("plan.specs", "expected a mapping of name -> definition")
    for key, definition in inline.items():
        path = f"plan.specs.{key}"
        if not isinstance(definition, dict):
            raise PlanError(path, "expected a mapping")
        definition = dict(definition)
        definition.setdefault("name", str(key))
        specs[str(key)] = spec_from_dict(definition, path)

    exps_raw = _list(data.get("experiments"), "plan.experiments") \
        if "experiments" in data else None
    if exps_raw is None:
        raise PlanError("plan.experiments", "missing field")
    experiments, names = [], set()
    for i, exp in enumerate(exps_raw):
        path = f"plan.experiments[{i}]"
        if not isinstance(exp, dict):
            raise PlanError(path, "expected a mapping")
        ename = str(exp.get("name", f"experiment{i}"))
        if ename in names:
            raise PlanError(f"{path}.name", f"duplicate experiment name {ename!r}")
        names.add(ename)
        if "spec" not in exp:
            raise PlanError(f"{path}.spec", "missing field")
        sname = str(exp["spec"])
        if sname not in specs:
            raise PlanError(f"{path}.spec", f"unknown spec {sname!r}")
        ops = [str(o) for o in _list(exp.get("operations"), f"{path}.operations")]
        for j, op in enumerate(ops):
            if op not in OPERATIONS:
                raise PlanError(f"{path}.operations[{j}]",
                                f"unknown operation {op!r}; choose from {', '.join(OPERATIONS)}")
        resolved = {"name": ename, "spec": sname, "operations": ops}
        if "cmc" in ops:
            c = _section(exp, "cmc", CMC_DEFAULTS, f"{path}.cmc")
            c["radii"] = _radii(c["radii"], f"{path}.cmc.radii", 1)
            c["a_exp"] = _num(c["a_exp"], f"{path}.cmc.a_exp", 0.0, 1.0, open_lo=True,
                              open_hi=True)
            c["lmax"] = _num(c["lmax"], f"{path}.cmc.lmax", *LMAX_RANGE, integer=True)
            c["tol"] = _num(c["tol"], f"{path}.cmc.tol", 0.0, 1.0, open_lo=True)
            c["max_iters"] = _num(c["max_iters"], f"{path}.cmc.max_iters", 1, 10000,
                                  integer=True)
            resolved["cmc"] = c
        if "equivariance" in ops:
            q = _section(exp, "equivariance", EQUIVARIANCE_DEFAULTS, f"{path}.equivariance")
            q["motions"] = _num(q["motions"], f"{path}.equivariance.motions", 1, 1000,
                                integer=True)
            q["max_shift"] = _num(q["max_shift"], f"{path}.equivariance.max_shift", 0.0)
            q["tolerance"] = _num(q["tolerance"], f"{path}.equivariance.tolerance", 0.0,
                                  open_lo=True)
            q["allow_reflection"] = bool(q["allow_reflection"])
            resolved["equivariance"] = q
        if "lemma" in ops:
            lm = _section(exp, "lemma", LEMMA_DEFAULTS, f"{path}.lemma")
            lm["radii"] = _radii(lm["radii"], f"{path}.lemma.radii", 1)
            center = _list(lm["center"], f"{path}.lemma.center", 3)
            if len(center) != 3:
                raise PlanError(f"{path}.lemma.center", "expected 3 components")
            lm["center"] = [_num(v, f"{path}.lemma.center[{k}]") for k, v in enumerate(center)]
            resolved["lemma"] = lm
        experiments.append(resolved)
    return ResolvedPlan(name, seed, order, ladder, exponents, specs, experiments)


def resolve_plan(path, overrides=None):
    return parse_plan(load_plan(path), overrides)


# ---------------------------------------------------------------------------
# execution


@dataclass
class ExperimentOutcome:
    name: str
    spec: str
    status: str = "ok"
    error_kind: str | None = None
    error: str | None = None
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"name": self.name, "spec": self.spec, "status": self.status,
             "results": self.results}
        if self.error is not None:
            d["error_kind"] = self.error_kind
            d["error"] = self.error
        return d


@dataclass
class RunResult:
    report: dict
    outcomes: list
    files: list

    @property
    def exit_code(self):
        kinds = {o.error_kind for o in self.outcomes if o.status != "ok"}
        if "numerical" in kinds:
            return 2
        if "validation" in kinds:
            return 1
        return 0


def _fmt(v):
    return "" if v is None else repr(float(v))


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _arr(v):
    return None if v is None else np.asarray(v, dtype=float).tolist()


CMC_COLUMNS = ["experiment", "spec", "R", "a_exp", "lmax", "quadrature_order", "iterations",
               "target_H", "residual", "relative_deviation", "p_1", "p_2", "p_3",
               "centroid_1", "centroid_2", "centroid_3"]
EQUIVARIANCE_COLUMNS = ["experiment", "spec", "motion", "quadrature_order", "det_O",
                        "a_1", "a_2", "a_3", "C_1", "C_2", "C_3", "moved_1", "moved_2",
                        "moved_3", "expected_1", "expected_2", "expected_3", "defect"]
LEMMA_COLUMNS = ["experiment", "spec", "R", "quadrature_order", "p_1", "p_2", "p_3",
                 "center_1", "center_2", "center_3"]


def _run_charges(plan, exp, spec, out):
    ops = exp["operations"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = compute_charges(spec, plan.ladder, plan.order, tuple(plan.exponents))
    notes = sorted({str(w.message) for w in caught})
    summary = rep.summary()
    keep = {"spec", "radii", "quadrature_order"}
    if "mass" in ops:
        keep |= {"mass", "mass_einstein"}
    if "momentum" in ops:
        keep |= {"linear_momentum", "angular_momentum"}
        if not spec.has_momentum:
            summary["momentum_status"] = "not applicable (no momentum tensor)"
            keep.add("momentum_status")
    if "centers" in ops:
        keep |= {"center_intrinsic", "center_corvino_schoen", "center_status"}
    res = {k: v for k, v in summary.items() if k in keep}
    wanted = set()
    if "mass" in ops:
        wanted |= {"mass_coordinate", "mass_einstein"}
    if "momentum" in ops:
        wanted |= {"linear_momentum", "angular_momentum"}
    if "centers" in ops:
        wanted |= {"center_intrinsic", "center_corvino_schoen"}
    ladders = [r for r in rep.results if r.quantity in wanted]
    res["ladders"] = [r.to_dict() for r in ladders]
    if notes:
        res["warnings"] = notes
    out.results["charges"] = res
    out.tables["charges"] = ladder_csv(ladders, [("experiment", exp["name"])])


def _run_equivariance(plan, exp, spec, out, index):
    cfg = exp["equivariance"]
    rng = np.random.default_rng([plan.seed, index])
    rows, reports = [], []
    worst = 0.0
    for k in range(cfg["motions"]):
        motion = RigidMotion.random(rng, cfg["max_shift"], cfg["allow_reflection"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = check_equivariance(spec, motion, order=plan.order)
        worst = max(worst, rep.defect)
        d = rep.to_dict()
        d["rotation"] = [list(r) for r in motion.O]
        d["translation"] = list(motion.a)
        reports.append(d)
        rows.append([exp["name"], spec.name, k, plan.order,
                     _fmt(np.linalg.det(np.asarray(motion.O)))]
                    + [_fmt(v) for v in motion.a] + [_fmt(v) for v in rep.center]
                    + [_fmt(v) for v in rep.moved_center] + [_fmt(v) for v in rep.expected]
                    + [_fmt(rep.defect)])
    out.results["equivariance"] = {"motions": reports, "max_defect": worst,
                                   "tolerance": cfg["tolerance"],
                                   "within_tolerance": worst <= cfg["tolerance"]}
    out.tables["equivariance"] = _csv(EQUIVARIANCE_COLUMNS, rows)


def _run_cmc(plan, exp, spec, out):
    cfg = exp["cmc"]
    rows, sols = [], []
    for R in cfg["radii"]:
        prob = CmcProblem(spec, R, a_exp=cfg["a_exp"], lmax=cfg["lmax"], tol=cfg["tol"],
                          max_iters=cfg["max_iters"])
        sol = solve_cmc(prob)
        c = centroid(sol).centroid
        s = sol.summary()
        s["centroid"] = c.tolist()
        s["quadrature_order"] = sol.psi.basis.rule.order
        sols.append(s)
        rows.append([exp["name"], spec.name, _fmt(R), _fmt(cfg["a_exp"]), cfg["lmax"],
                     sol.psi.basis.rule.order, sol.iterations, _fmt(sol.target),
                     _fmt(sol.residual), _fmt(sol.relative_deviation)]
                    + [_fmt(v) for v in sol.p] + [_fmt(v) for v in c])
    out.results["cmc"] = {"solutions": sols}
    out.tables["cmc"] = _csv(CMC_COLUMNS, rows)


def _run_lemma(plan, exp, spec, out):
    cfg = exp["lemma"]
    m = spec.mass
    if not m > 0:
        raise UndefinedProblemError(f"flux identity needs positive mass, got m = {m}")
    rows, vals = [], []
    for R in cfg["radii"]:
        v = lemma_flux_check(spec, cfg["center"], R, plan.order)
        c = v / (-8.0 * math.pi * m)
        vals.append({"R": R, "flux": v.tolist(), "center_estimate": c.tolist()})
        rows.append([exp["name"], spec.name, _fmt(R), plan.order]
                    + [_fmt(x) for x in cfg["center"]] + [_fmt(x) for x in c])
    out.results["lemma"] = {"center": cfg["center"], "values": vals}
    out.tables["lemma"] = _csv(LEMMA_COLUMNS, rows)


def _execute(plan, exp, index):
    out = ExperimentOutcome(exp["name"], exp["spec"])
    spec = plan.specs[exp["spec"]]
    ops = exp["operations"]
    steps = []
    if {"mass", "momentum", "centers"} & set(ops):
        steps.append(lambda: _run_charges(plan, exp, spec, out))
    if "equivariance" in ops:
        steps.append(lambda: _run_equivariance(plan, exp, spec, out, index))
    if "cmc" in ops:
        steps.append(lambda: _run_cmc(plan, exp, spec, out))
    if "lemma" in ops:
        steps.append(lambda: _run_lemma(plan, exp, spec, out))
    try:
        for step in steps:
            step()
    except NUMERICAL_ERRORS as exc:
        out.status, out.error_kind = "failed", "numerical"
        out.error = f"{type(exc).__name__}: {exc}"
    except VALIDATION_ERRORS as exc:
        out.status, out.error_kind = "failed", "validation"
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def run_plan(plan, out_dir):
    """Run every experiment; failures are recorded, never fatal to the batch."""
    base = Path(out_dir) / plan.name
    base.mkdir(parents=True, exist_ok=True)
    outcomes = [_execute(plan, exp, i) for i, exp in enumerate(plan.experiments)]
    files = []
    for out in outcomes:
        if out.status != "ok":
            text = _csv(["experiment", "spec", "status", "error_kind", "error"],
                        [[out.name, out.spec, out.status, out.error_kind, out.error]])
            tables = {"failure": text}
        else:
            tables = out.tables
        for kind, text in sorted(tables.items()):
            path = base / f"{out.name}.{kind}.csv"
            path.write_text(text)
            files.append(path)
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "config": plan.config(),
        "experiments": [o.to_dict() for o in outcomes],
        "failures": sum(o.status != "ok" for o in outcomes),
    }
    path = base / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n")
    files.append(path)
    return RunResult(report, outcomes, files)
