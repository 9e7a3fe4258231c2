"""Command line: ``afcharges run <plan>``, ``afcharges verify <suite>``, ``afcharges list-specs``.

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

import argparse
import os
import sys

from .catalog import builtin_specs
from .errors import PlanError
from .runner import resolve_plan, run_plan, shipped_plans
from .verify import SUITES, run_suite

OUT_DIR_ENV = "AFCHARGES_OUT_DIR"
DEFAULT_OUT_DIR = "afcharges-output"

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _ladder(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated radii, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(
        prog="afcharges",
        description="Charges and centers of mass of asymptotically flat initial data.")
    p.add_argument("--quadrature-order", type=int, default=None,
                   help="sphere rule order (overrides the plan)")
    p.add_argument("--ladder", type=_ladder, default=None,
                   help="comma-separated radius ladder, e.g. 50,100,200,400")
    p.add_argument("--out-dir", default=None,
                   help=f"report directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    p.add_argument("--seed", type=int, default=None, help="random seed (overrides the plan)")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment plan")
    run.add_argument("plan", help=f"plan file or shipped plan name ({', '.join(shipped_plans())})")
    ver = sub.add_parser("verify", help="run an acceptance battery")
    ver.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    sub.add_parser("list-specs", help="list built-in data sets")
    return p


def _cmd_run(args):
    overrides = {"order": args.quadrature_order, "ladder": args.ladder, "seed": args.seed}
    try:
        plan = resolve_plan(args.plan, overrides)
    except PlanError as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
    result = run_plan(plan, out_dir)
    for o in result.outcomes:
        line = f"{o.status:6s}  {o.name} ({o.spec})"
        if o.error:
            line += f": {o.error_kind}: {o.error}"
        print(line)
    print(f"wrote {len(result.files)} files to {os.path.join(out_dir, plan.name)}")
    return result.exit_code


def _cmd_verify(args, parser):
    if args.suite not in SUITES:
        parser.print_usage(sys.stderr)
        print(f"afcharges: error: unknown suite {args.suite!r}; "
              f"choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_VALIDATION
    seed = args.seed
    checks = run_suite(args.suite, seed=seed)
    failed = sum(not c.passed for c in checks)
    print(f"{args.suite}: {len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def _cmd_list_specs():
    print(f"{'name':26s} {'family':22s} {'mass':>8s} {'R0':>8s}  vacuum  momentum")
    for name, spec in builtin_specs().items():
        print(f"{name:26s} {type(spec).__name__:22s} {spec.mass:8.4g} "
              f"{spec.interior_radius:8.4g}  {str(spec.vacuum):6s}  {spec.has_momentum}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "verify":
        return _cmd_verify(args, parser)
    return _cmd_list_specs()


if __name__ == "__main__":
    sys.exit(main())
