"""Command line entry point."""

import argparse
import sys

from .burgers import RiemannProblem, SpaceTimePoint, riemann_solution
from .experiments import (
    SCENARIOS,
    BufferAuditError,
    ExperimentSpec,
    ObservationWindowError,
    SpecError,
    default_spec,
    emit_report,
    run,
)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _sets(text):
    return tuple(tuple(int(x) for x in part.split(",") if x.strip()) for part in text.split("|"))


def _intervals(text):
    out = []
    for part in text.split(","):
        a, b = part.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def build_parser():
    p = argparse.ArgumentParser(prog="tasep-hydro", description="TASEP simulations checked against Burgers solutions.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its report")
    r.add_argument("scenario", choices=SCENARIOS)
    r.add_argument("--config", help="flat key = value file with spec fields")
    r.add_argument("--lambda", dest="lam", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--horizon", type=float)
    r.add_argument("--replicas", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--buffer-mult", dest="buffer_mult", type=float)
    r.add_argument("--obs-halfwidth", dest="obs_halfwidth", type=int)
    r.add_argument("--speeds", type=_floats, help="flux line speeds, comma separated")
    r.add_argument("--shifts", type=_floats, help="macroscopic positions r, comma separated")
    r.add_argument("--sets", type=_sets, help="site sets such as '0|0,1|0,2,5'")
    r.add_argument("--intervals", type=_intervals, help="intervals such as '-0.5:0.5,0.2:1'")
    r.add_argument("--band", type=float)
    r.add_argument("--max-stderr", dest="max_stderr", type=float)
    r.add_argument("--target", help="scenario audited by buffer-audit")
    r.add_argument("--out", default="-", help="output file ('-' for stdout)")
    r.add_argument("--format", choices=("json", "csv"), default="json")

    b = sub.add_parser("burgers", help="exact Burgers solutions")
    bsub = b.add_subparsers(dest="burgers_command", required=True)
    e = bsub.add_parser("eval", help="print u(r, t) for step data")
    e.add_argument("--lambda", dest="lam", type=float, required=True)
    e.add_argument("--rho", type=float, required=True)
    e.add_argument("--r", type=float, required=True)
    e.add_argument("--t", type=float, required=True)

    sub.add_parser("list-scenarios", help="list scenario names")
    return p


_SPEC_KEYS = ("lam", "rho", "alpha", "horizon", "replicas", "seed", "buffer_mult", "obs_halfwidth",
              "speeds", "shifts", "sets", "intervals", "band", "max_stderr", "target")


def spec_from_args(args):
    over = {k: getattr(args, k) for k in _SPEC_KEYS if getattr(args, k) is not None}
    if args.config:
        with open(args.config) as fh:
            spec = ExperimentSpec.from_text(fh.read())
        if spec.scenario != args.scenario:
            raise SpecError(f"config is for {spec.scenario}, not {args.scenario}")
    else:
        spec = default_spec(args.scenario)
    return spec.replace(**over)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for s in SCENARIOS:
            print(s)
        return 0
    if args.command == "burgers":
        try:
            u = riemann_solution(RiemannProblem(args.lam, args.rho), SpaceTimePoint(args.r, args.t))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(repr(u))
        return 0
    try:
        spec = spec_from_args(args)
        report = run(spec)
        text = emit_report(report, None if args.out == "-" else args.out, args.format)
    except (SpecError, ValueError, ObservationWindowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BufferAuditError as exc:
        print(f"buffer audit failed: {exc}", file=sys.stderr)
        return 3
    if args.out == "-":
        sys.stdout.write(text)
    else:
        status = "pass" if report.passed else "FAIL"
        print(f"{spec.scenario}: {status} ({args.out})", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
