"""``reflexive`` command line: validate | audit | solve | scan | oracle | rerun.

Exit codes: 0 pass, 1 fail, 2 usage/malformed input, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ReflexiveError
from .families import load_field_spec
from .flat_surfaces import EuclideanCylinder, cylinder_extremal_length, discrete_extremal_length_oracle
from .homology_config import ConfigurationDatum, validate_datum
from .hypothesis_audit import (
    DEFAULT_BLOW_THRESHOLD,
    DEFAULT_MARGIN,
    audit_degeneration,
    audit_pushability,
    audit_regularity,
    sample_points,
)
from .reflexive_solver import SolveOptions, certify_reflexive, grid_scan, push_descent

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def _dumps(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _write_manifest(args, argv, started, outputs, inputs):
    target = args.manifest
    if target is None:
        primary = next((o for o in outputs if o), None)
        if primary is None:
            return
        target = str(primary) + ".manifest.json"
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "inputs": [str(p) for p in inputs],
        "options": opts,
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "outputs": [str(o) for o in outputs if o],
    }
    Path(target).write_text(_dumps(manifest), encoding="utf-8", newline="\n")


def _floats(text, name):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ReflexiveError("usage", f"cannot parse {name} {text!r}") from None


def _parse_box(text):
    box = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            box.append((float(lo), float(hi)))
        except ValueError:
            raise ReflexiveError("usage", f"box entries look like lo:hi, got {part!r}") from None
    return box


def cmd_validate(args):
    try:
        d = ConfigurationDatum.from_json(args.config, complete_kernel=args.complete_kernel)
    except OSError as exc:
        raise ReflexiveError("malformed", str(exc)) from exc
    report = validate_datum(d)
    _emit(_dumps(report.to_dict()), args.out)
    return (EXIT_PASS if report.ok else EXIT_FAIL), [args.out], [args.config]


def cmd_audit(args):
    f, push, _ = load_field_spec(args.field_spec)
    wanted = ["h1", "h2", "h3"] if args.hypothesis == "all" else [args.hypothesis]
    reports = []
    samples = None
    if {"h1", "h3"} & set(wanted):
        samples = sample_points(f, args.samples, args.seed)
    if "h1" in wanted:
        reports.append(audit_regularity(f, samples, rank_tol=args.rank_tol, seed=args.seed))
    if "h2" in wanted:
        reports.append(audit_degeneration(f, blow_threshold=args.blow_threshold, depth=args.ray_depth))
    if "h3" in wanted:
        reports.append(audit_pushability(f, push, samples, margin=args.margin, seed=args.seed))
    verdicts = [r.verdict for r in reports]
    _emit(_dumps({"field": f.meta, "reports": [r.to_dict() for r in reports]}), args.out)
    if "fail" in verdicts:
        code = EXIT_FAIL
    elif "inconclusive" in verdicts:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_PASS
    return code, [args.out], [args.field_spec]


def cmd_solve(args):
    f, push, _ = load_field_spec(args.field_spec)
    u0 = _floats(args.start, "start point")
    opts = SolveOptions(eps_reflexive=args.eps, max_iters=args.max_iters, mode=args.mode)
    result = push_descent(f, push, u0, opts)
    cert = certify_reflexive(f, result.u_star, args.tol)
    _emit(_dumps({"field": f.meta, "result": result.to_dict(), "certificate": cert.to_dict()}), args.out)
    outputs = [args.out]
    if args.trace:
        _emit(result.trace_csv(), args.trace)
        outputs.append(args.trace)
    return (EXIT_PASS if cert.verdict == "certified" else EXIT_FAIL), outputs, [args.field_spec]


def cmd_scan(args):
    f, _, default_box = load_field_spec(args.field_spec)
    box = _parse_box(args.box) if args.box else list(default_box)
    res = [int(x) for x in _floats(args.res, "resolution")]
    if len(res) == 1:
        res = res * f.dim
    scan = grid_scan(f, box, res)
    _emit(scan.csv, args.out)
    sidecar = None
    if args.out:
        sidecar = str(Path(args.out).with_suffix("")) + ".argmin.json"
        _emit(_dumps(scan.argmin_dict()), sidecar)
    else:
        sys.stderr.write(_dumps(scan.argmin_dict()))
    return EXIT_PASS, [args.out, sidecar], [args.field_spec]


def cmd_oracle(args):
    cyl = EuclideanCylinder(args.w, args.h)
    est = discrete_extremal_length_oracle(cyl, args.n)
    exact = cylinder_extremal_length(cyl)
    _emit(_dumps({"w": args.w, "h": args.h, "n": args.n, "estimate": est, "closed_form": exact,
                  "relative_error": abs(est - exact) / exact}), args.out)
    return EXIT_PASS, [args.out], []


def cmd_rerun(args):
    manifest = json.loads(Path(args.manifest_path).read_text(encoding="utf-8"))
    return main(manifest["argv"]), [], []


def build_parser():
    p = argparse.ArgumentParser(prog="reflexive", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--manifest", help="run-manifest path (default: <out>.manifest.json)")

    sp = sub.add_parser("validate", help="validate a configuration datum JSON file")
    sp.add_argument("config")
    sp.add_argument("--complete-kernel", action="store_true",
                    help="augment relations to span ker(iota_*) before validating")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("audit", help="audit hypotheses H1-H3 for a field spec")
    sp.add_argument("field_spec")
    sp.add_argument("--hypothesis", choices=["h1", "h2", "h3", "all"], default="all")
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rank-tol", type=float, default=1e-6)
    sp.add_argument("--blow-threshold", type=float, default=DEFAULT_BLOW_THRESHOLD)
    sp.add_argument("--ray-depth", type=float, default=None,
                    help="smallest ray parameter t (default: per-ray, 1e-2)")
    sp.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    common(sp)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("solve", help="push-field descent to a reflexive point")
    sp.add_argument("field_spec")
    sp.add_argument("--start", required=True, help='comma-separated start point, e.g. "2.5,0.8"')
    sp.add_argument("--eps", type=float, default=1e-12)
    sp.add_argument("--tol", type=float, default=1e-6, help="certificate tolerance on max |m|")
    sp.add_argument("--max-iters", type=int, default=10000)
    sp.add_argument("--mode", choices=["push_descent", "gradient_descent"], default="push_descent")
    sp.add_argument("--trace", help="write the iteration trace as CSV")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("scan", help="brute-force grid scan of mismatches and H")
    sp.add_argument("field_spec")
    sp.add_argument("--box", help='per-parameter ranges, e.g. "0.6:3,0.6:3"')
    sp.add_argument("--res", default="241", help="grid points per axis (one value or one per axis)")
    common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("oracle", help="resistor-network extremal length of a flat cylinder")
    sp.add_argument("--w", type=float, required=True)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--n", type=int, default=32)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("rerun", help="re-execute the command recorded in a run manifest")
    sp.add_argument("manifest_path")
    sp.set_defaults(func=cmd_rerun, manifest=None)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    started = time.perf_counter()
    try:
        code, outputs, inputs = args.func(args)
    except ReflexiveError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    if args.command != "rerun":
        _write_manifest(args, argv, started, outputs, inputs)
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
