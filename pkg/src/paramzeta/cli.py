"""Command line: ``paramzeta eval | verify | suite``.

Exit codes: 0 success or pass, 1 identity failed, 2 usage or precondition
error, 3 evaluation did not converge / check inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys

from .indices import parse_index
from .numerics import PRECISION_ENV, decimal_digits, default_precision, to_decimal
from .relations import INDEX_ARGS, RELATIONS, run_relation, validate_instance
from .series import (
    EvalOptions,
    ParamPoint,
    SeriesSpec,
    evaluate,
    spec_Z3_single,
    spec_Z_I,
    spec_Z_II,
    spec_Z_single,
    spec_Zr,
    spec_Zstar_I,
    spec_Zstar_I3,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

SERIES = ("zi", "zii", "zstar-i", "z-single", "zr", "zstar-i3", "z3-single", "t", "tstar")


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    return tuple(int(t) for t in text.split(",")) if text else ()


def _params(args) -> ParamPoint:
    try:
        return ParamPoint(args.alpha, args.beta, args.gamma)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None


def _precision(args) -> int:
    return args.precision or default_precision()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", default="1", help="exact decimal or p/q (default 1)")
    p.add_argument("--beta", default="1", help="exact decimal or p/q (default 1)")
    p.add_argument("--gamma", default=None, help="third parameter for three-parameter series")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--precision", type=int, default=None, help=f"bits (default 256, or ${PRECISION_ENV})")
    p.add_argument("--m-max", type=int, default=None, help="largest truncation tried")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paramzeta",
        description="Evaluate parametrized multiple zeta series and verify identities among them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate one series")
    ev.add_argument("--series", choices=SERIES)
    ev.add_argument("--spec-file", help="JSON series description (instead of --series)")
    ev.add_argument("--index", help="k1,k2,...,kn")
    ev.add_argument("--a", type=int)
    ev.add_argument("--b", type=int)
    ev.add_argument("--c", type=int)
    ev.add_argument("--r-vec", default="", help="chain lengths for zr")
    ev.add_argument("--a-vec", help="alpha exponents for zr")
    ev.add_argument("--b-vec", help="beta exponents for zr")
    _add_common(ev)

    ve = sub.add_parser("verify", help="check one identity instance")
    ve.add_argument("--relation", required=True, choices=sorted(RELATIONS))
    ve.add_argument("--index")
    ve.add_argument("--index-k")
    ve.add_argument("--index-l")
    for name in ("k", "n", "m", "r", "s"):
        ve.add_argument(f"--{name}", type=int)
    _add_common(ve)

    su = sub.add_parser("suite", help="run a suite file and write reports")
    su.add_argument("config")
    su.add_argument("--out", help="JSON report path (overrides the file's output setting)")
    su.add_argument("--csv", help="CSV summary path")
    su.add_argument("--jobs", type=int, default=None)
    su.add_argument("--quiet", action="store_true")
    return parser


def _eval_options(args, default: EvalOptions) -> EvalOptions:
    kw = {}
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.precision:
        kw["precision"] = args.precision
    if args.m_max:
        kw["m_max"] = args.m_max
    return EvalOptions(**{**default.__dict__, **kw})


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--series {args.series} needs " + ", ".join(f"--{m}" for m in missing))


def _eval_target(args):
    """(object with .evaluate, label, default options)."""
    if args.spec_file:
        with open(args.spec_file) as fh:
            spec = SeriesSpec.from_json(fh.read())
        return spec, EvalOptions()
    s = args.series
    if s is None:
        raise UsageError("give --series or --spec-file")
    if s in ("zi", "zii", "zstar-i", "zstar-i3", "t", "tstar"):
        _need(args, "index")
        index = parse_index(args.index)
        if s in ("t", "tstar"):
            from .auxseries import T_OPTIONS, CoupledSeriesSpec

            return CoupledSeriesSpec(index, star=s == "tstar"), T_OPTIONS
        make = {"zi": spec_Z_I, "zii": spec_Z_II, "zstar-i": spec_Zstar_I, "zstar-i3": spec_Zstar_I3}[s]
        return make(index), EvalOptions()
    if s == "z-single":
        _need(args, "a", "b")
        return spec_Z_single(args.a, args.b), EvalOptions()
    if s == "z3-single":
        _need(args, "a", "b", "c")
        return spec_Z3_single(args.a, args.b, args.c), EvalOptions()
    _need(args, "a_vec", "b_vec")
    return spec_Zr(_int_list(args.r_vec), _int_list(args.a_vec), _int_list(args.b_vec)), EvalOptions()


def cmd_eval(args) -> int:
    target, default_opts = _eval_target(args)
    params = _params(args)
    opts = _eval_options(args, default_opts)
    res = target.evaluate(params, opts)
    digits = decimal_digits(opts.bits())
    out = {
        "series": target.label,
        "params": params.as_strings(),
        "value": to_decimal(res.value, digits),
        "err_estimate": to_decimal(res.err, digits),
        "M_final": res.M_final,
        "accelerated": res.accelerated,
        "converged": res.converged,
        "checkpoints": [[M, to_decimal(v, digits)] for M, v in res.checkpoints],
    }
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        print(f"{out['series']} at {', '.join(f'{k}={v}' for k, v in out['params'].items())}")
        print(f"value        {out['value']}")
        print(f"err_estimate {out['err_estimate']}")
        print(f"M_final      {res.M_final}")
        if not res.converged:
            print("warning: did not reach the requested tolerance", file=sys.stderr)
    return EXIT_OK if res.converged else EXIT_INCONCLUSIVE


def cmd_verify(args) -> int:
    names = RELATIONS[args.relation][1]
    rel_args = {}
    for n in names:
        v = getattr(args, n)
        if v is None:
            raise UsageError(f"{args.relation} needs --{n.replace('_', '-')}")
        rel_args[n] = parse_index(v) if n in INDEX_ARGS else v
    params = _params(args)
    try:
        validate_instance(args.relation, rel_args, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    opts = _eval_options(args, EvalOptions())
    rep = run_relation(args.relation, rel_args, params, args.tol, opts)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
    else:
        print(rep.summary_line())
    if rep.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_suite(args) -> int:
    from .suite import SuiteError, parse_suite, run_suite, write_report

    try:
        with open(args.config) as fh:
            cfg = parse_suite(fh.read())
    except (OSError, SuiteError) as exc:
        raise UsageError(str(exc)) from None

    def progress(rep):
        if not args.quiet:
            print(
                f"{rep['status']:12s} {rep['relation_id']} "
                f"{' '.join(f'{k}={v}' for k, v in rep['args'].items())} "
                f"({','.join(rep['params'].values())}) rel_diff={rep['rel_diff'][:10]}",
                flush=True,
            )

    try:
        doc = run_suite(cfg, jobs=args.jobs, progress=progress)
    except SuiteError as exc:
        raise UsageError(str(exc)) from None
    json_path = args.out or cfg.output
    csv_path = args.csv or cfg.csv_output
    write_report(doc, json_path, csv_path)
    s = doc["summary"]
    print(f"{s['total']} checks: {s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive")
    return EXIT_OK if s["pass"] == s["total"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"eval": cmd_eval, "verify": cmd_verify, "suite": cmd_suite}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"paramzeta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # preconditions checked by the library (index shape, domain, guard)
        print(f"paramzeta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
