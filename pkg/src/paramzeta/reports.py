"""Linear combinations of evaluated series and the record of one identity check."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import decimal_digits, default_precision, to_decimal, working_precision
from .series import EvalOptions, EvalResult, ParamPoint


class Evaluable(Protocol):
    label: str

    def evaluate(self, params: ParamPoint, opts: EvalOptions) -> EvalResult: ...


@dataclass(frozen=True)
class Term:
    """``coef * target(params)``; ``opts`` overrides the side's evaluation options."""

    coef: object
    target: Evaluable
    params: ParamPoint
    opts: EvalOptions | None = None


@dataclass
class SideValue:
    value: mpfr
    err: mpfr
    accelerated: bool
    converged: bool
    M_final: int
    terms: list = field(default_factory=list)  # (coef, label, EvalResult)


def evaluate_side(terms: Sequence[Term], opts: EvalOptions) -> SideValue:
    """Sum of the terms in the order given; errors add in absolute value."""
    with working_precision(opts.bits()):
        value = mpfr(0)
        err = mpfr(0)
        acc = conv = True
        M_final = 0
        parts = []
        for t in terms:
            res = t.target.evaluate(t.params, t.opts or opts)
            c = mpq(t.coef)
            value += c * res.value
            err += abs(c) * res.err
            acc &= res.accelerated
            conv &= res.converged
            M_final = max(M_final, res.M_final)
            parts.append((t.coef, t.target.label, t.params, res))
    return SideValue(value, err, acc, conv, M_final, parts)


@dataclass
class RelationReport:
    relation_id: str
    args: dict
    params: ParamPoint
    lhs: SideValue
    rhs: SideValue
    abs_diff: mpfr
    rel_diff: mpfr
    rel_err: mpfr
    tol: float
    passed: bool
    inconclusive: bool
    wall_time: float
    precision: int
    note: str = ""

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        digits = decimal_digits(self.precision)

        def num(x):
            return to_decimal(x, digits)

        def side(s: SideValue):
            return {
                "value": num(s.value),
                "err_estimate": num(s.err),
                "accelerated": s.accelerated,
                "M_final": s.M_final,
                "terms": [
                    {
                        "coef": str(c),
                        "series": label,
                        "params": p.as_strings(),
                        "value": num(r.value),
                        "err_estimate": num(r.err),
                        "M_final": r.M_final,
                    }
                    for c, label, p, r in s.terms
                ],
            }

        return {
            "relation_id": self.relation_id,
            "args": self.args,
            "params": self.params.as_strings(),
            "lhs": side(self.lhs),
            "rhs": side(self.rhs),
            "abs_diff": num(self.abs_diff),
            "rel_diff": num(self.rel_diff),
            "rel_err_estimate": num(self.rel_err),
            "tol": repr(self.tol),
            "status": self.status,
            "pass": self.passed,
            "inconclusive": self.inconclusive,
            "wall_time": round(self.wall_time, 3),
            "note": self.note,
        }

    def summary_line(self) -> str:
        args = " ".join(f"{k}={v}" for k, v in self.args.items())
        p = ",".join(self.params.as_strings().values())
        return (
            f"{self.status.upper():12s} {self.relation_id} {args} at ({p}): "
            f"rel_diff={float(self.rel_diff):.3e} tol={self.tol:g} "
            f"lhs={to_decimal(self.lhs.value, 20)} rhs={to_decimal(self.rhs.value, 20)}"
        )


def judge(lhs: SideValue, rhs: SideValue, tol: float, precision: int):
    """(abs_diff, rel_diff, rel_err, passed, inconclusive).

    A difference larger than ``tol`` plus the combined error estimate is a
    failure whatever the convergence state.  Otherwise the check is
    inconclusive when a term could not be extrapolated or the combined error
    estimate alone exceeds ``tol``.
    """
    with working_precision(precision):
        abs_diff = abs(lhs.value - rhs.value)
        scale = max(abs(lhs.value), abs(rhs.value), mpfr(1))
        rel_diff = abs_diff / scale
        rel_err = (lhs.err + rhs.err) / scale
    if rel_diff - rel_err > tol:
        return abs_diff, rel_diff, rel_err, False, False
    if not (lhs.accelerated and rhs.accelerated) or rel_err > tol:
        return abs_diff, rel_diff, rel_err, False, True
    return abs_diff, rel_diff, rel_err, rel_diff <= tol, False


def compare(
    relation_id: str,
    args: dict,
    params: ParamPoint,
    lhs_terms: Sequence[Term],
    rhs_terms: Sequence[Term],
    tol: float,
    opts: EvalOptions | None = None,
    note: str = "",
) -> RelationReport:
    opts = opts or EvalOptions()
    start = time.perf_counter()
    lhs = evaluate_side(lhs_terms, opts)
    rhs = evaluate_side(rhs_terms, opts)
    return finish(relation_id, args, params, lhs, rhs, tol, opts.bits(), start, note)


def finish(relation_id, args, params, lhs, rhs, tol, precision, start, note="") -> RelationReport:
    abs_diff, rel_diff, rel_err, passed, inconclusive = judge(lhs, rhs, tol, precision)
    return RelationReport(
        relation_id,
        args,
        params,
        lhs,
        rhs,
        abs_diff,
        rel_diff,
        rel_err,
        tol,
        passed,
        inconclusive,
        time.perf_counter() - start,
        precision,
        note,
    )


def exact_side(value, precision: int | None = None) -> SideValue:
    """A side whose value is known exactly (no truncation error)."""
    with working_precision(precision or default_precision()):
        return SideValue(mpfr(value), mpfr(0), True, True, 0, [])
