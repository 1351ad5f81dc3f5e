"""Coupled auxiliary series ``T`` and ``T*`` and the identities they satisfy.

    T(k)  = sum_{0 <= m_0 < m_1 < ... < m_n}   (alpha)_{m_0}/m_0! * m_n!/(alpha)_{m_n}
                * prod_i 1/((m_i+alpha)(m_i+beta)^(k_i-1)) * 1/(m_n - m_0)
    T*(k) = same over 0 <= m_0 <= m_1 <= ... <= m_n with m_0 != m_n

The factor ``1/(m_n - m_0)`` couples the outermost variable to the extra
variable ``m_0``, so the sweep carries one cumulative vector per position,
indexed by ``m_0``; the cost is quadratic in the truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from gmpy2 import mpfr, mpq

from .indices import Index, cyclic_shift, format_index
from .numerics import (
    EXACT,
    AccelerationError,
    Arithmetic,
    TailFamily,
    accelerate,
    to_rational,
)
from .reports import RelationReport, Term, compare, exact_side, finish
from .series import (
    EvalOptions,
    EvalResult,
    ParamPoint,
    _grid_upto,
    _rising,
    _WINDOW,
    spec_Z_I,
    spec_Z_II,
    spec_Z_single,
    spec_Zstar_I,
)

T_OPTIONS = EvalOptions(tol=1e-4, m_max=1 << 13)
LEMMA_TOL = 1e-4


@dataclass(frozen=True)
class CoupledSeriesSpec:
    index: Index
    star: bool = False

    def __post_init__(self):
        object.__setattr__(self, "index", Index(self.index))
        if not self.index.admissible:
            raise ValueError(f"index {format_index(self.index)} has no part >= 2")

    @property
    def label(self) -> str:
        return f"{'T*' if self.star else 'T'}({format_index(self.index)})"

    def evaluate(self, params: ParamPoint, opts: EvalOptions) -> EvalResult:
        key = (self, params, opts)
        hit = _CACHE.get(key)
        if hit is None:
            hit = _CACHE[key] = eval_coupled(self, params, opts)
        return hit


_CACHE: dict = {}


def coupled_tail_model(spec: CoupledSeriesSpec, params: ParamPoint) -> list[TailFamily]:
    """Integer-power family and alpha-shifted family, each with ``depth`` log powers."""
    n = spec.index.depth
    shift = params.alpha - 1
    if shift.denominator == 1:
        return [TailFamily(Fraction(1), n + 1)]
    return [
        TailFamily(Fraction(1), n),
        TailFamily(1 + Fraction(int(shift.numerator), int(shift.denominator)), n),
    ]


class _CoupledSweep:
    """Forward sweep over the outermost variable with vectors indexed by ``m_0``."""

    def __init__(self, spec: CoupledSeriesSpec, params: ParamPoint, arith: Arithmetic, capacity: int, record=()):
        s = arith.scalar
        self.star = spec.star
        self.alpha = s(params.alpha)
        self.beta = s(params.beta)
        self.exps = [k - 1 for k in spec.index]
        n = len(self.exps)
        zero = s(0)
        self.zero = zero
        self.P = np.full(capacity + 1, zero, dtype=object)
        self.C = [np.full(capacity + 1, zero, dtype=object) for _ in range(n)]
        inv = [zero] + [1 / s(j) for j in range(1, capacity + 1)]
        self.inv = np.array(inv, dtype=object)
        self.prefix = s(1)
        self.total = zero
        self.m = 0
        self.record = set(record)
        self.saved = {0: zero}

    def run_to(self, M: int) -> None:
        al, be = self.alpha, self.beta
        P, C, inv, exps = self.P, self.C, self.inv, self.exps
        n = len(exps)
        star = self.star
        total = self.total
        p = self.prefix
        for m in range(self.m, M):
            xa = m + al
            xb = m + be
            P[m] = p
            # m_0 ranges over 0..m for weak links, 0..m-1 for strict ones
            L = m + 1 if star else m
            out = None
            for i, e in enumerate(exps):
                w = 1 / (xa * xb**e) if e else 1 / xa
                if i == 0:
                    src = P[:L]
                else:
                    src = C[i - 1][:L] if star else prev[:L]
                v = src * w
                if i == n - 1:
                    out = v
                else:
                    prev = C[i][:L].copy() if not star else None
                    C[i][:L] += v
            if m > 0:
                # suffix and coupling; m_0 = m is excluded
                acc = (out[:m] * inv[m:0:-1]).sum()
                total = total + acc / p
            p = p * xa / (m + 1)
            if m + 1 in self.record:
                self.saved[m + 1] = total
        self.m = max(self.m, M)
        self.total = total
        self.prefix = p


def coupled_partial_sum(spec: CoupledSeriesSpec, params: ParamPoint, M: int, arith: Arithmetic = EXACT):
    with arith.active():
        sw = _CoupledSweep(spec, params, arith, M)
        sw.run_to(M)
        return sw.total


def coupled_naive(spec: CoupledSeriesSpec, params: ParamPoint, M: int, arith: Arithmetic = EXACT):
    """Literal loops over ``(m_0, m_1, ..., m_n)``, all below M."""
    if len(spec.index) > 3 or M > 40:
        raise ValueError("brute force limited to depth 3 and M <= 40")
    with arith.active():
        s = arith.scalar
        al, be = s(params.alpha), s(params.beta)
        n = len(spec.index)
        total = s(0)

        def deco(m):
            return _rising(al, m) / s(_rising(1, m))

        def rec(i, lo, acc, m0):
            nonlocal total
            for m in range(lo, M):
                term = acc / ((m + al) * (m + be) ** (spec.index[i - 1] - 1))
                if i == n:
                    if m == m0:
                        continue
                    total = total + term * deco(m0) / deco(m) / (m - m0)
                else:
                    rec(i + 1, m if spec.star else m + 1, term, m0)

        for m0 in range(M):
            rec(1, m0 if spec.star else m0 + 1, s(1), m0)
        return total


def eval_coupled(spec: CoupledSeriesSpec, params: ParamPoint, opts: EvalOptions = T_OPTIONS) -> EvalResult:
    families = coupled_tail_model(spec, params)
    if opts.log_boost:
        families = [TailFamily(f.theta, f.log_degree + opts.log_boost) for f in families]
    arith = Arithmetic(False, opts.bits())
    if opts.m_fixed is not None:
        schedule = [opts.m_fixed]
    else:
        schedule = []
        M = opts.m_min
        while M < opts.m_max:
            schedule.append(M)
            M *= 2
        schedule.append(opts.m_max)
    grid = _grid_upto(schedule[-1])
    with arith.active():
        sw = _CoupledSweep(spec, params, arith, schedule[-1], record=set(grid) | set(schedule))
        for M in schedule:
            sw.run_to(M)
            pts = [(g, sw.saved[g]) for g in grid if M // _WINDOW <= g <= M]
            accelerated = True
            try:
                value, err = accelerate(
                    pts, families[0].theta, families[0].log_degree, extra_families=families[1:], max_terms=opts.terms
                )
            except (AccelerationError, ValueError, ZeroDivisionError) as exc:
                accelerated = False
                value = getattr(exc, "estimate", sw.total)
                err = abs(sw.total - sw.saved.get(M // 2, sw.saved[0]))
            converged = accelerated and err <= opts.tol * max(1, abs(value)) / 4
            if converged:
                break
        trail = [(g, sw.saved[g]) for g in grid if g <= sw.m and g & (g - 1) == 0]
        return EvalResult(value, err, sw.m, trail, accelerated, converged)


def eval_T(index, params: ParamPoint, opts: EvalOptions = T_OPTIONS) -> EvalResult:
    return CoupledSeriesSpec(Index(index), star=False).evaluate(params, opts)


def eval_Tstar(index, params: ParamPoint, opts: EvalOptions = T_OPTIONS) -> EvalResult:
    return CoupledSeriesSpec(Index(index), star=True).evaluate(params, opts)


def rotate_last_to_front(index: Index) -> Index:
    """``(k_n, k_1, ..., k_{n-1})``."""
    return cyclic_shift(index, len(index) - 1) if len(index) > 1 else index


def lemma1_terms(index, params: ParamPoint, star: bool, t_opts: EvalOptions = T_OPTIONS):
    """Both sides of the rotation identity for ``T`` (strict) or ``T*`` (weak)."""
    index = Index(index)
    if not index.admissible:
        raise ValueError(f"index {format_index(index)} has no part >= 2")
    n = index.depth
    k = index.weight
    kn = index[-1]
    head = tuple(index[:-1])
    lhs = [
        Term(1, CoupledSeriesSpec(index, star), params, t_opts),
        Term(-1, CoupledSeriesSpec(rotate_last_to_front(index), star), params, t_opts),
    ]
    rhs = []
    if star:
        if kn >= 2:
            rhs.append(Term(kn - 1, spec_Z_single(n, k - n + 1), params))
        rhs.append(Term(1, spec_Z_single(n + 1, k - n), params))
        for j in range(kn - 1):
            rhs.append(Term(-1, spec_Zstar_I((j + 1,) + head + (kn - j,)), params))
    else:
        if n == 1:
            rotated = (kn + 1,)
        else:
            rotated = (kn,) + head[:-1] + (head[-1] + 1,)
        rhs.append(Term(1, spec_Z_II(rotated), params))
        for j in range(kn - 1):
            rhs.append(Term(-1, spec_Z_I((j + 1,) + head + (kn - j,)), params))
    return lhs, rhs


def verify_lemma1(index, params: ParamPoint, star: bool, tol: float = LEMMA_TOL, opts: EvalOptions | None = None,
                  t_opts: EvalOptions = T_OPTIONS) -> RelationReport:
    lhs, rhs = lemma1_terms(index, params, star, t_opts)
    rid = "lemma1-star" if star else "lemma1-strict"
    return compare(rid, {"index": format_index(Index(index))}, params, lhs, rhs, tol, opts)


# --- the Pochhammer inner-sum identity --------------------------------------


def inner_sum_rhs(m: int, n: int, alpha) -> mpq:
    """``n!/(alpha)_n * sum_{l=0}^{m} (alpha)_l/l! / (n-l)``, exactly."""
    a = to_rational(alpha)
    total = mpq(0)
    for l in range(m + 1):
        total += _rising(a, l) / mpq(_rising(1, l)) / (n - l)
    return mpq(_rising(1, n)) / _rising(a, n) * total


def inner_sum_lhs(m: int, n: int, alpha, opts: EvalOptions = EvalOptions(tol=1e-20)) -> EvalResult:
    """``(alpha)_{m+1}/m! * sum_{l>=n} l!/(alpha)_{l+1} / (l-m)``, truncated and extrapolated."""
    a = to_rational(alpha)
    arith = Arithmetic(False, opts.bits())
    M = opts.m_min
    grid = set(_grid_upto(opts.m_max))
    with arith.active():
        al = arith.scalar(a)
        c = _rising(al, m + 1) / _rising(1, m)
        # running l!/(alpha)_{l+1}, started at l = n
        r = _rising(1, n) / _rising(al, n + 1)
        total = mpfr(0)
        saved = {n: total}
        l = n
        while True:
            while l < M:
                total += r / (l - m)
                r = r * (l + 1) / (l + 1 + al)
                l += 1
                if l in grid or l == M:
                    saved[l] = total
            # tail terms decay like l^-(alpha+1); every integer shift of that exponent appears
            pts = [(g, saved[g]) for g in sorted(saved) if M // _WINDOW <= g <= M and g > n]
            try:
                value, err = accelerate(pts, a, 0, max_terms=opts.terms)
                accelerated = True
            except (AccelerationError, ValueError) as exc:
                value, err, accelerated = getattr(exc, "estimate", total), abs(total), False
            if (accelerated and err <= opts.tol) or M >= opts.m_max:
                break
            M *= 2
        return EvalResult(c * value, abs(c) * err, M, [], accelerated, accelerated and err <= opts.tol)


def verify_inner_sum_identity(m: int, n: int, alpha, tol: float = 1e-8) -> bool:
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={n}")
    rhs = inner_sum_rhs(m, n, alpha)
    lhs = inner_sum_lhs(m, n, alpha)
    return bool(abs(lhs.value - rhs) <= tol * max(1, abs(rhs)))
