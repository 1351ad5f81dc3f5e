"""Parameter derivatives: a finite-difference oracle and closed-form expansions.

All derivatives are normalized as ``(-1)^r / r! * d^r/dparam^r``, the
normalization in which the expansions have nonnegative integer coefficients.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

from gmpy2 import mpfr, mpq

from .indices import Index, binom, format_index, weak_compositions
from .numerics import TailFamily, to_rational, working_precision
from .reports import RelationReport, SideValue, Term, evaluate_side, finish
from .series import (
    Decoration,
    EvalOptions,
    Link,
    Node,
    ParamPoint,
    SeriesSpec,
    check_domain,
    eval_dp,
    evaluate,
    spec_Z_I,
    spec_Zstar_I,
    tail_model,
)

MAX_ORDER = 3
EXPANSION_TOL = 1e-4


class Param(enum.Enum):
    ALPHA = "alpha"
    BETA = "beta"


@dataclass
class FdResult:
    value: mpfr
    err: mpfr  # distance between the Richardson value and the finer plain stencil
    h: mpq
    M: int


@lru_cache(maxsize=None)
def central_weights(r: int) -> tuple[tuple[int, Fraction], ...]:
    """Weights ``w_j`` (j = -r..r) with ``sum_j w_j f(x + j h) = h^r f^(r)(x) + O(h^(r+p))``."""
    pts = list(range(-r, r + 1))
    size = len(pts)
    # moment conditions: sum_j w_j j^q = r! [q == r]
    A = [[Fraction(j) ** q for j in pts] + [Fraction(_fact(r) if q == r else 0)] for q in range(size)]
    for c in range(size):
        piv = next(i for i in range(c, size) if A[i][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for i in range(size):
            if i != c and A[i][c] != 0:
                f = A[i][c] / A[c][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return tuple((j, A[i][size] / A[i][i]) for i, j in enumerate(pts))


def stencil_order(r: int) -> int:
    """Accuracy order of the (2r+1)-point central stencil for the r-th derivative."""
    return 2 * r + 2 - 2 * ((r + 1) // 2)


def _fact(n: int) -> int:
    out = 1
    for t in range(2, n + 1):
        out *= t
    return out


def fd_partial(
    spec: SeriesSpec,
    which: Param,
    r: int,
    params: ParamPoint,
    h=None,
    opts: EvalOptions = EvalOptions(),
) -> FdResult:
    """``(-1)^r/r!`` times the r-th partial derivative in ``which``, by central differences.

    Every stencil point is evaluated at the truncation the center point needed
    and with the center's tail model (``r`` extra log powers), so the
    extrapolation is one fixed linear functional of the partial sums and
    differentiates cleanly.  One Richardson step combines steps ``h`` and ``h/2``.
    """
    which = Param(which)
    if not 0 <= r <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {r}")
    check_domain(spec, params)
    center = evaluate(spec, params, opts)
    if r == 0:
        return FdResult(center.value, center.err, mpq(0), center.M_final)
    x0 = getattr(params, which.value)
    if h is None:
        h = mpq(1, 2 ** (opts.bits() // 4)) * max(mpq(1), abs(x0))
    h = to_rational(h)
    if x0 - r * h <= 0:
        raise ValueError(f"{which.value}={x0} is within {r}*h of the domain boundary")
    if spec.decoration is Decoration.POCH3:
        raise ValueError("finite differences are only wired for two-parameter series")
    families = [TailFamily(f.theta, f.log_degree + r) for f in tail_model(spec, params)]
    fixed = replace(opts, m_fixed=max(center.M_final, opts.m_min))
    weights = central_weights(r)
    p = stencil_order(r)

    def stencil(step):
        acc = mpfr(0)
        for j, w in weights:
            if w == 0:
                continue
            pt = params.replace(**{which.value: x0 + j * step})
            acc += mpq(w.numerator, w.denominator) * eval_dp(spec, pt, fixed, tail=families).value
        return acc / mpfr(step) ** r

    with working_precision(opts.bits()):
        coarse = stencil(h)
        fine = stencil(h / 2)
        rich = (2**p * fine - coarse) / (2**p - 1)
        sign = -1 if r % 2 else 1
        norm = mpq(sign, _fact(r))
        return FdResult(norm * rich, abs(norm) * abs(rich - fine), h, fixed.m_fixed)


# --- closed-form expansions -------------------------------------------------


def alpha_star_terms(index, r: int, params: ParamPoint) -> list[Term]:
    """Insert ``{1}^{r_i}`` after each position but the last, over all splits of r."""
    index = Index(index)
    n = index.depth
    if n == 1:
        return [Term(1, spec_Zstar_I(index), params)] if r == 0 else []
    out = []
    for rs in weak_compositions(r, n - 1):
        parts = sum(((index[i],) + (1,) * rs[i] for i in range(n - 1)), ()) + (index[-1],)
        out.append(Term(1, spec_Zstar_I(parts), params))
    return out


def _is_base_form(spec: SeriesSpec) -> bool:
    return (
        spec.arity == 2
        and not any(spec.chains)
        and (spec.depth == 1 or spec.decoration is Decoration.POCH)
        and len(set(spec.links)) <= 1
    )


def alpha_general_terms(spec: SeriesSpec, r: int, params: ParamPoint) -> list[Term]:
    """Binomial-weighted chain insertions and raised alpha-exponents.

    ``spec`` is a decorated series with all links equal (all strict or all
    weak) and no chains.  Differentiating the Pochhammer ratio contributes
    ``r_i`` chain variables ``m_i <= l_1 <= ... <= l_{r_i} < m_{i+1}``;
    differentiating ``(m_i+alpha)^-a_i`` contributes ``binom(a_i-1+s_i, s_i)``
    and raises ``a_i`` by ``s_i``.
    """
    if not _is_base_form(spec):
        raise ValueError("expansion needs a chain-free two-parameter series with uniform links")
    n = spec.depth
    out = []
    for split in weak_compositions(r, 2 * n - 1):
        rs, ss = split[: n - 1], split[n - 1:]
        coef = 1
        for node, s in zip(spec.nodes, ss):
            coef *= binom(node.a - 1 + s, s)
        if coef == 0:
            continue
        nodes = tuple(Node(x.a + s, x.b) for x, s in zip(spec.nodes, ss))
        if n == 1:
            target = SeriesSpec(nodes)
        else:
            links = tuple(Link.STRICT if ri else lk for ri, lk in zip(rs, spec.links))
            target = SeriesSpec(nodes, links, rs, Decoration.POCH)
        out.append(Term(coef, target, params))
    return out


def beta_terms(spec: SeriesSpec, r: int, params: ParamPoint) -> list[Term]:
    """Raise each beta-exponent ``b_i`` by ``r_i`` with weight ``binom(b_i-1+r_i, r_i)``."""
    if spec.arity != 2:
        raise ValueError("beta expansion is for two-parameter series")
    n = spec.depth
    out = []
    for rs in weak_compositions(r, n):
        coef = 1
        for node, ri in zip(spec.nodes, rs):
            coef *= binom(node.b - 1 + ri, ri)
        if coef == 0:
            continue
        nodes = tuple(Node(x.a, x.b + ri) for x, ri in zip(spec.nodes, rs))
        out.append(Term(coef, replace(spec, nodes=nodes, label=""), params))
    return out


def _side_value(terms, opts) -> SideValue:
    return evaluate_side(terms, opts)


def expansion_alpha_star(index, r: int, params: ParamPoint, opts: EvalOptions = EvalOptions()) -> mpfr:
    return _side_value(alpha_star_terms(index, r, params), opts).value


def expansion_alpha_general(spec: SeriesSpec, r: int, params: ParamPoint, opts: EvalOptions = EvalOptions()) -> mpfr:
    return _side_value(alpha_general_terms(spec, r, params), opts).value


def expansion_beta(spec: SeriesSpec, r: int, params: ParamPoint, opts: EvalOptions = EvalOptions()) -> mpfr:
    return _side_value(beta_terms(spec, r, params), opts).value


KINDS = ("eq10-star", "eq13-strict", "beta")


def verify_expansion(
    kind: str,
    target,
    r: int,
    params: ParamPoint,
    tol: float = EXPANSION_TOL,
    opts: EvalOptions | None = None,
) -> RelationReport:
    """Compare an expansion with the finite-difference derivative.

    ``target`` is an index for ``eq10-star`` (the weak series ``Z*_I``) and a
    :class:`SeriesSpec` (or an index, read as ``Z_I``) otherwise.
    """
    opts = opts or EvalOptions()
    start = time.perf_counter()
    if kind == "eq10-star":
        index = Index(target)
        spec = spec_Zstar_I(index)
        terms = alpha_star_terms(index, r, params)
        which = Param.ALPHA
        label = format_index(index)
    elif kind in ("eq13-strict", "beta"):
        spec = target if isinstance(target, SeriesSpec) else spec_Z_I(target)
        if kind == "eq13-strict":
            terms = alpha_general_terms(spec, r, params)
            which = Param.ALPHA
        else:
            terms = beta_terms(spec, r, params)
            which = Param.BETA
        label = spec.label or spec.to_json()
    else:
        raise ValueError(f"unknown expansion kind {kind!r}; expected one of {', '.join(KINDS)}")
    lhs = evaluate_side(terms, opts)
    fd = fd_partial(spec, which, r, params, opts=opts)
    rhs = SideValue(fd.value, fd.err, True, True, fd.M, [])
    return finish(f"expansion-{kind}", {"target": label, "r": r}, params, lhs, rhs, tol, opts.bits(), start)


# --- exact term-level check of the Pochhammer-ratio derivative ---------------


def _jet_inverse(x: Fraction, order: int) -> list[Fraction]:
    """Taylor coefficients of ``1/(x + e)`` in ``e`` up to ``e^order``."""
    return [Fraction((-1) ** j) / x ** (j + 1) for j in range(order + 1)]


def _jet_mul(u: list, v: list) -> list:
    out = [Fraction(0)] * len(u)
    for i, a in enumerate(u):
        if a == 0:
            continue
        for j in range(len(u) - i):
            out[i + j] += a * v[j]
    return out


def ratio_derivative_jet(ms, alpha, r: int, *, weak: bool = True) -> Fraction:
    """``(-1)^r/r! d^r/dalpha^r`` of ``(alpha)_{m_1}/(alpha)_{m_n}``, times ``prod_{i>=2} 1/(m_i+alpha)`` when ``weak``.

    Computed by multiplying truncated Taylor series of the factors
    ``1/(alpha + t)``, exactly in rationals.
    """
    a = Fraction(to_rational(alpha).numerator, to_rational(alpha).denominator)
    factors = list(range(ms[0], ms[-1]))
    if weak:
        factors += list(ms[1:])
    jet = [Fraction(1)] + [Fraction(0)] * r
    for t in factors:
        jet = _jet_mul(jet, _jet_inverse(a + t, r))
    return (-1) ** r * jet[r]


def _chain_sum(lo: int, hi: int, length: int, a: Fraction) -> Fraction:
    """Sum of ``prod 1/(l_j + alpha)`` over ``lo <= l_1 <= ... <= l_length <= hi``."""
    if length == 0:
        return Fraction(1)
    total = Fraction(0)
    for ls in combinations_with_replacement(range(lo, hi + 1), length):
        term = Fraction(1)
        for l in ls:
            term /= a + l
        total += term
    return total


def ratio_derivative_chains(ms, alpha, r: int, *, weak: bool = True) -> Fraction:
    """The chain-sum side for the same quantity as :func:`ratio_derivative_jet`.

    ``weak``: ``m_1 <= ... <= m_n`` and chains ``m_i <= l_1 <= ... <= m_{i+1}``,
    with the factor ``prod_{i>=2} 1/(m_i+alpha)``.  Otherwise
    ``m_1 < ... < m_n`` and chains stop strictly below ``m_{i+1}``.
    """
    a = Fraction(to_rational(alpha).numerator, to_rational(alpha).denominator)
    n = len(ms)
    base = Fraction(1)
    for t in range(ms[0], ms[-1]):
        base /= a + t
    if weak:
        for m in ms[1:]:
            base /= a + m
    total = Fraction(0)
    for rs in weak_compositions(r, n - 1):
        prod = Fraction(1)
        for i, ri in enumerate(rs):
            hi = ms[i + 1] if weak else ms[i + 1] - 1
            prod *= _chain_sum(ms[i], hi, ri, a)
        total += prod
    return base * total
