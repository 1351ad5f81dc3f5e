"""Builders and verifiers for the identities among the parametrized series.

Every verifier assembles two lists of :class:`~paramzeta.reports.Term`,
evaluates each term independently (no shared truncation between the sides)
and returns a :class:`~paramzeta.reports.RelationReport`.  The ``*_terms``
functions expose the term lists on their own so other checks can reuse them.
"""

from __future__ import annotations

from typing import Callable

from .indices import (
    Index,
    binom,
    compositions,
    csf_lhs_terms,
    csf_rhs_terms,
    format_index,
    repeat,
    weak_compositions,
)
from .reports import RelationReport, Term, compare
from .series import (
    EvalOptions,
    ParamPoint,
    spec_Z3_single,
    spec_Z_I,
    spec_Z_II,
    spec_Z_single,
    spec_Zr,
    spec_Zstar_I,
    spec_Zstar_I3,
)

DEFAULT_TOL = 1e-6


def _two_param(params: ParamPoint) -> None:
    if params.gamma is not None:
        raise ValueError("this relation takes (alpha, beta) only")


def _admissible(index) -> Index:
    index = Index(index)
    if not index.admissible:
        raise ValueError(f"index {format_index(index)} has no part >= 2")
    return index


def _positive(**kw) -> None:
    for name, v in kw.items():
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")


def _nonnegative(**kw) -> None:
    for name, v in kw.items():
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")


# --- cyclic sum formulas ----------------------------------------------------


def csf_strict_terms(index, params):
    index = _admissible(index)
    lhs = [Term(1, spec_Z_I(x), params) for x in csf_lhs_terms(index)]
    rhs = [Term(1, spec_Z_II(x), params) for x in csf_rhs_terms(index)]
    return lhs, rhs


def csf_star_lhs(index, params) -> list[Term]:
    index = _admissible(index)
    return [Term(1, spec_Zstar_I(x), params) for x in csf_lhs_terms(index)]


def csf_star_terms(index, params):
    index = _admissible(index)
    k, n = index.weight, index.depth
    rhs = [Term(k - n, spec_Z_single(n, k - n + 1), params), Term(n, spec_Z_single(n + 1, k - n), params)]
    return csf_star_lhs(index, params), rhs


def verify_csf_strict(index, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = csf_strict_terms(index, params)
    return compare("csf-strict", {"index": format_index(Index(index))}, params, lhs, rhs, tol, opts)


def verify_csf_star(index, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = csf_star_terms(index, params)
    return compare("csf-star", {"index": format_index(Index(index))}, params, lhs, rhs, tol, opts)


# --- sum formula ------------------------------------------------------------


def sum_formula_terms(k: int, n: int, params):
    comps = compositions(k, n)
    lhs = [Term(1, spec_Zstar_I(x), params) for x in comps]
    rhs = []
    c1, c2 = binom(k - 2, n - 1), binom(k - 2, n - 2)
    if c1:
        rhs.append(Term(c1, spec_Z_single(n - 1, k - n + 1), params))
    if c2:
        rhs.append(Term(c2, spec_Z_single(n, k - n), params))
    return lhs, rhs


def verify_sum_formula(k: int, n: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = sum_formula_terms(k, n, params)
    return compare("sum-formula", {"k": k, "n": n}, params, lhs, rhs, tol, opts)


# --- the (1, {{1}^(m-1), 2}^n) family ---------------------------------------


def eq12_index(m: int, n: int) -> Index:
    return Index((1,) + repeat((1,) * (m - 1) + (2,), n))


def eq12_terms(m: int, n: int, params):
    _positive(m=m, n=n)
    lhs = [Term(1, spec_Zstar_I(eq12_index(m, n)), params)]
    rhs = [Term(1, spec_Z_single(m * n, n + 1), params), Term(m, spec_Z_single(m * n + 1, n), params)]
    return lhs, rhs


def verify_eq12(m: int, n: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = eq12_terms(m, n, params)
    return compare("eq12", {"m": m, "n": n}, params, lhs, rhs, tol, opts)


def deriv12_alpha_terms(m: int, n: int, r: int, params, multiplicity: bool = True):
    """r-th alpha-derivative of the (1,{{1}^(m-1),2}^n) relation.

    Differentiating inserts ones after every position but the last; the
    ``m`` insertion slots in front of the ``i``-th run of ones all lengthen
    that run, so the run of length ``m - 1 + r_i`` arises
    ``binom(r_i + m - 1, m - 1)`` times.  ``multiplicity=False`` drops that
    multiplicity (the two forms agree when ``m = 1``).
    """
    _positive(m=m, n=n)
    _nonnegative(r=r)
    lhs = []
    for rs in weak_compositions(r, n):
        coef = 1
        if multiplicity:
            for ri in rs:
                coef *= binom(ri + m - 1, m - 1)
        idx = (1,) + sum(((1,) * (m + ri - 1) + (2,) for ri in rs), ())
        lhs.append(Term(coef, spec_Zstar_I(idx), params))
    rhs = [
        Term(binom(m * n + r - 1, r), spec_Z_single(m * n + r, n + 1), params),
        Term(m * binom(m * n + r, r), spec_Z_single(m * n + r + 1, n), params),
    ]
    return lhs, rhs


def verify_deriv12_alpha(m, n, r, params: ParamPoint, tol=DEFAULT_TOL, opts=None, multiplicity=True) -> RelationReport:
    _two_param(params)
    lhs, rhs = deriv12_alpha_terms(m, n, r, params, multiplicity)
    args = {"m": m, "n": n, "r": r}
    if not multiplicity:
        args["multiplicity"] = False
    return compare("deriv12-alpha", args, params, lhs, rhs, tol, opts)


def deriv12_beta_terms(m: int, n: int, r: int, params):
    _positive(m=m, n=n)
    _nonnegative(r=r)
    lhs = []
    for rs in weak_compositions(r, n + 1):
        idx = (1 + rs[0],) + sum(((1,) * (m - 1) + (2 + ri,) for ri in rs[1:]), ())
        lhs.append(Term(1, spec_Zstar_I(idx), params))
    rhs = [
        Term(binom(n + r, r), spec_Z_single(m * n, n + r + 1), params),
        Term(m * binom(n + r - 1, r), spec_Z_single(m * n + 1, n + r), params),
    ]
    return lhs, rhs


def verify_deriv12_beta(m, n, r, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = deriv12_beta_terms(m, n, r, params)
    return compare("deriv12-beta", {"m": m, "n": n, "r": r}, params, lhs, rhs, tol, opts)


# --- Z_I(1,{2}^n) = Z_II({2}^(n-1),3) and its derivatives -------------------


def eq15_terms(n: int, params):
    _positive(n=n)
    lhs = [Term(1, spec_Z_I((1,) + (2,) * n), params)]
    rhs = [Term(1, spec_Z_II((2,) * (n - 1) + (3,)), params)]
    return lhs, rhs


def verify_eq15(n: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = eq15_terms(n, params)
    return compare("eq15", {"n": n}, params, lhs, rhs, tol, opts)


def eq16_terms(n: int, r: int, params):
    """alpha-derivative family: chains from the Pochhammer ratio, raised alpha-exponents."""
    _positive(n=n)
    _nonnegative(r=r)
    lhs = []
    for split in weak_compositions(r, 2 * n):
        rs, ss = split[:n], split[n:]
        a_vec = (0,) + tuple(1 + s for s in ss)
        lhs.append(Term(1, spec_Zr(rs, a_vec, (1,) * (n + 1)), params))
    rhs = []
    for split in weak_compositions(r, 2 * n - 1):
        rs, ss = split[: n - 1], split[n - 1:]
        a_vec = tuple(1 + s for s in ss[:-1]) + (2 + ss[-1],)
        rhs.append(Term(1 + ss[-1], spec_Zr(rs, a_vec, (1,) * n), params))
    return lhs, rhs


def verify_eq16(n: int, r: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = eq16_terms(n, r, params)
    return compare("eq16", {"n": n, "r": r}, params, lhs, rhs, tol, opts)


def eq17_terms(n: int, r: int, params):
    """beta-derivative family: every beta-exponent raised in turn."""
    _positive(n=n)
    _nonnegative(r=r)
    lhs = [
        Term(1, spec_Z_I((1 + rs[0],) + tuple(2 + x for x in rs[1:])), params)
        for rs in weak_compositions(r, n + 1)
    ]
    rhs = [
        Term(1, spec_Z_II(tuple(2 + x for x in rs[:-1]) + (3 + rs[-1],)), params)
        for rs in weak_compositions(r, n)
    ]
    return lhs, rhs


def verify_eq17(n: int, r: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = eq17_terms(n, r, params)
    return compare("eq17", {"n": n, "r": r}, params, lhs, rhs, tol, opts)


# --- swap symmetry of the weak cyclic sum -----------------------------------


def c2_terms(index_k, index_l, params: ParamPoint):
    """Cyclic sums for K at (alpha, beta) and for L at (beta, alpha).

    Needs ``weight(K) = weight(L) = depth(K) + depth(L)``.
    """
    K, L = _admissible(index_k), _admissible(index_l)
    if not (K.weight == L.weight == K.depth + L.depth):
        raise ValueError(
            f"need weight(K) = weight(L) = depth(K) + depth(L); got weights {K.weight}, {L.weight} "
            f"and depths {K.depth}, {L.depth}"
        )
    return csf_star_lhs(K, params), csf_star_lhs(L, params.swapped())


def verify_symmetry_c2(index_k, index_l, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    _two_param(params)
    lhs, rhs = c2_terms(index_k, index_l, params)
    args = {"index_k": format_index(Index(index_k)), "index_l": format_index(Index(index_l))}
    return compare("c2-symmetry", args, params, lhs, rhs, tol, opts)


# --- three-parameter relation -----------------------------------------------


def eq21_terms(s: int, params: ParamPoint):
    if s < 2:
        raise ValueError(f"s must be >= 2, got {s}")
    if params.gamma is None:
        raise ValueError("this relation needs gamma")
    a, b, g = params.alpha, params.beta, params.gamma
    if a + b - g <= 0:
        raise ValueError("need alpha + beta - gamma > 0")
    lhs = [Term(1, spec_Zstar_I3((1,) + (2,) * (s - 1)), params)]
    rhs = [
        Term(1, spec_Z3_single(s - 1, s - 1, 1), params),
        Term(1, spec_Z3_single(s - 1, s - 1, 1), ParamPoint(a, b, a + b - g)),
    ]
    return lhs, rhs


def verify_eq21(s: int, params: ParamPoint, tol=DEFAULT_TOL, opts=None) -> RelationReport:
    lhs, rhs = eq21_terms(s, params)
    return compare("eq21", {"s": s}, params, lhs, rhs, tol, opts)


# --- registry used by the command line and the suite runner -----------------


def _lemma(star: bool):
    def run(index, params, tol=None, opts=None):
        from .auxseries import LEMMA_TOL, verify_lemma1

        _two_param(params)
        return verify_lemma1(index, params, star, LEMMA_TOL if tol is None else tol, opts)

    return run


def _expansion(kind: str, make_spec):
    def run(index, r, params, tol=None, opts=None):
        from .derivatives import EXPANSION_TOL, verify_expansion

        _two_param(params)
        target = Index(index) if make_spec is None else make_spec(index)
        return verify_expansion(kind, target, r, params, EXPANSION_TOL if tol is None else tol, opts)

    return run


def _expansion_check(kind: str):
    def check(p, index, r):
        from .derivatives import MAX_ORDER, alpha_general_terms, alpha_star_terms, beta_terms

        if not 0 <= r <= MAX_ORDER:
            raise ValueError(f"r must be in 0..{MAX_ORDER}")
        if kind == "eq10-star":
            return alpha_star_terms(index, r, p)
        if kind == "eq13-strict":
            return alpha_general_terms(spec_Z_I(index), r, p)
        return beta_terms(spec_Zstar_I(index), r, p)

    return check


RELATIONS: dict[str, tuple[Callable, tuple[str, ...], float]] = {
    # id: (verifier, argument names in call order, default tolerance)
    "csf-strict": (verify_csf_strict, ("index",), DEFAULT_TOL),
    "csf-star": (verify_csf_star, ("index",), DEFAULT_TOL),
    "sum-formula": (verify_sum_formula, ("k", "n"), DEFAULT_TOL),
    "eq12": (verify_eq12, ("m", "n"), DEFAULT_TOL),
    "eq15": (verify_eq15, ("n",), DEFAULT_TOL),
    "eq16": (verify_eq16, ("n", "r"), DEFAULT_TOL),
    "eq17": (verify_eq17, ("n", "r"), DEFAULT_TOL),
    "deriv12-alpha": (verify_deriv12_alpha, ("m", "n", "r"), DEFAULT_TOL),
    "deriv12-beta": (verify_deriv12_beta, ("m", "n", "r"), DEFAULT_TOL),
    "c2-symmetry": (verify_symmetry_c2, ("index_k", "index_l"), DEFAULT_TOL),
    "eq21": (verify_eq21, ("s",), DEFAULT_TOL),
    "lemma1-strict": (_lemma(False), ("index",), 1e-4),
    "lemma1-star": (_lemma(True), ("index",), 1e-4),
    # expansions against finite differences: eq10-star on Z*_I, eq13-strict on Z_I, beta on Z*_I
    "expansion-eq10-star": (_expansion("eq10-star", None), ("index", "r"), 1e-4),
    "expansion-eq13-strict": (_expansion("eq13-strict", spec_Z_I), ("index", "r"), 1e-4),
    "expansion-beta": (_expansion("beta", spec_Zstar_I), ("index", "r"), 1e-4),
}

INDEX_ARGS = {"index", "index_k", "index_l"}

# builders that only check arguments, so a suite can be validated before any evaluation
_BUILDERS = {
    "csf-strict": lambda p, index: csf_strict_terms(index, p),
    "csf-star": lambda p, index: csf_star_terms(index, p),
    "sum-formula": lambda p, k, n: sum_formula_terms(k, n, p),
    "eq12": lambda p, m, n: eq12_terms(m, n, p),
    "eq15": lambda p, n: eq15_terms(n, p),
    "eq16": lambda p, n, r: eq16_terms(n, r, p),
    "eq17": lambda p, n, r: eq17_terms(n, r, p),
    "deriv12-alpha": lambda p, m, n, r: deriv12_alpha_terms(m, n, r, p),
    "deriv12-beta": lambda p, m, n, r: deriv12_beta_terms(m, n, r, p),
    "c2-symmetry": lambda p, index_k, index_l: c2_terms(index_k, index_l, p),
    "eq21": lambda p, s: eq21_terms(s, p),
    "expansion-eq10-star": _expansion_check("eq10-star"),
    "expansion-eq13-strict": _expansion_check("eq13-strict"),
    "expansion-beta": _expansion_check("beta"),
}


def validate_instance(relation_id: str, args: dict, params: ParamPoint) -> None:
    """Raise ValueError if the instance violates a precondition; evaluates nothing."""
    if relation_id not in RELATIONS:
        raise ValueError(f"unknown relation {relation_id!r}")
    names = RELATIONS[relation_id][1]
    missing = [a for a in names if a not in args]
    extra = [a for a in args if a not in names]
    if missing or extra:
        raise ValueError(f"{relation_id} takes {', '.join(names)}; missing {missing}, unexpected {extra}")
    if relation_id == "eq21":
        if params.gamma is None:
            raise ValueError("eq21 needs gamma")
    elif params.gamma is not None:
        raise ValueError(f"{relation_id} takes (alpha, beta) only")
    if relation_id.startswith("lemma1"):
        _admissible(args["index"])
        return
    _BUILDERS[relation_id](params, **args)


def run_relation(relation_id: str, args: dict, params: ParamPoint, tol=None, opts=None) -> RelationReport:
    validate_instance(relation_id, args, params)
    fn, names, default_tol = RELATIONS[relation_id]
    return fn(*(args[a] for a in names), params, default_tol if tol is None else tol, opts)
