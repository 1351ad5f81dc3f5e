from fractions import Fraction
from itertools import combinations_with_replacement

import gmpy2
import pytest
from gmpy2 import mpfr

from paramzeta.derivatives import (
    MAX_ORDER,
    Param,
    alpha_general_terms,
    alpha_star_terms,
    beta_terms,
    central_weights,
    expansion_alpha_general,
    expansion_alpha_star,
    expansion_beta,
    fd_partial,
    ratio_derivative_chains,
    ratio_derivative_jet,
    stencil_order,
    verify_expansion,
)
from paramzeta.numerics import working_precision
from paramzeta.series import ParamPoint, evaluate, spec_Z_I, spec_Z_single, spec_Zstar_I


def pi2_over_6():
    with working_precision(256):
        return gmpy2.const_pi() ** 2 / 6


def close(x, y, tol):
    return abs(x - y) <= tol * max(1, abs(y))


@pytest.mark.parametrize("r", range(MAX_ORDER + 1))
def test_stencil_weights_reproduce_monomials(r):
    w = central_weights(r)
    assert [j for j, _ in w] == list(range(-r, r + 1))
    fact = 1
    for t in range(2, r + 1):
        fact *= t
    p = stencil_order(r)
    for q in range(r + p):
        moment = sum(c * Fraction(j) ** q for j, c in w)
        assert moment == (fact if q == r else 0), (r, q)


def test_second_derivative_stencil():
    w = dict(central_weights(2))
    assert w == {-2: Fraction(-1, 12), -1: Fraction(4, 3), 0: Fraction(-5, 2), 1: Fraction(4, 3), 2: Fraction(-1, 12)}


def test_fd_order_zero_is_value():
    spec, p = spec_Z_single(1, 1), ParamPoint.of(1, 2)
    assert fd_partial(spec, Param.ALPHA, 0, p).value == evaluate(spec, p).value


def test_fd_alpha_derivative_known_sum():
    res = fd_partial(spec_Z_single(1, 1), Param.ALPHA, 1, ParamPoint.of(1, 2))
    assert close(res.value, pi2_over_6() - 1, 1e-12)


def test_fd_beta_derivative_known_sum():
    res = fd_partial(spec_Z_single(1, 1), Param.BETA, 1, ParamPoint.of(1, 2))
    assert close(res.value, 2 - pi2_over_6(), 1e-12)


@pytest.mark.parametrize("r", [1, 2])
def test_fd_of_alpha_free_series_vanishes(r):
    res = fd_partial(spec_Z_single(0, 2), Param.ALPHA, r, ParamPoint.of("1.3", 1))
    assert abs(res.value) < 1e-20


def test_fd_rejects_bad_order_and_margin():
    with pytest.raises(ValueError):
        fd_partial(spec_Z_single(1, 1), Param.ALPHA, MAX_ORDER + 1, ParamPoint.of(1, 1))
    with pytest.raises(ValueError):
        fd_partial(spec_Z_single(1, 1), Param.ALPHA, 1, ParamPoint.of(1, 1), h="2")


def test_order_zero_expansions_are_the_series():
    p = ParamPoint.of(1, 1)
    assert expansion_alpha_star((1, 2), 0, p) == evaluate(spec_Zstar_I((1, 2)), p).value
    assert expansion_alpha_general(spec_Z_I((1, 2)), 0, p) == evaluate(spec_Z_I((1, 2)), p).value
    assert expansion_beta(spec_Z_I((1, 2)), 0, p) == evaluate(spec_Z_I((1, 2)), p).value


def test_depth_one_and_alpha_free_expansions_vanish():
    p = ParamPoint.of(1, 1)
    assert alpha_star_terms((2,), 1, p) == []
    assert alpha_general_terms(spec_Z_single(0, 2), 2, p) == []
    assert beta_terms(spec_Z_single(2, 0), 1, p) == []


def test_beta_expansion_known_sum():
    v = expansion_beta(spec_Z_single(1, 1), 1, ParamPoint.of(1, 2))
    assert close(v, 2 - pi2_over_6(), 1e-14)


def test_alpha_star_term_shapes():
    terms = alpha_star_terms((1, 2, 3), 2, ParamPoint.of(1, 1))
    assert sorted(t.target.label for t in terms) == sorted(
        ["Z*_I(1,1,1,2,3)", "Z*_I(1,1,2,1,3)", "Z*_I(1,2,1,1,3)"]
    )


@pytest.mark.parametrize(
    "kind, target, r, point",
    [
        ("eq10-star", (1, 2), 1, (1, 1)),
        ("eq13-strict", spec_Z_I((1, 2)), 1, (1, 1)),
        ("eq13-strict", spec_Z_I((1, 2)), 2, (1, "1.5")),
        ("beta", spec_Zstar_I((1, 2)), 1, ("0.9", "1.1")),
        ("eq10-star", (2,), 1, (1, 1)),
    ],
)
def test_expansion_examples(kind, target, r, point):
    rep = verify_expansion(kind, target, r, ParamPoint.of(*point))
    assert rep.status == "pass", rep.summary_line()


@pytest.mark.parametrize("index", [(1, 2), (2, 2), (1, 1, 3)])
@pytest.mark.parametrize("r", [0, 1, 2])
def test_weak_general_expansion_matches_star_expansion(index, r):
    """The binomial-weighted expansion read with weak links reproduces the ones-insertion form."""
    p = ParamPoint.of("0.8", "1.7")
    a = expansion_alpha_general(spec_Zstar_I(index), r, p)
    b = expansion_alpha_star(index, r, p)
    # different term lists, each summed to the default tolerance
    assert close(a, b, 1e-13)


def _increasing(n, top, weak):
    for ms in combinations_with_replacement(range(top + 1), n):
        if weak or len(set(ms)) == n:
            yield ms


@pytest.mark.parametrize("alpha", [Fraction(1), Fraction(1, 2), Fraction(7, 3)])
@pytest.mark.parametrize("weak", [True, False])
def test_ratio_derivative_exact(alpha, weak):
    for n in (1, 2, 3):
        for ms in _increasing(n, 8, weak):
            for r in range(3):
                assert ratio_derivative_jet(ms, alpha, r, weak=weak) == ratio_derivative_chains(
                    ms, alpha, r, weak=weak
                ), (ms, r)


def test_ratio_derivative_by_hand():
    # (a)_0/(a)_2 = 1/(a(a+1)); -d/da at a=1 is (2a+1)/(a(a+1))^2 = 3/4
    assert ratio_derivative_jet((0, 2), 1, 1, weak=False) == Fraction(3, 4)
