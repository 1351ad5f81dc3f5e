import json
import random

import gmpy2
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings, strategies as st

from paramzeta.numerics import EXACT, working_precision
from paramzeta.series import (
    Decoration,
    EvalOptions,
    Link,
    Node,
    ParamPoint,
    SeriesSpec,
    SpecError,
    eval_dp,
    eval_naive,
    evaluate,
    partial_sum,
    partial_sums,
    spec_general,
    spec_Z3_single,
    spec_Z_I,
    spec_Z_II,
    spec_Z_single,
    spec_Zr,
    spec_Zstar_I,
    spec_Zstar_I3,
    tail_model,
)

ONE = ParamPoint.of(1, 1)


def zeta(s):
    with working_precision(256):
        return gmpy2.zeta(s)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1)


def test_basel_and_telescoping():
    assert rel(eval_dp(spec_Z_single(0, 2), ONE).value, zeta(2)) < 1e-10
    assert rel(eval_dp(spec_Z_single(1, 1), ParamPoint.of(1, 2)).value, 1) < 1e-12
    assert rel(eval_dp(spec_Z_single(2, 0), ONE).value, zeta(2)) < 1e-10


def test_named_series_at_unit_parameters():
    assert rel(eval_dp(spec_Z_I((2,)), ONE).value, zeta(2)) < 1e-12
    assert rel(eval_dp(spec_Z_II((3,)), ONE).value, zeta(3)) < 1e-12
    assert rel(eval_dp(spec_Zstar_I((1, 2)), ONE).value, 2 * zeta(3)) < 1e-8


def test_naive_examples():
    assert eval_naive(spec_Z_single(0, 2), ONE, 3) == mpq(49, 36)
    assert eval_naive(spec_Z_I((1, 2)), ONE, 3) == mpq(5, 12)
    for spec in (spec_Z_single(0, 2), spec_Zstar_I((1, 2)), spec_Zr((1,), (0, 1), (1, 1))):
        assert eval_naive(spec, ONE, 0) == 0
        assert partial_sum(spec, ONE, 0) == 0


def test_naive_chain_example_by_hand():
    # r=(1): sum over m1 <= l < m2 < 3 of 1/(m1+1) * 1/(l+1) * 1/(m2+1)^2
    spec = spec_Zr((1,), (0, 1), (1, 1))
    expect = mpq(0)
    for m1 in range(3):
        for l in range(m1, 3):
            for m2 in range(l + 1, 3):
                expect += mpq(1, (m1 + 1) * (l + 1) * (m2 + 1) ** 2)
    assert eval_naive(spec, ONE, 3) == expect == partial_sum(spec, ONE, 3)


def test_naive_size_guard():
    with pytest.raises(ValueError):
        eval_naive(spec_Zstar_I((1, 1, 1, 1, 1, 2)), ONE, 5)
    with pytest.raises(ValueError):
        eval_naive(spec_Z_single(0, 2), ONE, 81)


def test_empty_chains_reduce_to_strict_series():
    P = ParamPoint.of("3/2", "1/2")
    a = spec_Zr((0, 0), (0, 1, 2), (1, 1, 0))
    b = spec_general((0, 1, 2), (1, 1, 0))
    assert a == b
    assert partial_sum(a, P, 20) == partial_sum(b, P, 20)


def test_single_variant_of_chain_series():
    assert spec_Zr((), (1,), (2,)) == spec_Z_single(1, 2)


def test_three_parameter_reductions():
    P = ParamPoint.of("0.7", "1.3", "1.3")
    three = eval_dp(spec_Zstar_I3((1, 2)), P)
    two = eval_dp(spec_Zstar_I((1, 2)), ParamPoint.of("0.7", "1.3"))
    assert abs(three.value - two.value) <= three.err + two.err
    same = ParamPoint.of("1.4", "1.4", "1.4")
    one_param = eval_dp(spec_Zstar_I((1, 2)), ParamPoint.of("1.4", "1.4"))
    assert abs(eval_dp(spec_Zstar_I3((1, 2)), same).value - one_param.value) < 1e-12
    assert partial_sum(spec_Z3_single(1, 1, 0), P, 30) == partial_sum(spec_Z_single(1, 1), ParamPoint.of("0.7", "1.3"), 30)


def test_single_series_parameter_swap():
    P = ParamPoint.of("0.6", "1.9")
    assert partial_sum(spec_Z_single(0, 2), P, 25) == partial_sum(spec_Z_single(2, 0), P.swapped(), 25)


@pytest.mark.parametrize("alpha", ["0.5", "1.7", "3"])
def test_depth_one_decorations_cancel(alpha):
    P = ParamPoint.of(alpha, "1.25")
    for M in (1, 7, 40):
        assert partial_sum(spec_Z_I((3,)), P, M) == partial_sum(spec_Z_single(0, 3), P, M)


def test_convergence_guard():
    with pytest.raises(SpecError):
        spec_Z_single(0, 1)
    with pytest.raises(SpecError):
        SeriesSpec((Node(0, 0), Node(1, 1)), (Link.STRICT,))
    with pytest.raises(SpecError):
        SeriesSpec((Node(1, 1),), decoration=Decoration.POCH3)
    with pytest.raises(SpecError):
        SeriesSpec((Node(1, 1), Node(1, 1)), ())
    with pytest.raises(SpecError):
        spec_Z_I((2, 1))
    with pytest.raises(SpecError):
        spec_Zr((1, 1), (1, 1), (1, 1))
    # negative exponents are fine when the sums are large enough
    SeriesSpec((Node(-1, 2), Node(3, -1)), (Link.WEAK,), decoration=Decoration.POCH)


def test_parameter_domain():
    with pytest.raises(ValueError):
        ParamPoint.of(0, 1)
    with pytest.raises(ValueError):
        ParamPoint.of(1, "-0.5")
    with pytest.raises(ValueError):
        eval_dp(spec_Zstar_I3((1, 2)), ParamPoint.of(1, 1, 2))
    with pytest.raises(ValueError):
        eval_dp(spec_Zstar_I3((1, 2)), ONE)


def test_json_round_trip():
    spec = spec_Zr((2, 0), (0, 1, 2), (1, 0, 0))
    again = SeriesSpec.from_json(spec.to_json())
    assert again == spec and again.label == spec.label
    raw = json.loads(spec.to_json())
    assert raw["links"] == ["<", "<"] and raw["chains"] == [2, 0]


def test_flat_layout():
    nodes, links = spec_Zr((2,), (0, 1), (1, 1)).flat()
    assert [n.degree for n in nodes] == [1, 1, 1, 2]
    assert links == [Link.WEAK, Link.WEAK, Link.STRICT]


def test_monotone_checkpoints():
    res = eval_dp(spec_Zstar_I((1, 1, 3)), ParamPoint.of("0.8", "1.7"), EvalOptions(m_fixed=2048))
    vals = [v for _, v in res.checkpoints]
    assert len(vals) >= 10
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_eval_result_fields():
    res = eval_dp(spec_Z_I((1, 2)), ParamPoint.of("1.5", "0.6"))
    assert res.accelerated and res.converged
    assert res.err >= 0 and res.M_final >= 1024
    assert [M for M, _ in res.checkpoints][:3] == [1, 2, 4]


def test_unconverged_result_is_flagged():
    res = eval_dp(spec_Z_single(0, 2), ONE, EvalOptions(tol=1e-70, m_max=2048))
    assert not res.converged
    assert res.M_final == 2048


def test_cache_returns_same_object():
    P = ParamPoint.of("1.1", "0.9")
    assert evaluate(spec_Z_II((2, 2)), P) is evaluate(spec_Z_II((2, 2)), P)


def test_tail_model_shapes():
    fam = tail_model(spec_Zstar_I((1, 1, 2)), ONE)
    assert [(f.theta, f.log_degree) for f in fam] == [(1, 2)]
    fam = tail_model(spec_Zstar_I((1, 1, 2)), ParamPoint.of("1.5", 1))
    assert [(f.theta, f.log_degree) for f in fam] == [(mpq(3, 2), 1), (1, 0)]
    fam = tail_model(spec_Z_single(2, 3), ONE)
    assert [(f.theta, f.log_degree) for f in fam] == [(4, 0)]


def test_partial_sums_at_several_cutoffs():
    P = ParamPoint.of("1/2", 2)
    spec = spec_Zstar_I((2, 1, 2))
    table = partial_sums(spec, P, [3, 9, 17])
    for M, v in table.items():
        assert v == eval_naive(spec, P, M)


# -- oracle equivalence on random small specs --------------------------------

RATIONALS = [mpq(1, 2), mpq(1), mpq(3, 2), mpq(2)]


EXPONENTS = range(-1, 4)
NODES = {
    (arity, need): [
        Node(a, b, c)
        for a in EXPONENTS
        for b in EXPONENTS
        for c in (EXPONENTS if arity == 3 else (0,))
        if a + b + c >= need
    ]
    for arity in (2, 3)
    for need in (1, 2)
}


@st.composite
def random_specs(draw):
    arity = draw(st.sampled_from([2, 3]))
    depth = draw(st.integers(1, 3))
    nodes = tuple(draw(st.sampled_from(NODES[arity, 2 if i == depth - 1 else 1])) for i in range(depth))
    links = tuple(draw(st.sampled_from(list(Link))) for _ in range(depth - 1))
    chains = tuple(draw(st.integers(0, 2)) for _ in range(depth - 1))
    if sum(chains) > 2:
        chains = tuple(min(r, 1) for r in chains[:2]) + (0,) * max(0, depth - 3)
    decos = [Decoration.NONE, Decoration.POCH] + ([Decoration.POCH3] if arity == 3 else [])
    deco = draw(st.sampled_from(decos))
    return SeriesSpec(nodes, links, chains, deco, arity)


@st.composite
def random_points(draw, arity):
    a, b = draw(st.sampled_from(RATIONALS)), draw(st.sampled_from(RATIONALS))
    if arity == 2:
        return ParamPoint(a, b)
    return ParamPoint(a, b, draw(st.sampled_from([g for g in RATIONALS if a + b - g > 0])))


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_sweep_matches_brute_force(data):
    spec = data.draw(random_specs())
    P = data.draw(random_points(spec.arity))
    variables = len(spec.flat()[0])
    M = data.draw(st.integers(0, {1: 50, 2: 40, 3: 20, 4: 12, 5: 9}[variables]))
    assert partial_sum(spec, P, M, EXACT) == eval_naive(spec, P, M, EXACT)
