import math

import gmpy2
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings, strategies as st

from paramzeta.numerics import (
    EXACT,
    AccelerationError,
    Arithmetic,
    TailFamily,
    accelerate,
    build_pochhammer,
    decimal_digits,
    default_precision,
    to_decimal,
    to_rational,
    working_precision,
)


def test_pochhammer_examples():
    assert build_pochhammer(1, 5, EXACT).prefix == (1,) * 6
    assert build_pochhammer(2, 3, EXACT).prefix[3] == 4
    assert build_pochhammer(mpq(1, 2), 1, EXACT).prefix[1] == mpq(1, 2)
    t = build_pochhammer(mpq(3, 2), 0, EXACT)
    assert t.prefix == (1,) and t.suffix == (1,)


@pytest.mark.parametrize("alpha", [0, -1, "-1/2"])
def test_pochhammer_domain(alpha):
    with pytest.raises(ValueError):
        build_pochhammer(alpha, 3)


@given(st.fractions(min_value=mpq(1, 100), max_value=5), st.integers(0, 30))
@settings(max_examples=50)
def test_pochhammer_recurrence_exact(alpha, M):
    t = build_pochhammer(alpha, M, EXACT)
    a = to_rational(alpha)
    for m in range(M):
        assert t.prefix[m + 1] * (m + 1) == t.prefix[m] * (m + a)
        assert t.prefix[m] * t.suffix[m] == 1


def test_pochhammer_product_near_one_in_floating_point():
    t = build_pochhammer(mpq(7, 3), 200, Arithmetic(precision=128))
    with working_precision(128):
        assert all(abs(p * s - 1) < mpfr(2) ** -120 for p, s in zip(t.prefix, t.suffix))


@pytest.mark.parametrize("alpha", ["0.5", "1", "1.5", "2"])
def test_suffix_growth_rate(alpha):
    M = 1 << 16
    t = build_pochhammer(alpha, 2 * M, Arithmetic(precision=64))
    ratio = float(t.suffix[2 * M] / t.suffix[M])
    assert all(s > 0 for s in t.suffix[:: 1 << 12])
    assert ratio == pytest.approx(2 ** (1 - float(alpha)), rel=0.01)


def _partial_sums(f, Ms):
    out, s, m = [], mpfr(0), 0
    for M in Ms:
        while m < M:
            s += f(m)
            m += 1
        out.append((M, s))
    return out


def test_accelerate_basel():
    with working_precision(256):
        pts = _partial_sums(lambda m: 1 / mpfr(m + 1) ** 2, [1 << k for k in range(10, 17)])
        limit, err = accelerate(pts, 1, 0)
        # independent value of pi^2/6 from the constant routine, not from summation
        assert abs(limit - gmpy2.const_pi() ** 2 / 6) < 1e-10
        assert err < 1e-10


def test_accelerate_telescoping_and_constant():
    with working_precision(256):
        pts = _partial_sums(lambda m: 1 / (mpfr(m + 1) * (m + 2)), [1 << k for k in range(10, 17)])
        limit, _ = accelerate(pts, 1, 0)
        assert abs(limit - 1) < 1e-12
        flat = [(1 << k, mpfr("0.5")) for k in range(4, 10)]
        limit, err = accelerate(flat, 1, 0)
        assert limit == mpfr("0.5") and err == 0


def test_accelerate_synthetic_exact_tail():
    with working_precision(256):
        c, th = mpfr(3), mpq(3, 2)
        pts = [(M, mpfr(2) - c * mpfr(M) ** -mpfr(th)) for M in (64, 128, 256, 512, 1024)]
        limit, _ = accelerate(pts, th, 0, max_terms=1)
        assert abs(limit - 2) < mpfr(2) ** -240


def test_accelerate_with_logs_and_two_families():
    # S_M = 1 - (log M)/M - 2 M^-1.5
    with working_precision(256):
        pts = []
        for k in range(40):
            M = round(2 ** (5 + k / 8))
            Mf = mpfr(M)
            pts.append((M, 1 - gmpy2.log(Mf) / Mf - 2 * Mf ** mpfr(-1.5)))
        limit, err = accelerate(pts, 1, 1, extra_families=[TailFamily(mpq(3, 2))], max_terms=3)
        assert abs(limit - 1) < 1e-40


def test_accelerate_preconditions():
    with pytest.raises(ValueError):
        accelerate([(10, 1), (20, 1)], 0, 0)
    with pytest.raises(ValueError):
        accelerate([(10, 1)], 1, 1)


def test_accelerate_signals_bad_model():
    # oscillating partial sums cannot be fitted by an algebraic tail
    with working_precision(128):
        pts = [(M, mpfr((-1) ** M) / M + (M % 7)) for M in range(100, 140, 2)]
        with pytest.raises(AccelerationError) as info:
            accelerate(pts, 2, 0)
        assert info.value.estimate is not None


def test_decimal_formatting():
    assert decimal_digits(256) == 75
    with working_precision(256):
        s = to_decimal(gmpy2.const_pi(), 12)
    assert s == "3.14159265359e+00"
    assert to_decimal(mpfr(0), 3) == "0.00e+00"
    assert to_decimal(mpfr(-0.125), 2).startswith("-1.2")
    assert to_decimal(mpq(1, 3), 5) == "3.3333e-01"


def test_precision_env(monkeypatch):
    monkeypatch.setenv("PARAMZETA_PRECISION", "128")
    assert default_precision() == 128
    monkeypatch.setenv("PARAMZETA_PRECISION", "10")
    with pytest.raises(ValueError):
        default_precision()
    monkeypatch.delenv("PARAMZETA_PRECISION")
    assert default_precision() == 256


def test_rational_inputs():
    assert to_rational("0.8") == mpq(4, 5)
    assert to_rational(0.8) == mpq(4, 5)
    assert to_rational("3/2") == mpq(3, 2)
    assert Arithmetic(exact=True).scalar("1.5") == mpq(3, 2)
    with pytest.raises(TypeError):
        Arithmetic(exact=True).scalar(mpfr(1))
