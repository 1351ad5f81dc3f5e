"""Working-precision scalars, Pochhammer ratio tables and tail extrapolation.

Two arithmetic backends share one scalar contract: MPFR floats at a
configurable binary precision (gmpy2 ``mpfr``) and exact rationals (gmpy2
``mpq``).  Both support ``+ - * /`` and integer powers, so the evaluators are
written once against whichever scalar type the backend produces.
"""

from __future__ import annotations

import contextlib
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

DEFAULT_PRECISION = 256
PRECISION_ENV = "PARAMZETA_PRECISION"


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION
    bits = int(raw)
    if bits < 53:
        raise ValueError(f"{PRECISION_ENV} must be at least 53 bits, got {bits}")
    return bits


@contextlib.contextmanager
def working_precision(bits: int) -> Iterator[None]:
    """Run the block with MPFR arithmetic at ``bits`` of precision."""
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        yield


def to_rational(x) -> mpq:
    """Exact rational from int, str (decimal or p/q), Fraction or mpq."""
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        # binary floats are exact rationals, but usually not what the user meant
        return mpq(Fraction(repr(x)))
    return mpq(x)


@dataclass(frozen=True)
class Arithmetic:
    """Scalar backend: ``exact=True`` gives mpq, otherwise mpfr at ``precision`` bits."""

    exact: bool = False
    precision: int = DEFAULT_PRECISION

    def scalar(self, x):
        if isinstance(x, mpfr):
            if self.exact:
                raise TypeError("exact arithmetic needs rational inputs")
            return mpfr(x)
        q = to_rational(x)
        return q if self.exact else mpfr(q)

    @contextlib.contextmanager
    def active(self) -> Iterator[None]:
        if self.exact:
            yield
        else:
            with working_precision(self.precision):
                yield


EXACT = Arithmetic(exact=True)


def decimal_digits(precision: int) -> int:
    """Significant digits used when printing a value carried at ``precision`` bits."""
    return max(1, int(precision * math.log10(2)) - 2)


def to_decimal(x, digits: int) -> str:
    """Scientific-notation decimal string with ``digits`` significant digits."""
    if isinstance(x, mpq):
        x = mpfr(x, max(64, int(digits * 3.33) + 16))
    if not gmpy2.is_finite(x):
        return str(x)
    if x == 0:
        return "0." + "0" * (digits - 1) + "e+00"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{e:+03d}"


# --- Pochhammer tables ------------------------------------------------------


class PochhammerTables:
    """``prefix[m] = (alpha)_m / m!`` and ``suffix[m] = m! / (alpha)_m`` for m <= M.

    Built incrementally by ``prefix[m+1] = prefix[m] (m + alpha) / (m + 1)``.
    """

    def __init__(self, alpha, M: int, arith: Arithmetic = Arithmetic()):
        if M < 0:
            raise ValueError("M must be nonnegative")
        a = alpha if isinstance(alpha, mpfr) else to_rational(alpha)
        if a <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.M = M
        with arith.active():
            a = arith.scalar(a)
            self.alpha = a
            p = arith.scalar(1)
            prefix = [p]
            for m in range(M):
                p = p * (m + a) / (m + 1)
                prefix.append(p)
            self.prefix = tuple(prefix)
            self.suffix = tuple(1 / v for v in prefix)


def build_pochhammer(alpha, M: int, arith: Arithmetic = Arithmetic()) -> PochhammerTables:
    return PochhammerTables(alpha, M, arith)


# --- tail extrapolation -----------------------------------------------------


@dataclass(frozen=True)
class TailFamily:
    """Tail terms ``M^-(theta + j) * log(M)^l`` for j >= 0 and l <= log_degree."""

    theta: Fraction
    log_degree: int = 0


class AccelerationError(ArithmeticError):
    """The tail fit did not beat the raw partial sums; carries the best estimate."""

    def __init__(self, message: str, estimate, err):
        super().__init__(message)
        self.estimate = estimate
        self.err = err


def _lstsq(rows: list[list], rhs: list) -> list:
    """Least squares via column-equilibrated normal equations and pivoted elimination."""
    ncols = len(rows[0])
    scale = []
    for c in range(ncols):
        s = max(abs(r[c]) for r in rows)
        scale.append(s if s != 0 else mpfr(1))
    A = [[r[c] / scale[c] for c in range(ncols)] for r in rows]
    N = [[sum(A[k][i] * A[k][j] for k in range(len(A))) for j in range(ncols)] for i in range(ncols)]
    y = [sum(A[k][i] * rhs[k] for k in range(len(A))) for i in range(ncols)]
    for col in range(ncols):
        piv = max(range(col, ncols), key=lambda r: abs(N[r][col]))
        if N[piv][col] == 0:
            raise ZeroDivisionError("singular tail-fit system")
        N[col], N[piv] = N[piv], N[col]
        y[col], y[piv] = y[piv], y[col]
        inv = 1 / N[col][col]
        for r in range(col + 1, ncols):
            f = N[r][col] * inv
            if f == 0:
                continue
            row_r, row_c = N[r], N[col]
            for c in range(col, ncols):
                row_r[c] -= f * row_c[c]
            y[r] -= f * y[col]
    x = [mpfr(0)] * ncols
    for r in range(ncols - 1, -1, -1):
        acc = y[r] - sum(N[r][c] * x[c] for c in range(r + 1, ncols))
        x[r] = acc / N[r][r]
    return [x[c] / scale[c] for c in range(ncols)]


def _basis(families: Sequence[TailFamily], terms: int) -> list[tuple[mpfr, int]]:
    out = []
    for fam in families:
        th = mpfr(to_rational(fam.theta))
        for j in range(terms):
            for l in range(fam.log_degree + 1):
                out.append((th + j, l))
    return out


def _fit_limit(points, families, terms: int):
    basis = _basis(families, terms)
    rows = []
    rhs = []
    for M, S in points:
        Mf = mpfr(M)
        L = gmpy2.log(Mf)
        row = [mpfr(1)]
        for e, l in basis:
            row.append(Mf ** (-e) * L**l)
        rows.append(row)
        rhs.append(mpfr(S))
    return _lstsq(rows, rhs)[0]


def unknowns(families: Sequence[TailFamily], terms: int) -> int:
    return 1 + terms * sum(f.log_degree + 1 for f in families)


def accelerate(checkpoints, theta, log_degree: int = 0, *, extra_families=(), max_terms: int = 6):
    """Extrapolate partial sums ``S_M`` to ``M -> infinity``.

    Fits ``S_M = S + sum c_{jl} M^-(theta+j) log^l M`` (plus any extra tail
    families) by least squares over the checkpoints, using as many shifts ``j``
    as the data supports, up to ``max_terms``.  The error estimate is the
    change in the limit when one shift fewer is used.

    Returns ``(limit, err)``.  Raises AccelerationError when the estimate is
    larger than the last increment between checkpoints.
    """
    families = [TailFamily(theta, log_degree), *extra_families]
    for fam in families:
        if to_rational(fam.theta) <= 0:
            raise ValueError("tail exponents must be positive")
    pts = sorted((int(M), S) for M, S in checkpoints)
    per_shift = sum(f.log_degree + 1 for f in families)
    if len(pts) < 1 + per_shift:
        raise ValueError(f"need at least {1 + per_shift} checkpoints, got {len(pts)}")
    # extra working precision absorbs the conditioning of the power/log basis
    prec = gmpy2.get_context().precision
    terms = min(max_terms, (len(pts) - 1) // per_shift)
    with working_precision(2 * prec + 64):
        limit = _fit_limit(pts, families, terms)
        if terms >= 2:
            coarse = _fit_limit(pts, families, terms - 1)
        else:
            coarse = mpfr(pts[-1][1])
        err = abs(limit - coarse)
        last_step = abs(mpfr(pts[-1][1]) - mpfr(pts[-2][1])) if len(pts) > 1 else mpfr(0)
    limit = mpfr(limit)
    err = mpfr(err)
    noise = abs(limit) * mpfr(2) ** (8 - prec)
    if err > last_step and err > noise:
        raise AccelerationError(
            f"tail fit residual {float(err):.3g} exceeds last increment {float(last_step):.3g}",
            limit,
            err,
        )
    return limit, err
