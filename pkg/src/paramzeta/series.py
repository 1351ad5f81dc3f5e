"""One evaluator for every nested series of the two- and three-parameter family.

A series is a chain of summation variables ``m_1 <~ m_2 <~ ... <~ m_n`` (each
``<~`` strict or weak), each carrying a weight
``1 / ((m+alpha)^a (m+beta)^b (m+gamma)^c)``.  Optional runs of auxiliary
variables with weight ``1/(m+alpha)`` sit between consecutive positions, and
the first and last variables may carry Pochhammer ratio decorations.  The
truncated sum over all variables ``< M`` is computed by one forward sweep that
keeps, for every position, the running weighted sum of everything to its
left; the limit is then extrapolated from checkpoints.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .indices import Index
from .numerics import (
    EXACT,
    AccelerationError,
    Arithmetic,
    TailFamily,
    accelerate,
    default_precision,
    to_rational,
)


class SpecError(ValueError):
    """A series description violates the convergence guard or is malformed."""


class Link(enum.Enum):
    STRICT = "<"
    WEAK = "<="


class Decoration(enum.Enum):
    NONE = "none"
    # (alpha)_{m_1}/m_1!  on the first variable,  m_n!/(alpha)_{m_n}  on the last
    POCH = "poch"
    # additionally (beta)_{m_1}/(gamma)_{m_1}  and  (gamma)_{m_n}/(beta)_{m_n}
    POCH3 = "poch3"


@dataclass(frozen=True)
class Node:
    a: int
    b: int
    c: int = 0

    @property
    def degree(self) -> int:
        return self.a + self.b + self.c


CHAIN_NODE = Node(1, 0, 0)


@dataclass(frozen=True)
class SeriesSpec:
    """Positions, links between them, inserted weak chains and boundary decoration.

    ``links[i]`` joins position ``i`` to position ``i+1``.  When
    ``chains[i] > 0`` the gap holds that many extra variables of weight
    ``1/(m+alpha)``; they follow position ``i`` weakly, are weakly ordered
    among themselves, and ``links[i]`` becomes the link from the last of them
    into position ``i+1``.
    """

    nodes: tuple[Node, ...]
    links: tuple[Link, ...] = ()
    chains: tuple[int, ...] = ()
    decoration: Decoration = Decoration.NONE
    arity: int = 2
    label: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.nodes)
        if n == 0:
            raise SpecError("a series needs at least one position")
        object.__setattr__(self, "nodes", tuple(Node(*x) if not isinstance(x, Node) else x for x in self.nodes))
        object.__setattr__(self, "links", tuple(Link(x) for x in self.links))
        chains = tuple(int(r) for r in self.chains) or (0,) * (n - 1)
        object.__setattr__(self, "chains", chains)
        if len(self.links) != n - 1 or len(chains) != n - 1:
            raise SpecError(f"{n} positions need {n - 1} links and chain lengths")
        if any(r < 0 for r in chains):
            raise SpecError("chain lengths must be nonnegative")
        if self.arity not in (2, 3):
            raise SpecError("arity must be 2 or 3")
        if self.arity == 2 and (any(x.c for x in self.nodes) or self.decoration is Decoration.POCH3):
            raise SpecError("gamma exponents and poch3 decoration need arity 3")
        for i, node in enumerate(self.nodes):
            need = 2 if i == n - 1 else 1
            if node.degree < need:
                raise SpecError(
                    f"position {i + 1} has exponent sum {node.degree}; convergence needs >= {need}"
                )
        if not self.label:
            object.__setattr__(self, "label", self.describe())

    def describe(self) -> str:
        """Compact text form, e.g. ``poch[(0,1) <2= (1,1)]``: chain length between link marks."""
        def node(x):
            return f"({x.a},{x.b},{x.c})" if self.arity == 3 else f"({x.a},{x.b})"

        out = node(self.nodes[0])
        for i in range(1, self.depth):
            mark = self.links[i - 1].value
            if self.chains[i - 1]:
                mark = f"{mark}{{{self.chains[i - 1]}}}"
            out += f" {mark} {node(self.nodes[i])}"
        return f"{self.decoration.value}[{out}]"

    @property
    def depth(self) -> int:
        return len(self.nodes)

    def flat(self) -> tuple[list[Node], list[Link]]:
        """Positions with the chain variables spliced in."""
        nodes = [self.nodes[0]]
        links = []
        for i in range(1, len(self.nodes)):
            for _ in range(self.chains[i - 1]):
                links.append(Link.WEAK)
                nodes.append(CHAIN_NODE)
            links.append(self.links[i - 1])
            nodes.append(self.nodes[i])
        return nodes, links

    def to_dict(self) -> dict:
        return {
            "nodes": [[x.a, x.b, x.c] for x in self.nodes],
            "links": [x.value for x in self.links],
            "chains": list(self.chains),
            "decoration": self.decoration.value,
            "arity": self.arity,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesSpec":
        return cls(
            nodes=tuple(Node(*x) for x in d["nodes"]),
            links=tuple(Link(x) for x in d.get("links", ())),
            chains=tuple(d.get("chains", ())),
            decoration=Decoration(d.get("decoration", "none")),
            arity=int(d.get("arity", 2)),
            label=d.get("label", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def evaluate(self, params: "ParamPoint", opts: "EvalOptions | None" = None) -> "EvalResult":
        return evaluate(self, params, opts or EvalOptions())

    @classmethod
    def from_json(cls, text: str) -> "SeriesSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ParamPoint:
    """Positive rational parameters; ``gamma`` only for three-parameter series."""

    alpha: mpq
    beta: mpq
    gamma: mpq | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if v is None:
                continue
            q = to_rational(v)
            if q <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, q)

    @classmethod
    def of(cls, alpha, beta, gamma=None) -> "ParamPoint":
        return cls(alpha, beta, gamma)

    def swapped(self) -> "ParamPoint":
        if self.gamma is not None:
            raise ValueError("swap is defined for two-parameter points")
        return ParamPoint(self.beta, self.alpha)

    def replace(self, **kw) -> "ParamPoint":
        d = {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}
        d.update(kw)
        return ParamPoint(**d)

    def as_strings(self) -> dict:
        out = {"alpha": str(self.alpha), "beta": str(self.beta)}
        if self.gamma is not None:
            out["gamma"] = str(self.gamma)
        return out


def decoration_shift(spec: SeriesSpec, params: ParamPoint) -> mpq:
    """Growth exponent of the first-variable decoration: ``(alpha)_m/m! ~ m^shift``."""
    if spec.decoration is Decoration.POCH:
        return params.alpha - 1
    if spec.decoration is Decoration.POCH3:
        return params.alpha + params.beta - params.gamma - 1
    return mpq(0)


def check_domain(spec: SeriesSpec, params: ParamPoint) -> None:
    if spec.arity == 3 and params.gamma is None:
        raise ValueError("three-parameter series need gamma")
    if spec.decoration is Decoration.POCH3 and params.alpha + params.beta - params.gamma <= 0:
        raise ValueError("need alpha + beta - gamma > 0")


@dataclass(frozen=True)
class EvalOptions:
    tol: float = 1e-15
    m_min: int = 1 << 10
    m_max: int = 1 << 20
    precision: int | None = None
    terms: int = 6
    # fixed truncation and extra log powers: used by the finite-difference oracle
    m_fixed: int | None = None
    log_boost: int = 0

    def bits(self) -> int:
        return self.precision or default_precision()


@dataclass
class EvalResult:
    value: object
    err: object
    M_final: int
    checkpoints: list = field(default_factory=list)
    accelerated: bool = True
    converged: bool = True


def tail_model(spec: SeriesSpec, params: ParamPoint, log_boost: int = 0) -> list[TailFamily]:
    """Exponent families of ``S - S_M`` as ``M`` grows.

    The outer summand mixes integer powers with powers shifted by the
    decoration exponent; degree-1 inner positions each add one power of
    ``log M``.  When the shift is an integer the two families coincide and
    resonances can add a log at every inner position.
    """
    nodes, _ = spec.flat()
    n = len(nodes)
    deg = [x.degree for x in nodes]
    decorated = spec.decoration is not Decoration.NONE
    if n == 1:
        return [TailFamily(Fraction(deg[0] - 1), log_boost)]
    inner_logs = sum(1 for d in deg[1:-1] if d == 1)
    if not decorated:
        inner_logs += deg[0] == 1
        return [TailFamily(Fraction(deg[-1] - 1), inner_logs + log_boost)]
    shift = decoration_shift(spec, params)
    first = Fraction(deg[-1] - 1) + Fraction(int(shift.numerator), int(shift.denominator))
    second = Fraction(sum(deg) - n)
    if (first - second).denominator == 1:
        return [TailFamily(min(first, second), n - 1 + log_boost)]
    return [TailFamily(first, inner_logs + log_boost), TailFamily(second, log_boost)]


# checkpoint grid: 16 points per octave, shared by every evaluation
_PER_OCTAVE = 16
_WINDOW = 32


def _grid_upto(M: int) -> list[int]:
    pts = set()
    t = 0
    while True:
        g = round(2 ** (t / _PER_OCTAVE))
        if g > M:
            break
        pts.add(g)
        t += 1
    return sorted(pts)


class _Sweep:
    """Resumable forward sweep: after ``run_to(M)`` the total covers all variables < M."""

    def __init__(self, spec: SeriesSpec, params: ParamPoint, arith: Arithmetic, record=()):
        self.nodes, self.links = spec.flat()
        self.dec = spec.decoration
        self.arith = arith
        s = arith.scalar
        self.alpha = s(params.alpha)
        self.beta = s(params.beta)
        self.gamma = s(params.gamma) if params.gamma is not None else None
        self.kinds = sorted(set(self.nodes), key=lambda x: (x.a, x.b, x.c))
        self.kind_of = [self.kinds.index(x) for x in self.nodes]
        self.weak = [lk is Link.WEAK for lk in self.links]
        zero = s(0)
        self.cum = [zero] * len(self.nodes)
        self.total = zero
        self.prefix = s(1)
        self.m = 0
        self.record = set(record)
        self.saved = {0: zero}

    def _weight(self, node: Node, xa, xb, xc):
        w = None
        for x, e in ((xa, node.a), (xb, node.b), (xc, node.c)):
            if e == 0:
                continue
            t = x**e
            w = t if w is None else w * t
        return 1 / w

    def run_to(self, M: int) -> None:
        nodes = self.nodes
        n = len(nodes)
        alpha, beta, gamma = self.alpha, self.beta, self.gamma
        dec = self.dec
        cum = self.cum
        weak = self.weak
        kind_of = self.kind_of
        total = self.total
        p = self.prefix
        record = self.record
        saved = self.saved
        for m in range(self.m, M):
            xa = m + alpha
            xb = m + beta
            xc = m + gamma if gamma is not None else None
            ws = [self._weight(k, xa, xb, xc) for k in self.kinds]
            if dec is Decoration.NONE:
                v = ws[kind_of[0]]
            else:
                v = ws[kind_of[0]] * p
            prev = cum[0]
            cum[0] = prev + v
            for i in range(1, n):
                src = cum[i - 1] if weak[i - 1] else prev
                v = ws[kind_of[i]] * src
                prev = cum[i]
                cum[i] = prev + v
            if dec is Decoration.NONE:
                total = total + v
            else:
                total = total + v / p
            if dec is Decoration.POCH:
                p = p * xa / (m + 1)
            elif dec is Decoration.POCH3:
                p = p * xa * xb / ((m + 1) * xc)
            if m + 1 in record:
                saved[m + 1] = total
        self.m = max(self.m, M)
        self.total = total
        self.prefix = p


def partial_sum(spec: SeriesSpec, params: ParamPoint, M: int, arith: Arithmetic = EXACT):
    """Truncated sum over all variables < M computed by the sweep."""
    check_domain(spec, params)
    with arith.active():
        sw = _Sweep(spec, params, arith)
        sw.run_to(M)
        return sw.total


def partial_sums(spec: SeriesSpec, params: ParamPoint, Ms: Sequence[int], arith: Arithmetic = EXACT) -> dict:
    check_domain(spec, params)
    with arith.active():
        sw = _Sweep(spec, params, arith, record=Ms)
        sw.run_to(max(Ms))
        return {M: sw.saved[M] for M in Ms}


def eval_dp(spec: SeriesSpec, params: ParamPoint, opts: EvalOptions = EvalOptions(), *, tail=None) -> EvalResult:
    """Value of the series with an error estimate.

    Doubles the truncation from ``opts.m_min`` until the tail fit's error
    estimate drops below ``opts.tol / 4`` (relative to ``max(1, |value|)``) or
    ``opts.m_max`` is reached, in which case the result is flagged as not
    converged.
    """
    check_domain(spec, params)
    families = tail if tail is not None else tail_model(spec, params, opts.log_boost)
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
    trail = set(grid) & {1 << k for k in range(64)}
    with arith.active():
        sw = _Sweep(spec, params, arith, record=set(grid) | set(schedule))
        for M in schedule:
            sw.run_to(M)
            pts = [(g, sw.saved[g]) for g in grid if M // _WINDOW <= g <= M]
            fam0, rest = families[0], families[1:]
            accelerated = True
            try:
                value, err = accelerate(pts, fam0.theta, fam0.log_degree, extra_families=rest, max_terms=opts.terms)
            except (AccelerationError, ValueError, ZeroDivisionError) as exc:
                accelerated = False
                value = getattr(exc, "estimate", sw.total)
                err = abs(sw.total - sw.saved.get(M // 2, sw.saved[0]))
            converged = accelerated and err <= opts.tol * max(1, abs(value)) / 4
            if converged:
                break
        checkpoints = [(g, sw.saved[g]) for g in sorted(trail) if g <= sw.m]
        return EvalResult(value, err, sw.m, checkpoints, accelerated, converged)


_CACHE: dict = {}


def evaluate(spec: SeriesSpec, params: ParamPoint, opts: EvalOptions = EvalOptions()) -> EvalResult:
    """Memoized :func:`eval_dp`; identical (spec, params, opts) give the identical object."""
    key = (spec, params, opts)
    hit = _CACHE.get(key)
    if hit is None:
        hit = _CACHE[key] = eval_dp(spec, params, opts)
    return hit


def clear_cache() -> None:
    _CACHE.clear()


# --- brute-force oracle -----------------------------------------------------

NAIVE_MAX_VARIABLES = 5
NAIVE_MAX_M = 80


def _rising(a, m: int):
    out = 1
    for t in range(m):
        out = out * (a + t)
    return out


def eval_naive(spec: SeriesSpec, params: ParamPoint, M: int, arith: Arithmetic = EXACT):
    """Literal nested-loop sum over all variables < M (exact with rational parameters)."""
    nodes, links = spec.flat()
    if len(nodes) > NAIVE_MAX_VARIABLES or M > NAIVE_MAX_M:
        raise ValueError(
            f"brute force limited to {NAIVE_MAX_VARIABLES} variables and M <= {NAIVE_MAX_M}"
        )
    check_domain(spec, params)
    with arith.active():
        s = arith.scalar
        al, be = s(params.alpha), s(params.beta)
        ga = s(params.gamma) if params.gamma is not None else None

        def weight(node: Node, m: int):
            w = s(1)
            w = w / (m + al) ** node.a / (m + be) ** node.b
            if node.c:
                w = w / (m + ga) ** node.c
            return w

        memo = {}

        def deco(m: int):
            # (alpha)_m / m! [ * (beta)_m / (gamma)_m ], each a direct product
            if m not in memo:
                d = _rising(al, m) / s(_rising(1, m))
                if spec.decoration is Decoration.POCH3:
                    d = d * _rising(be, m) / _rising(ga, m)
                memo[m] = d
            return memo[m]

        total = s(0)
        n = len(nodes)

        def rec(i: int, lo: int, acc, first: int):
            nonlocal total
            for m in range(lo, M):
                term = acc * weight(nodes[i], m)
                f = m if i == 0 else first
                if i == n - 1:
                    if spec.decoration is not Decoration.NONE:
                        term = term * deco(f) / deco(m)
                    total = total + term
                else:
                    nxt = m if links[i] is Link.WEAK else m + 1
                    rec(i + 1, nxt, term, f)

        if M > 0:
            rec(0, 0, s(1), 0)
        return total


# --- named series -----------------------------------------------------------


def _need_eval_admissible(index: Index) -> None:
    if index[-1] < 2:
        raise SpecError(f"last part of {tuple(index)} must be >= 2")


def _label(name: str, index) -> str:
    return f"{name}({','.join(str(k) for k in index)})"


def spec_Z_I(index) -> SeriesSpec:
    index = Index(index)
    _need_eval_admissible(index)
    nodes = (Node(0, index[0]),) + tuple(Node(1, k - 1) for k in index[1:])
    return SeriesSpec(nodes, (Link.STRICT,) * (len(index) - 1), decoration=Decoration.POCH, label=_label("Z_I", index))


def spec_Z_II(index) -> SeriesSpec:
    index = Index(index)
    _need_eval_admissible(index)
    nodes = tuple(Node(1, k - 1) for k in index[:-1]) + (Node(2, index[-1] - 2),)
    return SeriesSpec(nodes, (Link.STRICT,) * (len(index) - 1), decoration=Decoration.POCH, label=_label("Z_II", index))


def spec_Zstar_I(index) -> SeriesSpec:
    index = Index(index)
    _need_eval_admissible(index)
    nodes = (Node(0, index[0]),) + tuple(Node(1, k - 1) for k in index[1:])
    return SeriesSpec(nodes, (Link.WEAK,) * (len(index) - 1), decoration=Decoration.POCH, label=_label("Z*_I", index))


def spec_Z_single(a: int, b: int) -> SeriesSpec:
    """``sum_m 1/((m+alpha')^a (m+beta)^b)``."""
    return SeriesSpec((Node(a, b),), label=f"Z({a}|{b})")


def spec_general(a_vec: Sequence[int], b_vec: Sequence[int], link: Link = Link.STRICT) -> SeriesSpec:
    """Decorated series with arbitrary exponents, all links ``link``."""
    if len(a_vec) != len(b_vec):
        raise SpecError("exponent vectors differ in length")
    nodes = tuple(Node(a, b) for a, b in zip(a_vec, b_vec))
    name = "Z" if link is Link.STRICT else "Z*"
    return SeriesSpec(
        nodes,
        (link,) * (len(nodes) - 1),
        decoration=Decoration.POCH,
        label=f"{name}({','.join(map(str, a_vec))}|{','.join(map(str, b_vec))})",
    )


def spec_Zr(r_vec: Sequence[int], a_vec: Sequence[int], b_vec: Sequence[int]) -> SeriesSpec:
    """Strict series with weak runs of ``1/(m+alpha)`` variables in the gaps."""
    n = len(a_vec)
    if len(b_vec) != n or len(r_vec) != max(n - 1, 0):
        raise SpecError("need len(a) == len(b) == len(r) + 1")
    nodes = tuple(Node(a, b) for a, b in zip(a_vec, b_vec))
    if n == 1:
        return SeriesSpec(nodes, label=f"Z_()({a_vec[0]}|{b_vec[0]})")
    return SeriesSpec(
        nodes,
        (Link.STRICT,) * (n - 1),
        tuple(r_vec),
        decoration=Decoration.POCH,
        label=f"Z_({','.join(map(str, r_vec))})({','.join(map(str, a_vec))}|{','.join(map(str, b_vec))})",
    )


def spec_Zstar_I3(index) -> SeriesSpec:
    index = Index(index)
    _need_eval_admissible(index)
    nodes = (Node(0, 0, index[0]),) + tuple(Node(1, 1, k - 2) for k in index[1:])
    return SeriesSpec(
        nodes, (Link.WEAK,) * (len(index) - 1), decoration=Decoration.POCH3, arity=3, label=_label("Z*_I3", index)
    )


def spec_Z3_single(a: int, b: int, c: int) -> SeriesSpec:
    return SeriesSpec((Node(a, b, c),), arity=3, label=f"Z({a}|{b}|{c})")
