"""Index combinatorics: compositions, rotations and cyclic-sum term lists."""

from __future__ import annotations

from itertools import combinations
from typing import Iterator, Sequence


class Index(tuple):
    """An immutable composition ``(k_1, ..., k_n)`` of positive integers."""

    def __new__(cls, parts: Sequence[int]) -> "Index":
        parts = tuple(int(k) for k in parts)
        if not parts:
            raise ValueError("an index needs at least one part")
        if any(k < 1 for k in parts):
            raise ValueError(f"index parts must be positive integers, got {parts}")
        return super().__new__(cls, parts)

    @property
    def weight(self) -> int:
        return sum(self)

    @property
    def depth(self) -> int:
        return len(self)

    @property
    def admissible(self) -> bool:
        """Some part is at least 2 (hypothesis of the cyclic sum formulas)."""
        return any(k >= 2 for k in self)

    @property
    def eval_admissible(self) -> bool:
        """Last part is at least 2, so the named nested series converge."""
        return self[-1] >= 2

    def __repr__(self) -> str:
        return f"Index({format_index(self)})"


def parse_index(text: str) -> Index:
    """Parse ``"k1,k2,...,kn"``."""
    try:
        parts = [int(tok) for tok in text.replace(" ", "").split(",")]
    except ValueError:
        raise ValueError(f"malformed index {text!r}; expected e.g. '1,2,3'") from None
    return Index(parts)


def format_index(index: Sequence[int]) -> str:
    return ",".join(str(k) for k in index)


def cyclic_shift(index: Index, i: int) -> Index:
    """Return ``(k_{i+1}, ..., k_n, k_1, ..., k_i)``."""
    n = len(index)
    if not 1 <= i <= n:
        raise ValueError(f"shift {i} out of range 1..{n}")
    return Index(index[i:] + index[:i])


def _require_admissible(index: Index) -> None:
    if not index.admissible:
        raise ValueError(f"index {format_index(index)} has no part >= 2")


def csf_lhs_terms(index: Index) -> list[Index]:
    """Indices ``(j+1, k_{i+1},...,k_n, k_1,...,k_{i-1}, k_i - j)`` of the cyclic-sum side.

    Ordered by ``i`` then ``j``; parts equal to 1 contribute nothing.
    """
    _require_admissible(index)
    n = len(index)
    out = []
    for i in range(n):
        ki = index[i]
        middle = index[i + 1:] + index[:i]
        for j in range(ki - 1):
            out.append(Index((j + 1,) + middle + (ki - j,)))
    return out


def csf_rhs_terms(index: Index) -> list[Index]:
    """Indices ``(k_{i+1},...,k_n, k_1,...,k_{i-1}, k_i + 1)`` for i = 1..n."""
    _require_admissible(index)
    n = len(index)
    return [Index(index[i + 1:] + index[:i] + (index[i] + 1,)) for i in range(n)]


def compositions(k: int, n: int) -> list[Index]:
    """All compositions of ``k`` into ``n`` positive parts with last part >= 2.

    Lexicographic order.  There are ``binom(k-2, n-1)`` of them.
    """
    if not 0 < n < k:
        raise ValueError(f"need 0 < n < k, got k={k}, n={n}")
    # choose n-1 cut points among 1..k-2 so the last block keeps >= 2
    out = []
    for cuts in combinations(range(1, k - 1), n - 1):
        bounds = (0,) + cuts + (k,)
        out.append(Index(bounds[t + 1] - bounds[t] for t in range(n)))
    return sorted(out)


def weak_compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Tuples of ``parts`` nonnegative integers summing to ``total`` (lexicographic)."""
    if parts < 0 or total < 0:
        raise ValueError("parts and total must be nonnegative")
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def admissible_indices(max_weight: int, max_depth: int) -> list[Index]:
    """Every admissible index with weight <= max_weight and depth <= max_depth.

    Sorted by (depth, weight, parts).
    """
    out = []
    for depth in range(1, max_depth + 1):
        for weight in range(depth, max_weight + 1):
            for cuts in combinations(range(1, weight), depth - 1):
                bounds = (0,) + cuts + (weight,)
                idx = Index(bounds[t + 1] - bounds[t] for t in range(depth))
                if idx.admissible:
                    out.append(idx)
    return sorted(out, key=lambda x: (x.depth, x.weight, tuple(x)))


def repeat(block: Sequence[int], times: int) -> tuple[int, ...]:
    """``{k_1,...,k_m}^n``: the block concatenated ``times`` times."""
    return tuple(block) * times


def binom(x: int, k: int) -> int:
    """Generalized binomial ``x(x-1)...(x-k+1)/k!`` for integer ``x``; zero for k < 0."""
    if k < 0:
        return 0
    num = 1
    den = 1
    for t in range(k):
        num *= x - t
        den *= t + 1
    return num // den
