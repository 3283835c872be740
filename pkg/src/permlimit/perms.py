"""Permutations in one-line notation: patterns, containment, simplicity, substitution."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence


class PermError(ValueError):
    code = "invalid_permutation"


class InvalidPositions(PermError):
    code = "invalid_positions"


class ArityError(PermError):
    code = "arity_mismatch"


class Permutation(tuple):
    """An immutable permutation of 1..n, stored as its one-line notation."""

    __slots__ = ()

    def __new__(cls, values: Iterable[int] = ()):
        vals = tuple(int(v) for v in values)
        n = len(vals)
        if n == 0:
            raise PermError("a permutation has size at least 1")
        seen = bytearray(n + 1)
        for v in vals:
            if v < 1 or v > n or seen[v]:
                raise PermError(f"not a permutation of 1..{n}: {vals[:20]}")
            seen[v] = 1
        return tuple.__new__(cls, vals)

    @classmethod
    def _trusted(cls, vals) -> "Permutation":
        # skip validation for values we built ourselves
        return tuple.__new__(cls, vals)

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        text = text.strip()
        if not text:
            raise PermError("empty permutation text")
        if " " in text or "," in text:
            parts = text.replace(",", " ").split()
            return cls(int(p) for p in parts)
        if not text.isdigit():
            raise PermError(f"bad permutation text {text!r}")
        if len(text) > 9:
            raise PermError("digit strings are only allowed for n <= 9; separate values by spaces")
        return cls(int(c) for c in text)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls._trusted(range(1, n + 1))

    @classmethod
    def from_sequence(cls, seq: Sequence) -> "Permutation":
        """Standardize any sequence of distinct comparable values."""
        order = sorted(range(len(seq)), key=seq.__getitem__)
        out = [0] * len(seq)
        for rank, i in enumerate(order, 1):
            out[i] = rank
        return cls._trusted(out)

    def __str__(self) -> str:
        if len(self) <= 9:
            return "".join(map(str, self))
        return " ".join(map(str, self))

    def __repr__(self) -> str:
        return f"Permutation({str(self)!r})"

    @property
    def size(self) -> int:
        return len(self)

    def inverse(self) -> "Permutation":
        out = [0] * len(self)
        for i, v in enumerate(self, 1):
            out[v - 1] = i
        return Permutation._trusted(out)

    def reverse(self) -> "Permutation":
        return Permutation._trusted(self[::-1])

    def complement(self) -> "Permutation":
        n1 = len(self) + 1
        return Permutation._trusted(n1 - v for v in self)


PLUS = Permutation._trusted((1, 2))
MINUS = Permutation._trusted((2, 1))


def as_perm(x) -> Permutation:
    if isinstance(x, Permutation):
        return x
    if isinstance(x, str):
        return Permutation.parse(x)
    return Permutation(x)


def pattern_of(sigma, positions) -> Permutation:
    """Pattern of sigma at the given 1-based positions."""
    sigma = as_perm(sigma)
    pos = sorted(set(positions))
    n = len(sigma)
    if not pos:
        raise InvalidPositions("positions must be nonempty")
    if pos[0] < 1 or pos[-1] > n:
        raise InvalidPositions(f"positions must lie in 1..{n}")
    return Permutation.from_sequence([sigma[i - 1] for i in pos])


def _pattern0(seq) -> tuple:
    # standardization of a short tuple; used in the containment search
    srt = sorted(seq)
    rank = {v: i for i, v in enumerate(srt, 1)}
    return tuple(rank[v] for v in seq)


def contains(sigma, pi) -> bool:
    """True iff pi occurs as a pattern in sigma."""
    sigma, pi = as_perm(sigma), as_perm(pi)
    k, n = len(pi), len(sigma)
    if k > n:
        return False
    if k == n:
        return tuple(sigma) == tuple(pi)
    target = tuple(pi)
    # Extend partial embeddings left to right, pruning on the relative order
    # of the prefix chosen so far.
    prefixes = {k_: _pattern0(target[:k_]) for k_ in range(1, k + 1)}
    stack = [(0, ())]
    while stack:
        start, chosen = stack.pop()
        depth = len(chosen)
        if depth == k:
            return True
        need = k - depth
        for i in range(start, n - need + 1):
            cand = chosen + (sigma[i],)
            if _pattern0(cand) == prefixes[depth + 1]:
                stack.append((i + 1, cand))
    return False


def avoids(sigma, basis) -> bool:
    return not any(contains(sigma, b) for b in basis)


def intervals(sigma) -> list[tuple[int, int]]:
    """All position intervals [i, j] (1-based, j > i) mapped onto value intervals."""
    sigma = as_perm(sigma)
    n = len(sigma)
    out = []
    for i in range(n):
        lo = hi = sigma[i]
        for j in range(i + 1, n):
            v = sigma[j]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            if hi - lo == j - i:
                out.append((i + 1, j + 1))
    return out


def is_simple(sigma) -> bool:
    sigma = as_perm(sigma)
    n = len(sigma)
    if n <= 2:
        return False
    return all(j - i + 1 in (1, n) for i, j in intervals(sigma))


def substitute(theta, blocks) -> Permutation:
    """theta[blocks[0], ..., blocks[d-1]]."""
    theta = as_perm(theta)
    blocks = [as_perm(b) for b in blocks]
    if len(blocks) != len(theta):
        raise ArityError(f"root of size {len(theta)} needs {len(theta)} blocks, got {len(blocks)}")
    sizes = [0] * (len(theta) + 1)
    for pos, val in enumerate(theta):
        sizes[val] = len(blocks[pos])
    offset = [0] * (len(theta) + 1)
    acc = 0
    for val in range(1, len(theta) + 1):
        offset[val] = acc
        acc += sizes[val]
    out = []
    for pos, val in enumerate(theta):
        base = offset[val]
        out.extend(base + v for v in blocks[pos])
    return Permutation._trusted(out)


def all_perms(n: int):
    from itertools import permutations

    for p in permutations(range(1, n + 1)):
        yield Permutation._trusted(p)


def simple_permutations(n: int) -> list[Permutation]:
    return [p for p in all_perms(n) if is_simple(p)]


def k_subsets(n: int, k: int):
    return combinations(range(1, n + 1), k)
