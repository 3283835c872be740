"""Substitution trees, standard trees, caterpillars and signed binary trees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable

from .perms import MINUS, PLUS, Permutation, as_perm, is_simple, pattern_of


class TreeError(ValueError):
    code = "invalid_tree"


class InvalidDistribution(ValueError):
    code = "invalid_distribution"


LEAF_SYMBOL = "•"


class Leaf:
    """The one-leaf tree. A single shared instance is used."""

    __slots__ = ()
    label = None
    children = ()

    def __repr__(self):
        return "Leaf"

    def __eq__(self, other):
        return isinstance(other, Leaf)

    def __hash__(self):
        return 0x1EAF

    @property
    def is_leaf(self):
        return True


LEAF = Leaf()


class Node:
    """Internal node of a substitution tree: a label of size k and k children."""

    __slots__ = ("label", "children", "_hash")

    def __init__(self, label, children):
        label = as_perm(label)
        children = tuple(children)
        if len(label) < 2:
            raise TreeError("internal nodes need a label of size >= 2")
        if len(children) != len(label):
            raise TreeError(f"label {label} has {len(label)} entries but {len(children)} children")
        self.label = label
        self.children = children
        self._hash = None

    is_leaf = False

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Node):
            return False
        # iterative structural comparison (trees can be deep)
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a.is_leaf or b.is_leaf:
                if a.is_leaf != b.is_leaf:
                    return False
                continue
            if a.label != b.label:
                return False
            stack.extend(zip(a.children, b.children))
        return True

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(serialize_tree(self))
        return self._hash

    def __repr__(self):
        return f"Node({serialize_tree(self)})"


def leaf_count(t) -> int:
    count = 0
    stack = [t]
    while stack:
        x = stack.pop()
        if x.is_leaf:
            count += 1
        else:
            stack.extend(x.children)
    return count


def _postorder(t):
    """Internal nodes and leaves in post-order, iteratively."""
    out = []
    stack = [(t, False)]
    while stack:
        x, done = stack.pop()
        if done or x.is_leaf:
            out.append(x)
        else:
            stack.append((x, True))
            for c in reversed(x.children):
                stack.append((c, False))
    return out


def perm_of(t) -> Permutation:
    """The permutation encoded by a substitution tree."""
    if t.is_leaf:
        return Permutation._trusted((1,))
    sizes = {}
    for x in _postorder(t):
        sizes[id(x)] = 1 if x.is_leaf else sum(sizes[id(c)] for c in x.children)
    out = []
    # top-down: each subtree receives a contiguous range of values
    stack = [(t, 0)]
    while stack:
        x, base = stack.pop()
        if x.is_leaf:
            out.append(base + 1)
            continue
        label = x.label
        offs = [0] * (len(label) + 1)
        by_value = sorted(range(len(label)), key=label.__getitem__)
        acc = base
        for pos in by_value:
            offs[pos] = acc
            acc += sizes[id(x.children[pos])]
        for pos in range(len(label) - 1, -1, -1):
            stack.append((x.children[pos], offs[pos]))
    return Permutation._trusted(out)


def is_standard(t) -> bool:
    stack = [t]
    while stack:
        x = stack.pop()
        if x.is_leaf:
            continue
        lab = x.label
        if len(lab) == 2:
            first = x.children[0]
            if not first.is_leaf and first.label == lab:
                return False
        elif not is_simple(lab):
            return False
        stack.extend(x.children)
    return True


def _decompose_block(vals):
    """One level of the decomposition of a standardized sequence (0-based values).

    Returns (label, list of blocks as lists of original values)."""
    n = len(vals)
    # sum / skew-sum: smallest prefix mapped onto the lowest / highest values
    hi = -1
    for k in range(n - 1):
        if vals[k] > hi:
            hi = vals[k]
        if hi == k:
            return PLUS, [vals[: k + 1], vals[k + 1 :]]
    lo = n
    for k in range(n - 1):
        if vals[k] < lo:
            lo = vals[k]
        if lo == n - k - 1:
            return MINUS, [vals[: k + 1], vals[k + 1 :]]
    # simple root: greedy longest proper interval from each start
    blocks = []
    i = 0
    while i < n:
        best = i
        lo = hi = vals[i]
        for j in range(i + 1, n):
            v = vals[j]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            if hi - lo == j - i and j - i + 1 < n:
                best = j
        blocks.append(vals[i : best + 1])
        i = best + 1
    label = Permutation.from_sequence([b[0] for b in blocks])
    return label, blocks


def decompose(sigma) -> "Node | Leaf":
    """The standard tree of sigma (sum/skew chains combed to the right)."""
    sigma = as_perm(sigma)
    if len(sigma) == 1:
        return LEAF
    # explicit stack; each frame builds one node once its children are done
    root_holder = []
    stack = [(list(v - 1 for v in sigma), root_holder, 0)]
    pending = []
    while stack:
        vals, parent_slots, slot = stack.pop()
        if len(vals) == 1:
            parent_slots[slot] = LEAF
            continue
        label, blocks = _decompose_block(vals)
        slots = [None] * len(blocks)
        pending.append((label, slots, parent_slots, slot))
        for idx, b in enumerate(blocks):
            base = min(b)
            stack.append(([v - base for v in b], slots, idx))
    root_holder.append(None)
    # pending is in creation order (parents before children): build in reverse
    for label, slots, parent_slots, slot in reversed(pending):
        parent_slots[slot] = Node(label, slots)
    return root_holder[0]


def induced_tree(t, leaves: Iterable[int]):
    """The tree induced by a set of marked leaves (numbered 1..n left to right)."""
    marked = set(leaves)
    n = leaf_count(t)
    if not marked:
        raise TreeError("the set of marked leaves must be nonempty")
    if min(marked) < 1 or max(marked) > n:
        raise TreeError(f"leaf indices must lie in 1..{n}")
    # post-order walk; leaves are met left to right. The shared LEAF object
    # rules out id()-keyed bookkeeping, so results travel on a value stack.
    counter = 0
    values: list = []
    stack = [(t, False)]
    while stack:
        x, done = stack.pop()
        if x.is_leaf:
            counter += 1
            values.append(LEAF if counter in marked else None)
            continue
        if not done:
            stack.append((x, True))
            for c in reversed(x.children):
                stack.append((c, False))
            continue
        k = len(x.children)
        subs = values[-k:]
        del values[-k:]
        kept = [(pos, s) for pos, s in enumerate(subs) if s is not None]
        if not kept:
            values.append(None)
        elif len(kept) == 1:
            values.append(kept[0][1])
        else:
            label = pattern_of(x.label, [pos + 1 for pos, _ in kept])
            values.append(Node(label, [s for _, s in kept]))
    return values[0]


def serialize_tree(t) -> str:
    parts = []
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, str):
            parts.append(x)
        elif x.is_leaf:
            parts.append(LEAF_SYMBOL)
        else:
            parts.append(str(x.label).replace(" ", "_") + "(")
            stack.append(")")
            for i in range(len(x.children) - 1, -1, -1):
                stack.append(x.children[i])
                if i:
                    stack.append(",")
    return "".join(parts)


def parse_tree(text: str):
    """Inverse of serialize_tree. Labels with n > 9 use '_' between values."""
    text = text.strip()
    pos = 0

    def fail(msg):
        raise TreeError(f"{msg} at position {pos} in {text!r}")

    # stack of [label, children]
    stack: list = []
    result = None
    while pos < len(text):
        ch = text[pos]
        if ch == LEAF_SYMBOL or ch == "*":
            item = LEAF
            pos += 1
        elif ch.isdigit():
            end = pos
            while end < len(text) and (text[end].isdigit() or text[end] == "_"):
                end += 1
            if end >= len(text) or text[end] != "(":
                fail("expected '(' after label")
            raw = text[pos:end]
            label = Permutation.parse(raw.replace("_", " ") if "_" in raw else raw)
            stack.append([label, []])
            pos = end + 1
            continue
        elif ch == ",":
            pos += 1
            continue
        elif ch == ")":
            if not stack:
                fail("unbalanced ')'")
            label, children = stack.pop()
            item = Node(label, children)
            pos += 1
        elif ch.isspace():
            pos += 1
            continue
        else:
            fail(f"unexpected character {ch!r}")
        if stack:
            stack[-1][1].append(item)
        elif result is None:
            result = item
        else:
            fail("trailing content")
    if stack or result is None:
        raise TreeError(f"incomplete tree {text!r}")
    return result


# ---------------------------------------------------------------- caterpillars

SIDES = ("left", "right")
SIGNS = ("+", "-")
# order used for quadruples everywhere in the package
BRANCHES = (("left", "+"), ("right", "+"), ("left", "-"), ("right", "-"))


@dataclass(frozen=True)
class Caterpillar:
    code_word: tuple

    def __post_init__(self):
        cw = tuple((str(e), str(s)) for e, s in self.code_word)
        if not cw:
            raise TreeError("a caterpillar has at least one internal node")
        for e, s in cw:
            if e not in SIDES or s not in SIGNS:
                raise TreeError(f"bad code letter {(e, s)}")
        object.__setattr__(self, "code_word", cw)


def reduce_caterpillar(c: Caterpillar):
    """Reduc: drop the head and merge its parent with the sibling leaf."""
    cw = c.code_word
    t = LEAF
    for e, s in reversed(cw[:-1]):
        lab = PLUS if s == "+" else MINUS
        t = Node(lab, (LEAF, t) if e == "left" else (t, LEAF))
    return t


def _check_quadruple(p):
    p = tuple(float(x) for x in p)
    if len(p) != 4 or min(p) < -1e-15 or abs(sum(p) - 1) > 1e-12:
        raise InvalidDistribution(f"not a probability quadruple: {p}")
    return p


def caterpillar_perm_distribution(p, k: int) -> dict:
    """Law of perm(Reduc(t)) for a caterpillar with k i.i.d. code letters.

    The quadruple p is ordered (left+, right+, left-, right-)."""
    p = _check_quadruple(p)
    if not 1 <= k <= 8:
        raise ValueError("k must lie in 1..8")
    weights = dict(zip(BRANCHES, p))
    out: dict = {}
    letters = [b for b in BRANCHES if weights[b] > 0]
    # the head letter is irrelevant for the shape: sum it out
    for word in product(letters, repeat=k - 1):
        w = 1.0
        for b in word:
            w *= weights[b]
        perm = perm_of(reduce_caterpillar(Caterpillar(word + (("left", "+"),))))
        out[perm] = out.get(perm, 0.0) + w
    return out


# ------------------------------------------------------------ signed binary trees

def binary_shapes(k: int):
    """All plane binary trees with k leaves, as nested tuples (None = leaf)."""
    if k == 1:
        return [None]
    out = []
    for i in range(1, k):
        for left in binary_shapes(i):
            for right in binary_shapes(k - i):
                out.append((left, right))
    return out


def _signed(shape, signs):
    it = iter(signs)

    def build(s):
        if s is None:
            return LEAF
        left = build(s[0])
        right = build(s[1])
        return Node(PLUS if next(it) == "+" else MINUS, (left, right))

    return build(shape)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def binary_perm_distribution(p_plus: float, k: int) -> dict:
    """Law of the permutation of a uniform binary tree with k leaves and i.i.d. signs."""
    p_plus = float(p_plus)
    if not 0 <= p_plus <= 1:
        raise InvalidDistribution("p_plus must lie in [0, 1]")
    if not 1 <= k <= 7:
        raise ValueError("k must lie in 1..7")
    shapes = binary_shapes(k)
    cat = len(shapes)
    out: dict = {}
    probs = {"+": p_plus, "-": 1.0 - p_plus}
    for shape in shapes:
        for signs in product(SIGNS, repeat=k - 1):
            w = 1.0 / cat
            for s in signs:
                w *= probs[s]
            if w == 0.0:
                continue
            perm = perm_of(_signed(shape, signs))
            out[perm] = out.get(perm, 0.0) + w
    return out
