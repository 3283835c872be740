"""Random standard trees and a symbolic system builder, shared by several test files."""

import random

from permlimit.perms import MINUS, PLUS, simple_permutations
from permlimit.trees import LEAF, Node

SIMPLES = simple_permutations(4) + simple_permutations(5)


def random_standard_tree(rng: random.Random, n: int, parent=None):
    """A random standard tree with n leaves; `parent` is the label of a linear
    parent when this subtree is its first child (which must then differ)."""
    if n == 1:
        return LEAF
    options = [lab for lab in (PLUS, MINUS) if lab != parent]
    options += [s for s in SIMPLES if len(s) <= n]
    root = rng.choice(options)
    r = len(root)
    cuts = sorted(rng.sample(range(1, n), r - 1))
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [n])]
    kids = []
    for pos, size in enumerate(sizes):
        forbid = root if (r == 2 and pos == 0) else None
        kids.append(random_standard_tree(rng, size, forbid))
    return Node(root, kids)


def sympy_system(spec):
    """F_i(z, y) as sympy expressions, built directly from the JSON form."""
    import sympy as sp

    z = sp.Symbol("z")
    ys = sp.symbols(f"y0:{spec.size}")
    doc = spec.to_dict()
    idx = {f["name"]: n for n, f in enumerate(doc["families"])}
    F = []
    for fam in doc["families"]:
        expr = z if fam["leaf"] else sp.Integer(0)
        for prod in fam["productions"]:
            expr += sp.Mul(*[ys[idx[c]] for c in prod["children"]])
        F.append(expr)
    return z, ys, F
