"""Limit descriptors: what a uniform random permutation of a family looks like at scale."""

from __future__ import annotations

from dataclasses import dataclass

from .perms import MINUS, PLUS, Permutation
from .trees import BRANCHES

BRANCH_KEYS = tuple(f"{e}{s}" for e, s in BRANCHES)  # left+, right+, left-, right-


@dataclass(frozen=True)
class XPermuton:
    p: tuple  # (left+, right+, left-, right-)

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))

    @property
    def center(self):
        lp, rp, lm, rm = self.p
        return lp + lm, lp + rm

    def key(self):
        return ("X",) + tuple(round(x, 9) for x in self.p)

    def to_dict(self):
        return {"type": "X", "p": dict(zip(BRANCH_KEYS, self.p)), "center": list(self.center)}

    def __str__(self):
        return "X(" + ", ".join(f"{x:.12g}" for x in self.p) + ")"


@dataclass(frozen=True)
class Brownian:
    p_plus: float

    def key(self):
        return ("Brownian", round(self.p_plus, 9))

    def to_dict(self):
        return {"type": "Brownian", "p_plus": float(self.p_plus)}

    def __str__(self):
        return f"Brownian(p+={self.p_plus:.12g})"


@dataclass(frozen=True)
class Mixture:
    components: tuple  # of (weight, descriptor)

    def key(self):
        return ("Mixture",) + tuple((round(w, 9), d.key()) for w, d in self.components)

    def to_dict(self):
        return {"type": "Mixture", "components": [{"weight": w, "limit": d.to_dict()} for w, d in self.components]}

    def __str__(self):
        return "Mixture[" + ", ".join(f"({w:.6g}, {d})" for w, d in self.components) + "]"


@dataclass(frozen=True)
class Split:
    """Direct (root 12) or skew (root 21) sum of independent parts with
    uniformly distributed relative sizes."""

    root: Permutation
    parts: tuple

    def key(self):
        return ("Split", str(self.root)) + tuple(d.key() for d in self.parts)

    def to_dict(self):
        return {"type": "Split", "root": str(self.root), "parts": [d.to_dict() for d in self.parts]}

    def __str__(self):
        sym = "+" if self.root == PLUS else "-"
        return f"Split{sym}[" + ", ".join(map(str, self.parts)) + "]"


@dataclass(frozen=True)
class Unsupported:
    reason: str
    detail: str = ""

    def key(self):
        return ("Unsupported", self.reason, self.detail)

    def to_dict(self):
        return {"type": "Unsupported", "reason": self.reason, "detail": self.detail}

    def __str__(self):
        return f"Unsupported({self.reason})"


def mixture(components) -> object:
    """Normalize weights, merge equal descriptors and collapse singletons."""
    merged: dict = {}
    order = []
    total = 0.0
    for w, d in components:
        if w <= 0:
            continue
        total += w
        if isinstance(d, Mixture):
            parts = d.components
        else:
            parts = ((1.0, d),)
        for w2, d2 in parts:
            k = d2.key()
            if k not in merged:
                merged[k] = [0.0, d2]
                order.append(k)
            merged[k][0] += w * w2
    if total <= 0:
        raise ValueError("mixture needs positive total weight")
    comps = tuple((merged[k][0] / total, merged[k][1]) for k in order)
    if len(comps) == 1:
        return comps[0][1]
    return Mixture(comps)


def from_dict(doc):
    t = doc["type"]
    if t == "X":
        p = doc["p"]
        return XPermuton(tuple(p[k] for k in BRANCH_KEYS) if isinstance(p, dict) else tuple(p))
    if t == "Brownian":
        return Brownian(float(doc["p_plus"]))
    if t == "Mixture":
        return Mixture(tuple((float(c["weight"]), from_dict(c["limit"])) for c in doc["components"]))
    if t == "Split":
        return Split(Permutation.parse(doc["root"]), tuple(from_dict(d) for d in doc["parts"]))
    if t == "Unsupported":
        return Unsupported(doc["reason"], doc.get("detail", ""))
    raise ValueError(f"unknown descriptor type {t!r}")


DIAGONAL = Brownian(1.0)
ANTIDIAGONAL = Brownian(0.0)
SPLIT_ROOTS = (PLUS, MINUS)
