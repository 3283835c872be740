"""Tree-specifications: data model, JSON format, validation and dependency graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .perms import MINUS, PLUS, Permutation, PermError, is_simple


class SpecError(ValueError):
    code = "invalid_spec"


class SpecSyntaxError(SpecError):
    code = "syntax_error"


class SpecArityError(SpecError):
    code = "arity_mismatch"


class NonSimpleRoot(SpecError):
    code = "non_simple_root"


class UnknownFamily(SpecError):
    code = "unknown_family"


class EmptyFamily(SpecError):
    code = "empty_family"


class DuplicateProduction(SpecError):
    code = "duplicate_production"


class ClosureError(SpecError):
    code = "not_dependency_closed"


@dataclass(frozen=True)
class Production:
    root: Permutation
    children: tuple

    @property
    def arity(self) -> int:
        return len(self.children)

    def sign(self, a: int, b: int) -> str:
        """'+' if the root restricted to positions a < b (0-based) is 12."""
        return "+" if self.root[a] < self.root[b] else "-"


@dataclass
class TreeSpecification:
    names: list
    leaf: list
    productions: list  # productions[i] is a list of Production for family i
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self._index = {n: i for i, n in enumerate(self.names)}

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name) -> int:
        if isinstance(name, int):
            if not 0 <= name < self.size:
                raise UnknownFamily(f"family index {name} out of range")
            return name
        try:
            return self._index[name]
        except KeyError:
            raise UnknownFamily(f"unknown family {name!r}") from None

    def children_of(self, i: int) -> set:
        return {k for p in self.productions[i] for k in p.children}

    def to_dict(self) -> dict:
        fams = []
        for i, name in enumerate(self.names):
            fams.append(
                {
                    "name": name,
                    "leaf": bool(self.leaf[i]),
                    "productions": [
                        {"root": str(p.root), "children": [self.names[k] for k in p.children]}
                        for p in self.productions[i]
                    ],
                }
            )
        return {"families": fams}


def _check_root(root: Permutation, where: str):
    if len(root) < 2:
        raise NonSimpleRoot(f"{where}: root must have size >= 2")
    if len(root) == 2:
        if root not in (PLUS, MINUS):
            raise NonSimpleRoot(f"{where}: bad size-2 root")
    elif not is_simple(root):
        raise NonSimpleRoot(f"{where}: root {root} of size > 2 is not simple")


def _nonempty_families(names, leaf, prods) -> set:
    good = {i for i in range(len(names)) if leaf[i]}
    changed = True
    while changed:
        changed = False
        for i in range(len(names)):
            if i in good:
                continue
            if any(all(k in good for k in p.children) for p in prods[i]):
                good.add(i)
                changed = True
    return good


def from_dict(doc) -> TreeSpecification:
    if not isinstance(doc, dict) or "families" not in doc:
        raise SpecSyntaxError("top-level object with a 'families' list expected")
    fams = doc["families"]
    if not isinstance(fams, list) or not fams:
        raise SpecSyntaxError("'families' must be a nonempty list")
    names = []
    for idx, f in enumerate(fams):
        if not isinstance(f, dict) or not isinstance(f.get("name"), str) or not f["name"]:
            raise SpecSyntaxError(f"family #{idx}: 'name' (string) required")
        if f["name"] in names:
            raise SpecSyntaxError(f"family #{idx}: duplicate name {f['name']!r}")
        names.append(f["name"])
    index = {n: i for i, n in enumerate(names)}
    leaf, prods = [], []
    for idx, f in enumerate(fams):
        where = f"family {f['name']!r}"
        lf = f.get("leaf", False)
        if not isinstance(lf, bool):
            raise SpecSyntaxError(f"{where}: 'leaf' must be a boolean")
        leaf.append(lf)
        plist = f.get("productions", [])
        if not isinstance(plist, list):
            raise SpecSyntaxError(f"{where}: 'productions' must be a list")
        seen = set()
        out = []
        for pidx, p in enumerate(plist):
            pw = f"{where}, production #{pidx}"
            if not isinstance(p, dict) or "root" not in p or "children" not in p:
                raise SpecSyntaxError(f"{pw}: needs 'root' and 'children'")
            try:
                root = Permutation.parse(str(p["root"]))
            except PermError as exc:
                raise SpecSyntaxError(f"{pw}: {exc}") from None
            _check_root(root, pw)
            ch = p["children"]
            if not isinstance(ch, list):
                raise SpecSyntaxError(f"{pw}: 'children' must be a list")
            if len(ch) != len(root):
                raise SpecArityError(f"{pw}: root {root} has arity {len(root)} but {len(ch)} children")
            kids = []
            for c in ch:
                if c not in index:
                    raise UnknownFamily(f"{pw}: unknown family {c!r}")
                kids.append(index[c])
            prod = Production(root, tuple(kids))
            if prod in seen:
                raise DuplicateProduction(f"{pw}: duplicate production")
            seen.add(prod)
            out.append(prod)
        prods.append(out)
    if not any(leaf):
        raise SpecError("at least one family must contain the leaf")
    good = _nonempty_families(names, leaf, prods)
    empty = [names[i] for i in range(len(names)) if i not in good]
    if empty:
        raise EmptyFamily(f"empty families: {', '.join(empty)}")
    spec = TreeSpecification(names, leaf, prods)
    if not infinite_families(spec):
        raise SpecError("every family is finite; nothing to analyze")
    return spec


def parse_spec(text: str) -> TreeSpecification:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def serialize_spec(spec: TreeSpecification) -> str:
    return json.dumps(spec.to_dict(), indent=2, ensure_ascii=False) + "\n"


FIXTURE_DIR = Path(__file__).with_name("fixtures")


def fixture_names() -> list:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def load_spec(ref) -> TreeSpecification:
    """Load a spec from a path, or from a packaged fixture name like 'av132'."""
    path = Path(ref)
    if path.is_file():
        return parse_spec(path.read_text(encoding="utf-8"))
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    cand = FIXTURE_DIR / f"{stem}.json"
    if cand.is_file():
        return parse_spec(cand.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no specification file or fixture named {ref!r}")


# ------------------------------------------------------------------ graph


@dataclass
class DependencyGraph:
    graph: nx.DiGraph  # edge j -> i when T_j occurs in the equation of T_i
    sccs: list  # list of frozensets, dependencies before dependants
    scc_of: dict

    def has_self_loop(self, i) -> bool:
        return self.graph.has_edge(i, i)

    def is_cyclic(self, comp) -> bool:
        comp = list(comp)
        return len(comp) > 1 or self.has_self_loop(comp[0])


def dependency_graph(spec: TreeSpecification, subset=None) -> DependencyGraph:
    nodes = range(spec.size) if subset is None else sorted(subset)
    keep = set(nodes)
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    for i in nodes:
        for j in spec.children_of(i):
            if j in keep:
                g.add_edge(j, i)
    cond = nx.condensation(g)
    order = list(nx.lexicographical_topological_sort(cond, key=lambda c: min(cond.nodes[c]["members"])))
    sccs = [frozenset(cond.nodes[c]["members"]) for c in order]
    scc_of = {i: k for k, comp in enumerate(sccs) for i in comp}
    return DependencyGraph(g, sccs, scc_of)


def closure(spec: TreeSpecification, start) -> set:
    """All families reachable from start through the productions (start included)."""
    seen = set()
    stack = [spec.index(s) if not isinstance(s, int) else s for s in start]
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        stack.extend(spec.children_of(i) - seen)
    return seen


def infinite_families(spec: TreeSpecification) -> set:
    dg = dependency_graph(spec)
    cyclic = {i for comp in dg.sccs if dg.is_cyclic(comp) for i in comp}
    return {i for i in range(spec.size) if closure(spec, [i]) & cyclic}


def restrict(spec: TreeSpecification, keep) -> TreeSpecification:
    keep_idx = sorted({spec.index(k) for k in keep})
    kset = set(keep_idx)
    for i in keep_idx:
        missing = spec.children_of(i) - kset
        if missing:
            raise ClosureError(
                f"family {spec.names[i]!r} depends on {sorted(spec.names[m] for m in missing)} outside the kept set"
            )
    remap = {old: new for new, old in enumerate(keep_idx)}
    prods = [[Production(p.root, tuple(remap[k] for k in p.children)) for p in spec.productions[i]] for i in keep_idx]
    return TreeSpecification([spec.names[i] for i in keep_idx], [spec.leaf[i] for i in keep_idx], prods)
