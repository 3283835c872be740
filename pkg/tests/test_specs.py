import json
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from permlimit.perms import Permutation
from permlimit.series import expand
from permlimit.specs import (
    ClosureError,
    DuplicateProduction,
    EmptyFamily,
    NonSimpleRoot,
    SpecArityError,
    SpecError,
    SpecSyntaxError,
    UnknownFamily,
    closure,
    dependency_graph,
    fixture_names,
    from_dict,
    infinite_families,
    load_spec,
    parse_spec,
    restrict,
    serialize_spec,
)

from conftest import naive_contains

X = ["2413", "3142", "2143", "3412"]
BASES = {
    "av132": ["132"],
    "xclass": X,
    "xtilde": ["2413", "3142", "2143", "34512"],
    "vclass": ["2413", "1243", "2341", "41352", "531642"],
    "union": ["2413", "3142", "2314", "3241", "21453", "45213"],
    "branching": ["2413", "31452", "41253", "41352", "531642"],
    "layered": ["231", "312"],
    "separable": ["2413", "3142"],
}


def _in_class(sigma, basis):
    return not any(naive_contains(sigma, tuple(int(c) for c in b)) for b in basis)


def _first_sum_block(sigma):
    hi = 0
    for k, v in enumerate(sigma, 1):
        hi = max(hi, v)
        if hi == k:
            return k
    return len(sigma)


def _in_compound(sigma):
    """X-perms that are sum-indecomposable, or alpha (+) beta with alpha such and beta in X."""
    k = _first_sum_block(sigma)
    alpha = Permutation.from_sequence(sigma[:k])
    if not _in_class(alpha, X):
        return False
    return k == len(sigma) or _in_class(Permutation.from_sequence(sigma[k:]), X)


def _brute(pred, n):
    return sum(1 for s in permutations(range(1, n + 1)) if pred(s))


@pytest.mark.parametrize("name", sorted(BASES))
def test_fixture_counts_match_basis(name):
    coeffs = expand(load_spec(name), 7)[0]
    basis = BASES[name]
    assert [coeffs[n] for n in range(1, 8)] == [_brute(lambda s: _in_class(s, basis), n) for n in range(1, 8)]


def test_compound_counts():
    coeffs = expand(load_spec("compound"), 7)[0]
    assert [coeffs[n] for n in range(1, 8)] == [_brute(_in_compound, n) for n in range(1, 8)]


def test_geometric_counts():
    coeffs = expand(load_spec("geometric"), 10)[0]
    assert list(coeffs.coefficients) == [0] + [1] * 10


def test_fixture_list():
    assert set(fixture_names()) >= set(BASES) | {"compound", "geometric"}


@pytest.mark.parametrize("name", ["av132", "union", "xtilde"])
def test_serialize_roundtrip(name):
    spec = load_spec(name)
    again = parse_spec(serialize_spec(spec))
    assert again.names == spec.names and again.leaf == spec.leaf and again.productions == spec.productions


def test_load_by_path(tmp_path):
    p = tmp_path / "mine.json"
    p.write_text(serialize_spec(load_spec("layered")))
    assert load_spec(p).names == ["T0", "T1", "T2"]
    assert load_spec("fixtures/layered.json").names == ["T0", "T1", "T2"]
    with pytest.raises(FileNotFoundError):
        load_spec("no_such_spec")


def _doc(*fams):
    return {"families": [dict(name=n, leaf=l, productions=[{"root": r, "children": c} for r, c in p]) for n, l, p in fams]}


@pytest.mark.parametrize(
    "doc, err",
    [
        (_doc(("T", True, [("123", ["T", "T", "T"])])), NonSimpleRoot),
        (_doc(("T", True, [("12", ["T"])])), SpecArityError),
        (_doc(("T", True, [("12", ["T", "U"])])), UnknownFamily),
        (_doc(("T", True, [("12", ["T", "T"]), ("12", ["T", "T"])])), DuplicateProduction),
        (_doc(("T", True, [("12", ["T", "T"])]), ("U", False, [("21", ["U", "T"])])), EmptyFamily),
        (_doc(("T", False, [("12", ["T", "T"])])), SpecError),
        (_doc(("T", True, [])), SpecError),  # finite only
        (_doc(("T", True, [("12", ["T", "T"])]), ("T", True, [])), SpecSyntaxError),
        ({"fams": []}, SpecSyntaxError),
    ],
)
def test_validation_errors(doc, err):
    with pytest.raises(err) as exc:
        from_dict(doc)
    assert exc.value.code == err.code


def test_syntax_error_position():
    with pytest.raises(SpecSyntaxError, match="line 2"):
        parse_spec('{"families":\n [,]}')


def test_leaf_must_be_bool():
    with pytest.raises(SpecSyntaxError):
        from_dict({"families": [{"name": "T", "leaf": "yes", "productions": []}]})


def test_dependency_graph_xclass():
    spec = load_spec("xclass")
    g = dependency_graph(spec)
    pos = {c: k for k, c in enumerate(g.sccs)}
    for i in range(spec.size):
        for j in spec.children_of(i):
            # dependencies come first
            assert pos[g.sccs[g.scc_of[j]]] <= pos[g.sccs[g.scc_of[i]]]
    crit = {spec.index(n) for n in ("T0", "T3", "T4", "T6", "T7")}
    sub = dependency_graph(spec, crit)
    assert len(sub.sccs) == 2


def test_closure_restrict():
    spec = load_spec("xclass")
    c = closure(spec, ["T3"])
    r = restrict(spec, c)
    assert set(r.names) == {spec.names[i] for i in c}
    with pytest.raises(ClosureError):
        restrict(spec, ["T0"])
    assert infinite_families(load_spec("geometric")) == {0}


names_st = st.lists(st.sampled_from(["A", "B", "C"]), min_size=2, max_size=2)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.sampled_from(["12", "21", "2413", "3142"]), st.lists(st.sampled_from("ABC"), min_size=4, max_size=4)), max_size=6))
def test_random_specs_roundtrip_or_reject(prods):
    fams = {"A": [], "B": [], "C": []}
    for k, (root, kids) in enumerate(prods):
        fams["ABC"[k % 3]].append({"root": root, "children": kids[: len(root)]})
    doc = {"families": [{"name": n, "leaf": True, "productions": p} for n, p in fams.items()]}
    try:
        spec = from_dict(doc)
    except SpecError:
        return
    assert json.loads(serialize_spec(spec)) == spec.to_dict()
    assert parse_spec(serialize_spec(spec)).productions == spec.productions
