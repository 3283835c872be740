import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from permlimit.perms import Permutation, pattern_of
from permlimit.samplers import sample_brownian_marginal, sample_x_permuton
from permlimit.trees import (
    LEAF,
    Caterpillar,
    InvalidDistribution,
    Node,
    TreeError,
    binary_perm_distribution,
    caterpillar_perm_distribution,
    catalan,
    decompose,
    induced_tree,
    is_standard,
    leaf_count,
    parse_tree,
    perm_of,
    reduce_caterpillar,
    serialize_tree,
)

from helpers import random_standard_tree

perms_st = st.integers(1, 40).flatmap(lambda n: st.permutations(range(1, n + 1))).map(Permutation)


def test_decompose_examples():
    assert serialize_tree(decompose("2413")) == "2413(•,•,•,•)"
    assert serialize_tree(decompose("123")) == "12(•,12(•,•))"
    assert serialize_tree(decompose("1")) == "•"
    assert serialize_tree(decompose("2143")) == "12(21(•,•),21(•,•))"


@given(perms_st)
def test_perm_of_decompose(sigma):
    t = decompose(sigma)
    assert perm_of(t) == sigma
    assert is_standard(t)
    assert leaf_count(t) == len(sigma)


def test_random_trees_are_standard():
    rng = random.Random(1)
    for _ in range(500):
        t = random_standard_tree(rng, rng.randint(1, 30))
        assert is_standard(t)
        assert decompose(perm_of(t)) == t


def test_non_standard_detected():
    t = Node(Permutation.parse("12"), [Node(Permutation.parse("12"), [LEAF, LEAF]), LEAF])
    assert not is_standard(t)
    assert perm_of(t) == Permutation.parse("123")


def test_induced_tree_example():
    t = decompose("362514")
    it = induced_tree(t, [1, 2, 5, 6])
    assert perm_of(it) == Permutation.parse("2413")
    with pytest.raises(TreeError):
        induced_tree(t, [])
    with pytest.raises(TreeError):
        induced_tree(t, [7])


@settings(max_examples=300)
@given(perms_st, st.randoms(use_true_random=False))
def test_induced_commutes_with_pattern(sigma, rnd):
    n = len(sigma)
    leaves = sorted(rnd.sample(range(1, n + 1), rnd.randint(1, n)))
    assert perm_of(induced_tree(decompose(sigma), leaves)) == pattern_of(sigma, leaves)


@given(perms_st)
def test_serialize_roundtrip(sigma):
    t = decompose(sigma)
    assert parse_tree(serialize_tree(t)) == t


def test_serialize_big_label():
    label = Permutation.parse("2 4 6 8 10 1 3 5 7 9")
    t = Node(label, [LEAF] * 10)
    text = serialize_tree(t)
    assert text.startswith("2_4_6_8_10_1_3_5_7_9(")
    assert parse_tree(text) == t
    assert parse_tree("12(*,*)") == Node(Permutation.parse("12"), [LEAF, LEAF])


@pytest.mark.parametrize("bad", ["12(•,•", "12•", "x", "12(•,•))", "•,•"])
def test_parse_tree_rejects(bad):
    with pytest.raises((TreeError, ValueError)):
        parse_tree(bad)


def test_caterpillar_reduction_example():
    word = (("left", "+"), ("right", "+"), ("right", "-"), ("left", "+"), ("left", "+"))
    assert perm_of(reduce_caterpillar(Caterpillar(word))) == Permutation.parse("13425")


def test_caterpillar_distribution_sums_to_one():
    for k in range(1, 8):
        d = caterpillar_perm_distribution((0.1, 0.2, 0.3, 0.4), k)
        assert math.isclose(sum(d.values()), 1.0, abs_tol=1e-12)
    d = caterpillar_perm_distribution((1, 0, 0, 0), 5)
    assert d == {Permutation.identity(5): 1.0}
    with pytest.raises(InvalidDistribution):
        caterpillar_perm_distribution((0.5, 0.5, 0.5, 0), 3)


def test_caterpillar_distribution_matches_point_sampler():
    p = (0.1, 0.2, 0.3, 0.4)
    exact = caterpillar_perm_distribution(p, 3)
    N = 40_000
    counts = {}
    rng = __import__("numpy").random.default_rng(11)
    for _ in range(N):
        pi = sample_x_permuton(p, 3, rng)[1]
        counts[pi] = counts.get(pi, 0) + 1
    for pi, q in exact.items():
        assert abs(counts.get(pi, 0) / N - q) < 5 * math.sqrt(q * (1 - q) / N) + 1e-3


def test_binary_distribution():
    assert catalan(3) == 5
    for k in range(1, 7):
        assert math.isclose(sum(binary_perm_distribution(0.3, k).values()), 1, abs_tol=1e-12)
    assert binary_perm_distribution(1.0, 4) == {Permutation.identity(4): 1.0}
    d = binary_perm_distribution(0.5, 3)
    # no simple permutation of size 3 exists; all six are separable
    assert len(d) == 6


def test_binary_distribution_matches_remy():
    import numpy as np

    exact = binary_perm_distribution(0.3, 4)
    N = 30_000
    rng = np.random.default_rng(5)
    counts = {}
    for _ in range(N):
        pi = sample_brownian_marginal(0.3, 4, rng)
        counts[pi] = counts.get(pi, 0) + 1
    assert set(counts) <= set(exact)
    for pi, q in exact.items():
        assert abs(counts.get(pi, 0) / N - q) < 5 * math.sqrt(q * (1 - q) / N) + 1e-3
