import numpy as np
import pytest
from scipy import stats

from permlimit import load_spec
from permlimit.perms import Permutation, avoids
from permlimit.samplers import (
    BoltzmannConfig,
    BoltzmannSampler,
    SamplerStarved,
    boltzmann_sample,
    expected_size,
    points_to_perm,
    remy_tree,
    replay_trace,
    sample_brownian_marginal,
    sample_descriptor_perm,
    sample_x_permuton,
    spawn,
    tune_control,
)
from permlimit.series import System, find_radius
from permlimit.trees import catalan, leaf_count, perm_of
from permlimit.verify import chi_square_uniform


def test_boltzmann_uniform_at_fixed_size():
    spec = load_spec("av132")
    sampler = BoltzmannSampler(spec, 0.2)
    counts = {}
    for r in spawn(123, 4200):
        s = sampler.sample(0, 5, delta=0.05, rng=r)
        assert len(s.perm) == 5 and avoids(s.perm, ["132"])
        counts[s.perm] = counts.get(s.perm, 0) + 1
    assert len(counts) == 42
    _, pvalue = chi_square_uniform(list(counts.values()))
    assert pvalue > 1e-3


def test_trace_replays_and_rebuilds():
    spec = load_spec("xtilde")
    sampler = BoltzmannSampler(spec, 0.25)
    s = sampler.sample(0, 40, rng=np.random.default_rng(1))
    assert replay_trace(spec, 0, s.trace)
    assert sampler.build_tree(s.trace) == s.tree
    assert perm_of(s.tree) == s.perm and leaf_count(s.tree) == len(s.perm)
    assert not replay_trace(spec, 0, s.trace[:-1])


def test_seed_reproducibility():
    spec = load_spec("xclass")
    cfg = BoltzmannConfig(x=0.29, n=100, seed=42)
    a = boltzmann_sample(spec, 0, cfg)
    b = boltzmann_sample(spec, 0, cfg)
    assert a.perm == b.perm and a.attempts == b.attempts
    lo, hi = cfg.window
    assert lo <= len(a.perm) <= hi


def test_config_validation():
    with pytest.raises(ValueError):
        BoltzmannConfig(x=0, n=10)
    with pytest.raises(ValueError):
        BoltzmannConfig(x=0.1, n=10, delta=1.5)


def test_starvation():
    sampler = BoltzmannSampler(load_spec("av132"), 0.01)
    with pytest.raises(SamplerStarved) as exc:
        sampler.sample(0, 500, max_rejections=20, rng=0)
    assert exc.value.code == "sampler_starved"


def test_tuning():
    spec = load_spec("xclass")
    x = tune_control(spec, 0, 1000)
    assert expected_size(spec, 0, x, System(spec)) == pytest.approx(1000, rel=1e-8)
    av = load_spec("av132")
    assert tune_control(av, 0, 1000) == pytest.approx(find_radius(av).rho, abs=1e-11)
    with pytest.raises(ValueError):
        tune_control(spec, 0, 3)


def test_x_permuton_points_on_segments():
    p = (0.1, 0.2, 0.3, 0.4)
    pts, perm = sample_x_permuton(p, 2000, seed=3)
    a, b = 0.1 + 0.3, 0.1 + 0.4
    for x, y in pts:
        # each point lies on a segment from a corner to the centre (a, b)
        on = [abs((x - cx) * (b - cy) - (y - cy) * (a - cx)) < 1e-9 for cx, cy in ((0, 0), (0, 1), (1, 0), (1, 1))]
        assert any(on)
    xs, ys = np.array(pts).T
    # both marginals of a permuton are uniform
    assert stats.kstest(xs, "uniform").pvalue > 1e-3
    assert stats.kstest(ys, "uniform").pvalue > 1e-3
    assert perm == points_to_perm(pts) and len(perm) == 2000


def test_remy_tree_uniform():
    rng = np.random.default_rng(8)
    counts = {}
    for _ in range(14_000):
        root, left, right = remy_tree(5, rng)

        def shape(v):
            return None if left[v] < 0 else (shape(left[v]), shape(right[v]))

        s = shape(root)
        counts[s] = counts.get(s, 0) + 1
    assert len(counts) == catalan(4)
    assert chi_square_uniform(list(counts.values()))[1] > 1e-3


def test_brownian_extremes():
    assert sample_brownian_marginal(1.0, 30, 1) == Permutation.identity(30)
    assert sample_brownian_marginal(0.0, 30, 1) == Permutation.identity(30).reverse()
    assert sample_brownian_marginal(0.5, 1, 1) == Permutation((1,))


def test_descriptor_sampling_shapes():
    from permlimit.descriptors import Brownian, Mixture, Split

    rng = np.random.default_rng(2)
    d = Split(Permutation.parse("21"), (Brownian(1.0), Brownian(1.0)))
    for _ in range(50):
        pi = sample_descriptor_perm(d, 6, rng)
        # a skew sum of two increasing runs
        assert len(pi) == 6
        assert sum(1 for i in range(5) if pi[i] > pi[i + 1]) <= 1
    m = Mixture(((0.5, Brownian(1.0)), (0.5, Brownian(0.0))))
    seen = {sample_descriptor_perm(m, 4, rng) for _ in range(100)}
    assert seen == {Permutation.identity(4), Permutation.identity(4).reverse()}


def test_spawned_streams_differ():
    a, b = spawn(5, 2)
    assert a.random() != b.random()
    assert spawn(5, 2)[0].random() == spawn(5, 2)[0].random()
