"""Pattern statistics: empirical k-pattern histograms against a predicted limit."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import descriptors as dsc
from .perms import MINUS, Permutation, substitute
from .samplers import make_rng, sample_descriptor_perm
from .trees import binary_perm_distribution, caterpillar_perm_distribution


class UseMonteCarlo(ValueError):
    code = "use_monte_carlo"


X_MAX_K = 8
BROWNIAN_MAX_K = 7


@dataclass
class PatternHistogram:
    k: int
    counts: dict = field(default_factory=dict)
    total: int = 0

    def add(self, pi, c=1):
        self.counts[pi] = self.counts.get(pi, 0) + c
        self.total += c

    def merge(self, other: "PatternHistogram"):
        for pi, c in other.counts.items():
            self.add(pi, c)
        return self

    def frequencies(self) -> dict:
        return {pi: c / self.total for pi, c in self.counts.items()}


def _histogram_one(perm, k, draws, rng) -> PatternHistogram:
    h = PatternHistogram(k)
    n = len(perm)
    if n < k:
        raise ValueError(f"permutation of size {n} is smaller than k={k}")
    arr = np.asarray(perm)
    for _ in range(draws):
        pos = np.sort(rng.choice(n, size=k, replace=False))
        h.add(Permutation.from_sequence(arr[pos].tolist()))
    return h


def empirical_pattern_histogram(perms, k: int, draws_per_perm: int, seed=None, threads: int = 1) -> PatternHistogram:
    """draws_per_perm uniform k-subsets per permutation; one seeded sub-stream per
    permutation, so the result does not depend on `threads`."""
    perms = list(perms)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rngs = [make_rng(s) for s in ss.spawn(len(perms))]
    jobs = list(zip(perms, rngs))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda job: _histogram_one(job[0], k, draws_per_perm, job[1]), jobs))
    else:
        parts = [_histogram_one(p, k, draws_per_perm, r) for p, r in jobs]
    h = PatternHistogram(k)
    for part in parts:
        h.merge(part)
    return h


def _exact(d, k: int) -> dict:
    if k == 0:
        return {(): 1.0}
    if k == 1:
        return {Permutation((1,)): 1.0}
    if isinstance(d, dsc.XPermuton):
        if k > X_MAX_K:
            raise UseMonteCarlo(f"exact X-permuton enumeration supports k <= {X_MAX_K}")
        return caterpillar_perm_distribution(d.p, k)
    if isinstance(d, dsc.Brownian):
        if k > BROWNIAN_MAX_K:
            raise UseMonteCarlo(f"exact Brownian enumeration supports k <= {BROWNIAN_MAX_K}")
        return binary_perm_distribution(d.p_plus, k)
    if isinstance(d, dsc.Mixture):
        out: dict = {}
        for w, sub in d.components:
            for pi, q in _exact(sub, k).items():
                out[pi] = out.get(pi, 0.0) + w * q
        return out
    if isinstance(d, dsc.Split):
        return _split_exact(d, k)
    if isinstance(d, dsc.Unsupported):
        raise ValueError(f"no pattern distribution for an unsupported limit ({d.reason})")
    raise TypeError(f"not a limit descriptor: {d!r}")


def _compositions(k, r):
    if r == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, r - 1):
            yield (first,) + rest


def _split_exact(d: dsc.Split, k: int) -> dict:
    """Uniform composition of the k points among the parts, then direct/skew sum."""
    r = len(d.parts)
    comps = list(_compositions(k, r))
    weight = 1.0 / len(comps)
    cache: dict = {}
    out: dict = {}
    for comp in comps:
        dists = []
        for part, size in zip(d.parts, comp):
            if size == 0:
                continue
            key = (id(part), size)
            if key not in cache:
                cache[key] = _exact(part, size)
            dists.append(cache[key])
        for combo in product(*(dd.items() for dd in dists)):
            q = weight
            blocks = []
            for pi, w in combo:
                q *= w
                blocks.append(pi)
            if q == 0:
                continue
            if len(blocks) == 1:
                pi = blocks[0]
            else:
                theta = Permutation.identity(len(blocks))
                if d.root == MINUS:
                    theta = theta.reverse()
                pi = substitute(theta, blocks)
            out[pi] = out.get(pi, 0.0) + q
    return out


def descriptor_pattern_distribution(d, k: int, *, allow_monte_carlo: bool = False, draws: int = 10**6, seed=0) -> dict:
    """Law of the k-point pattern of a limit descriptor.

    Exact by enumeration where feasible; otherwise UseMonteCarlo is raised, or,
    with allow_monte_carlo, an empirical estimate from `draws` samples."""
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        return _exact(d, k)
    except UseMonteCarlo:
        if not allow_monte_carlo:
            raise
    rng = make_rng(seed)
    counts: dict = {}
    for _ in range(draws):
        pi = sample_descriptor_perm(d, k, rng)
        counts[pi] = counts.get(pi, 0) + 1
    return {pi: c / draws for pi, c in counts.items()}


def total_variation(h, q: dict) -> float:
    """Half the L1 distance between a histogram (or a distribution) and q."""
    if isinstance(h, PatternHistogram):
        if h.total == 0:
            raise ValueError("empty histogram")
        p = h.frequencies()
    else:
        p = dict(h)
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)


def chi_square_uniform(counts) -> tuple:
    """Chi-square statistic and p-value of counts against the uniform law."""
    from scipy import stats

    res = stats.chisquare(np.asarray(counts, dtype=float))
    return float(res.statistic), float(res.pvalue)


@dataclass
class VerificationReport:
    descriptor: object
    k: int
    sizes: list
    draws: int
    tv: float
    threshold: float | None = None

    @property
    def passed(self):
        return self.threshold is None or self.tv < self.threshold

    def to_dict(self):
        return {
            "limit": self.descriptor.to_dict(),
            "k": self.k,
            "samples": len(self.sizes),
            "min_size": min(self.sizes),
            "max_size": max(self.sizes),
            "draws": self.draws,
            "tv": self.tv,
            "tv_threshold": self.threshold,
            "passed": self.passed,
        }


def run_verification(spec, family, n: int, count: int, k: int, draws: int, seed, *, delta: float = 0.1,
                     threshold: float | None = None, threads: int = 1, report=None) -> VerificationReport:
    """Sample `count` permutations of size about n and compare their k-patterns with the predicted limit."""
    from .analysis import analyze
    from .samplers import BoltzmannSampler, tune_control

    i = spec.index(family)
    report = report or analyze(spec, i)
    limit = report.limit
    x = tune_control(spec, i, n, report=report)
    sampler = BoltzmannSampler(spec, x, family=i)
    ss = np.random.SeedSequence(seed)
    sample_seed, hist_seed = ss.spawn(2)
    rngs = [make_rng(s) for s in sample_seed.spawn(count)]
    perms = [sampler.sample(i, n, delta, rng=r).perm for r in rngs]
    h = empirical_pattern_histogram(perms, k, draws, hist_seed, threads=threads)
    tv = total_variation(h, descriptor_pattern_distribution(limit, k))
    return VerificationReport(limit, k, [len(p) for p in perms], draws, tv, threshold)
