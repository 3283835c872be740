"""Random generation: Boltzmann samplers, X-permuton points, Brownian marginals."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import descriptors as dsc
from .perms import MINUS, PLUS, Permutation, substitute
from .series import Diverged, System, evaluate
from .specs import TreeSpecification
from .trees import BRANCHES, LEAF, Node, perm_of


class SamplerStarved(RuntimeError):
    code = "sampler_starved"


class TuningFailure(RuntimeError):
    code = "tuning_failure"


def make_rng(seed) -> np.random.Generator:
    """Philox (counter-based) generator; sub-streams come from SeedSequence.spawn."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def spawn(seed, n: int) -> list:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [make_rng(s) for s in ss.spawn(n)]


class _Uniforms:
    """Uniforms drawn in blocks; scalar draws from numpy are slow."""

    def __init__(self, rng, block=8192):
        self.rng, self.block = rng, block
        self.buf = rng.random(block)
        self.i = 0

    def __call__(self) -> float:
        if self.i == self.block:
            self.buf = self.rng.random(self.block)
            self.i = 0
        u = self.buf[self.i]
        self.i += 1
        return u


@dataclass
class BoltzmannConfig:
    x: float
    n: int
    delta: float = 0.1
    max_rejections: int = 10**6
    seed: object = None

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError("control parameter must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def window(self):
        return math.ceil(self.n * (1 - self.delta)), math.floor(self.n * (1 + self.delta))


@dataclass
class BoltzmannSample:
    tree: object
    perm: Permutation
    trace: list  # preorder list of (family, production index or -1 for the leaf)
    attempts: int


class BoltzmannSampler:
    def __init__(self, spec: TreeSpecification, x: float, values=None, family=None):
        self.spec, self.x = spec, x
        if values is None:
            values = evaluate(spec, x, families=range(spec.size) if family is None else [spec.index(family)]).values
        self.values = np.asarray(values, dtype=float)
        self.tables = []
        for i in range(spec.size):
            weights = [x if spec.leaf[i] else 0.0]
            for p in spec.productions[i]:
                weights.append(math.prod(self.values[k] for k in p.children))
            total = sum(weights)
            if not total > 0:  # family outside the evaluated closure
                self.tables.append([1.0])
                continue
            cum, acc = [], 0.0
            for w in weights:
                acc += w / total
                cum.append(acc)
            cum[-1] = 1.0
            self.tables.append(cum)
        self.children = [[None] + [p.children for p in plist] for plist in spec.productions]
        self.roots = [[None] + [p.root for p in plist] for plist in spec.productions]

    def _attempt(self, family, upper, unif):
        """One Boltzmann draw, abandoned once it is sure to exceed `upper` leaves."""
        trace = []
        stack = [family]
        leaves = 0
        tables, children = self.tables, self.children
        while stack:
            f = stack.pop()
            opt = bisect_right(tables[f], unif())
            if opt >= len(tables[f]):
                opt = len(tables[f]) - 1
            ch = children[f][opt]
            if ch is None:
                leaves += 1
                trace.append((f, -1))
            else:
                trace.append((f, opt - 1))
                stack.extend(reversed(ch))
            if leaves + len(stack) > upper:
                return None, leaves + len(stack)
        return trace, leaves

    def build_tree(self, trace):
        out = []
        for f, opt in reversed(trace):
            if opt < 0:
                out.append(LEAF)
            else:
                root = self.roots[f][opt + 1]
                kids = [out.pop() for _ in range(len(root))]
                out.append(Node(root, kids))
        return out[0]

    def sample(self, family, n, delta=0.1, max_rejections=10**6, rng=None) -> BoltzmannSample:
        i = self.spec.index(family)
        lo, hi = math.ceil(n * (1 - delta)), math.floor(n * (1 + delta))
        unif = _Uniforms(make_rng(rng))
        for attempt in range(1, max_rejections + 1):
            trace, size = self._attempt(i, hi, unif)
            if trace is not None and size >= lo:
                tree = self.build_tree(trace)
                return BoltzmannSample(tree, perm_of(tree), trace, attempt)
        raise SamplerStarved(f"no object of size in [{lo}, {hi}] after {max_rejections} attempts; retune x")

    def sample_free(self, family, rng=None, cap=10**7) -> BoltzmannSample:
        """Unconditioned draw (size capped for safety)."""
        unif = _Uniforms(make_rng(rng))
        trace, size = self._attempt(self.spec.index(family), cap, unif)
        if trace is None:
            raise SamplerStarved("object exceeded the size cap")
        tree = self.build_tree(trace)
        return BoltzmannSample(tree, perm_of(tree), trace, 1)


def boltzmann_sample(spec, family, config: BoltzmannConfig, sampler: BoltzmannSampler | None = None) -> BoltzmannSample:
    sampler = sampler or BoltzmannSampler(spec, config.x, family=family)
    return sampler.sample(family, config.n, config.delta, config.max_rejections, config.seed)


def replay_trace(spec: TreeSpecification, family, trace) -> bool:
    """Check that a preorder production trace is a valid derivation from `family`."""
    expected = [spec.index(family)]
    for f, opt in trace:
        if not expected or expected.pop() != f:
            return False
        if opt < 0:
            if not spec.leaf[f]:
                return False
        else:
            if opt >= len(spec.productions[f]):
                return False
            expected.extend(reversed(spec.productions[f][opt].children))
    return not expected


def expected_size(spec, family, x, system=None) -> float:
    i = spec.index(family)
    ev = evaluate(spec, x, system=system, families=[i])
    return x * ev.derivatives[i] / ev.values[i]


def tune_control(spec, family, target_n, report=None, width: float = 1e-12) -> float:
    """Control parameter for a target size: singular for square-root families,
    otherwise the solution of x T'(x)/T(x) = target_n."""
    if target_n < 10:
        raise ValueError("target size must be at least 10")
    from .analysis import analyze

    i = spec.index(family)
    sys = System(spec)
    report = report or analyze(spec, i)
    r = report.spec.index(spec.names[i])  # the report may use a pruned spec
    prof = report.profiles.get(r)
    rho_i = report.radius.radii[r]
    if prof is not None and prof.kind == "sqrt":
        return report.rho - width
    top = (report.rho if prof is not None else rho_i) * (1 - 1e-9)
    if not math.isfinite(top):
        top = 1.0 - 1e-9
    f = lambda x: expected_size(spec, i, x, sys) - target_n
    try:
        f_top = f(top)
    except Diverged:
        raise TuningFailure("series diverge just below the radius") from None
    if f_top <= 0:
        raise TuningFailure(f"expected size stays below {target_n} on (0, rho)")
    return optimize.brentq(f, 1e-9 * top, top, xtol=1e-15, rtol=1e-14)


# ------------------------------------------------------------ permutons


def sample_x_permuton(p, k: int, seed=None):
    """k i.i.d. points of the X-permuton and the permutation they induce."""
    from .trees import _check_quadruple

    p = _check_quadruple(p)
    rng = make_rng(seed)
    lp, rp, lm, rm = p
    a, b = lp + lm, lp + rm
    corners = {("left", "+"): (0.0, 0.0), ("left", "-"): (0.0, 1.0), ("right", "-"): (1.0, 0.0), ("right", "+"): (1.0, 1.0)}
    branch = rng.choice(4, size=k, p=np.array(p) / sum(p))
    u = rng.random(k)
    cx = np.array([corners[BRANCHES[j]][0] for j in branch])
    cy = np.array([corners[BRANCHES[j]][1] for j in branch])
    xs = (1 - u) * cx + u * a
    ys = (1 - u) * cy + u * b
    pts = list(zip(xs.tolist(), ys.tolist()))
    return pts, points_to_perm(pts)


def points_to_perm(points) -> Permutation:
    pts = sorted(points)
    return Permutation.from_sequence([y for _, y in pts])


def remy_tree(k: int, rng) -> tuple:
    """Uniform plane binary tree with k leaves by Remy's growth; returns child arrays."""
    left, right = [-1], [-1]
    parent = [-1]
    root = 0
    for _ in range(k - 1):
        target = int(rng.integers(len(left)))
        new_leaf = len(left)
        new_int = new_leaf + 1
        left += [-1, -1]
        right += [-1, -1]
        parent += [-1, -1]
        if rng.random() < 0.5:
            left[new_int], right[new_int] = target, new_leaf
        else:
            left[new_int], right[new_int] = new_leaf, target
        par = parent[target]
        parent[new_int] = par
        if par == -1:
            root = new_int
        elif left[par] == target:
            left[par] = new_int
        else:
            right[par] = new_int
        parent[target] = parent[new_leaf] = new_int
    return root, left, right


def sample_brownian_marginal(p_plus: float, k: int, seed=None) -> Permutation:
    rng = make_rng(seed)
    if k == 1:
        return Permutation((1,))
    root, left, right = remy_tree(k, rng)
    signs = rng.random(len(left)) < p_plus
    # build the signed tree bottom-up without recursion
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        if left[v] >= 0:
            stack.extend((left[v], right[v]))
    built = {}
    for v in reversed(order):
        if left[v] < 0:
            built[v] = LEAF
        else:
            built[v] = Node(PLUS if signs[v] else MINUS, (built[left[v]], built[right[v]]))
    return perm_of(built[root])


def sample_descriptor_perm(d, k: int, rng) -> Permutation:
    """One draw of the k-point pattern of a limit descriptor."""
    rng = make_rng(rng)
    if isinstance(d, dsc.XPermuton):
        return sample_x_permuton(d.p, k, rng)[1]
    if isinstance(d, dsc.Brownian):
        return sample_brownian_marginal(d.p_plus, k, rng)
    if isinstance(d, dsc.Mixture):
        w = np.array([c[0] for c in d.components])
        j = rng.choice(len(w), p=w / w.sum())
        return sample_descriptor_perm(d.components[j][1], k, rng)
    if isinstance(d, dsc.Split):
        r = len(d.parts)
        cuts = np.sort(rng.random(r - 1))
        sizes = np.diff(np.concatenate([[0.0], cuts, [1.0]]))
        counts = rng.multinomial(k, sizes)
        blocks = [sample_descriptor_perm(part, int(c), rng) for part, c in zip(d.parts, counts) if c > 0]
        return _direct(d.root, blocks)
    raise ValueError(f"cannot sample from {d}")


def _direct(root, blocks) -> Permutation:
    if len(blocks) == 1:
        return blocks[0]
    theta = Permutation.identity(len(blocks)) if root == PLUS else Permutation.identity(len(blocks)).reverse()
    return substitute(theta, blocks)
