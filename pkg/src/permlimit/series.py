"""Counting series of a tree-specification: exact expansion and numerics."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy import optimize

from .specs import TreeSpecification, closure, dependency_graph

CAP = 1e12


class Diverged(ArithmeticError):
    code = "diverged"


class DerivativeUnavailable(ArithmeticError):
    code = "derivative_unavailable"


class RadiusAboveCap(ArithmeticError):
    code = "radius_above_cap"


# ------------------------------------------------------------- exact series


@dataclass(frozen=True)
class TruncatedSeries:
    coefficients: tuple

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, n):
        return self.coefficients[n]

    def __len__(self):
        return len(self.coefficients)

    def partial_sum(self, z: float) -> float:
        return math.fsum(float(c) * z**n for n, c in enumerate(self.coefficients) if c)


def expand(spec: TreeSpecification, N: int) -> list:
    """Exact coefficients of every family up to z^N."""
    if N < 1:
        raise ValueError("expansion order must be >= 1")
    d = spec.size
    T = [[0] * (N + 1) for _ in range(d)]
    # suffix products k_j * k_{j+1} * ... shared between productions
    suffix: dict = {}
    for plist in spec.productions:
        for p in plist:
            ch = p.children
            for j in range(len(ch) - 2, -1, -1):
                suffix.setdefault(ch[j:], [0] * (N + 1))
    keys = sorted(suffix, key=len)

    def series_of(key):
        return T[key[0]] if len(key) == 1 else suffix[key]

    mul = operator.mul
    for n in range(1, N + 1):
        for key in keys:
            a = T[key[0]]
            b = series_of(key[1:])
            if n >= 2:
                suffix[key][n] = sum(map(mul, a[1:n], reversed(b[1:n])))
        for i in range(d):
            c = 1 if (n == 1 and spec.leaf[i]) else 0
            for p in spec.productions[i]:
                c += suffix[p.children][n]
            T[i][n] = c
    return [TruncatedSeries(tuple(t)) for t in T]


@dataclass(frozen=True)
class Aperiodic:
    def __str__(self):
        return "Aperiodic"


@dataclass(frozen=True)
class PossiblyPeriodic:
    period: int

    def __str__(self):
        return f"PossiblyPeriodic({self.period})"


@dataclass(frozen=True)
class Inconclusive:
    def __str__(self):
        return "Inconclusive"


def aperiodicity(series) -> object:
    coeffs = series.coefficients if isinstance(series, TruncatedSeries) else tuple(series)
    support = [n for n, c in enumerate(coeffs) if c]
    if len(support) < 2:
        return Inconclusive()
    g = reduce(math.gcd, (b - support[0] for b in support[1:]))
    return Aperiodic() if g == 1 else PossiblyPeriodic(g)


# ------------------------------------------------------------- numerics


class System:
    """Y = Phi(z, Y) with Phi_i = eps_i z + sum over productions of the product of children."""

    def __init__(self, spec: TreeSpecification):
        self.spec = spec
        self.d = spec.size
        self.eps = np.array([1.0 if f else 0.0 for f in spec.leaf])
        self.prods = [[p.children for p in plist] for plist in spec.productions]
        self.graph = dependency_graph(spec)

    def phi(self, z, Y, rows=None):
        rows = range(self.d) if rows is None else rows
        out = np.empty(len(rows))
        for r, i in enumerate(rows):
            s = self.eps[i] * z
            for ch in self.prods[i]:
                term = 1.0
                for k in ch:
                    term *= Y[k]
                s += term
            out[r] = s
        return out

    def jacobian(self, Y, rows=None, cols=None):
        """d Phi_rows / d Y_cols."""
        rows = list(range(self.d)) if rows is None else list(rows)
        cols = list(range(self.d)) if cols is None else list(cols)
        cpos = {c: n for n, c in enumerate(cols)}
        J = np.zeros((len(rows), len(cols)))
        for r, i in enumerate(rows):
            for ch in self.prods[i]:
                for l, j in enumerate(ch):
                    c = cpos.get(j)
                    if c is None:
                        continue
                    term = 1.0
                    for m, k in enumerate(ch):
                        if m != l:
                            term *= Y[k]
                    J[r, c] += term
        return J


def _spectral_radius(J) -> float:
    if J.size == 0:
        return 0.0
    if J.shape == (1, 1):
        return abs(J[0, 0])
    return float(np.max(np.abs(np.linalg.eigvals(J))))


def _solve_component(sys: System, z: float, Y, comp, tol: float, max_iter: int):
    """Least nonnegative solution of the component equations, other values fixed.

    Monotone Newton iteration from 0. Returns (ok, iterations)."""
    idx = sorted(comp)
    if not sys.graph.is_cyclic(comp):
        i = idx[0]
        v = sys.phi(z, Y, [i])[0]
        if not np.isfinite(v) or v > CAP:
            return False, 1
        Y[i] = v
        return True, 1
    n = len(idx)
    y = np.zeros(n)
    eye = np.eye(n)
    for it in range(1, max_iter + 1):
        Y[idx] = y
        r = sys.phi(z, Y, idx) - y
        J = sys.jacobian(Y, idx, idx)
        sr = _spectral_radius(J)
        if sr >= 1.0:
            return False, it
        step = np.linalg.solve(eye - J, r)
        y_new = y + step
        if not np.all(np.isfinite(y_new)) or np.max(y_new) > CAP:
            return False, it
        y = y_new
        # rounding noise in the solve grows like the resolvent norm ~ 1/(1 - sr)
        if np.max(np.abs(step)) <= tol * max(1.0, float(np.max(y))) / (1.0 - sr):
            Y[idx] = y
            J = sys.jacobian(Y, idx, idx)
            return _spectral_radius(J) < 1.0, it
    Y[idx] = y
    return False, max_iter


def _solve_picard(sys: System, z, tol, max_iter, families):
    Y = np.zeros(sys.d)
    rows = sorted(families)
    for it in range(1, max_iter + 1):
        new = sys.phi(z, Y, rows)
        step = np.max(np.abs(new - Y[rows])) if rows else 0.0
        Y[rows] = new
        if not np.all(np.isfinite(new)) or np.max(new, initial=0) > CAP:
            return Y, False, it
        if step < tol:
            return Y, True, it
    return Y, False, max_iter


@dataclass
class Evaluation:
    z: float
    values: np.ndarray
    derivatives: np.ndarray
    converged: np.ndarray
    iterations: int = 0

    def __getitem__(self, i):
        return self.values[i]


def solve_values(sys: System, z: float, families=None, tol=1e-14, max_iter=500, fixed=None):
    """Values of the families in `families` (a dependency-closed set) at z.

    `fixed` optionally pins some values (used at the singularity). Returns
    (Y, converged set, total iterations)."""
    fam = set(range(sys.d)) if families is None else set(families)
    Y = np.full(sys.d, np.nan)
    if fixed:
        for i, v in fixed.items():
            Y[i] = v
    ok = set(fixed or ())
    total = 0
    for comp in sys.graph.sccs:
        if not comp <= fam or comp <= ok:
            continue
        deps = {j for i in comp for j in sys.spec.children_of(i)} - comp
        if not deps <= ok:
            continue
        good, it = _solve_component(sys, z, Y, comp, tol, max_iter)
        total += it
        if good:
            ok |= comp
        else:
            Y[sorted(comp)] = np.nan
    return Y, ok, total


def derivatives_at(sys: System, z: float, Y, families):
    idx = sorted(families)
    if not idx:
        return np.full(sys.d, np.nan)
    J = sys.jacobian(Y, idx, idx)
    A = np.eye(len(idx)) - J
    if _spectral_radius(J) >= 1.0:
        raise DerivativeUnavailable(f"resolvent is singular at z={z}")
    dY = np.full(sys.d, np.nan)
    try:
        dY[idx] = np.linalg.solve(A, sys.eps[idx])
    except np.linalg.LinAlgError:
        raise DerivativeUnavailable(f"resolvent is singular at z={z}") from None
    if not np.all(np.isfinite(dY[idx])):
        raise DerivativeUnavailable(f"resolvent is singular at z={z}")
    return dY


def evaluate(spec, z: float, tol: float = 1e-14, max_iter: int = 10**6, *, families=None,
             method: str = "newton", strict: bool = True, system: System | None = None) -> Evaluation:
    """Values and derivatives of the counting series at z.

    With `families`, only that set (closed under dependencies) is evaluated."""
    if z < 0 or tol <= 0:
        raise ValueError("need z >= 0 and tol > 0")
    sys = system or System(spec)
    fam = set(range(sys.d)) if families is None else closure(spec, families)
    if method == "picard":
        Y, good, it = _solve_picard(sys, z, tol, max_iter, fam)
        ok = fam if good else set()
    elif method == "newton":
        Y, ok, it = solve_values(sys, z, fam, tol=tol, max_iter=min(max_iter, 500))
    else:
        raise ValueError(f"unknown method {method!r}")
    conv = np.array([i in ok for i in range(sys.d)])
    if strict and not fam <= ok:
        bad = sorted(spec.names[i] for i in fam - ok)
        raise Diverged(f"iteration diverges at z={z} for {', '.join(bad)}")
    try:
        dY = derivatives_at(sys, z, Y, ok)
    except DerivativeUnavailable:
        if strict:
            raise
        dY = np.full(sys.d, np.nan)
    Y = np.where(conv, Y, np.nan)
    return Evaluation(z, Y, dY, conv, it)


# ------------------------------------------------------------- radius


@dataclass
class RadiusReport:
    rho: float
    radii: list
    width: float
    diagnostics: dict = field(default_factory=dict)
    criticality_ambiguous: bool = False

    def critical_set(self, rel=1e-9) -> set:
        return {i for i, r in enumerate(self.radii) if r <= self.rho * (1 + rel)}


def find_radius(spec, tol: float = 1e-12, *, system: System | None = None) -> RadiusReport:
    sys = system or System(spec)
    g = sys.graph
    radii = [math.inf] * sys.d
    diag = {"bisection_steps": {}, "newton_iterations": 0}
    for comp in g.sccs:
        deps = {j for i in comp for j in spec.children_of(i)} - comp
        hi = min((radii[j] for j in deps), default=math.inf)
        if not g.is_cyclic(comp):
            r = hi
        else:
            hi = min(hi, 1.0)
            fam = closure(spec, comp)
            lo, steps = 0.0, 0
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                _, ok, it = solve_values(sys, mid, fam)
                diag["newton_iterations"] += it
                if comp <= ok:
                    lo = mid
                else:
                    hi = mid
                steps += 1
            r = 0.5 * (lo + hi)
            diag["bisection_steps"][",".join(spec.names[i] for i in sorted(comp))] = steps
        for i in comp:
            radii[i] = r
    finite = [r for r in radii if math.isfinite(r)]
    if not finite:
        raise RadiusAboveCap("no singularity below the search cap")
    rho = min(finite)
    ambiguous = any(rho * (1 + 1e-9) < r <= rho * (1 + 1e-6) for r in radii)
    return RadiusReport(rho, radii, tol, diag, ambiguous)


# ------------------------------------------------------------- near rho


def sqrt_extrapolate(sys: System, rho: float, families, grid=(1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3)):
    """Values at rho of square-root-type families by fitting a + b s + c s^2 + d s^3,
    s = sqrt(rho - t), over a small grid of t below rho."""
    fam = sorted(families)
    rows, ss = [], []
    for s in grid:
        Y, ok, _ = solve_values(sys, rho - s * s, closure(sys.spec, fam))
        if not set(fam) <= ok:
            raise Diverged(f"no convergence at t={rho - s * s}")
        rows.append(Y[fam])
        ss.append(s)
    ss = np.array(ss)
    V = np.vander(ss, 4, increasing=True)
    coef, *_ = np.linalg.lstsq(V, np.array(rows), rcond=None)
    return dict(zip(fam, coef[0])), dict(zip(fam, -coef[1]))


def characteristic_point(sys: System, comp, rho0: float, y0: dict, deps):
    """Polish (rho, Y_comp, v) on  Y = Phi(rho, Y),  J v = v,  sum v = 1.

    `deps` is the dependency-closed set of families the component relies on,
    all of them analytic near rho."""
    idx = sorted(comp)
    n = len(idx)
    dep_fam = set(deps)

    def unpack(x):
        return x[0], x[1 : n + 1], x[n + 1 :]

    def residual(x):
        z, y, v = unpack(x)
        Y, ok, _ = solve_values(sys, z, dep_fam)
        if not dep_fam <= ok:
            return np.full(2 * n + 1, 1e6)
        Y[idx] = y
        r1 = sys.phi(z, Y, idx) - y
        J = sys.jacobian(Y, idx, idx)
        r2 = J @ v - v
        return np.concatenate([r1, r2, [v.sum() - 1.0]])

    Y, _, _ = solve_values(sys, rho0, dep_fam)
    Y[idx] = [y0[i] for i in idx]
    J = sys.jacobian(Y, idx, idx)
    w, vecs = np.linalg.eig(J)
    v0 = np.abs(np.real(vecs[:, int(np.argmax(np.real(w)))]))
    v0 = v0 / v0.sum()
    x0 = np.concatenate([[rho0], [y0[i] for i in idx], v0])
    sol = optimize.root(residual, x0, method="hybr", options={"xtol": 1e-15, "maxfev": 20000})
    z, y, v = unpack(sol.x)
    res = np.max(np.abs(residual(sol.x)))
    return float(z), dict(zip(idx, y)), res


def polar_radius(sys: System, comp, rho0: float, deps, width: float = 1e-9):
    """Refine a polar singularity: the point where the component's Perron root hits 1."""
    idx = sorted(comp)
    dep_fam = set(deps)

    def f(z):
        Y, ok, _ = solve_values(sys, z, dep_fam)
        Y = np.where(np.isnan(Y), 0.0, Y)
        return 1.0 - _spectral_radius(sys.jacobian(Y, idx, idx))

    a, b = rho0 - width, rho0 + width
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        return rho0
    return optimize.brentq(f, a, b, xtol=1e-17, rtol=4 * np.finfo(float).eps)
