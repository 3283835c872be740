"""Critical structure, spectral data and limit parameters of a tree-specification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import descriptors as dsc
from .perms import MINUS, PLUS
from .series import (
    Aperiodic,
    RadiusReport,
    System,
    aperiodicity,
    characteristic_point,
    derivatives_at,
    expand,
    find_radius,
    polar_radius,
    solve_values,
    sqrt_extrapolate,
    _solve_component,
    _spectral_radius,
)
from .specs import DependencyGraph, TreeSpecification, closure, dependency_graph, restrict
from .trees import BRANCHES


class AnalysisError(ArithmeticError):
    code = "analysis_error"


class SpectralFailure(AnalysisError):
    code = "spectral_failure"


class IrreducibilityViolation(AnalysisError):
    code = "irreducibility_violation"


class DegenerateSpectrum(AnalysisError):
    code = "degenerate_spectrum"


LINEAR, BRANCHING = "linear", "branching"


@dataclass
class CriticalStructure:
    critical: list
    graph: DependencyGraph
    classification: str
    sc: bool
    criticality_ambiguous: bool = False


def _is_branching(spec, members) -> bool:
    ms = set(members)
    return any(sum(k in ms for k in p.children) >= 2 for i in ms for p in spec.productions[i])


def classify(spec: TreeSpecification, radius: RadiusReport) -> CriticalStructure:
    crit = sorted(radius.critical_set())
    if not crit:
        raise AnalysisError("empty critical set")
    g = dependency_graph(spec, crit)
    kind = BRANCHING if _is_branching(spec, crit) else LINEAR
    return CriticalStructure(crit, g, kind, len(g.sccs) == 1, radius.criticality_ambiguous)


# ------------------------------------------------------------ matrices


def _pos_sign(prod, m, l) -> str:
    """'+' iff the root restricted to positions {m, l} is 12."""
    return "+" if (prod.root[m] < prod.root[l]) == (m < l) else "-"


def _prod_except(values, ch, skip) -> float:
    out = 1.0
    for r, k in enumerate(ch):
        if r not in skip:
            out *= values[k]
    return out


def build_M_star(spec, values, crit) -> np.ndarray:
    """M*_ij = sum over productions of i and positions l holding j of prod_{r != l} T_{k_r}."""
    pos = {j: n for n, j in enumerate(crit)}
    M = np.zeros((len(crit), len(crit)))
    for a, i in enumerate(crit):
        for p in spec.productions[i]:
            for l, j in enumerate(p.children):
                if j in pos:
                    M[a, pos[j]] += _prod_except(values, p.children, {l})
    return M


def build_D_matrices(spec, values, derivs, crit) -> dict:
    """The four matrices D^{side,sign}, keyed by (side, sign)."""
    pos = {j: n for n, j in enumerate(crit)}
    D = {b: np.zeros((len(crit), len(crit))) for b in BRANCHES}
    for a, i in enumerate(crit):
        for p in spec.productions[i]:
            ch = p.children
            for l, j in enumerate(ch):
                if j not in pos:
                    continue
                for m, k in enumerate(ch):
                    if m == l:
                        continue
                    side = "left" if m < l else "right"
                    D[(side, _pos_sign(p, m, l))][a, pos[j]] += derivs[k] * _prod_except(values, ch, {l, m})
    return D


def build_E_tensors(spec, values, crit):
    """E^+ and E^- indexed (i, j, j') with j left of j', and H = d^2 F_i / dy_j dy_j'."""
    pos = {j: n for n, j in enumerate(crit)}
    c = len(crit)
    Ep = np.zeros((c, c, c))
    Em = np.zeros((c, c, c))
    for a, i in enumerate(crit):
        for p in spec.productions[i]:
            ch = p.children
            for x in range(len(ch)):
                if ch[x] not in pos:
                    continue
                for y in range(x + 1, len(ch)):
                    if ch[y] not in pos:
                        continue
                    w = _prod_except(values, ch, {x, y})
                    target = Ep if p.root[x] < p.root[y] else Em
                    target[a, pos[ch[x]], pos[ch[y]]] += w
    H = Ep + Em + Ep.transpose(0, 2, 1) + Em.transpose(0, 2, 1)
    return Ep, Em, H


def build_U(spec, values, derivs, crit):
    """dPhi_i/dz at rho with critical arguments frozen."""
    cset = set(crit)
    U = np.zeros(len(crit))
    for a, i in enumerate(crit):
        s = 1.0 if spec.leaf[i] else 0.0
        for p in spec.productions[i]:
            ch = p.children
            for m, k in enumerate(ch):
                if k not in cset:
                    s += derivs[k] * _prod_except(values, ch, {m})
        U[a] = s
    return U


def build_V(spec, values, rho, crit):
    """Part of Phi_i free of critical families, at rho."""
    cset = set(crit)
    V = np.zeros(len(crit))
    for a, i in enumerate(crit):
        s = rho if spec.leaf[i] else 0.0
        for p in spec.productions[i]:
            if not any(k in cset for k in p.children):
                s += _prod_except(values, p.children, set())
        V[a] = s
    return V


# ------------------------------------------------------------ Perron


@dataclass
class SpectralData:
    M_star_at_rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    perron_value: float
    iterations: int = 0

    def residuals(self):
        M, u, v, lam = self.M_star_at_rho, self.u, self.v, self.perron_value
        return float(np.max(np.abs(M @ v - lam * v))), float(np.max(np.abs(u @ M - lam * u)))


def _power(A, max_iter, rtol):
    n = A.shape[0]
    x = np.ones(n) / math.sqrt(n)
    # shifting by the identity makes an irreducible matrix primitive
    B = A + np.eye(n)
    for it in range(1, max_iter + 1):
        y = B @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            raise IrreducibilityViolation("matrix annihilates the all-ones vector")
        y /= nrm
        if np.max(np.abs(y - x)) <= rtol:
            return y, it
        x = y
    raise SpectralFailure(f"power iteration did not converge in {max_iter} steps")


def perron(M, max_iter: int = 10**6, rtol: float = 1e-13) -> SpectralData:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix expected")
    if np.any(M < 0):
        raise ValueError("matrix must be nonnegative")
    v, it1 = _power(M, max_iter, rtol)
    u, it2 = _power(M.T, max_iter, rtol)
    if np.min(v) <= 0 or np.min(u) <= 0:
        raise IrreducibilityViolation("Perron vectors are not positive; is the matrix irreducible?")
    lam = float((M @ v).sum() / v.sum())
    v = v / np.linalg.norm(v)
    u = u / (u @ v)
    return SpectralData(M, u, v, lam, it1 + it2)


def linear_parameters(spectral: SpectralData, D: dict) -> tuple:
    u, v = spectral.u, spectral.v
    Mp = sum(D.values())
    den = u @ Mp @ v
    if abs(den) < 1e-14:
        raise DegenerateSpectrum("u^T M*' v vanishes")
    return tuple(float(u @ D[b] @ v / den) for b in BRANCHES)


@dataclass
class BranchingConstants:
    beta: float
    zeta: float
    Z: float
    p_plus: float
    p_minus: float


def branching_parameters(spectral: SpectralData, Ep, Em, H, U) -> BranchingConstants:
    u, v = spectral.u, spectral.v
    Z = 0.5 * np.einsum("i,j,k,ijk->", u, v, v, H)
    if abs(Z) < 1e-14:
        raise DegenerateSpectrum("Z vanishes")
    pp = float(np.einsum("i,j,k,ijk->", u, v, v, Ep) / Z)
    pm = float(np.einsum("i,j,k,ijk->", u, v, v, Em) / Z)
    beta = math.sqrt(float(u @ U))
    return BranchingConstants(beta, math.sqrt(Z), float(Z), pp, pm)


# ------------------------------------------------------------ profiles


@dataclass
class Profile:
    """Local behaviour of a critical series at rho."""

    kind: str  # "pole" or "sqrt"
    order: float  # pole order m, or 0.5 for square roots
    coefficient: float  # T ~ c/(rho-z)^m, or T ~ value - c sqrt(rho-z)
    value: float = math.inf  # T(rho) for square-root families

    def predict(self, rho: float, n: int) -> float:
        if self.kind == "pole":
            m = int(self.order)
            return self.coefficient * math.comb(n + m - 1, m - 1) * rho ** (-n - m)
        return self.coefficient * math.sqrt(rho) * rho ** (-n) * n ** (-1.5) / (2 * math.sqrt(math.pi))

    def to_dict(self):
        d = {"kind": self.kind, "order": self.order, "coefficient": self.coefficient}
        if self.kind == "sqrt":
            d["value_at_rho"] = self.value
        return d


@dataclass
class ComponentResult:
    members: list
    kind: str  # linear | branching | dependent
    descriptor: object
    spectral: SpectralData | None = None
    p: tuple | None = None
    D: dict | None = None
    E: tuple | None = None
    U: np.ndarray | None = None
    constants: BranchingConstants | None = None
    scale: float | None = None  # u^T V / u^T M' v in the linear case
    notes: list = field(default_factory=list)


class _Context:
    def __init__(self, spec, sys, rho, values, derivs, crit):
        self.spec, self.sys, self.rho = spec, sys, rho
        self.values, self.derivs = values, derivs
        self.crit = crit
        self.profiles: dict = {}
        self.limits: dict = {}


def _sink_analysis(ctx: _Context, comp) -> ComponentResult:
    spec = ctx.spec
    members = sorted(comp)
    vals = ctx.values
    M = build_M_star(spec, vals, members)
    spectral = perron(M)
    if _is_branching(spec, members):
        Ep, Em, H = build_E_tensors(spec, vals, members)
        U = build_U(spec, vals, ctx.derivs, members)
        bc = branching_parameters(spectral, Ep, Em, H, U)
        desc = dsc.Brownian(min(1.0, max(0.0, bc.p_plus)))
        for a, i in enumerate(members):
            ctx.profiles[i] = Profile("sqrt", 0.5, bc.beta * spectral.v[a] / bc.zeta, float(vals[i]))
        res = ComponentResult(members, BRANCHING, desc, spectral, E=(Ep, Em, H), U=U, constants=bc)
    else:
        D = build_D_matrices(spec, vals, ctx.derivs, members)
        p = linear_parameters(spectral, D)
        desc = dsc.XPermuton(tuple(min(1.0, max(0.0, x)) for x in p))
        Mp = sum(D.values())
        V = build_V(spec, vals, ctx.rho, members)
        scale = float(spectral.u @ V / (spectral.u @ Mp @ spectral.v))
        for a, i in enumerate(members):
            ctx.profiles[i] = Profile("pole", 1, scale * spectral.v[a])
        res = ComponentResult(members, LINEAR, desc, spectral, p=p, D=D, scale=scale)
    if abs(spectral.perron_value - 1) > 1e-6:
        res.notes.append(f"Perron value {spectral.perron_value!r} differs from 1")
    for i in members:
        ctx.limits[i] = desc
    return res


def _monomial_descriptor(ctx, prod, polar_pos):
    fams = [prod.children[q] for q in polar_pos]
    if len(fams) == 1:
        return ctx.limits[fams[0]]
    if len(fams) == 2 and prod.root in (PLUS, MINUS):
        if all(ctx.profiles[f].order == 1 for f in fams):
            return dsc.Split(prod.root, tuple(ctx.limits[f] for f in fams))
        return dsc.Unsupported("split_of_higher_poles", f"{prod.root}[...] over poles of order > 1")
    return dsc.Unsupported("split_arity", f"macroscopic split under root {prod.root}")


def _dependent_polar(ctx: _Context, comp, cyclic) -> ComponentResult:
    spec, vals = ctx.spec, ctx.values
    members = sorted(comp)
    mpos = {i: a for a, i in enumerate(members)}
    n = len(members)
    G = np.zeros((n, n))
    outs = []  # (member, production, polar positions, coefficient, order, lead)
    for i in members:
        for p in spec.productions[i]:
            ch = p.children
            polar = [q for q, k in enumerate(ch) if k in comp or ctx.profiles.get(k, Profile("x", 0, 0)).kind == "pole"]
            if not polar:
                continue
            coef = _prod_except(vals, ch, set(polar))
            inner = [q for q in polar if ch[q] in comp]
            if inner:
                if len(polar) > 1:
                    return _unsupported(ctx, members, "nonlinear_component", "component series multiplied by a polar series")
                G[mpos[i], mpos[ch[inner[0]]]] += coef
                continue
            order = sum(ctx.profiles[ch[q]].order for q in polar)
            lead = coef * math.prod(ctx.profiles[ch[q]].coefficient for q in polar)
            outs.append((i, p, polar, coef, order, lead))
    if not outs:
        return _unsupported(ctx, members, "no_exit", "component has no way out to a polar series")
    top = max(o[4] for o in outs)
    if cyclic and _spectral_radius(G) >= 1 - 1e-9:
        return _unsupported(ctx, members, "resonant_component", "component has its own singularity at rho")
    N = np.linalg.inv(np.eye(n) - G)
    b = np.zeros(n)
    for i, p, polar, coef, order, lead in outs:
        if order == top:
            b[mpos[i]] += lead
    delta = N @ b
    for i in members:
        a = mpos[i]
        comps = []
        for c, p, polar, coef, order, lead in outs:
            if order == top:
                comps.append((N[a, mpos[c]] * lead / delta[a], _monomial_descriptor(ctx, p, polar)))
        desc = dsc.mixture(comps)
        if any(isinstance(d, dsc.Unsupported) for _, d in comps):
            bad = next(d for _, d in comps if isinstance(d, dsc.Unsupported))
            desc = bad
        ctx.limits[i] = desc
        ctx.profiles[i] = Profile("pole", top, float(delta[a]))
    return ComponentResult(members, "dependent", ctx.limits[members[0]], notes=[f"pole order {top}"])


def _dependent_sqrt(ctx: _Context, comp, cyclic) -> ComponentResult:
    spec, sys = ctx.spec, ctx.sys
    members = sorted(comp)
    if cyclic:
        Y = ctx.values.copy()
        ok, _ = _solve_component(sys, ctx.rho, Y, comp, 1e-15, 500)
        if not ok:
            return _unsupported(ctx, members, "resonant_component", "component does not converge at rho")
        ctx.values[members] = Y[members]
    else:
        ctx.values[members[0]] = sys.phi(ctx.rho, ctx.values, members)[0]
    crit_known = [j for j in ctx.profiles if ctx.profiles[j].kind == "sqrt" and j not in comp]
    outs = sorted({k for i in members for k in spec.children_of(i)} & set(crit_known))
    J_cc = sys.jacobian(ctx.values, members, members) if cyclic else np.zeros((1, 1))
    J_out = sys.jacobian(ctx.values, members, outs)
    if cyclic and _spectral_radius(J_cc) >= 1 - 1e-9:
        return _unsupported(ctx, members, "resonant_component", "component has its own singularity at rho")
    N = np.linalg.inv(np.eye(len(members)) - J_cc)
    beta_out = np.array([ctx.profiles[j].coefficient for j in outs])
    beta = N @ (J_out @ beta_out)
    for a, i in enumerate(members):
        comps = []
        for b_, j in enumerate(outs):
            w = float(N[a] @ J_out[:, b_]) * beta_out[b_] / beta[a]
            comps.append((w, ctx.limits[j]))
        ctx.limits[i] = dsc.mixture(comps)
        ctx.profiles[i] = Profile("sqrt", 0.5, float(beta[a]), float(ctx.values[i]))
    return ComponentResult(members, "dependent", ctx.limits[members[0]])


def _unsupported(ctx, members, reason, detail):
    d = dsc.Unsupported(reason, detail)
    for i in members:
        ctx.limits[i] = d
        ctx.profiles.setdefault(i, Profile("unknown", math.nan, math.nan))
    return ComponentResult(members, "dependent", d)


# ------------------------------------------------------------ pipeline


@dataclass
class AnalysisReport:
    spec: TreeSpecification
    family: int
    radius: RadiusReport
    rho: float
    structure: CriticalStructure
    components: list
    limits: dict
    profiles: dict
    values: np.ndarray
    derivatives: np.ndarray
    diagnostics: dict

    @property
    def limit(self):
        return self.limits.get(self.family, dsc.Unsupported("subcritical_family", "the family is not critical"))

    @property
    def sink(self) -> ComponentResult:
        return self.components[0]

    def to_dict(self) -> dict:
        names = self.spec.names
        comps = []
        for c in self.components:
            entry = {"members": [names[i] for i in c.members], "kind": c.kind, "limit": c.descriptor.to_dict()}
            if c.spectral is not None:
                entry["perron_value"] = c.spectral.perron_value
                entry["u"] = c.spectral.u.tolist()
                entry["v"] = c.spectral.v.tolist()
                entry["M_star"] = c.spectral.M_star_at_rho.tolist()
            if c.p is not None:
                entry["p"] = dict(zip(dsc.BRANCH_KEYS, c.p))
            if c.constants is not None:
                k = c.constants
                entry.update(p_plus=k.p_plus, p_minus=k.p_minus, beta=k.beta, zeta=k.zeta, Z=k.Z)
            if c.notes:
                entry["notes"] = c.notes
            comps.append(entry)
        return {
            "family": names[self.family],
            "rho": self.rho,
            "radii": {names[i]: (r if math.isfinite(r) else None) for i, r in enumerate(self.radius.radii)},
            "critical": [names[i] for i in self.structure.critical],
            "classification": self.structure.classification,
            "strongly_connected": self.structure.sc,
            "limit": self.limit.to_dict(),
            "limits": {names[i]: d.to_dict() for i, d in sorted(self.limits.items())},
            "components": comps,
            "asymptotics": {names[i]: p.to_dict() for i, p in sorted(self.profiles.items())},
            "diagnostics": self.diagnostics,
        }


def analyze(spec: TreeSpecification, family=0, tol: float = 1e-12, radius: RadiusReport | None = None) -> AnalysisReport:
    """Full pipeline for one family. Families it cannot reach are pruned first,
    so the report's `spec` may be a restriction of the input."""
    fam = spec.index(family)
    keep = closure(spec, [fam])
    if len(keep) < spec.size:
        sub = restrict(spec, keep)
        rep = analyze(sub, spec.names[fam], tol)
        rep.diagnostics["pruned_families"] = [spec.names[i] for i in range(spec.size) if i not in keep]
        return rep
    sys = System(spec)
    radius = radius or find_radius(spec, tol, system=sys)
    cs = classify(spec, radius)
    crit = cs.critical
    cset = set(crit)
    sub = set(range(spec.size)) - cset
    diag: dict = {
        "criticality_ambiguous": cs.criticality_ambiguous,
        "bisection_width": radius.width,
        "rho_bisection": radius.rho,
        "hypotheses_rc_ar": "automatic: every F_i is a polynomial",
        "warnings": [],
    }
    # aperiodicity, on a 64-term prefix
    coeffs = expand(spec, 64)
    ap = {spec.names[i]: str(aperiodicity(coeffs[i])) for i in range(spec.size)}
    diag["aperiodicity"] = ap
    # refine rho on the first sink component of the critical graph
    sinks = [c for c in cs.graph.sccs if not ({j for i in c for j in spec.children_of(i)} & cset) - c]
    rho = radius.rho
    values = np.full(spec.size, np.nan)
    first = sinks[0]
    deps = closure(spec, first) - first
    if _is_branching(spec, first):
        y0, _ = sqrt_extrapolate(sys, radius.rho, first)
        rho_ref, ystar, res = characteristic_point(sys, first, radius.rho, y0, deps)
        if abs(rho_ref - radius.rho) < 1e-8 and res < 1e-10:
            rho = rho_ref
            for i, y in ystar.items():
                values[i] = y
        else:
            diag["warnings"].append("characteristic-system polish failed; using extrapolated values")
            for i, y in y0.items():
                values[i] = y
    else:
        rho = polar_radius(sys, first, radius.rho, deps)
    diag["rho_refined"] = rho
    Ysub, ok, _ = solve_values(sys, rho, sub)
    if not sub <= ok:
        raise AnalysisError("subcritical families fail to converge at rho")
    dY = derivatives_at(sys, rho, Ysub, sub)
    for i in sub:
        values[i] = Ysub[i]
    ctx = _Context(spec, sys, rho, values, dY, crit)
    components = []
    for comp in cs.graph.sccs:
        cdeps = ({j for i in comp for j in spec.children_of(i)} & cset) - comp
        if not cdeps:
            if comp != first and _is_branching(spec, comp):
                y0, _ = sqrt_extrapolate(sys, radius.rho, comp)
                _, ystar, _ = characteristic_point(sys, comp, rho, y0, closure(spec, comp) - comp)
                for i, y in ystar.items():
                    ctx.values[i] = y
            components.append(_sink_analysis(ctx, comp))
            continue
        cyclic = cs.graph.is_cyclic(comp)
        if any(ctx.profiles.get(j) is None or ctx.profiles[j].kind == "unknown" for j in cdeps):
            components.append(_unsupported(ctx, sorted(comp), "unsupported_dependency", "depends on an unresolved family"))
        elif any(ctx.profiles[j].kind == "pole" for j in cdeps):
            components.append(_dependent_polar(ctx, comp, cyclic))
        else:
            components.append(_dependent_sqrt(ctx, comp, cyclic))
    # aperiodicity requirements of the two theorems
    if cs.classification == LINEAR:
        if not any(ap[spec.names[i]] == "Aperiodic" for i in sub):
            diag["warnings"].append("no subcritical series is certified aperiodic")
    elif not any(v == "Aperiodic" for v in ap.values()):
        diag["warnings"].append("no series is certified aperiodic")
    for c in components:
        diag["warnings"].extend(c.notes if c.spectral is not None and abs(c.spectral.perron_value - 1) > 1e-6 else [])
    return AnalysisReport(spec, fam, radius, rho, cs, components, ctx.limits, ctx.profiles, ctx.values, dY, diag)


def resolve_limit(spec: TreeSpecification, family=0):
    return analyze(spec, family).limit


def asymptotic_check(report: AnalysisReport, coeffs=None, ns=(50, 100, 200)) -> dict:
    """Exact coefficient divided by the predicted one, per critical family and n."""
    N = max(ns)
    coeffs = coeffs or expand(report.spec, N)
    out = {}
    for i, prof in sorted(report.profiles.items()):
        if prof.kind not in ("pole", "sqrt") or not prof.coefficient > 0:
            continue
        out[report.spec.names[i]] = {n: coeffs[i][n] / prof.predict(report.rho, n) for n in ns}
    return out


def m_star_at(spec, members, z, sys=None):
    """M*(z) for a component whose dependencies are analytic at z (finite-difference checks)."""
    sys = sys or System(spec)
    deps = closure(spec, members) - set(members)
    Y, ok, _ = solve_values(sys, z, deps)
    return build_M_star(spec, Y, sorted(members))
