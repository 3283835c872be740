import math

import numpy as np
import pytest

from permlimit import analyze, load_spec
from permlimit.analysis import (
    DegenerateSpectrum,
    asymptotic_check,
    branching_parameters,
    build_M_star,
    classify,
    linear_parameters,
    perron,
)
from permlimit.descriptors import Brownian, Mixture, Split, Unsupported, XPermuton, from_dict, mixture
from permlimit.series import find_radius
from permlimit.specs import from_dict as spec_from_dict
from permlimit.trees import BRANCHES


def test_perron_trivial():
    s = perron(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert s.perron_value == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(s.v / np.linalg.norm(s.v), [1 / math.sqrt(2)] * 2)
    assert s.u @ s.v == pytest.approx(1.0, abs=1e-12)
    s = perron(np.array([[0.5]]))
    assert s.perron_value == pytest.approx(0.5)
    assert s.u @ s.v == pytest.approx(1.0)


def test_perron_random_positive_matrices():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.random((5, 5))
        s = perron(M)
        assert s.perron_value == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)
        assert (s.u > 0).all() and (s.v > 0).all()
        r1, r2 = s.residuals()
        assert max(r1, r2) < 1e-10


def test_classification_examples():
    for name, crit, sc, kind in [
        ("av132", {"T", "Tnp", "Tnm"}, True, "branching"),
        ("xclass", {"T0", "T3", "T4", "T6", "T7"}, False, "linear"),
        ("vclass", None, False, "linear"),
    ]:
        spec = load_spec(name)
        cs = classify(spec, find_radius(spec))
        assert cs.sc is sc and cs.classification == kind
        if crit:
            assert {spec.names[i] for i in cs.critical} == crit
    rep = analyze(load_spec("vclass"))
    assert {rep.spec.names[i] for i in rep.sink.members} == {"T4", "T11"}


def test_zero_patterns_of_D(reports):
    v = reports["vclass"].sink.D
    assert not v[("left", "+")].any() and not v[("right", "-")].any()
    lay = reports["layered"].sink.D
    for b in [("left", "-"), ("right", "+"), ("right", "-")]:
        assert not lay[b].any()


def test_E_patterns(reports):
    Ep = reports["av132"].sink.E[0]
    assert not Ep.any()
    rep = reports["branching"]
    Ep = rep.sink.E[0]
    idx = {i: a for a, i in enumerate(rep.sink.members)}
    want = np.zeros_like(Ep)
    for i in (0, 2):
        want[idx[i], idx[1], idx[0]] = 1.0
    assert np.allclose(Ep, want, atol=1e-14)


def test_branching_M_star_entry(reports):
    rep = reports["branching"]
    y, z = rep.values, rep.rho
    M = build_M_star(rep.spec, y, rep.sink.members)
    assert M[0, 0] == pytest.approx(y[1] + y[2] + 2 * y[0] * (z / (1 - z)) ** 2, rel=1e-12)


def test_xtilde_M_star_corner(reports):
    rep = reports["xtilde"]
    assert rep.sink.spectral.M_star_at_rho[0, 0] == pytest.approx(rep.rho, rel=1e-12)
    assert rep.sink.spectral.perron_value == pytest.approx(1.0, abs=1e-6)


def test_linear_parameters_formula():
    spectral = perron(np.array([[0.5, 0.5], [0.5, 0.5]]))
    D = {b: np.eye(2) * (k + 1) for k, b in enumerate(BRANCHES)}
    p = linear_parameters(spectral, D)
    assert p == pytest.approx((0.1, 0.2, 0.3, 0.4))
    with pytest.raises(DegenerateSpectrum):
        linear_parameters(spectral, {b: np.zeros((2, 2)) for b in BRANCHES})


def test_branching_degenerate():
    spectral = perron(np.array([[1.0]]))
    z = np.zeros((1, 1, 1))
    with pytest.raises(DegenerateSpectrum):
        branching_parameters(spectral, z, z, z, np.ones(1))


def test_limits_of_fixtures(reports):
    assert reports["av132"].limit == Brownian(0.0) or reports["av132"].limit.p_plus < 1e-10
    assert isinstance(reports["separable"].limit, Brownian)
    assert reports["layered"].limit.p == pytest.approx((1, 0, 0, 0))
    assert reports["geometric"].limit.p == pytest.approx((1, 0, 0, 0))
    for name, rep in reports.items():
        lim = rep.limit
        if isinstance(lim, Mixture):
            assert sum(w for w, _ in lim.components) == pytest.approx(1.0, abs=1e-10)
        if isinstance(lim, XPermuton):
            assert sum(lim.p) == pytest.approx(1.0, abs=1e-10)


def test_profiles_positive(reports):
    for rep in reports.values():
        for prof in rep.profiles.values():
            assert prof.coefficient > 0


def test_asymptotics_geometric_exact(reports):
    r = asymptotic_check(reports["geometric"], ns=(10, 50))
    assert r["T"][10] == pytest.approx(1.0, abs=1e-9)


def test_asymptotic_trend(reports):
    r = asymptotic_check(reports["av132"], ns=(50, 100, 200))["T"]
    # the error shrinks like 1/n
    assert abs(r[200] - 1) < abs(r[100] - 1) < abs(r[50] - 1) + 0.02
    for name in ("xtilde", "vclass", "branching", "separable"):
        for fam, ratios in asymptotic_check(reports[name], ns=(100, 200)).items():
            assert abs(ratios[200] - 1) < 0.05, (name, fam)


def _with_extra(base, fam):
    doc = load_spec(base).to_dict()
    doc["families"].insert(0, fam)
    return spec_from_dict(doc)


def test_unsupported_split_arity():
    spec = _with_extra("xclass", {"name": "S", "leaf": True,
                                  "productions": [{"root": "2413", "children": ["T3", "T3", "T3", "T3"]}]})
    lim = analyze(spec, "S").limit
    assert isinstance(lim, Unsupported) and lim.reason == "split_arity"


def test_unreachable_families_are_pruned():
    # T2 (increasing permutations) is subcritical in the full class but is
    # analysed on its own closure, where it is the critical family
    rep = analyze(load_spec("xclass"), "T2")
    assert set(rep.diagnostics["pruned_families"]) == {"T0", "T3", "T4", "T5", "T6", "T7"}
    assert rep.rho == pytest.approx(1.0, abs=1e-9)
    assert rep.limit.p == pytest.approx((1, 0, 0, 0))


def test_report_to_dict_is_json(reports):
    import json

    for rep in reports.values():
        doc = json.loads(json.dumps(rep.to_dict()))
        assert from_dict(doc["limit"]).key() == rep.limit.key()


def test_mixture_helper():
    m = mixture([(1, Brownian(1.0)), (1, Brownian(0.0)), (2, Brownian(1.0))])
    assert isinstance(m, Mixture)
    assert dict((d.p_plus, w) for w, d in m.components) == {1.0: 0.75, 0.0: 0.25}
    assert mixture([(3, XPermuton((1, 0, 0, 0)))]) == XPermuton((1, 0, 0, 0))
    s = Split(__import__("permlimit").Permutation.parse("12"), (Brownian(1.0), Brownian(0.0)))
    assert from_dict(s.to_dict()) == s
