from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicorr import systems as S
from multicorr.correlation import multicorrelation_series
from multicorr.kronecker import (AuditError, RelationError, average_vs_limit, decompose, kronecker_factor, limit_rhs,
                                 orbit_closure, weighted_average)
from multicorr.numbers import IrrationalSpec

GOLD = IrrationalSpec.parse("golden")
line = S.TorusSystem(1, {"T": [GOLD], "S": [GOLD.scaled(2)]})
indep = S.TorusSystem(1, {"T": "frac-sqrt(2)", "S": "frac-sqrt(3)"})
LINE_F = kronecker_factor(line, "T", "S")
LINE_Y = orbit_closure(LINE_F, [(2, -1)])
IND_F = kronecker_factor(indep, "T", "S")
IND_Y = orbit_closure(IND_F)


def e(x):
    return np.exp(2j * np.pi * np.mod(x, 1.0))


def test_independent_closure_is_full_torus():
    assert IND_Y.contains_frequency((0, 0))
    for v in [(1, 0), (0, 1), (2, -1), (1, 1)]:
        assert not IND_Y.contains_frequency(v)


def test_line_closure():
    assert LINE_Y.exact == (True,)
    for m in range(-3, 4):
        assert LINE_Y.contains_frequency((2 * m, -m))
    assert not LINE_Y.contains_frequency((1, 0))
    assert not LINE_Y.contains_frequency((1, -1))
    pts = LINE_Y.sample(1000, np.random.default_rng(0))
    resid = np.mod(2 * pts[:, 0] - pts[:, 1] + 0.5, 1.0) - 0.5
    assert np.max(np.abs(resid)) < 1e-12


def test_bogus_relation_rejected():
    with pytest.raises(RelationError):
        orbit_closure(IND_F, [(1, 1)])
    with pytest.raises(RelationError):
        orbit_closure(IND_F, [(1, 1, 0)])


def test_limit_independent_is_product_of_means():
    f1 = S.TrigPoly({(0,): 0.3, (1,): 0.5, (-2,): 0.2j})
    f2 = S.TrigPoly({(0,): -0.4 + 0.1j, (3,): 0.7})
    lim = limit_rhs(IND_F, f1, f2, IND_Y)
    assert lim.terms() == {(0,): (0.3 + 0j) * (-0.4 + 0.1j)}


def test_limit_on_line_cancels_u_dependence():
    lim = limit_rhs(LINE_F, S.TrigPoly({(2,): 1.0}), S.TrigPoly({(-1,): 1.0}), LINE_Y)
    assert lim.terms() == {(1,): 1 + 0j}
    # Monte Carlo over the line {(u, 2u)} at a few z
    rng = np.random.default_rng(1)
    u = rng.random(10_000)
    for z in (0.1, 0.42, 0.77):
        mc = np.mean(e(2 * (z + u)) * e(-(z + 2 * u)))
        assert abs(mc - e(z)) < 1e-12


def test_limit_with_constant_second_observable_uses_u_marginal():
    f1 = S.TrigPoly({(0,): 0.25, (1,): 0.75})
    lim = limit_rhs(LINE_F, f1, S.TrigPoly({(0,): 1.0}), LINE_Y)
    assert lim.terms() == {(0,): 0.25 + 0j}


def test_limit_rejects_non_trigpoly():
    with pytest.raises(ValueError):
        limit_rhs(IND_F, S.ArcIndicator.interval(0, 0.5), S.TrigPoly({(0,): 1.0}), IND_Y)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 31))
def test_limit_is_linear(seed):
    rng = np.random.default_rng(seed)

    def rnd():
        ks = rng.integers(-4, 5, size=3)
        return S.TrigPoly({(int(k),): complex(*rng.normal(size=2)) for k in ks})

    a, b, g = rnd(), rnd(), rnd()
    c = complex(*rng.normal(size=2))
    lhs = limit_rhs(LINE_F, a + b.scaled(c), g, LINE_Y)
    rhs = limit_rhs(LINE_F, a, g, LINE_Y) + limit_rhs(LINE_F, b, g, LINE_Y).scaled(c)
    diff = lhs - rhs
    assert np.all(np.abs(diff.coefs) < 1e-12)


def test_average_vs_limit_constants():
    one = S.constant(indep)
    assert average_vs_limit(indep, one, one, IND_F, IND_Y, 64).distance == 0


def test_average_vs_limit_on_line():
    f1 = S.TrigPoly({(1,): 0.5, (2,): 0.5})
    f2 = S.TrigPoly({(-1,): 0.5, (3,): 0.5})
    rep = average_vs_limit(line, f1, f2, LINE_F, LINE_Y, 1 << 14)
    assert rep.limit.terms() == {(1,): 0.25 + 0j}
    assert rep.distance <= 0.02
    # geometric-sum oracle: surviving off-line pairs each contribute |mean e(n t)|
    ns = np.arange(1 << 14)
    a, b = float(GOLD.exact % 1), float(GOLD.scaled(2).exact % 1)
    off = [(1, -1), (1, 3), (2, 3)]
    oracle = np.sqrt(sum(abs(0.25 * np.mean(e(ns * (k * a + l * b)))) ** 2 for k, l in off))
    assert rep.distance == pytest.approx(oracle, rel=1e-6)


def test_average_vs_limit_mean_zero_cat_component():
    P = S.ProductSystem((line, S.CatMapSystem(65543, {"T": 1, "S": 2})))
    F = kronecker_factor(P, "T", "S")
    Y = orbit_closure(F, [(2, -1)])
    rep = average_vs_limit(P, S.TrigPoly({(1, 1, 0): 1.0}), S.constant(P), F, Y, 1 << 14)
    assert S.l2_norm(P, rep.limit) == 0
    assert S.l2_norm(P, rep.average) <= 0.05


def test_average_vs_limit_audit_failure():
    rat = S.TorusSystem(1, {"T": "1/3", "S": "frac-sqrt(2)"})
    F = kronecker_factor(rat, "T", "S")
    with pytest.raises(AuditError):
        average_vs_limit(rat, S.TrigPoly({(1,): 1.0}), S.TrigPoly({(1,): 1.0}), F, orbit_closure(F), 16)


def test_weighted_average_character_substitution():
    eta = S.TrigPoly({(1, -2): 1.0})
    rep = weighted_average(line, eta, S.TrigPoly({(-2,): 1.0}), S.TrigPoly({(1,): 1.0}), S.TrigPoly({(1,): 1.0}),
                           LINE_F, LINE_Y, 1 << 14)
    assert rep.limit == pytest.approx(1.0)
    assert rep.gap <= 0.02


def test_weighted_average_trivial_eta_matches_limit_integral():
    f0 = S.TrigPoly({(-1,): 0.5, (0,): 0.5})
    f1 = S.TrigPoly({(1,): 0.5, (2,): 0.5})
    f2 = S.TrigPoly({(-1,): 0.5, (3,): 0.5})
    rep = weighted_average(line, S.TrigPoly({(0, 0): 1.0}), f0, f1, f2, LINE_F, LINE_Y, 1 << 14)
    lim = limit_rhs(LINE_F, f1, f2, LINE_Y)
    assert rep.limit == pytest.approx(S.integrate(line, S.pointwise_product(f0, lim)), abs=1e-14)
    assert rep.gap <= 0.02


def test_weighted_average_zero_f0():
    rep = weighted_average(line, S.TrigPoly({(1, -2): 1.0}), S.TrigPoly({(0,): 0.0}), S.TrigPoly({(1,): 1.0}),
                           S.TrigPoly({(1,): 1.0}), LINE_F, LINE_Y, 256)
    assert rep.average == 0 and rep.limit == 0


def test_decompose_pure_torus_has_zero_remainder():
    f = [S.TrigPoly({(1,): 0.5, (-1,): 0.5}), S.TrigPoly({(2,): 0.7, (0,): 0.3}), S.TrigPoly({(-3,): 1.0})]
    d = decompose(indep, *f, IND_F, (0, 1 << 12))
    assert np.max(np.abs(d.a_er.values)) < 1e-12
    assert max(d.besicovitch.values) < 1e-10
    assert np.array_equal(d.a_st.values + d.a_er.values, d.a.values)


def test_decompose_product_matches_grid_oracle():
    q = 101
    rot = S.TorusSystem(1, {"T": "frac-sqrt(2)", "S": "frac-sqrt(3)"})
    cat = S.CatMapSystem(q, {"T": 1, "S": 2})
    P = S.ProductSystem((rot, cat))
    rng = np.random.default_rng(4)
    gs = [rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q)) for _ in range(3)]
    gs = [g - g.mean() for g in gs]
    ks = [-3, 1, 2]
    fs = [S.Tensor((S.TrigPoly({(k,): 1.0}), S.GridTable(g))) for k, g in zip(ks, gs)]
    F = kronecker_factor(P, "T", "S")
    n_max = 511
    d = decompose(P, *fs, F, (0, n_max + 1))
    # the grid means are zero only up to roundoff, so a_st is a product of three such means
    assert np.max(np.abs(d.a_st.values)) < 1e-30
    assert np.array_equal(d.a_st.values + d.a_er.values, d.a.values)
    # independent oracle: positions A^m x for m up to 2 n_max by direct stepping
    i, j = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    pos = [(i, j)]
    for _ in range(2 * n_max):
        x, y = pos[-1]
        pos.append(((2 * x + y) % q, (x + y) % q))
    a, b = float(rot.rotation("T")[0].exact), float(rot.rotation("S")[0].exact)
    for n in range(n_max + 1):
        c = np.mean(gs[0] * gs[1][pos[n]] * gs[2][pos[2 * n]])
        want = e(n * (ks[1] * a + ks[2] * b)) * c
        assert abs(d.a_er[n] - want) < 1e-10


def test_decompose_character_product_with_trivial_f0():
    P = S.ProductSystem((indep, S.CatMapSystem(65543, {"T": 1, "S": 2})))
    F = kronecker_factor(P, "T", "S")
    f1 = S.TrigPoly({(1, 0, 0): 1.0})
    f2 = S.TrigPoly({(1, 0, 0): 1.0})
    d = decompose(P, S.constant(P), f1, f2, F, (0, 1 << 14))
    assert np.all(d.a_st.values == 0)
    assert np.array_equal(d.a_er.values, d.a.values)
    assert d.verdict.verdict == "null-consistent"
