from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multicorr import systems as S


def test_apply_examples():
    golden = S.TorusSystem(1, {"T": "golden"})
    assert S.apply(golden, "T", 0, 0.25) == 0.25
    quarter = S.TorusSystem(1, {"T": "1/4"})
    assert S.apply(quarter, "T", 3, Fraction(0)) == Fraction(3, 4)
    assert S.apply(quarter, "T", 3, 0.0) == 0.75
    cat = S.CatMapSystem(5)
    # (2*1 + 1*2, 1*1 + 1*2) = (4, 3) mod 5
    assert S.apply(cat, "T", 1, (1, 2)) == (4, 3)


def test_integrate_examples():
    t = S.TorusSystem(1, {"T": "golden"})
    assert S.integrate(t, S.TrigPoly({(0,): 2.5})) == 2.5
    assert S.integrate(t, S.TrigPoly({(3,): 1})) == 0
    assert S.integrate(t, S.ArcIndicator.interval(0, "3/10")) == pytest.approx(0.3, abs=0)


def test_pointwise_product_examples():
    p = S.pointwise_product(S.TrigPoly({(1,): 1}), S.TrigPoly({(-1,): 1}))
    assert p.terms() == {(0,): 1}
    a = S.pointwise_product(S.ArcIndicator.interval(0, "1/2"), S.ArcIndicator.interval("1/4", "3/4"))
    assert a.arcs[0].measure == Fraction(1, 4)
    assert a.arcs[0].contains(Fraction(1, 4)) and not a.arcs[0].contains(Fraction(1, 2))
    t = S.GridTable(np.arange(25.0).reshape(5, 5))
    assert np.array_equal(S.pointwise_product(S.GridTable(np.ones((5, 5))), t).values, t.values)


def test_ergodicity_audit_examples():
    [e] = S.ergodicity_audit(S.TorusSystem(1, {"T": "golden"}), [("T", "ergodic")])
    assert e.passed
    [e] = S.ergodicity_audit(S.TorusSystem(1, {"T": "1/2"}), [("T", "ergodic")])
    assert not e.passed
    [e] = S.ergodicity_audit(S.TorusSystem(1, {"T": "frac-sqrt(2)", "S": "frac-sqrt(3)"}), [("T*S^-1", "ergodic")])
    assert e.passed and e.numeric_min_distance > 1e-6


def test_audit_detects_rational_relation_in_two_dimensions():
    sysm = S.TorusSystem(2, {"T": ["sqrt2", "sqrt2"]})
    [e] = S.ergodicity_audit(sysm, [("T", "ergodic")])
    assert not e.passed
    [e] = S.ergodicity_audit(sysm, [("T", "non-ergodic")])
    assert e.passed


def test_numeric_audit_mode_flags_heuristic():
    sysm = S.TorusSystem(1, {"T": "sqrt2"})
    [e] = S.ergodicity_audit(sysm, [("T", "ergodic")], mode="numeric")
    assert e.passed and e.heuristic


def test_cat_power_matches_iteration():
    q = 37
    M = ((1, 0), (0, 1))
    for n in range(1, 60):
        M = tuple(tuple(sum(S.CAT[i][k] * M[k][j] for k in range(2)) % q for j in range(2)) for i in range(2))
        assert S.cat_power(n, q) == M
    I = S.cat_power(7, q)
    J = S.cat_power(-7, q)
    prod = [[sum(I[i][k] * J[k][j] for k in range(2)) % q for j in range(2)] for i in range(2)]
    assert prod == [[1, 0], [0, 1]]


small = st.integers(-1000, 1000)


@given(small, small, st.fractions(0, 1, max_denominator=1000).filter(lambda x: x < 1))
def test_rotation_group_law_exact(m, n, x):
    t = S.TorusSystem(1, {"T": "sqrt2"})
    assert S.apply(t, "T", m + n, x) == S.apply(t, "T", m, S.apply(t, "T", n, x))
    assert S.apply(t, "T", -n, S.apply(t, "T", n, x)) == x


@given(small, small, st.integers(0, 100), st.integers(0, 100))
def test_cat_group_law_exact(m, n, i, j):
    c = S.CatMapSystem(101, {"T": 1, "S": 2})
    assert S.apply(c, "T", m + n, (i, j)) == S.apply(c, "T", m, S.apply(c, "T", n, (i, j)))
    assert S.apply(c, "S", -n, S.apply(c, "S", n, (i, j))) == (i, j)
    # commuting pair
    assert S.apply(c, "T", 1, S.apply(c, "S", 1, (i, j))) == S.apply(c, "S", 1, S.apply(c, "T", 1, (i, j)))


@given(st.dictionaries(st.tuples(st.integers(-3, 3)), st.complex_numbers(max_magnitude=2), min_size=1, max_size=5),
       small)
def test_translation_preserves_integral(terms, n):
    t = S.TorusSystem(1, {"T": "golden"})
    f = S.TrigPoly(terms)
    assert S.integrate(t, S.translate(t, "T", n, f)) == S.integrate(t, f)


@given(st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50), small)
def test_arc_translation_preserves_measure(a, b, n):
    t = S.TorusSystem(1, {"T": "3/7"})
    f = S.ArcIndicator.interval(a, b)
    assert S.integrate(t, S.translate(t, "T", n, f)) == S.integrate(t, f)


def test_translate_agrees_with_evaluate(rng):
    t = S.TorusSystem(2, {"T": ["sqrt2", "sqrt3"]})
    f = S.TrigPoly({(1, 0): 0.5, (2, -1): 0.3j, (0, 0): 0.2})
    pts = rng.random((50, 2))
    moved = np.array([S.apply(t, "T", 7, tuple(p)) for p in pts])
    assert np.allclose(S.evaluate(t, S.translate(t, "T", 7, f), pts), S.evaluate(t, f, moved), atol=1e-12)


def test_grid_translate_is_composition():
    c = S.CatMapSystem(11)
    vals = np.arange(121.0).reshape(11, 11)
    g = S.GridTable(vals)
    moved = S.translate(c, "T", 3, g)
    for i in range(11):
        for j in range(11):
            a, b = S.apply(c, "T", 3, (i, j))
            assert moved.values[i, j] == vals[a, b]


def test_l2_norm_of_trigpoly_is_parseval():
    t = S.TorusSystem(1, {"T": "golden"})
    assert S.l2_norm(t, S.TrigPoly({(1,): 3, (2,): 4j})) == pytest.approx(5.0, abs=1e-15)


def test_with_transform_combines_rotations():
    t = S.TorusSystem(1, {"T": "sqrt2", "S": "sqrt3"})
    t2 = S.with_transform(t, "T*S^-1", {"T": 1, "S": -1})
    assert abs(t2.rotation("T*S^-1")[0].value - ((2 ** 0.5 - 3 ** 0.5) % 1)) < 1e-15
    c = S.with_transform(S.CatMapSystem(7, {"T": 1, "S": 2}), "U", {"T": 1, "S": -1})
    assert c.exponent("U") == -1


def test_unknown_label_rejected():
    with pytest.raises(ValueError):
        S.apply(S.TorusSystem(1, {"T": "sqrt2"}), "X", 1, 0.5)


def test_product_system_apply():
    p = S.ProductSystem((S.TorusSystem(1, {"T": "1/3"}), S.CatMapSystem(5)))
    assert p.labels == ("T",)
    assert S.apply(p, "T", 1, (Fraction(0), (1, 2))) == (Fraction(1, 3), (4, 3))
