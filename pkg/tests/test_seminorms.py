from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicorr import systems as S
from multicorr.seminorms import (WindowSchedule, average_bound_check, box_seminorm, ergodic_collapse_check,
                                 permutation_check)

golden = S.TorusSystem(1, {"T": "golden"})
pair = S.TorusSystem(1, {"T": "frac-sqrt(2)", "S": "frac-sqrt(3)"})
chi = S.TrigPoly({(1,): 1.0})


@pytest.mark.parametrize("d", [1, 2])
def test_constant_one(d):
    est = box_seminorm(golden, S.constant(golden), ["T"] * d, (64,) * d)
    assert est.value == pytest.approx(1.0, abs=1e-14)


def test_character_degree_two():
    est = box_seminorm(golden, chi, ["T", "T"], (1024, 1024))
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_degree_two_closed_form_for_trigpoly():
    # ergodic rotation: |||f|||_{T,T}^4 = sum_k |f^(k)|^4
    f = S.TrigPoly({(1,): 0.5, (2,): 0.3, (-1,): 0.2})
    closed = (0.5 ** 4 + 0.3 ** 4 + 0.2 ** 4) ** 0.25
    est = box_seminorm(golden, f, ["T", "T"], (512, 512))
    assert est.value == pytest.approx(closed, abs=5e-3)
    assert abs(est.doubled_value - closed) <= abs(est.value - closed) + 1e-4


def test_cat_degree_one_matches_orbit_oracle():
    q = 31
    cat = S.CatMapSystem(q)
    rng = np.random.default_rng(8)
    vals = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
    h = S.GridTable(vals)
    N = 64
    acc = 0.0
    for n in range(N):
        s = 0j
        for i in range(q):
            for j in range(q):
                s += np.conj(vals[i, j]) * vals[S.apply(cat, "T", n, (i, j))]
        acc += (s / q ** 2).real
    est = box_seminorm(cat, h, ["T"], (N,))
    assert est.value == pytest.approx(max(acc / N, 0.0) ** 0.5, rel=1e-12)


def test_cat_mean_zero_coboundary_is_small():
    # h = g o T - g: the ergodic averages of h telescope to (T^N g - g) / N
    q = 101
    cat = S.CatMapSystem(q)
    g = S.GridTable(np.random.default_rng(1).random((q, q)))
    h = S.GridTable(S.translate(cat, "T", 1, g).values - g.values)
    assert abs(S.integrate(cat, h)) < 1e-14
    est = box_seminorm(cat, h, ["T"], (1024,))
    assert est.value < 0.02
    assert est.doubled_value <= est.value


def test_permutation_and_collapse_for_characters():
    rep = permutation_check(pair, chi, ["T", "S"], (1024, 1024))
    assert rep.max_relative_difference <= 0.05
    col = ergodic_collapse_check(pair, chi, ["T", "S"], (1024, 1024))
    assert not col.refused and col.max_relative_difference <= 0.05


def test_permutation_trivial_cases():
    one = permutation_check(pair, S.constant(pair), ["T", "S"], (64, 64))
    assert all(e.value == pytest.approx(1.0, abs=1e-14) for e in one.estimates.values())
    zero = permutation_check(pair, S.TrigPoly({(1,): 0}), ["T", "S"], (64, 64))
    assert all(e.value == 0 for e in zero.estimates.values())


def test_collapse_refused_for_rational_rotation():
    rat = S.TorusSystem(1, {"T": "1/2", "S": "sqrt2"})
    rep = ergodic_collapse_check(rat, chi, ["T", "S"], (64, 64))
    assert rep.refused and "T" in rep.reason


def test_collapse_exact_for_constant():
    rep = ergodic_collapse_check(pair, S.constant(pair), ["T", "S"], (64, 64))
    assert rep.max_relative_difference == pytest.approx(0.0, abs=1e-14)


def test_average_bound_examples():
    one = S.constant(pair)
    rep = average_bound_check(pair, [one, one], ["T", "S"], (64, 64), (0, 256))
    assert rep.average_norm == pytest.approx(1.0, abs=1e-14)
    assert rep.seminorm.value == pytest.approx(1.0, abs=1e-14)
    assert rep.slack == pytest.approx(0.0, abs=1e-13)
    rep = average_bound_check(pair, [chi, one], ["T", "S"], (1024, 1024), (0, 1 << 14))
    assert rep.average_norm < 1e-3 and rep.holds
    assert rep.derived_transforms == ("T", "T*S^-1")
    zero = S.TrigPoly({(1,): 0})
    rep = average_bound_check(pair, [zero, chi], ["T", "S"], (64, 64), (0, 256))
    assert rep.average_norm == 0 and rep.seminorm.value == 0


def test_average_bound_rejects_large_later_observables():
    with pytest.raises(ValueError):
        average_bound_check(pair, [chi, S.TrigPoly({(1,): 2.0})], ["T", "S"], (64, 64), (0, 64))


def test_schedule_validation():
    with pytest.raises(ValueError):
        WindowSchedule((32,))
    with pytest.raises(ValueError):
        WindowSchedule((64, 64, 64, 64))
    assert WindowSchedule((64, 128)).doubled().lengths == (128, 256)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_bounds_and_homogeneity(seed):
    rng = np.random.default_rng(seed)
    terms = {(int(k),): complex(*rng.normal(size=2)) for k in rng.integers(-4, 5, size=3)}
    f = S.TrigPoly(terms)
    c = complex(*rng.normal(size=2))
    a = box_seminorm(pair, f, ["T", "S"], (64, 64))
    b = box_seminorm(pair, f.scaled(c), ["T", "S"], (64, 64))
    assert 0 <= a.value <= f.bound * (1 + 1e-12)
    assert b.value == pytest.approx(abs(c) * a.value, rel=1e-10, abs=1e-14)


def test_tensor_inequality():
    X = S.TorusSystem(1, {"T": "golden", "S": "sqrt2"})
    XX = S.ProductSystem((X, X))
    rng = np.random.default_rng(11)
    for _ in range(10):
        ks = rng.choice(np.arange(-4, 5), size=3, replace=False)
        w = rng.dirichlet(np.ones(3)) * np.exp(2j * np.pi * rng.random(3))
        f = S.TrigPoly({(int(k),): complex(c) for k, c in zip(ks, w)})
        lhs = box_seminorm(XX, S.Tensor((f, S.conjugate(f))), ["T"], (256,))
        rhs = box_seminorm(X, f, ["T", "T"], (256, 256))
        slack = abs(lhs.value - lhs.doubled_value) + abs(rhs.value ** 2 - rhs.doubled_value ** 2)
        assert lhs.value <= rhs.value ** 2 + slack + 1e-12


def test_diagnostic_shrinks_under_doubling_for_characters():
    f = S.TrigPoly({(1,): 0.6, (3,): 0.4})
    a = box_seminorm(pair, f, ["T", "S"], (128, 128))
    b = box_seminorm(pair, f, ["T", "S"], (256, 256))
    assert b.diagnostic <= a.diagnostic or b.diagnostic < 0.05


def test_threads_do_not_change_estimate():
    f = S.TrigPoly({(1,): 0.6, (3,): 0.4})
    a = box_seminorm(pair, f, ["T", "S"], (64, 64), threads=1)
    b = box_seminorm(pair, f, ["T", "S"], (64, 64), threads=4)
    assert a.csv_row() == b.csv_row()
