from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicorr import systems as S
from multicorr.nil import (HeisenbergElement, NilObservable, commutator, equidistribution_report, nil_inv, nil_mul,
                           nil_pow, nilsequence, orbit, reduce)

reals = st.floats(-50, 50, allow_nan=False)
elements = st.tuples(reals, reals, reals)


def close(g, h, tol):
    return all(abs(a - b) <= tol for a, b in zip(g, h))


def test_identity_and_noncommutativity():
    g = HeisenbergElement(0.3, -1.2, 2.5)
    assert nil_mul((0, 0, 0), g) == g
    assert tuple(nil_mul((1, 0, 0), (0, 1, 0))) == (1, 1, 1)
    assert tuple(nil_mul((0, 1, 0), (1, 0, 0))) == (1, 1, 0)


@given(elements)
def test_inverse(g):
    assert close(nil_mul(g, nil_inv(g)), (0, 0, 0), 1e-9)
    assert close(nil_mul(nil_inv(g), g), (0, 0, 0), 1e-9)


def test_pow_examples():
    g = HeisenbergElement(0.3, 0.7, 0.1)
    assert tuple(nil_pow(g, 0)) == (0, 0, 0)
    assert close(nil_pow(g, 2), (0.6, 1.4, 0.2 + 0.21), 1e-15)
    assert close(nil_pow(g, 2), nil_mul(g, g), 1e-15)


def test_pow_against_repeated_multiplication():
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = HeisenbergElement(*rng.uniform(-1, 1, 3))
        gi = nil_inv(g)
        acc_p, acc_m = HeisenbergElement(0, 0, 0), HeisenbergElement(0, 0, 0)
        for n in range(1, 1001):
            acc_p = nil_mul(acc_p, g)
            acc_m = nil_mul(acc_m, gi)
            if n % 97 == 0 or n == 1000:
                assert close(nil_pow(g, n), acc_p, 1e-9 * max(1, n))
                assert close(nil_pow(g, -n), acc_m, 1e-9 * max(1, n))


@settings(max_examples=100)
@given(elements, elements, elements)
def test_associativity(g, h, k):
    lhs = nil_mul(nil_mul(g, h), k)
    rhs = nil_mul(g, nil_mul(h, k))
    scale = 1 + max(abs(v) for v in (*g, *h, *k)) ** 2
    assert close(lhs, rhs, 1e-12 * scale)


@settings(max_examples=100)
@given(st.tuples(*[st.floats(-1, 1)] * 3), st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_pow_additive(g, m, n):
    assert close(nil_pow(g, m + n), nil_mul(nil_pow(g, m), nil_pow(g, n)), 1e-9 * (1 + (abs(m) + abs(n)) ** 2))


@settings(max_examples=100)
@given(elements, elements, elements)
def test_commutators_are_central(g, h, k):
    c = commutator(g, h)
    assert abs(c.x) < 1e-12 and abs(c.y) < 1e-12
    scale = 1 + max(abs(v) for v in (*g, *h, *k)) ** 2
    assert close(nil_mul(c, k), nil_mul(k, c), 1e-12 * scale)


def test_reduce_examples():
    rep, gamma = reduce((0.25, 0.5, 0.75))
    assert tuple(rep) == (0.25, 0.5, 0.75) and gamma == (0, 0, 0)
    rep, gamma = reduce((1.5, 2.25, 0.0))
    assert tuple(rep) == (0.5, 0.25, 0.0) and gamma == (-1, -2, 3)


def test_reduce_is_right_gamma_invariant():
    rng = np.random.default_rng(3)
    for _ in range(100):
        g = HeisenbergElement(*rng.uniform(-5, 5, 3))
        gamma = tuple(int(v) for v in rng.integers(-20, 21, 3))
        a, _ = reduce(g)
        b, _ = reduce(nil_mul(g, gamma))
        # representatives agree on the circle: 0.999999... and 0.0 are the same point
        for u, v in zip(a, b):
            d = abs(u - v)
            assert min(d, 1 - d) <= 1e-9
        assert all(0 <= v < 1 for v in b)


def test_reduce_representative_in_unit_cube():
    rng = np.random.default_rng(4)
    for _ in range(200):
        rep, gamma = reduce(rng.uniform(-100, 100, 3))
        assert all(0 <= v < 1 for v in rep)


def oracle_orbit(a, x0, n):
    """Repeated multiplication in exact rationals, then reduction."""
    a = tuple(Fraction(v) for v in a)
    g = tuple(Fraction(v) for v in x0)
    for _ in range(n):
        g = (a[0] + g[0], a[1] + g[1], a[2] + g[2] + a[0] * g[1])
    x, y, z = g
    b = -math.floor(y)
    aa = -math.floor(x)
    c = -math.floor(z + x * b)
    return float(x + aa), float(y + b), float(z + c + x * b)


def test_quadratic_nilsequence_against_oracle():
    alpha, beta = math.sqrt(2) - 1, math.sqrt(3) - 1
    a = (alpha, beta, 0.0)
    f = NilObservable.coordinate(2)
    vals = nilsequence(f, a, (0, 0, 0), np.arange(0, 1001, 50))
    for n, v in zip(range(0, 1001, 50), vals):
        assert abs(v - oracle_orbit(a, (0, 0, 0), n)[2]) <= 1e-9


def test_x_only_observable_is_a_rotation_sequence():
    alpha = math.sqrt(2) - 1
    f = NilObservable.trigpoly(S.TrigPoly({(1, 0): 1.0}))
    ns = np.arange(500)
    vals = nilsequence(f, (alpha, 0.3, 0.1), (0.2, 0.0, 0.0), ns)
    want = np.exp(2j * np.pi * np.mod(ns * Fraction(alpha) + Fraction(0.2), 1).astype(float))
    assert np.max(np.abs(vals - want)) < 1e-12


def test_n_zero_is_reduced_start():
    f = NilObservable.coordinate(1)
    assert nilsequence(f, (0.3, 0.4, 0.5), (0.1, 2.7, 0.2), 0) == pytest.approx(0.7)


def test_orbit_accepts_rotation_tokens():
    pts = orbit(("frac-sqrt(2)", "frac-sqrt(3)", 0), (0, 0, 0), range(10))
    assert pts.shape == (10, 3) and np.all((pts >= 0) & (pts < 1))


def test_grid_observable_lookup():
    t = np.zeros((4, 4, 4))
    t[1, 2, 3] = 5
    f = NilObservable.grid(t)
    assert f(np.array([[0.3, 0.6, 0.8]]))[0] == 5
    assert not f.continuous and NilObservable.trigpoly(S.TrigPoly({(1, 1): 1.0})).continuous
    with pytest.raises(ValueError):
        NilObservable.grid(np.zeros((4, 4, 3)))


def test_weyl_sums_independent():
    rep = equidistribution_report(("frac-sqrt(2)", "frac-sqrt(3)", 0), (0, 0, 0), 100_000)
    assert len(rep.weyl) == 80
    assert rep.max_weyl <= 0.02
    assert rep.dof == 16 ** 3 - 1


def test_weyl_rational_resonance():
    rep = equidistribution_report((Fraction(1, 2), 0, 0), (0, 0, 0), 1000, [(2, 0), (1, 0)])
    assert abs(rep.weyl[(2, 0)]) == pytest.approx(1.0, abs=1e-12)
    assert abs(rep.weyl[(1, 0)]) < 1e-12


def test_weyl_single_point():
    rep = equidistribution_report((0.3, 0.4, 0.5), (0.1, 0.2, 0.3), 1)
    assert all(abs(abs(v) - 1) < 1e-12 for v in rep.weyl.values())


def test_weyl_zero_frequency_rejected(tmp_path):
    with pytest.raises(ValueError):
        equidistribution_report((0.3, 0.4, 0.5), (0, 0, 0), 10, [(0, 0)])
    rep = equidistribution_report((0.3, 0.4, 0.5), (0, 0, 0), 10, [(1, 2)])
    rep.to_csv(tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().startswith("j,k,weyl_re,weyl_im\n1,2,")
