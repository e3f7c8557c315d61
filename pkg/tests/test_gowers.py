from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multicorr.gowers import (CyclicFunction, GowersMismatch, gowers_inner, gowers_parallelepiped, gowers_recursive,
                              gowers_report)


def brute(f, d):
    """Average over (x, h_1..h_d) of the conjugated cube product, straight from the definition."""
    f = np.asarray(f, dtype=complex)
    N = len(f)
    total = 0j
    for x, *h in itertools.product(range(N), repeat=d + 1):
        p = 1 + 0j
        for eps in itertools.product((0, 1), repeat=d):
            v = f[(x + sum(e * hh for e, hh in zip(eps, h))) % N]
            p *= np.conj(v) if sum(eps) % 2 else v
        total += p
    return abs(total / N ** (d + 1)) ** (1 / 2 ** d)


def rand_f(rng, N):
    return rng.normal(size=N) + 1j * rng.normal(size=N)


def test_delta_zero_on_z4():
    f = [1, 0, 0, 0]
    assert abs(gowers_recursive(f, 2) - 4 ** (-3 / 4)) < 1e-12
    assert abs(gowers_parallelepiped(f, 2) - 4 ** (-3 / 4)) < 1e-12
    assert abs(brute(f, 2) - 4 ** (-3 / 4)) < 1e-12


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_constant(d):
    f = np.full(6, 0.3 - 0.4j)
    assert gowers_recursive(f, d) == pytest.approx(0.5, abs=1e-14)
    if d <= 4:
        assert gowers_parallelepiped(f, d) == pytest.approx(0.5, abs=1e-14)


def test_character_has_u2_norm_one():
    f = np.exp(2j * np.pi * np.arange(8) / 8)
    assert gowers_recursive(f, 2) == pytest.approx(1.0, abs=1e-14)
    assert brute(f, 2) == pytest.approx(1.0, abs=1e-12)


def test_agrees_with_definition(rng):
    for N, d in [(5, 1), (6, 2), (4, 3), (7, 2)]:
        f = rand_f(rng, N)
        ref = brute(f, d)
        assert abs(gowers_recursive(f, d, "naive") - ref) < 1e-12
        assert abs(gowers_parallelepiped(f, d) - ref) < 1e-12


def test_fft_path_matches_naive(rng):
    f = rand_f(rng, 64)
    assert abs(gowers_recursive(f, 2, "fft") - gowers_recursive(f, 2, "naive")) < 1e-12


def test_inner_product_collapses_and_vanishes(rng):
    f = rand_f(rng, 6)
    assert abs(gowers_inner([f] * 4, 2) - gowers_parallelepiped(f, 2) ** 4) < 1e-10
    fs = [rand_f(rng, 6) for _ in range(4)]
    fs[2] = np.zeros(6)
    assert gowers_inner(fs, 2) == 0


def test_gowers_cauchy_schwarz(rng):
    for _ in range(100):
        fs = [rand_f(rng, 8) for _ in range(4)]
        bound = np.prod([gowers_parallelepiped(f, 2) for f in fs])
        assert abs(gowers_inner(fs, 2)) <= bound * (1 + 1e-10)


def test_caps():
    with pytest.raises(ValueError):
        gowers_parallelepiped(np.ones(4), 5)
    with pytest.raises(ValueError):
        gowers_recursive(np.ones(128), 3)
    with pytest.raises(ValueError):
        gowers_recursive(np.ones(8), 7)


def test_report_and_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# delta\nn,re,im\n0,1.0,0.0\n1,0.0,0.0\n2,0.0,0.0\n3,0.0,0.0\n")
    f = CyclicFunction.from_csv(p)
    assert f.N == 4
    assert gowers_report(f, 2).startswith("N=4 d=2 norm=0.35355339059327")


seeds = st.integers(0, 2 ** 31)


@given(seeds, st.integers(2, 12))
def test_monotone_in_d(seed, N):
    f = rand_f(np.random.default_rng(seed), N)
    vals = [gowers_recursive(f, d) for d in (1, 2, 3, 4)]
    assert all(a <= b + 1e-10 for a, b in zip(vals, vals[1:]))


@given(seeds, st.integers(2, 16), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_homogeneity(seed, N, c):
    f = rand_f(np.random.default_rng(seed), N)
    assert gowers_recursive(c * f, 2) == pytest.approx(abs(c) * gowers_recursive(f, 2), rel=1e-12, abs=1e-14)


@given(seeds, st.integers(2, 16), st.integers(2, 3))
def test_triangle(seed, N, d):
    rng = np.random.default_rng(seed)
    f, g = rand_f(rng, N), rand_f(rng, N)
    assert gowers_recursive(f + g, d) <= gowers_recursive(f, d) + gowers_recursive(g, d) + 1e-12


@given(seeds, st.integers(2, 16), st.integers(0, 15))
def test_modulation_invariance(seed, N, k):
    f = rand_f(np.random.default_rng(seed), N)
    chi = np.exp(2j * np.pi * k * np.arange(N) / N)
    for d in (2, 3):
        assert abs(gowers_recursive(chi * f, d) - gowers_recursive(f, d)) < 1e-10


@given(seeds, st.integers(2, 16), st.integers(-20, 20))
def test_translation_invariance_exact(seed, N, h):
    f = CyclicFunction(rand_f(np.random.default_rng(seed), N))
    # the naive route sums in sorted order with compensation, so shifts are exact
    for d in (1, 2, 3):
        assert gowers_recursive(f.shift(h), d, "naive") == gowers_recursive(f, d, "naive")
