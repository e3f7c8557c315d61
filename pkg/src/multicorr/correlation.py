"""Multicorrelation sequences and the windowed-average machinery around them.

``multicorrelation`` evaluates ``int f0 * T1^n f1 * ... * Td^n fd dmu``.  The
engine is picked from the observables:

* characters (TrigPoly): only combinations of terms whose frequencies cancel
  survive the integral, so the value is a finite exponential sum evaluated
  with fixed-point phases;
* arc indicators on a torus: exact integer sweep over translated arcs;
* grid tables on a cat-map factor: exact permutation of the grid per step;
* tensors on a product system: the integral factorises over the factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import systems as S
from ._parallel import chunked_values
from .arcs import intersection_measures
from .numbers import ONE, fixed_dot, fixed_to_float, phase_exp

__all__ = [
    "CorrelationSeries",
    "AveragingWindow",
    "PolynomialMap",
    "multicorrelation",
    "multicorrelation_series",
    "poly_multicorrelation",
    "ergodic_average",
    "cesaro",
    "besicovitch_estimate",
    "BesicovitchReport",
    "null_verdict",
    "NullVerdict",
    "DEFAULT_LENGTHS",
]

MAX_COMBINATIONS = 4_000_000
DEFAULT_LENGTHS = tuple(2 ** k for k in range(10, 19))
DEFAULT_DECAY = 0.75
DEFAULT_FLOOR = 1e-4


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    """Values ``a(n)`` for ``n_min <= n <= n_max``."""

    n_min: int
    n_max: int
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if self.n_max < self.n_min:
            raise ValueError("n_max < n_min")
        if v.shape != (self.n_max - self.n_min + 1,):
            raise ValueError(f"expected {self.n_max - self.n_min + 1} values, got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, values, n_min: int = 0, provenance: str = "") -> "CorrelationSeries":
        values = np.asarray(values, dtype=np.complex128)
        return cls(n_min, n_min + len(values) - 1, values, provenance)

    @property
    def ns(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> complex:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(n)
        return complex(self.values[n - self.n_min])

    def window(self, window: "AveragingWindow") -> np.ndarray:
        if window.M < self.n_min or window.N - 1 > self.n_max:
            raise ValueError(f"window [{window.M}, {window.N}) escapes series range [{self.n_min}, {self.n_max}]")
        return self.values[window.M - self.n_min:window.N - self.n_min]

    def __sub__(self, other: "CorrelationSeries") -> "CorrelationSeries":
        self._same_range(other)
        return CorrelationSeries(self.n_min, self.n_max, self.values - other.values, self.provenance)

    def __add__(self, other: "CorrelationSeries") -> "CorrelationSeries":
        self._same_range(other)
        return CorrelationSeries(self.n_min, self.n_max, self.values + other.values, self.provenance)

    def _same_range(self, other):
        if (self.n_min, self.n_max) != (other.n_min, other.n_max):
            raise ValueError("series ranges differ")

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header or self.provenance}\n")
            fh.write("n,re,im\n")
            for n, v in zip(self.ns.tolist(), self.values.tolist()):
                fh.write(f"{n},{v.real!r},{v.imag!r}\n")


@dataclass(frozen=True)
class AveragingWindow:
    """The integer interval ``[M, N)``."""

    M: int
    N: int

    def __post_init__(self):
        if self.N - self.M < 1:
            raise ValueError("window needs N > M")

    @property
    def length(self) -> int:
        return self.N - self.M


@dataclass(frozen=True)
class PolynomialMap:
    """``n -> (p_1(n), ..., p_d(n))``; each coordinate lists its integer
    coefficients in ascending powers of n."""

    coeffs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cs = tuple(tuple(int(c) for c in row) or (0,) for row in self.coeffs)
        for row in cs:
            if len(row) - 1 > 8:
                raise ValueError("polynomial degree above 8")
        object.__setattr__(self, "coeffs", cs)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def __call__(self, n: int) -> tuple[int, ...]:
        out = []
        for row in self.coeffs:
            acc = 0
            for c in reversed(row):
                acc = acc * n + c
            out.append(acc)
        return tuple(out)

    def is_constant(self) -> bool:
        return all(all(c == 0 for c in row[1:]) for row in self.coeffs)

    def __sub__(self, other: "PolynomialMap") -> "PolynomialMap":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        rows = []
        for a, b in zip(self.coeffs, other.coeffs):
            w = max(len(a), len(b))
            a2, b2 = a + (0,) * (w - len(a)), b + (0,) * (w - len(b))
            rows.append(tuple(x - y for x, y in zip(a2, b2)))
        return PolynomialMap(tuple(rows))


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


def _spectral_values(system, pairs, ns: np.ndarray) -> np.ndarray:
    """Exact exponential-sum evaluation for TrigPoly observables.

    ``pairs`` is ``[(f0, None), (f1, label1), ...]`` with every f a joint
    TrigPoly on ``system``.
    """
    tc = S.torus_coords(system)
    blocks = S.cat_blocks(system)
    total = 1
    for p, _ in pairs:
        total *= len(p)
        if total > MAX_COMBINATIONS:
            raise ValueError(f"more than {MAX_COMBINATIONS} term combinations; reduce the observables")
    if total == 0:
        return np.zeros(len(ns), dtype=np.complex128)

    # enumerate term combinations, keeping those whose torus frequencies cancel
    idx = np.zeros((1, 0), dtype=np.int64)
    tsum = np.zeros((1, len(tc)), dtype=np.int64)
    for p, _ in pairs:
        K = len(p)
        prev = len(idx)
        idx = np.hstack([np.repeat(idx, K, axis=0), np.tile(np.arange(K, dtype=np.int64), prev)[:, None]])
        tsum = np.repeat(tsum, K, axis=0) + np.tile(p.freqs[:, tc], (prev, 1))
    idx = idx[~np.any(tsum, axis=1)]
    if len(idx) == 0:
        return np.zeros(len(ns), dtype=np.complex128)

    weights = np.ones(len(idx), dtype=np.complex128)
    for i, (p, _) in enumerate(pairs):
        weights = weights * p.coefs[idx[:, i]]

    thetas = [0] * len(idx)
    for i, (p, label) in enumerate(pairs):
        if label is None or not tc:
            continue
        fx = S.rotation_fixed(system, label)
        per_term = [fixed_dot(p.freqs[t, tc], fx) for t in range(len(p))]
        col = idx[:, i]
        thetas = [(a + per_term[c]) % ONE for a, c in zip(thetas, col)]

    if not blocks:
        grouped: dict[int, complex] = {}
        for th, w in zip(thetas, weights):
            grouped[th] = grouped.get(th, 0j) + complex(w)

        def run(chunk):
            out = np.zeros(len(chunk), dtype=np.complex128)
            for th in sorted(grouped):
                out += grouped[th] * (phase_exp(th, chunk) if th else 1.0)
            return out

        return run(ns)

    # cat-map blocks: the frequency condition depends on n
    static = np.zeros((len(idx), 2 * len(blocks)), dtype=np.int64)
    moving = []  # (column slice, frequency rows, step exponent, q)
    for b, (start, q, fac) in enumerate(blocks):
        sl = slice(2 * b, 2 * b + 2)
        for i, (p, label) in enumerate(pairs):
            rows = p.freqs[idx[:, i], start:start + 2] % q
            e = 0 if label is None else fac.exponent(label)
            if e == 0:
                static[:, sl] += rows
            else:
                moving.append((sl, rows, e, q))
    qs = np.repeat([q for _, q, _ in blocks], 2)

    out = np.zeros(len(ns), dtype=np.complex128)
    step_mats = [np.array(S.cat_power(e, q), dtype=np.int64) for _, _, e, q in moving]
    cur = None
    prev_n = None
    for j, n in enumerate(ns):
        n = int(n)
        if cur is None or n != prev_n + 1:
            cur = [np.array(S.cat_power(n * e, q), dtype=np.int64) for _, _, e, q in moving]
        else:
            cur = [(st @ c) % q for st, c, (_, _, _, q) in zip(step_mats, cur, moving)]
        prev_n = n
        acc = static.copy()
        for (sl, rows, _, q), M in zip(moving, cur):
            acc[:, sl] += rows @ M.T
        hit = np.flatnonzero(~np.any(acc % qs, axis=1))
        if len(hit) == 0:
            continue
        val = 0j
        for h in hit:
            th = thetas[h]
            ph = 1.0 if th == 0 else np.exp(2j * np.pi * fixed_to_float(n * th))
            val += weights[h] * ph
        out[j] = val
    return out


def _table_values(fac: S.CatMapSystem, pairs, ns: np.ndarray) -> np.ndarray:
    q = fac.q
    tabs = []
    for f, label in pairs:
        g = S.to_grid_table(fac, f) if isinstance(f, S.TrigPoly) else f
        tabs.append((g.values.reshape(-1), 0 if label is None else fac.exponent(label)))
    base = np.ones(q * q, dtype=np.complex128)
    moving = []
    for v, e in tabs:
        if e == 0:
            base = base * v
        else:
            moving.append((v, e, S._grid_index_map(S.cat_power(e, q), q)))
    out = np.zeros(len(ns), dtype=np.complex128)
    cur = None
    prev_n = None
    for j, n in enumerate(ns):
        n = int(n)
        if cur is None or n != prev_n + 1:
            cur = [S._grid_index_map(S.cat_power(n * e, q), q) for _, e, _ in moving]
        else:
            cur = [step[c] for (_, _, step), c in zip(moving, cur)]
        prev_n = n
        prod = base.copy()
        for (v, _, _), c in zip(moving, cur):
            prod *= v[c]
        out[j] = prod.mean()
    return out


def _arc_values(fac: S.TorusSystem, pairs, ns: np.ndarray) -> np.ndarray:
    out = np.ones(len(ns), dtype=np.float64)
    for j in range(fac.dim):
        sets = [f.arcs[j] for f, _ in pairs]
        rots = [Fraction(0) if lab is None else fac.rotation(lab)[j].exact for _, lab in pairs]
        nums, D = intersection_measures(sets, rots, ns)
        out *= np.array([float(Fraction(m, D)) for m in nums])
    return out.astype(np.complex128)


def _factor_values(fac, pairs, ns: np.ndarray) -> np.ndarray:
    scalar = 1 + 0j
    rest = []
    for f, label in pairs:
        S._check_compatible(fac, f)
        if isinstance(f, S.TrigPoly) and f.is_constant():
            scalar *= complex(f.coefs.sum())
        else:
            rest.append((f, label))
    if not rest:
        return np.full(len(ns), scalar, dtype=np.complex128)
    kinds = {type(f) for f, _ in rest}
    if kinds == {S.TrigPoly}:
        vals = _spectral_values(fac, rest, ns)
    elif kinds == {S.ArcIndicator}:
        vals = _arc_values(fac, rest, ns)
    elif isinstance(fac, S.CatMapSystem) and kinds <= {S.TrigPoly, S.GridTable}:
        vals = _table_values(fac, rest, ns)
    else:
        raise ValueError("incompatible observables on one factor: " + ", ".join(sorted(k.__name__ for k in kinds)))
    return vals * scalar if scalar != 1 else vals


def _values(system, observables, transforms, ns: np.ndarray) -> np.ndarray:
    labels = [None] + list(transforms)
    joint = isinstance(system, S.ProductSystem) and any(isinstance(f, S.TrigPoly) for f in observables)
    if joint:
        polys = [S.as_joint_trigpoly(system, f) for f in observables]
        return _spectral_values(system, list(zip(polys, labels)), ns)
    parts = [S._parts(system, f) for f in observables]
    out = np.ones(len(ns), dtype=np.complex128)
    for j, fac in enumerate(S.factors_of(system)):
        out = out * _factor_values(fac, [(p[j], lab) for p, lab in zip(parts, labels)], ns)
    return out


def _validate(system, observables, transforms):
    if len(observables) != len(transforms) + 1:
        raise ValueError(f"need d+1 observables for d transforms; got {len(observables)} and {len(transforms)}")
    for t in transforms:
        S._check_label(system, t)


def multicorrelation(system, observables: Sequence, transforms: Sequence[str], n: int) -> complex:
    """``int f0 * T1^n f1 * ... * Td^n fd dmu`` for ``observables = [f0, ..., fd]``."""
    _validate(system, observables, transforms)
    return complex(_values(system, observables, transforms, np.array([int(n)], dtype=np.int64))[0])


def multicorrelation_series(system, observables: Sequence, transforms: Sequence[str], n_min: int, n_max: int,
                            *, threads: int = 1, provenance: str = "") -> CorrelationSeries:
    """The multicorrelation sampled at every n in ``[n_min, n_max]``."""
    _validate(system, observables, transforms)
    if n_max < n_min:
        raise ValueError("n_max < n_min")
    ns = np.arange(n_min, n_max + 1, dtype=np.int64)
    vals = chunked_values(lambda c: _values(system, observables, transforms, c), ns, threads)
    return CorrelationSeries(n_min, n_max, vals, provenance or f"multicorrelation transforms={','.join(transforms)}")


def _compose_translate(system, f, transforms, exponents):
    for lab, e in zip(transforms, exponents):
        if e:
            f = S.translate(system, lab, e, f)
    return f


def poly_multicorrelation(system, observables: Sequence, transforms: Sequence[str],
                          polys: Sequence[PolynomialMap], n: int) -> complex:
    """``int f0 * prod_r (prod_i T_i^{p_{r,i}(n)}) f_r dmu``."""
    if len(observables) != len(polys) + 1:
        raise ValueError("need one polynomial map per observable after f0")
    for t in transforms:
        S._check_label(system, t)
    for j, p in enumerate(polys):
        if p.dim != len(transforms):
            raise ValueError(f"polynomial map {j} has dimension {p.dim}, expected {len(transforms)}")
        if p.is_constant():
            raise ValueError(f"polynomial map {j} is constant")
        for l in range(j):
            if (p - polys[l]).is_constant():
                raise ValueError(f"polynomial maps {l} and {j} differ by a constant")
    n = int(n)
    acc = observables[0]
    for f, p in zip(observables[1:], polys):
        acc = S.pointwise_product(acc, _compose_translate(system, f, transforms, p(n)))
    return S.integrate(system, acc)


# ---------------------------------------------------------------------------
# averages of functions
# ---------------------------------------------------------------------------


def ergodic_average(system, observables: Sequence, transforms: Sequence[str], ns, weights=None):
    """``(1/|ns|) sum_n w(n) prod_i T_i^n f_i`` as an observable.

    TrigPoly inputs (or tensors of them) give a TrigPoly in the joint
    coordinates; grid tables on a cat-map system give a GridTable.
    """
    if len(observables) != len(transforms):
        raise ValueError("one transform per observable")
    for t in transforms:
        S._check_label(system, t)
    ns = np.asarray(ns, dtype=np.int64)
    if len(ns) == 0:
        raise ValueError("empty averaging range")
    w = np.ones(len(ns)) if weights is None else np.asarray(weights, dtype=np.complex128)
    if w.shape != ns.shape:
        raise ValueError("weights must align with ns")
    if isinstance(system, S.CatMapSystem) and any(isinstance(f, S.GridTable) for f in observables):
        return _table_average(system, observables, transforms, ns, w)
    polys = [S.as_joint_trigpoly(system, f) for f in observables]
    return _spectral_average(system, polys, transforms, ns, w)


def _spectral_average(system, polys, transforms, ns, w):
    tc = S.torus_coords(system)
    blocks = S.cat_blocks(system)
    D = len(S.freq_moduli(system))
    idx = np.zeros((1, 0), dtype=np.int64)
    for p in polys:
        prev = len(idx)
        idx = np.hstack([np.repeat(idx, len(p), axis=0), np.tile(np.arange(len(p), dtype=np.int64), prev)[:, None]])
        if len(idx) > MAX_COMBINATIONS:
            raise ValueError("too many term combinations")
    bound = float(np.prod([p.bound for p in polys])) * float(np.abs(w).max())
    if any(len(p) == 0 for p in polys):
        return S.TrigPoly(dim=D)
    weights = np.ones(len(idx), dtype=np.complex128)
    freqs = np.zeros((len(idx), D), dtype=np.int64)
    thetas = [0] * len(idx)
    for i, (p, lab) in enumerate(zip(polys, transforms)):
        weights = weights * p.coefs[idx[:, i]]
        freqs[:, tc] += p.freqs[idx[:, i]][:, tc]
        if tc:
            fx = S.rotation_fixed(system, lab)
            per_term = [fixed_dot(p.freqs[t, tc], fx) for t in range(len(p))]
            thetas = [(a + per_term[c]) % ONE for a, c in zip(thetas, idx[:, i])]
    L = len(ns)
    phase_cache: dict[int, np.ndarray] = {}

    def phases(th):
        if th not in phase_cache:
            phase_cache[th] = (phase_exp(th, ns) if th else np.ones(L)) * w
        return phase_cache[th]

    if not blocks:
        coefs = np.array([wt * (phases(th).sum() / L) for wt, th in zip(weights, thetas)], dtype=np.complex128)
        return S.TrigPoly(freqs=freqs, coefs=coefs, bound=bound)

    rows_all, coefs_all = [], []
    cat_rows = []
    for start, q, fac in blocks:
        per_i = []
        for i, (p, lab) in enumerate(zip(polys, transforms)):
            per_i.append((p.freqs[idx[:, i], start:start + 2] % q, fac.exponent(lab)))
        cat_rows.append((start, q, per_i))
    phase_mat = np.stack([phases(th) for th in thetas], axis=0) / L  # (C, L)
    for j, n in enumerate(ns):
        fr = freqs.copy()
        for start, q, per_i in cat_rows:
            acc = np.zeros((len(idx), 2), dtype=np.int64)
            for rows, e in per_i:
                M = np.array(S.cat_power(int(n) * e, q), dtype=np.int64)
                acc += rows @ M.T
            fr[:, start:start + 2] = acc % q
        rows_all.append(fr)
        coefs_all.append(weights * phase_mat[:, j])
    return S.TrigPoly(freqs=np.vstack(rows_all), coefs=np.concatenate(coefs_all), bound=bound)


def _table_average(fac, observables, transforms, ns, w):
    q = fac.q
    tabs = [(S.to_grid_table(fac, f) if isinstance(f, S.TrigPoly) else f).values.reshape(-1) for f in observables]
    acc = np.zeros(q * q, dtype=np.complex128)
    for n, wn in zip(ns, w):
        prod = np.full(q * q, wn, dtype=np.complex128)
        for v, lab in zip(tabs, transforms):
            prod *= v[S._grid_index_map(S.cat_power(int(n) * fac.exponent(lab), q), q)]
        acc += prod
    return S.GridTable((acc / len(ns)).reshape(q, q))


# ---------------------------------------------------------------------------
# windowed averages and the Besicovitch proxy
# ---------------------------------------------------------------------------


def cesaro(series: CorrelationSeries, window: AveragingWindow) -> complex:
    """Arithmetic mean of the series over ``[M, N)``."""
    return complex(np.sum(series.window(window)) / window.length)


@dataclass(frozen=True)
class BesicovitchReport:
    lengths: tuple[int, ...]
    values: tuple[float, ...]
    ratios: tuple[float, ...]
    note: str = "finite proxy: sup over window placements of the mean of |a|^2 at each length"

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header}\n" if header else "# besicovitch\n")
            fh.write("length,sup_mean_sq\n")
            for L, v in zip(self.lengths, self.values):
                fh.write(f"{L},{float(v)!r}\n")


def besicovitch_estimate(series, window_lengths: Sequence[int] = DEFAULT_LENGTHS) -> BesicovitchReport:
    """For each length L, max over placements ``[M, M+L)`` of ``mean |a|^2``."""
    vals = series.values if isinstance(series, CorrelationSeries) else np.asarray(series)
    sq = np.abs(vals) ** 2
    cs = np.concatenate([[0.0], np.cumsum(sq)])
    lengths = tuple(int(L) for L in window_lengths)
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("window lengths must increase")
    out = []
    for L in lengths:
        if L < 1 or L > len(sq):
            raise ValueError(f"window length {L} exceeds series length {len(sq)}")
        sums = cs[L:] - cs[:-L]
        out.append(max(float(sums.max()) / L, 0.0))
    ratios = tuple(b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(out, out[1:]))
    return BesicovitchReport(lengths, tuple(out), ratios)


@dataclass(frozen=True)
class NullVerdict:
    verdict: str  # "null-consistent" | "not-null" | "inconclusive"
    decay_factor: float
    floor: float
    note: str = "heuristic finite-scale calibration (decay factor and floor are choices, not theorems)"


def null_verdict(report: BesicovitchReport, decay_factor: float = DEFAULT_DECAY,
                 floor: float = DEFAULT_FLOOR) -> NullVerdict:
    """Classify a Besicovitch report.

    null-consistent: every value is at most ``decay_factor`` times the
    previous one or below ``floor``.  not-null: the last three values sit
    above ``floor`` and within 10% of each other.
    """
    v = report.values
    if len(v) < 3:
        raise ValueError("need at least three window lengths")
    if all(b <= decay_factor * a or b <= floor for a, b in zip(v, v[1:])):
        return NullVerdict("null-consistent", decay_factor, floor)
    tail = v[-3:]
    if min(tail) > floor and max(tail) <= 1.1 * min(tail):
        return NullVerdict("not-null", decay_factor, floor)
    return NullVerdict("inconclusive", decay_factor, floor)
