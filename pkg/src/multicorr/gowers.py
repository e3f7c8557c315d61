"""Gowers uniformity norms on Z/NZ.

Two independent routes:

* ``gowers_recursive`` follows ``G_1(f) = |E f|^2`` and
  ``G_{d+1}(f) = E_h G_d(f_h * conj(f))`` with ``||f||_{U_d} = G_d(f)^(1/2^d)``;
* ``gowers_parallelepiped`` sums the ``2^d``-fold product over all cubes
  ``(n + eps . h)`` directly.

All means are taken over a canonically sorted copy with compensated summation
so reordering the inputs (for instance translating f) never changes a bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CyclicFunction",
    "gowers_recursive",
    "gowers_parallelepiped",
    "gowers_inner",
    "gowers_report",
    "GowersMismatch",
]

PARALLELEPIPED_BUDGET = 1 << 24
RECURSIVE_BUDGET = 1 << 24
FFT_CHECK_LIMIT = 4096
_BATCH = 1 << 20


class GowersMismatch(RuntimeError):
    """The FFT fast path disagreed with the direct recursion."""


@dataclass(frozen=True, eq=False)
class CyclicFunction:
    """A function on Z/NZ given by its N values."""

    values: np.ndarray
    bound: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128).reshape(-1)
        if v.size == 0:
            raise ValueError("N must be at least 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.bound is None:
            object.__setattr__(self, "bound", float(np.abs(v).max()))

    @property
    def N(self) -> int:
        return self.values.size

    def shift(self, h: int) -> "CyclicFunction":
        """``f_h(n) = f(n + h)``."""
        return CyclicFunction(np.roll(self.values, -h), self.bound)

    @classmethod
    def from_csv(cls, path) -> "CyclicFunction":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("n,"):
                    continue
                n, re_, im = line.split(",")[:3]
                rows.append((int(n), float(re_), float(im)))
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError("CSV must list n = 0..N-1 exactly once")
        return cls(np.array([complex(r[1], r[2]) for r in rows]))


def _as_values(f) -> np.ndarray:
    return f.values if isinstance(f, CyclicFunction) else np.asarray(f, dtype=np.complex128)


def _neumaier_rows(x: np.ndarray) -> np.ndarray:
    """Compensated sum along the last axis, columns visited left to right."""
    s = np.zeros(x.shape[:-1])
    c = np.zeros(x.shape[:-1])
    for j in range(x.shape[-1]):
        v = x[..., j]
        t = s + v
        big = np.abs(s) >= np.abs(v)
        c += np.where(big, (s - t) + v, (v - t) + s)
        s = t
    return s + c


def _mean_real(x: np.ndarray) -> np.ndarray:
    x = np.sort(x, axis=-1)
    rows = x.size // max(x.shape[-1], 1)
    if rows < x.shape[-1]:
        flat = x.reshape(-1, x.shape[-1])
        sums = np.array([math.fsum(r) for r in flat]).reshape(x.shape[:-1])
        return sums / x.shape[-1]
    return _neumaier_rows(x) / x.shape[-1]


def _mean(x: np.ndarray) -> np.ndarray:
    return _mean_real(x.real) + 1j * _mean_real(x.imag)


def _G(F: np.ndarray, d: int) -> np.ndarray:
    """G_d for each row of F (shape (B, N))."""
    if d == 1:
        return np.abs(_mean(F)) ** 2
    B, N = F.shape
    conjF = np.conj(F)
    if B * N * N <= _BATCH:
        idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N  # [h, n] -> n + h
        stacked = F[:, idx] * conjF[:, None, :]
        inner = _G(stacked.reshape(B * N, N), d - 1).reshape(B, N)
    else:
        inner = np.empty((B, N))
        step = max(1, _BATCH // (B * N))
        for lo in range(0, N, step):
            hs = np.arange(lo, min(N, lo + step))
            idx = (hs[:, None] + np.arange(N)[None, :]) % N
            stacked = F[:, idx] * conjF[:, None, :]
            inner[:, lo:lo + len(hs)] = _G(stacked.reshape(B * len(hs), N), d - 1).reshape(B, len(hs))
    return _mean_real(inner)


def _u2_fft(v: np.ndarray) -> float:
    fhat = np.fft.fft(v) / v.size
    return float(np.sum(np.abs(fhat) ** 4))


def gowers_recursive(f, d: int, method: str = "auto") -> float:
    """``||f||_{U_d(Z/NZ)}`` by the difference recursion.

    ``method``: ``"naive"`` runs the recursion directly; ``"fft"`` (d = 2
    only) uses ``sum |f^(xi)|^4``; ``"auto"`` picks fft at d = 2 and checks it
    against the naive value to 1e-12 whenever N <= 4096.
    """
    v = _as_values(f)
    N = v.size
    if d < 1:
        raise ValueError("degree d must be at least 1")
    if method not in ("auto", "naive", "fft"):
        raise ValueError(f"unknown method {method!r}")
    if method == "fft" or (method == "auto" and d == 2):
        if d != 2:
            raise ValueError("the fft path exists only for d = 2")
        g = _u2_fft(v)
        if method == "auto" and N <= FFT_CHECK_LIMIT:
            naive = float(_G(v[None, :], 2)[0])
            if abs(max(g, 0.0) ** 0.25 - max(naive, 0.0) ** 0.25) > 1e-12:
                raise GowersMismatch(f"U2 fast path {g!r} vs naive {naive!r}")
        return max(g, 0.0) ** 0.25
    if d > 6 or N > 64 and d > 2:
        raise ValueError("recursive route is capped at d <= 6 and N <= 64 (d >= 3)")
    if N ** d > RECURSIVE_BUDGET:
        raise ValueError(f"N^d = {N ** d} exceeds the recursive budget {RECURSIVE_BUDGET}")
    g = float(_G(v[None, :], d)[0])
    return max(g, 0.0) ** (1.0 / 2 ** d)


def _cube_sum(vals: list[np.ndarray], d: int) -> complex:
    """E_{n,h} prod_eps C^{|eps|} vals[eps](n + eps.h), eps by binary expansion."""
    N = vals[0].size
    if N ** (d + 1) > PARALLELEPIPED_BUDGET:
        raise ValueError(f"N^(d+1) = {N ** (d + 1)} exceeds the parallelepiped budget")
    hs = np.array(list(itertools.product(range(N), repeat=d)), dtype=np.int64).reshape(-1, d)
    n = np.arange(N, dtype=np.int64)
    parts = []
    step = max(1, _BATCH // N)
    for lo in range(0, len(hs), step):
        H = hs[lo:lo + step]
        prod = np.ones((len(H), N), dtype=np.complex128)
        for i in range(2 ** d):
            eps = np.array([(i >> j) & 1 for j in range(d)], dtype=np.int64)
            pos = (n[None, :] + (H @ eps)[:, None]) % N
            term = vals[i][pos]
            prod *= np.conj(term) if bin(i).count("1") % 2 else term
        parts.append(prod.reshape(-1))
    return complex(_mean(np.concatenate(parts)[None, :])[0])


def gowers_parallelepiped(f, d: int) -> float:
    """``(E_{n,h} prod_eps C^{|eps|} f(n + eps.h))^(1/2^d)`` by direct summation."""
    if d < 1:
        raise ValueError("degree d must be at least 1")
    if d > 4:
        raise ValueError("parallelepiped route is capped at d <= 4")
    v = _as_values(f)
    s = _cube_sum([v] * 2 ** d, d)
    return max(s.real, 0.0) ** (1.0 / 2 ** d)


def gowers_inner(fs, d: int) -> complex:
    """Gowers inner product of ``2^d`` functions indexed by eps in binary order."""
    vals = [_as_values(f) for f in fs]
    if len(vals) != 2 ** d:
        raise ValueError(f"need 2^d = {2 ** d} functions")
    if len({v.size for v in vals}) != 1:
        raise ValueError("all functions must share the same modulus N")
    if d > 4:
        raise ValueError("capped at d <= 4")
    return _cube_sum(vals, d)


def gowers_report(f, d: int, method: str = "auto") -> str:
    """One-line summary: N, d, norm, method."""
    v = _as_values(f)
    if method == "parallelepiped":
        norm = gowers_parallelepiped(v, d)
    else:
        norm = gowers_recursive(v, d, method)
    return f"N={v.size} d={d} norm={float(norm)!r} method={method}"
