"""Finite unions of half-open arcs on the circle R/Z, with exact endpoints."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ArcSet",
    "IntArcs",
    "intersect_int",
    "shift_int",
    "measure_int",
    "common_scale",
    "locate",
    "intersection_measures",
]

Number = Fraction | int | float | str


def _frac(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class ArcSet:
    """Sorted, disjoint half-open arcs ``[a, b)`` with ``0 <= a < b <= 1``.

    An input arc with ``a > b`` wraps through 0.  Endpoints are Fractions, so
    measures and intersections are exact.
    """

    arcs: tuple[tuple[Fraction, Fraction], ...]

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[Number]]) -> "ArcSet":
        pieces: list[tuple[Fraction, Fraction]] = []
        for a, b in intervals:
            a, b = _frac(a), _frac(b)
            if b - a >= 1:
                pieces.append((Fraction(0), Fraction(1)))
                continue
            a0 = a - math.floor(a)
            b0 = a0 + ((b - a) % 1 if b != a else 0)
            if b0 == a0:
                continue
            if b0 <= 1:
                pieces.append((a0, b0))
            else:
                pieces.append((a0, Fraction(1)))
                pieces.append((Fraction(0), b0 - 1))
        return cls(_normalise(pieces))

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((Fraction(0), Fraction(1)),))

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls(())

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.arcs), Fraction(0))

    def shift(self, t: Number) -> "ArcSet":
        """The translate ``self + t`` (mod 1)."""
        t = _frac(t)
        return ArcSet.from_intervals((a + t, b + t) for a, b in self.arcs)

    def intersect(self, other: "ArcSet") -> "ArcSet":
        out = []
        i = j = 0
        A, B = self.arcs, other.arcs
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo < hi:
                out.append((lo, hi))
            if A[i][1] <= B[j][1]:
                i += 1
            else:
                j += 1
        return ArcSet(tuple(out))

    def union(self, other: "ArcSet") -> "ArcSet":
        return ArcSet(_normalise(list(self.arcs) + list(other.arcs)))

    def contains(self, x) -> np.ndarray:
        """Vectorised membership test for float points (reduced mod 1)."""
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.arcs:
            out |= (x >= float(a)) & (x < float(b))
        return out

    def denominators(self) -> list[int]:
        return [e.denominator for arc in self.arcs for e in arc]

    def to_int(self, scale: int) -> "IntArcs":
        """Endpoints times ``scale``; ``scale`` must clear every denominator."""
        out = []
        for a, b in self.arcs:
            sa, sb = a * scale, b * scale
            if sa.denominator != 1 or sb.denominator != 1:
                raise ValueError("scale does not clear the arc denominators")
            out.append((int(sa), int(sb)))
        return out

    def __repr__(self) -> str:
        body = ", ".join(f"[{a}, {b})" for a, b in self.arcs)
        return f"ArcSet({body})"


def _normalise(pieces: list[tuple[Fraction, Fraction]]) -> tuple[tuple[Fraction, Fraction], ...]:
    pieces = sorted(p for p in pieces if p[0] < p[1])
    merged: list[tuple[Fraction, Fraction]] = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return tuple(merged)


# Integer arcs: endpoints scaled to a common denominator D, so that every
# shift by a multiple of a (truncated) rotation is exact integer arithmetic.
IntArcs = list[tuple[int, int]]


def shift_int(arcs: IntArcs, s: int, D: int) -> IntArcs:
    """Translate sorted integer arcs by -s (mod D), keeping them sorted."""
    s %= D
    if s == 0:
        return arcs
    moved: IntArcs = []
    head: IntArcs = []
    for a, b in arcs:
        a2, b2 = a - s, b - s
        if b2 <= 0:
            moved.append((a2 + D, b2 + D))
        elif a2 < 0:
            head.append((0, b2))
            moved.append((a2 + D, D))
        else:
            head.append((a2, b2))
    # arcs that were shifted below zero come after the ones that stayed
    return head + moved


def intersect_int(A: IntArcs, B: IntArcs) -> IntArcs:
    out: IntArcs = []
    i = j = 0
    while i < len(A) and j < len(B):
        lo = A[i][0] if A[i][0] > B[j][0] else B[j][0]
        hi = A[i][1] if A[i][1] < B[j][1] else B[j][1]
        if lo < hi:
            out.append((lo, hi))
        if A[i][1] <= B[j][1]:
            i += 1
        else:
            j += 1
    return out


def measure_int(arcs: IntArcs) -> int:
    return sum(b - a for a, b in arcs)


def common_scale(*denominators: int) -> int:
    out = 1
    for d in denominators:
        out = out * d // math.gcd(out, d)
    return out


def locate(arcs: IntArcs, x: int) -> bool:
    """Membership of an integer point in sorted integer arcs."""
    k = bisect.bisect_right([a for a, _ in arcs], x) - 1
    return k >= 0 and x < arcs[k][1]


def intersection_measures(arcsets: Sequence[ArcSet], rotations: Sequence[Fraction], ns) -> tuple[list[int], int]:
    """Exact ``mu(A_0 - n r_0 ∩ A_1 - n r_1 ∩ ...)`` for each n, as integers over D.

    Returns ``(numerators, D)`` where D clears every arc endpoint and every
    rotation, so each translate is an exact integer shift.
    """
    dens = [d for A in arcsets for d in A.denominators()] + [Fraction(r).denominator for r in rotations]
    D = common_scale(*dens) if dens else 1
    base = [A.to_int(D) for A in arcsets]
    steps = [int(Fraction(r) * D) % D for r in rotations]
    out: list[int] = []
    for n in ns:
        n = int(n)
        cur = shift_int(base[0], n * steps[0], D)
        for A, s in zip(base[1:], steps[1:]):
            if not cur:
                break
            cur = intersect_int(cur, shift_int(A, n * s, D))
        out.append(measure_int(cur))
    return out, D
