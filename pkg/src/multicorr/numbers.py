"""Rotation numbers with exact symbolic form and fixed-point phase arithmetic.

A rotation number is kept as ``rational + sum(c_r * sqrt(r))`` with squarefree
radicands, so rational independence can be decided exactly.  Numerically it is
carried as a 128-bit fixed-point fraction; multiples ``n * alpha mod 1`` are
formed in integer arithmetic and rounded to float only once.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

FIXED_BITS = 128
ONE = 1 << FIXED_BITS
_MASK64 = (1 << 64) - 1
_GUARD = 1 << 64

__all__ = [
    "IrrationalSpec",
    "FIXED_BITS",
    "ONE",
    "frac_multiple",
    "phase_exp",
    "fixed_to_float",
    "fixed_dot",
    "dist_to_int",
]


def _squarefree_split(m: int) -> tuple[int, int]:
    """Return (s, r) with m = s*s*r and r squarefree."""
    s, r = 1, 1
    p = 2
    rest = m
    while p * p <= rest:
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        s *= p ** (e // 2)
        r *= p ** (e % 2)
        p += 1
    return s, r * rest


_SQRT_RE = re.compile(r"^(?:frac-)?sqrt\(?\s*(\d+)\s*\)?$")
_RAT_RE = re.compile(r"^[+-]?\d+\s*/\s*\d+$")


@dataclass(frozen=True)
class IrrationalSpec:
    """A rotation number ``frac(rational + sum c_r sqrt(r))``.

    Build one with :meth:`parse` from a token (``golden``, ``sqrt2``,
    ``frac-sqrt(3)``, ``p/q`` or a decimal literal) or combine existing ones
    with ``+``, ``-`` and integer ``*``.
    """

    token: str
    rational: Fraction
    radicals: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def parse(cls, token: str | int | Fraction | "IrrationalSpec") -> "IrrationalSpec":
        if isinstance(token, IrrationalSpec):
            return token
        if isinstance(token, (int, Fraction)):
            return cls(str(token), Fraction(token))
        text = str(token).strip().lower()
        if text == "golden":
            return cls("golden", Fraction(-1, 2), ((5, Fraction(1, 2)),))
        m = _SQRT_RE.match(text)
        if m:
            n = int(m.group(1))
            root = math.isqrt(n)
            if root * root == n:
                raise ValueError(f"frac-sqrt({n}): {n} is a perfect square")
            s, r = _squarefree_split(n)
            return cls(f"sqrt{n}", Fraction(-root), ((r, Fraction(s)),))
        if _RAT_RE.match(text):
            p, q = text.split("/")
            if int(q) == 0:
                raise ValueError(f"zero denominator in {token!r}")
            return cls(text.replace(" ", ""), Fraction(int(p), int(q)))
        try:
            return cls(text, Fraction(text))
        except ValueError:
            raise ValueError(f"unrecognised rotation token {token!r}") from None

    # -- arithmetic on the symbolic form ---------------------------------
    def _combine(self, other: "IrrationalSpec", sign: int, token: str) -> "IrrationalSpec":
        rad: dict[int, Fraction] = dict(self.radicals)
        for r, c in other.radicals:
            rad[r] = rad.get(r, Fraction(0)) + sign * c
        radicals = tuple(sorted((r, c) for r, c in rad.items() if c != 0))
        return IrrationalSpec(token, self.rational + sign * other.rational, radicals)

    def __add__(self, other: "IrrationalSpec") -> "IrrationalSpec":
        return self._combine(other, 1, f"({self.token})+({other.token})")

    def __sub__(self, other: "IrrationalSpec") -> "IrrationalSpec":
        return self._combine(other, -1, f"({self.token})-({other.token})")

    def __neg__(self) -> "IrrationalSpec":
        return self.scaled(-1)

    def scaled(self, k: int) -> "IrrationalSpec":
        return IrrationalSpec(
            f"{k}*({self.token})",
            k * self.rational,
            tuple((r, k * c) for r, c in self.radicals if k * c != 0),
        )

    __rmul__ = scaled

    def __mul__(self, k: int) -> "IrrationalSpec":
        return self.scaled(k)

    # -- numeric views ----------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return not self.radicals

    def floor_times(self, scale: int) -> int:
        """floor(x * scale) for the unreduced number x (scale a positive integer).

        Irrational parts are evaluated with 64 guard bits, so the result can
        only be off when x*scale lies within ~2^-60 of an integer.
        """
        num = self.rational * scale * _GUARD
        total = num.numerator // num.denominator
        for r, c in self.radicals:
            a, b = abs(c.numerator), c.denominator
            mag = math.isqrt(a * a * r * scale * scale * _GUARD * _GUARD) // b
            total += mag if c > 0 else -mag - 1
        return total // _GUARD

    @cached_property
    def fixed(self) -> int:
        """frac(x) as a 128-bit fixed-point integer in [0, 2**128)."""
        return self.floor_times(ONE) % ONE

    @cached_property
    def exact(self) -> Fraction:
        """Exact value for rationals; the 128-bit dyadic truncation otherwise."""
        if self.is_rational:
            return self.rational - math.floor(self.rational)
        return Fraction(self.fixed, ONE)

    @cached_property
    def value(self) -> float:
        return float(self.exact) % 1.0

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"IrrationalSpec({self.token!r}, value={self.value!r})"


def fixed_to_float(fixed: int) -> float:
    """Correctly rounded float of a 128-bit fixed-point fraction, folded into [0, 1)."""
    x = float(Fraction(fixed % ONE, ONE))
    return 0.0 if x >= 1.0 else x


def fixed_dot(ks, fixeds) -> int:
    """sum(k_j * F_j) mod 2**128 for integer frequencies and fixed-point rotations."""
    total = 0
    for k, f in zip(ks, fixeds):
        total += int(k) * f
    return total % ONE


def frac_multiple(fixed: int, n) -> np.ndarray:
    """frac(n * theta) for theta = fixed / 2**128 and an integer array n.

    The high 64 bits are multiplied in wrapping uint64 arithmetic (exact mod 1);
    the low bits contribute a tiny float correction.  Absolute error is a few
    units of 2**-53 for |n| < 2**40.
    """
    n = np.asarray(n, dtype=np.int64)
    hi = np.uint64((fixed % ONE) >> 64)
    lo = float(Fraction(fixed & _MASK64, ONE))
    wrapped = n.view(np.uint64) * hi
    frac = wrapped.astype(np.float64) * 2.0**-64 + n.astype(np.float64) * lo
    return np.mod(frac, 1.0)


def phase_exp(fixed: int, n) -> np.ndarray:
    """e(n * theta) = exp(2 pi i n theta) evaluated through :func:`frac_multiple`."""
    return np.exp(2j * np.pi * frac_multiple(fixed, n))


def dist_to_int(fixed: int) -> float:
    """Distance from fixed / 2**128 to the nearest integer."""
    f = fixed % ONE
    return fixed_to_float(min(f, ONE - f))
