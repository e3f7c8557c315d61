"""Heisenberg nilmanifold G/Gamma with G the upper unipotent 3x3 matrices.

Coordinates (x, y, z) with ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y')``
and Gamma the integer triples.  Orbits are computed exactly: coordinates
are scaled to integers over a common denominator D (z over D^2), so
``a^n x0`` and its reduction to ``[0,1)^3`` involve no rounding until the
final conversion to float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .numbers import IrrationalSpec
from .systems import TrigPoly

__all__ = [
    "HeisenbergElement",
    "nil_mul",
    "nil_inv",
    "nil_pow",
    "commutator",
    "reduce",
    "NilObservable",
    "nilsequence",
    "orbit",
    "equidistribution_report",
    "EquidistributionReport",
]


@dataclass(frozen=True)
class HeisenbergElement:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))


IDENTITY = HeisenbergElement(0.0, 0.0, 0.0)


def _el(g) -> HeisenbergElement:
    return g if isinstance(g, HeisenbergElement) else HeisenbergElement(*g)


def nil_mul(g, h) -> HeisenbergElement:
    g, h = _el(g), _el(h)
    return HeisenbergElement(g.x + h.x, g.y + h.y, g.z + h.z + g.x * h.y)


def nil_inv(g) -> HeisenbergElement:
    g = _el(g)
    return HeisenbergElement(-g.x, -g.y, -g.z + g.x * g.y)


def nil_pow(g, n: int) -> HeisenbergElement:
    """``g^n = (n x, n y, n z + C(n,2) x y)`` for any integer n."""
    g = _el(g)
    n = int(n)
    return HeisenbergElement(n * g.x, n * g.y, n * g.z + (n * (n - 1) // 2) * g.x * g.y)


def commutator(g, h) -> HeisenbergElement:
    """``g h g^-1 h^-1``."""
    return nil_mul(nil_mul(g, h), nil_mul(nil_inv(g), nil_inv(h)))


def reduce(g) -> tuple[HeisenbergElement, tuple[int, int, int]]:
    """Representative of ``g Gamma`` in ``[0,1)^3`` and the gamma used."""
    g = _el(g)
    b = -math.floor(g.y)
    a = -math.floor(g.x)
    c = -math.floor(g.z + g.x * b)
    rep = HeisenbergElement(g.x + a, g.y + b, g.z + c + g.x * b)
    # guard against float round-up landing exactly on 1
    rep = HeisenbergElement(*(0.0 if v >= 1.0 else v for v in rep))
    return rep, (a, b, c)


# ---------------------------------------------------------------------------
# exact orbits
# ---------------------------------------------------------------------------


def _frac(v) -> Fraction:
    if isinstance(v, IrrationalSpec):
        return v.exact
    if isinstance(v, str):
        return IrrationalSpec.parse(v).exact
    return Fraction(v)


def _scaled(a, x0):
    fa = [_frac(v) for v in a]
    fx = [_frac(v) for v in x0]
    D = 1
    for v in fa + fx:
        D = D * v.denominator // math.gcd(D, v.denominator)
    # z coordinates live over D^2 so that products x*y' stay integral
    A = (int(fa[0] * D), int(fa[1] * D), int(fa[2] * D * D))
    X = (int(fx[0] * D), int(fx[1] * D), int(fx[2] * D * D))
    return A, X, D


def _reduce_int(X: int, Y: int, Z: int, D: int):
    D2 = D * D
    b = -(Y // D)
    a = -(X // D)
    c = -((Z + X * b * D) // D2)
    return X + a * D, Y + b * D, Z + c * D2 + X * b * D


def orbit(a, x0, ns: Iterable[int]) -> np.ndarray:
    """Reduced coordinates of ``a^n x0`` for each n, shape (len(ns), 3).

    Coordinates may be floats (taken at their exact binary value),
    Fractions, IrrationalSpec or rotation tokens.
    """
    (ax, ay, az), (x, y, z), D = _scaled(a, x0)
    D2 = D * D
    out = []
    for n in ns:
        n = int(n)
        px, py = n * ax, n * ay
        pz = n * az + (n * (n - 1) // 2) * ax * ay
        # (a^n) * x0
        gx, gy, gz = px + x, py + y, pz + z + px * y
        rx, ry, rz = _reduce_int(gx, gy, gz, D)
        out.append((Fraction(rx, D), Fraction(ry, D), Fraction(rz, D2)))
    arr = np.array([[float(v) for v in row] for row in out], dtype=float).reshape(-1, 3)
    arr[arr >= 1.0] = 0.0
    return arr


@dataclass(frozen=True, eq=False)
class NilObservable:
    """A function on G/Gamma.

    ``kind`` is ``"trigpoly"`` (a TrigPoly in (x, y), Gamma-invariant and
    continuous), ``"table"`` (values on a uniform G^3 grid of reduced
    coordinates, nearest cell; may jump across the fundamental-domain
    boundary) or ``"coordinate"`` (one reduced coordinate; discontinuous).
    """

    kind: str
    poly: TrigPoly | None = None
    table: np.ndarray | None = None
    axis: int | None = None

    @classmethod
    def trigpoly(cls, poly: TrigPoly) -> "NilObservable":
        if poly.dim != 2:
            raise ValueError("nil TrigPoly observables live on the (x, y) torus")
        return cls("trigpoly", poly=poly)

    @classmethod
    def grid(cls, table) -> "NilObservable":
        t = np.asarray(table, dtype=np.complex128)
        if t.ndim != 3 or len(set(t.shape)) != 1:
            raise ValueError("table must be G x G x G")
        return cls("table", table=t)

    @classmethod
    def coordinate(cls, axis: int) -> "NilObservable":
        if axis not in (0, 1, 2):
            raise ValueError("axis must be 0, 1 or 2")
        return cls("coordinate", axis=axis)

    @property
    def continuous(self) -> bool:
        return self.kind == "trigpoly"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.kind == "trigpoly":
            ph = np.mod(pts[:, :2] @ self.poly.freqs.T.astype(float), 1.0)
            return np.exp(2j * np.pi * ph) @ self.poly.coefs
        if self.kind == "coordinate":
            return pts[:, self.axis].astype(np.complex128)
        G = self.table.shape[0]
        idx = np.minimum((pts * G).astype(np.int64), G - 1)
        return self.table[idx[:, 0], idx[:, 1], idx[:, 2]]


def nilsequence(f: NilObservable, a, x0, n) -> complex | np.ndarray:
    """``f(reduce(a^n x0))`` for an integer n or an array of them."""
    scalar = np.ndim(n) == 0
    ns = np.atleast_1d(np.asarray(n, dtype=np.int64))
    vals = f(orbit(a, x0, ns))
    return complex(vals[0]) if scalar else vals


@dataclass
class EquidistributionReport:
    N: int
    weyl: dict[tuple[int, int], complex]
    chi_square: float
    dof: int
    bins: int

    @property
    def max_weyl(self) -> float:
        return max((abs(v) for v in self.weyl.values()), default=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("j,k,weyl_re,weyl_im\n")
            for (j, k), v in self.weyl.items():
                fh.write(f"{j},{k},{float(v.real)!r},{float(v.imag)!r}\n")


def equidistribution_report(a, x0, N: int, frequencies: Sequence[tuple[int, int]] | None = None,
                            bins: int = 16) -> EquidistributionReport:
    """Weyl sums on the (x, y) torus plus a chi-square test on a bins^3 histogram."""
    if frequencies is None:
        frequencies = [(j, k) for j in range(-4, 5) for k in range(-4, 5) if (j, k) != (0, 0)]
    pts = orbit(a, x0, range(N))
    weyl = {}
    for j, k in frequencies:
        if (j, k) == (0, 0):
            raise ValueError("test frequencies must be nonzero")
        ph = np.mod(j * pts[:, 0] + k * pts[:, 1], 1.0)
        weyl[(int(j), int(k))] = complex(np.mean(np.exp(2j * np.pi * ph)))
    idx = np.minimum((pts * bins).astype(np.int64), bins - 1)
    flat = (idx[:, 0] * bins + idx[:, 1]) * bins + idx[:, 2]
    counts = np.bincount(flat, minlength=bins ** 3)
    expected = N / bins ** 3
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return EquidistributionReport(N, weyl, chi2, bins ** 3 - 1, bins)
