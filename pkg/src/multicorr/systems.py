"""Explicit measure-preserving systems and the observables living on them.

Three families are supported: translations of a torus ``T^m``, the cat map
``((2,1),(1,1))`` restricted to the invariant grid ``(Z/q)^2``, and
coordinatewise products of these.  Transformations are named by labels; a
factor that does not declare a label is acted on by the identity, so all
labels commute.

Observables are one of

* :class:`TrigPoly` -- finitely many characters.  On a cat-map grid the
  frequencies are read mod ``q``; on a product system a TrigPoly uses the
  concatenated coordinates of all factors.
* :class:`ArcIndicator` -- indicator of a product of arc unions (torus only).
* :class:`GridTable` -- a ``q x q`` table of values on a cat-map grid.
* :class:`Tensor` -- a pure tensor with one part per factor of a product.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .arcs import ArcSet
from .numbers import ONE, IrrationalSpec, dist_to_int, fixed_dot, fixed_to_float, frac_multiple

__all__ = [
    "TorusSystem",
    "CatMapSystem",
    "ProductSystem",
    "TrigPoly",
    "ArcIndicator",
    "GridTable",
    "Tensor",
    "apply",
    "integrate",
    "pointwise_product",
    "translate",
    "conjugate",
    "l2_norm",
    "evaluate",
    "constant",
    "with_transform",
    "ergodicity_audit",
    "AuditEntry",
    "parse_combination",
    "cat_power",
    "CAT",
]

CAT = ((2, 1), (1, 1))
CAT_INV = ((1, -1), (-1, 2))
ZERO = IrrationalSpec("0", Fraction(0))


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TorusSystem:
    """Commuting translations of ``T^dim`` by rotation vectors."""

    dim: int
    transforms: Mapping[str, tuple[IrrationalSpec, ...]]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("torus dimension must be positive")
        clean = {}
        for label, vec in self.transforms.items():
            if isinstance(vec, (str, int, Fraction, IrrationalSpec)):
                vec = [vec]
            vec = tuple(IrrationalSpec.parse(t) for t in vec)
            if len(vec) != self.dim:
                raise ValueError(f"transform {label!r}: expected {self.dim} components, got {len(vec)}")
            clean[label] = vec
        object.__setattr__(self, "transforms", clean)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.transforms)

    def rotation(self, label: str) -> tuple[IrrationalSpec, ...]:
        return self.transforms.get(label, (ZERO,) * self.dim)


@dataclass(frozen=True, eq=False)
class CatMapSystem:
    """Powers of the cat map on the grid ``{(i/q, j/q)}``.

    ``transforms`` maps a label to the exponent of the cat map it applies.
    """

    q: int
    transforms: Mapping[str, int] = field(default_factory=lambda: {"T": 1})

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("grid order q must be positive")
        object.__setattr__(self, "transforms", {k: int(v) for k, v in self.transforms.items()})

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.transforms)

    def exponent(self, label: str) -> int:
        return self.transforms.get(label, 0)


Factor = Union[TorusSystem, CatMapSystem]


@dataclass(frozen=True, eq=False)
class ProductSystem:
    """Coordinatewise product; label L acts on each factor by that factor's L."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("product of zero factors")
        for f in self.factors:
            if not isinstance(f, (TorusSystem, CatMapSystem)):
                raise TypeError("product factors must be torus or cat-map systems")

    @property
    def labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for f in self.factors:
            for lab in f.labels:
                seen.setdefault(lab)
        return tuple(seen)


System = Union[TorusSystem, CatMapSystem, ProductSystem]


def factors_of(system: System) -> tuple[Factor, ...]:
    return system.factors if isinstance(system, ProductSystem) else (system,)


def _check_label(system: System, label: str) -> None:
    if label not in system.labels:
        raise ValueError(f"unknown transform {label!r}; declared: {', '.join(system.labels)}")


def freq_moduli(system: System) -> tuple[int, ...]:
    """Per-coordinate modulus of the frequency lattice (0 means Z)."""
    out: list[int] = []
    for f in factors_of(system):
        out.extend([0] * f.dim if isinstance(f, TorusSystem) else [f.q, f.q])
    return tuple(out)


def torus_coords(system: System) -> list[int]:
    return [i for i, m in enumerate(freq_moduli(system)) if m == 0]


def cat_blocks(system: System) -> list[tuple[int, int, CatMapSystem]]:
    """(first coordinate, q, factor) for each cat-map factor."""
    out, pos = [], 0
    for f in factors_of(system):
        if isinstance(f, TorusSystem):
            pos += f.dim
        else:
            out.append((pos, f.q, f))
            pos += 2
    return out


def rotation_vector(system: System, label: str) -> list[IrrationalSpec]:
    """Rotation components of ``label`` on all torus coordinates, in order."""
    out: list[IrrationalSpec] = []
    for f in factors_of(system):
        if isinstance(f, TorusSystem):
            out.extend(f.rotation(label))
    return out


def rotation_fixed(system: System, label: str) -> list[int]:
    return [a.fixed for a in rotation_vector(system, label)]


def with_transform(system: System, name: str, combo: Mapping[str, int]) -> System:
    """Add transform ``name`` acting as the product of ``T_label ** power``."""
    for lab in combo:
        _check_label(system, lab)

    def extend(f: Factor) -> Factor:
        if isinstance(f, TorusSystem):
            vec = []
            for j in range(f.dim):
                acc = ZERO
                for lab, c in combo.items():
                    acc = acc + f.rotation(lab)[j].scaled(c)
                vec.append(IrrationalSpec(_combo_name(combo), acc.rational, acc.radicals))
            return TorusSystem(f.dim, {**f.transforms, name: tuple(vec)})
        exp = sum(c * f.exponent(lab) for lab, c in combo.items())
        return CatMapSystem(f.q, {**f.transforms, name: exp})

    if isinstance(system, ProductSystem):
        return ProductSystem(tuple(extend(f) for f in system.factors))
    return extend(system)


def _combo_name(combo: Mapping[str, int]) -> str:
    parts = []
    for lab, c in combo.items():
        parts.append(lab if c == 1 else f"{lab}^{c}")
    return "*".join(parts)


_COMBO_TERM = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*(?:\^\s*\(?\s*([+-]?\d+)\s*\)?)?\s*$")


def parse_combination(text: str | Mapping[str, int]) -> dict[str, int]:
    """Parse ``"T*S^-1"`` into ``{"T": 1, "S": -1}``."""
    if isinstance(text, Mapping):
        return {k: int(v) for k, v in text.items()}
    out: dict[str, int] = {}
    for term in text.split("*"):
        m = _COMBO_TERM.match(term)
        if not m:
            raise ValueError(f"bad transform combination {text!r}")
        lab, exp = m.group(1), int(m.group(2) or 1)
        out[lab] = out.get(lab, 0) + exp
    return out


# ---------------------------------------------------------------------------
# cat-map arithmetic
# ---------------------------------------------------------------------------


def _matmul(a, b, q):
    return (
        ((a[0][0] * b[0][0] + a[0][1] * b[1][0]) % q, (a[0][0] * b[0][1] + a[0][1] * b[1][1]) % q),
        ((a[1][0] * b[0][0] + a[1][1] * b[1][0]) % q, (a[1][0] * b[0][1] + a[1][1] * b[1][1]) % q),
    )


def cat_power(m: int, q: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """The cat map raised to the integer power m, entries reduced mod q."""
    base = CAT if m >= 0 else CAT_INV
    m = abs(m)
    result = ((1 % q, 0), (0, 1 % q))
    base = tuple(tuple(x % q for x in row) for row in base)
    while m:
        if m & 1:
            result = _matmul(result, base, q)
        base = _matmul(base, base, q)
        m >>= 1
    return result


def _grid_index_map(M, q: int) -> np.ndarray:
    """Flat index of M @ (i, j) for every flat grid index i*q + j."""
    i, j = np.divmod(np.arange(q * q, dtype=np.int64), q)
    return ((M[0][0] * i + M[0][1] * j) % q) * q + (M[1][0] * i + M[1][1] * j) % q


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


class TrigPoly:
    """A trigonometric polynomial ``sum c_k e(k . x)``.

    ``terms`` maps integer frequency vectors (plain ints in dimension 1) to
    complex coefficients.  Duplicates are merged and exact zeros dropped, with
    frequencies kept in lexicographic order.
    """

    __slots__ = ("freqs", "coefs", "bound")

    def __init__(self, terms: Mapping | None = None, *, dim: int | None = None, bound: float | None = None,
                 freqs: np.ndarray | None = None, coefs: np.ndarray | None = None):
        if freqs is None:
            items = list((terms or {}).items())
            if items:
                keys = [(k,) if isinstance(k, (int, np.integer)) else tuple(k) for k, _ in items]
                width = len(keys[0])
                if any(len(k) != width for k in keys):
                    raise ValueError("frequency vectors of mixed length")
                if dim is not None and dim != width:
                    raise ValueError(f"frequency length {width} does not match dim {dim}")
                freqs = np.array(keys, dtype=np.int64).reshape(len(keys), width)
                coefs = np.array([complex(c) for _, c in items], dtype=np.complex128)
            else:
                if dim is None:
                    raise ValueError("empty TrigPoly needs an explicit dim")
                freqs = np.zeros((0, dim), dtype=np.int64)
                coefs = np.zeros(0, dtype=np.complex128)
        freqs, coefs = _merge(np.asarray(freqs, dtype=np.int64), np.asarray(coefs, dtype=np.complex128))
        freqs.flags.writeable = False
        coefs.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "bound", float(np.abs(coefs).sum()) if bound is None else float(bound))

    def __setattr__(self, name, value):
        raise AttributeError("TrigPoly is immutable")

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    def __len__(self) -> int:
        return len(self.coefs)

    def terms(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(x) for x in k): complex(c) for k, c in zip(self.freqs, self.coefs)}

    def coefficient(self, k) -> complex:
        k = (k,) if isinstance(k, (int, np.integer)) else tuple(k)
        hit = np.all(self.freqs == np.asarray(k, dtype=np.int64), axis=1)
        return complex(self.coefs[hit].sum()) if hit.any() else 0j

    def is_constant(self) -> bool:
        return not np.any(self.freqs)

    def scaled(self, c: complex) -> "TrigPoly":
        return TrigPoly(freqs=self.freqs, coefs=self.coefs * c, bound=self.bound * abs(c))

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return TrigPoly(freqs=np.vstack([self.freqs, other.freqs]),
                        coefs=np.concatenate([self.coefs, other.coefs]), bound=self.bound + other.bound)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + other.scaled(-1)

    def __repr__(self) -> str:
        body = ", ".join(f"{k if len(k) > 1 else k[0]}: {c:.6g}" for k, c in self.terms().items())
        return f"TrigPoly({{{body}}})"


def _merge(freqs: np.ndarray, coefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(coefs) == 0:
        return freqs.reshape(0, freqs.shape[1] if freqs.ndim == 2 else 0), coefs
    uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    re_ = np.bincount(inv, weights=coefs.real, minlength=len(uniq))
    im_ = np.bincount(inv, weights=coefs.imag, minlength=len(uniq))
    out = re_ + 1j * im_
    keep = out != 0
    return uniq[keep], out[keep]


def _reduce(poly: TrigPoly, moduli: Sequence[int]) -> TrigPoly:
    if not any(moduli):
        return poly
    f = poly.freqs.copy()
    for j, m in enumerate(moduli):
        if m:
            f[:, j] %= m
    return TrigPoly(freqs=f, coefs=poly.coefs, bound=poly.bound)


@dataclass(frozen=True, eq=False)
class ArcIndicator:
    """Indicator of ``A_1 x ... x A_m`` with each ``A_j`` an :class:`ArcSet`."""

    arcs: tuple[ArcSet, ...]
    bound: float = 1.0

    def __post_init__(self):
        arcs = self.arcs
        if isinstance(arcs, ArcSet):
            arcs = (arcs,)
        out = []
        for a in arcs:
            out.append(a if isinstance(a, ArcSet) else ArcSet.from_intervals(a))
        object.__setattr__(self, "arcs", tuple(out))

    @classmethod
    def interval(cls, a, b) -> "ArcIndicator":
        return cls((ArcSet.from_intervals([(a, b)]),))

    @property
    def dim(self) -> int:
        return len(self.arcs)

    @property
    def measure(self) -> Fraction:
        out = Fraction(1)
        for a in self.arcs:
            out *= a.measure
        return out


@dataclass(frozen=True, eq=False)
class GridTable:
    """Complex values on the cat-map grid; ``values[i, j]`` sits at (i/q, j/q)."""

    values: np.ndarray
    bound: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim == 1:
            q = math.isqrt(v.size)
            if q * q != v.size:
                raise ValueError("GridTable length must be a perfect square q^2")
            v = v.reshape(q, q)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("GridTable must be q x q")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.bound is None:
            object.__setattr__(self, "bound", float(np.abs(v).max()) if v.size else 0.0)

    @property
    def q(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Tensor:
    """Pure tensor ``f_1 (x) ... (x) f_k``, one part per factor of a product."""

    parts: tuple
    bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if self.bound is None:
            object.__setattr__(self, "bound", float(np.prod([p.bound for p in self.parts])))


Observable = Union[TrigPoly, ArcIndicator, GridTable, Tensor]


def constant(system: System, c: complex = 1.0) -> Observable:
    """The constant function c, in the natural variant for ``system``."""
    if isinstance(system, ProductSystem):
        parts = [constant(f, c if i == 0 else 1.0) for i, f in enumerate(system.factors)]
        return Tensor(tuple(parts))
    dim = system.dim if isinstance(system, TorusSystem) else 2
    return TrigPoly({(0,) * dim: c}) if c != 0 else TrigPoly(dim=dim)


def _parts(system: System, f: Observable) -> tuple:
    fs = factors_of(system)
    if isinstance(system, ProductSystem):
        if not isinstance(f, Tensor):
            raise ValueError("expected a Tensor observable on a product system")
        if len(f.parts) != len(fs):
            raise ValueError(f"Tensor has {len(f.parts)} parts, system has {len(fs)} factors")
        return f.parts
    if isinstance(f, Tensor):
        if len(f.parts) != 1:
            raise ValueError("Tensor with several parts on a single-factor system")
        return f.parts
    return (f,)


def _check_compatible(factor: Factor, f: Observable) -> None:
    if isinstance(f, TrigPoly):
        want = factor.dim if isinstance(factor, TorusSystem) else 2
        if f.dim != want:
            raise ValueError(f"TrigPoly of dim {f.dim} on a factor with {want} coordinates")
    elif isinstance(f, ArcIndicator):
        if not isinstance(factor, TorusSystem) or f.dim != factor.dim:
            raise ValueError("ArcIndicator needs a torus factor of matching dimension")
    elif isinstance(f, GridTable):
        if not isinstance(factor, CatMapSystem) or f.q != factor.q:
            raise ValueError("GridTable needs a cat-map factor with the same q")
    else:
        raise TypeError(f"not an observable on a single factor: {type(f).__name__}")


def as_joint_trigpoly(system: System, f: Observable) -> TrigPoly:
    """Express f as a TrigPoly in the concatenated coordinates of ``system``."""
    if isinstance(f, TrigPoly):
        if f.dim != len(freq_moduli(system)):
            raise ValueError("TrigPoly dimension does not match the system")
        return f
    parts = _parts(system, f)
    if not all(isinstance(p, TrigPoly) for p in parts):
        raise ValueError("only TrigPoly parts can be combined into a joint TrigPoly")
    freqs = np.zeros((1, 0), dtype=np.int64)
    coefs = np.ones(1, dtype=np.complex128)
    for p in parts:
        freqs = np.hstack([np.repeat(freqs, len(p), axis=0), np.tile(p.freqs, (len(freqs), 1))])
        coefs = np.outer(coefs, p.coefs).reshape(-1)
    return TrigPoly(freqs=freqs.reshape(len(coefs), -1), coefs=coefs, bound=f.bound)


# ---------------------------------------------------------------------------
# points and the action
# ---------------------------------------------------------------------------


def _rotate_coord(x, a: IrrationalSpec, n: int):
    if isinstance(x, Fraction):
        y = x + n * a.exact
        return y - math.floor(y)
    step = fixed_to_float((n * a.fixed) % ONE)
    y = (float(x) + step) % 1.0
    return 0.0 if y >= 1.0 else y


def _apply_factor(f: Factor, label: str, n: int, point):
    if isinstance(f, TorusSystem):
        scalar = not isinstance(point, (tuple, list, np.ndarray))
        coords = (point,) if scalar else tuple(point)
        if len(coords) != f.dim:
            raise ValueError(f"point has {len(coords)} coordinates, torus has {f.dim}")
        for x in coords:
            if not 0 <= x < 1:
                raise ValueError(f"torus coordinate {x!r} outside [0, 1)")
        out = tuple(_rotate_coord(x, a, n) for x, a in zip(coords, f.rotation(label)))
        return out[0] if scalar else out
    i, j = point
    if not (isinstance(i, (int, np.integer)) and isinstance(j, (int, np.integer))) or not (
        0 <= i < f.q and 0 <= j < f.q
    ):
        raise ValueError(f"grid point {point!r} outside (Z/{f.q})^2")
    M = cat_power(n * f.exponent(label), f.q)
    return ((M[0][0] * i + M[0][1] * j) % f.q, (M[1][0] * i + M[1][1] * j) % f.q)


def apply(system: System, transform: str, n: int, point):
    """``T^n(point)`` for the transform named ``transform``.

    Torus coordinates given as Fractions are moved exactly (irrational
    rotations use their 128-bit dyadic truncation); float coordinates get
    ``x + frac(n alpha)`` with a single reduction mod 1.  Grid points are
    integer pairs ``(i, j)`` standing for ``(i/q, j/q)``.
    """
    _check_label(system, transform)
    n = int(n)
    if isinstance(system, ProductSystem):
        if len(point) != len(system.factors):
            raise ValueError("product point needs one component per factor")
        return tuple(_apply_factor(f, transform, n, p) for f, p in zip(system.factors, point))
    return _apply_factor(system, transform, n, point)


# ---------------------------------------------------------------------------
# algebra on observables
# ---------------------------------------------------------------------------


def _translate_trig(system: System, label: str, n: int, f: TrigPoly) -> TrigPoly:
    tc = torus_coords(system)
    fixeds = rotation_fixed(system, label)
    coefs = f.coefs.copy()
    if tc and any(fixeds):
        sub = f.freqs[:, tc]
        for t in range(len(coefs)):
            theta = fixed_dot(sub[t], fixeds)
            coefs[t] *= np.exp(2j * np.pi * fixed_to_float(n * theta))
    freqs = f.freqs.copy()
    for start, q, fac in cat_blocks(system):
        m = n * fac.exponent(label)
        if m:
            M = np.array(cat_power(m, q), dtype=np.int64)
            freqs[:, start:start + 2] = (freqs[:, start:start + 2] % q) @ M.T % q
    return TrigPoly(freqs=freqs, coefs=coefs, bound=f.bound)


def translate(system: System, transform: str, n: int, f: Observable) -> Observable:
    """The observable ``f o T^n``."""
    _check_label(system, transform)
    n = int(n)
    if isinstance(f, TrigPoly) and (isinstance(system, ProductSystem) or f.dim == len(freq_moduli(system))):
        if f.dim != len(freq_moduli(system)):
            raise ValueError("TrigPoly dimension does not match the system")
        return _translate_trig(system, transform, n, f)
    if isinstance(system, ProductSystem):
        parts = _parts(system, f)
        return Tensor(tuple(translate(fac, transform, n, p) if transform in fac.labels else p
                            for fac, p in zip(system.factors, parts)), bound=f.bound)
    (g,) = _parts(system, f)
    _check_compatible(system, g)
    if isinstance(g, ArcIndicator):
        shifts = [-(n * a.exact) for a in system.rotation(transform)]
        return ArcIndicator(tuple(A.shift(s) for A, s in zip(g.arcs, shifts)))
    if isinstance(g, GridTable):
        M = cat_power(n * system.exponent(transform), system.q)
        idx = _grid_index_map(M, system.q)
        return GridTable(g.values.reshape(-1)[idx].reshape(system.q, system.q), bound=g.bound)
    return _translate_trig(system, transform, n, g)


def conjugate(f: Observable) -> Observable:
    if isinstance(f, TrigPoly):
        return TrigPoly(freqs=-f.freqs, coefs=np.conj(f.coefs), bound=f.bound)
    if isinstance(f, ArcIndicator):
        return f
    if isinstance(f, GridTable):
        return GridTable(np.conj(f.values), bound=f.bound)
    if isinstance(f, Tensor):
        return Tensor(tuple(conjugate(p) for p in f.parts), bound=f.bound)
    raise TypeError(type(f).__name__)


def scale(f: Observable, c: complex) -> Observable:
    if isinstance(f, TrigPoly):
        return f.scaled(c)
    if isinstance(f, GridTable):
        return GridTable(f.values * c, bound=f.bound * abs(c))
    if isinstance(f, Tensor):
        return Tensor((scale(f.parts[0], c),) + f.parts[1:], bound=f.bound * abs(c))
    raise ValueError(f"cannot scale a {type(f).__name__} and keep its variant")


def pointwise_product(f: Observable, g: Observable) -> Observable:
    """Exact product of two observables of the same variant."""
    if isinstance(f, TrigPoly) and isinstance(g, TrigPoly):
        if f.dim != g.dim:
            raise ValueError("dimension mismatch")
        freqs = (f.freqs[:, None, :] + g.freqs[None, :, :]).reshape(-1, f.dim)
        coefs = np.outer(f.coefs, g.coefs).reshape(-1)
        return TrigPoly(freqs=freqs, coefs=coefs, bound=f.bound * g.bound)
    if isinstance(f, ArcIndicator) and isinstance(g, ArcIndicator):
        if f.dim != g.dim:
            raise ValueError("dimension mismatch")
        return ArcIndicator(tuple(a.intersect(b) for a, b in zip(f.arcs, g.arcs)))
    if isinstance(f, GridTable) and isinstance(g, GridTable):
        if f.q != g.q:
            raise ValueError("grid size mismatch")
        return GridTable(f.values * g.values, bound=f.bound * g.bound)
    if isinstance(f, Tensor) and isinstance(g, Tensor):
        if len(f.parts) != len(g.parts):
            raise ValueError("tensor length mismatch")
        return Tensor(tuple(pointwise_product(a, b) for a, b in zip(f.parts, g.parts)), bound=f.bound * g.bound)
    raise ValueError(f"unsupported product {type(f).__name__} x {type(g).__name__}; sample instead")


def integrate(system: System, f: Observable) -> complex:
    """``int f dmu`` -- exact for TrigPoly and ArcIndicator, grid mean for GridTable."""
    if isinstance(f, TrigPoly) and f.dim == len(freq_moduli(system)):
        moduli = freq_moduli(system)
        fr = f.freqs.copy()
        for j, m in enumerate(moduli):
            if m:
                fr[:, j] %= m
        hit = ~np.any(fr, axis=1)
        return complex(f.coefs[hit].sum())
    if isinstance(system, ProductSystem) or isinstance(f, Tensor):
        out = 1 + 0j
        for fac, p in zip(factors_of(system), _parts(system, f)):
            out *= integrate(fac, p)
        return out
    _check_compatible(system, f)
    if isinstance(f, ArcIndicator):
        return complex(float(f.measure))
    if isinstance(f, GridTable):
        return complex(f.values.mean())
    raise ValueError("incompatible observable")


def l2_norm(system: System, f: Observable) -> float:
    """``||f||_{L^2(mu)}``."""
    if isinstance(f, TrigPoly) and f.dim == len(freq_moduli(system)):
        red = _reduce(f, freq_moduli(system))
        return float(math.sqrt(math.fsum(np.abs(red.coefs) ** 2)))
    if isinstance(system, ProductSystem) or isinstance(f, Tensor):
        return float(np.prod([l2_norm(fac, p) for fac, p in zip(factors_of(system), _parts(system, f))]))
    _check_compatible(system, f)
    if isinstance(f, ArcIndicator):
        return math.sqrt(float(f.measure))
    if isinstance(f, GridTable):
        return float(np.sqrt(np.mean(np.abs(f.values) ** 2)))
    raise ValueError("incompatible observable")


def evaluate(system: System, f: Observable, points) -> np.ndarray:
    """Sample f at an array of points given in unit coordinates, shape (..., D).

    Grid coordinates are passed as ``i/q``.  Used by quadrature oracles.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if isinstance(f, TrigPoly):
        ph = np.mod(x @ f.freqs.T.astype(float), 1.0)
        return np.exp(2j * np.pi * ph) @ f.coefs
    if isinstance(f, ArcIndicator):
        out = np.ones(x.shape[:-1], dtype=bool)
        for j, A in enumerate(f.arcs):
            out &= A.contains(x[..., j])
        return out.astype(np.complex128)
    if isinstance(f, GridTable):
        idx = np.rint(np.mod(x, 1.0) * f.q).astype(np.int64) % f.q
        return f.values[idx[..., 0], idx[..., 1]]
    if isinstance(f, Tensor):
        out = np.ones(x.shape[:-1], dtype=np.complex128)
        pos = 0
        for fac, p in zip(factors_of(system), f.parts):
            w = fac.dim if isinstance(fac, TorusSystem) else 2
            out *= evaluate(fac, p, x[..., pos:pos + w])
            pos += w
        return out
    raise TypeError(type(f).__name__)


def to_grid_table(system: CatMapSystem, f: TrigPoly) -> GridTable:
    """Sample a TrigPoly in grid frequencies onto the q x q table."""
    q = system.q
    i, j = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    vals = np.zeros((q, q), dtype=np.complex128)
    for (a, b), c in zip(f.freqs % q, f.coefs):
        vals += c * np.exp(2j * np.pi * ((a * i + b * j) % q) / q)
    return GridTable(vals, bound=f.bound)


# ---------------------------------------------------------------------------
# ergodicity audit
# ---------------------------------------------------------------------------


@dataclass
class AuditEntry:
    claim: str
    expected: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    symbolic: bool | None
    numeric_min_distance: float | None
    numeric_witness: tuple[int, ...] | None
    heuristic: bool
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _rank_q(rows: list[list[Fraction]]) -> int:
    m = [r[:] for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                t = m[r][c] / m[rank][c]
                m[r] = [x - t * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def rotation_is_ergodic(vec: Sequence[IrrationalSpec]) -> bool:
    """Exact test: the translation by ``vec`` is ergodic on the torus iff
    ``k . vec`` is never an integer for nonzero integer k, i.e. the
    irrational parts of the coordinates are Q-linearly independent."""
    radicands = sorted({r for a in vec for r, _ in a.radicals})
    if not radicands:
        return False
    cols = [[dict(a.radicals).get(r, Fraction(0)) for r in radicands] for a in vec]
    return _rank_q(cols) == len(vec)


def numeric_min_distance(vec: Sequence[IrrationalSpec], K: int) -> tuple[float, tuple[int, ...]]:
    """min over 0 < |k|_inf <= K_m of dist(k . vec, Z), with K_m = floor(K**(1/m))."""
    m = len(vec)
    Km = max(1, int(round(K ** (1.0 / m))))
    if m == 1:
        ks = np.arange(1, Km + 1, dtype=np.int64)
        fr = frac_multiple(vec[0].fixed, ks)
        d = np.minimum(fr, 1.0 - fr)
        i = int(np.argmin(d))
        return float(d[i]), (int(ks[i]),)
    rng = np.arange(-Km, Km + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * m), indexing="ij")
    ks = np.stack([g.reshape(-1) for g in grids], axis=1)
    ks = ks[np.any(ks != 0, axis=1)]
    total = np.zeros(len(ks))
    for j, a in enumerate(vec):
        total += frac_multiple(a.fixed, ks[:, j])
    fr = np.mod(total, 1.0)
    d = np.minimum(fr, 1.0 - fr)
    i = int(np.argmin(d))
    return float(d[i]), tuple(int(v) for v in ks[i])


def ergodicity_audit(system: System, claims: Iterable, *, K: int = 10_000, tol: float = 1e-6,
                     mode: str = "auto") -> list[AuditEntry]:
    """Check claimed (non-)ergodicity of integer combinations of transforms.

    Each claim is ``(combination, expected)`` with combination like ``"T"``
    or ``"T*S^-1"`` and expected ``"ergodic"`` or ``"non-ergodic"``.
    Torus parts are decided exactly from the symbolic rotation numbers
    (``mode="auto"``); the bounded search over small k is always recorded as
    a heuristic cross-check and decides alone under ``mode="numeric"``.
    Cat-map factors count as ergodic whenever the combined exponent is
    nonzero (the continuum cat map is mixing); the grid itself is periodic,
    which is noted.
    """
    out = []
    for combo_text, expected in claims:
        combo = parse_combination(combo_text)
        for lab in combo:
            _check_label(system, lab)
        name = combo_text if isinstance(combo_text, str) else _combo_name(combo)
        expected = expected.strip().lower()
        if expected not in ("ergodic", "non-ergodic"):
            raise ValueError(f"expected must be 'ergodic' or 'non-ergodic', got {expected!r}")
        notes: list[str] = []
        vec: list[IrrationalSpec] = []
        cat_ok = True
        for f in factors_of(system):
            if isinstance(f, TorusSystem):
                for j in range(f.dim):
                    acc = ZERO
                    for lab, c in combo.items():
                        acc = acc + f.rotation(lab)[j].scaled(c)
                    vec.append(acc)
            else:
                e = sum(c * f.exponent(lab) for lab, c in combo.items())
                if e == 0:
                    cat_ok = False
                    notes.append(f"identity on cat-map factor q={f.q}")
                else:
                    notes.append(f"cat-map factor q={f.q}: exponent {e}, mixing in the continuum model; "
                                 "the finite grid is periodic")
        min_d, witness = (None, None)
        if vec:
            min_d, witness = numeric_min_distance(vec, K)
        if mode == "numeric":
            symbolic = None
            if min_d is None:
                verdict_ergodic = cat_ok
                heuristic = False
            elif min_d > tol:
                verdict_ergodic, heuristic = cat_ok, True
            elif min_d < 1e-12:
                verdict_ergodic, heuristic = False, False
            else:
                verdict_ergodic, heuristic = None, True
        else:
            symbolic = (rotation_is_ergodic(vec) if vec else True) and cat_ok
            verdict_ergodic, heuristic = symbolic, False
            if min_d is not None and (min_d > tol) != rotation_is_ergodic(vec):
                notes.append("bounded numeric search disagrees with the exact test "
                             f"(min distance {min_d:.3g} at k={witness})")
        if verdict_ergodic is None:
            verdict = "inconclusive"
        else:
            verdict = "pass" if verdict_ergodic == (expected == "ergodic") else "fail"
        out.append(AuditEntry(name, expected, verdict, symbolic, min_d, witness, heuristic, notes))
    return out
