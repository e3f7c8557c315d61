"""Limit formula for two-term averages through the Kronecker factor.

For the systems built here the Kronecker factor is the product of all torus
factors; cat-map factors are mixing in the continuum model and project to
their means.  ``Y`` is the closed subgroup ``{w : K w in Z^r}`` cut out by
declared integer relations ``K`` among the rotation numbers; a character
``e(k.u + l.v)`` integrates to 1 over Y when ``(k, l)`` lies in the row
lattice of K and to 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import systems as S
from .correlation import (BesicovitchReport, CorrelationSeries, NullVerdict, besicovitch_estimate,
                          ergodic_average, multicorrelation_series, null_verdict)
from .lattice import SmithForm, smith_normal_form
from .numbers import ONE, IrrationalSpec, dist_to_int, fixed_dot, phase_exp

__all__ = [
    "KroneckerFactor",
    "kronecker_factor",
    "OrbitClosure",
    "orbit_closure",
    "limit_rhs",
    "average_vs_limit",
    "weighted_average",
    "decompose",
    "Decomposition",
    "LimitReport",
    "WeightedReport",
    "RelationError",
    "AuditError",
]

RELATION_TOL = 1e-8


class RelationError(ValueError):
    """A declared relation does not hold for the rotation numbers."""


class AuditError(ValueError):
    """The ergodicity hypotheses of an operation are not met."""


@dataclass(frozen=True, eq=False)
class KroneckerFactor:
    """The torus part of ``system`` with the rotations of transforms T and S."""

    system: object
    T: str
    S: str
    alpha: tuple[IrrationalSpec, ...]
    beta: tuple[IrrationalSpec, ...]

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def torus(self) -> S.TorusSystem:
        return S.TorusSystem(self.dim, {self.T: self.alpha, self.S: self.beta})

    def project(self, f) -> S.TrigPoly:
        """Conditional expectation of f onto the torus coordinates."""
        system = self.system
        if isinstance(f, S.TrigPoly) and f.dim == len(S.freq_moduli(system)):
            moduli = S.freq_moduli(system)
            tc = S.torus_coords(system)
            keep = np.ones(len(f), dtype=bool)
            for j, m in enumerate(moduli):
                if m:
                    keep &= f.freqs[:, j] % m == 0
            return S.TrigPoly(freqs=f.freqs[keep][:, tc], coefs=f.coefs[keep], bound=f.bound)
        parts = S._parts(system, f)
        torus_parts, scalar = [], 1 + 0j
        for fac, p in zip(S.factors_of(system), parts):
            if isinstance(fac, S.TorusSystem):
                if not isinstance(p, S.TrigPoly):
                    raise ValueError("torus parts must be TrigPoly to project exactly")
                torus_parts.append(p)
            else:
                scalar *= S.integrate(fac, p)
        poly = S.as_joint_trigpoly(self.torus, torus_parts[0] if len(torus_parts) == 1 else S.Tensor(tuple(torus_parts)))
        return poly.scaled(scalar) if scalar != 1 else poly

    def lift(self, g: S.TrigPoly) -> S.TrigPoly:
        """Embed a factor TrigPoly into the joint coordinates of the system."""
        D = len(S.freq_moduli(self.system))
        freqs = np.zeros((len(g), D), dtype=np.int64)
        freqs[:, S.torus_coords(self.system)] = g.freqs
        return S.TrigPoly(freqs=freqs, coefs=g.coefs, bound=g.bound)


def kronecker_factor(system, T: str, S_: str) -> KroneckerFactor:
    S._check_label(system, T)
    S._check_label(system, S_)
    if not S.torus_coords(system):
        raise ValueError("system has no torus factor; its Kronecker factor is not explicit here")
    return KroneckerFactor(system, T, S_, tuple(S.rotation_vector(system, T)), tuple(S.rotation_vector(system, S_)))


@dataclass(frozen=True)
class OrbitClosure:
    relations: tuple[tuple[int, ...], ...]
    residuals: tuple[float, ...]
    exact: tuple[bool, ...]
    smith: SmithForm
    dim: int  # 2m

    def generators(self) -> list[tuple[int, ...]]:
        """Columns of V: w = V z parametrises Y by z."""
        V = self.smith.V
        return [tuple(V[i][j] for i in range(self.dim)) for j in range(self.dim)]

    def contains_frequency(self, v: Sequence[int]) -> bool:
        """Is ``e(v . w)`` identically 1 on Y, i.e. v in the row lattice of K?"""
        if not self.relations:
            return not any(v)
        V = self.smith.V
        y = [sum(V[i][j] * int(v[i]) for i in range(self.dim)) for j in range(self.dim)]
        for j, yj in enumerate(y):
            if j < self.smith.rank:
                if yj % self.smith.d[j]:
                    return False
            elif yj:
                return False
        return True

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Haar-distributed points of Y, shape (count, 2m)."""
        z = rng.random((count, self.dim))
        for j, dj in enumerate(self.smith.d):
            z[:, j] = rng.integers(0, dj, size=count) / dj
        V = np.array(self.smith.V, dtype=float)
        return np.mod(z @ V.T, 1.0)


def orbit_closure(factor: KroneckerFactor, relations: Sequence[Sequence[int]] = ()) -> OrbitClosure:
    """Validate declared relations ``K (alpha, beta) in Z^r`` and build Y."""
    m2 = 2 * factor.dim
    rows = tuple(tuple(int(x) for x in r) for r in relations)
    rot = list(factor.alpha) + list(factor.beta)
    residuals, exact = [], []
    for r in rows:
        if len(r) != m2:
            raise RelationError(f"relation {r} needs {m2} entries")
        res = dist_to_int(fixed_dot(r, [a.fixed for a in rot]))
        acc = S.ZERO
        for c, a in zip(r, rot):
            acc = acc + a.scaled(c)
        is_exact = not acc.radicals and acc.rational.denominator == 1
        if res > RELATION_TOL:
            raise RelationError(f"relation {r} fails: distance to Z is {res:.3g}")
        residuals.append(res)
        exact.append(is_exact)
    smith = smith_normal_form([list(r) for r in rows]) if rows else smith_normal_form([[0] * m2])
    return OrbitClosure(rows, tuple(residuals), tuple(exact), smith, m2)


def limit_rhs(factor: KroneckerFactor, f1: S.TrigPoly, f2: S.TrigPoly, Y: OrbitClosure) -> S.TrigPoly:
    """``z -> int_Y f1(z+u) f2(z+v) dnu(u,v)`` in closed form."""
    for f in (f1, f2):
        if not isinstance(f, S.TrigPoly) or f.dim != factor.dim:
            raise ValueError("limit_rhs needs TrigPoly observables on the factor torus")
    freqs, coefs = [], []
    for k, a in zip(f1.freqs, f1.coefs):
        for l, b in zip(f2.freqs, f2.coefs):
            if Y.contains_frequency(list(k) + list(l)):
                freqs.append(k + l)
                coefs.append(a * b)
    if not freqs:
        return S.TrigPoly(dim=factor.dim)
    return S.TrigPoly(freqs=np.array(freqs), coefs=np.array(coefs), bound=f1.bound * f2.bound)


def _audit(system, T, S_):
    rep = S.ergodicity_audit(system, [(T, "ergodic"), (S_, "ergodic"), (f"{T}*{S_}^-1", "ergodic")])
    bad = [a.claim for a in rep if not a.passed]
    if bad:
        raise AuditError("ergodicity audit failed for " + ", ".join(bad))
    return rep


@dataclass
class LimitReport:
    average: S.TrigPoly
    limit: S.TrigPoly
    distance: float
    N: int
    audit: list = field(default_factory=list)


def average_vs_limit(system, f1, f2, factor: KroneckerFactor, Y: OrbitClosure, N: int) -> LimitReport:
    """L2 distance between ``(1/N) sum_{n<N} T^n f1 S^n f2`` and the limit."""
    audit = _audit(system, factor.T, factor.S)
    avg = ergodic_average(system, [f1, f2], [factor.T, factor.S], np.arange(N, dtype=np.int64))
    lim = factor.lift(limit_rhs(factor, factor.project(f1), factor.project(f2), Y))
    return LimitReport(avg, lim, S.l2_norm(system, avg - lim), N, audit)


@dataclass
class WeightedReport:
    average: complex
    limit: complex
    N: int

    @property
    def gap(self) -> float:
        return abs(self.average - self.limit)


def weighted_average(system, eta: S.TrigPoly, f0, f1, f2, factor: KroneckerFactor, Y: OrbitClosure,
                     N: int) -> WeightedReport:
    """``(1/N) sum eta(n alpha, n beta) int f0 T^n f1 S^n f2`` against its limit."""
    _audit(system, factor.T, factor.S)
    m = factor.dim
    if not isinstance(eta, S.TrigPoly) or eta.dim != 2 * m:
        raise ValueError("eta must be a TrigPoly in the 2m variables (u, v)")
    ns = np.arange(N, dtype=np.int64)
    series = multicorrelation_series(system, [f0, f1, f2], [factor.T, factor.S], 0, N - 1).values
    rot = [a.fixed for a in factor.alpha] + [b.fixed for b in factor.beta]
    weights = np.zeros(N, dtype=np.complex128)
    for ab, c in zip(eta.freqs, eta.coefs):
        th = fixed_dot(ab, rot)
        weights += c * (phase_exp(th, ns) if th else 1.0)
    lhs = complex(np.sum(weights * series) / N)
    p0, p1, p2 = (factor.project(f) for f in (f0, f1, f2))
    c0 = p0.terms()
    rhs = 0j
    for ab, e in zip(eta.freqs, eta.coefs):
        a, b = ab[:m], ab[m:]
        for k, c1 in zip(p1.freqs, p1.coefs):
            for l, c2 in zip(p2.freqs, p2.coefs):
                j = tuple(int(x) for x in -(k + l))
                if j in c0 and Y.contains_frequency(list(a + k) + list(b + l)):
                    rhs += e * c0[j] * c1 * c2
    return WeightedReport(lhs, complex(rhs), N)


@dataclass
class Decomposition:
    a: CorrelationSeries
    a_st: CorrelationSeries
    a_er: CorrelationSeries
    besicovitch: BesicovitchReport
    verdict: NullVerdict

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header or 'decomposition'}\n")
            fh.write("n,a_re,a_im,ast_re,ast_im,aer_re,aer_im\n")
            for n, x, y, z in zip(self.a.ns.tolist(), self.a.values.tolist(), self.a_st.values.tolist(),
                                  self.a_er.values.tolist()):
                fh.write(f"{n},{x.real!r},{x.imag!r},{y.real!r},{y.imag!r},{z.real!r},{z.imag!r}\n")


def decompose(system, f0, f1, f2, factor: KroneckerFactor, n_range: tuple[int, int], *, lengths=None,
              threads: int = 1) -> Decomposition:
    """Structured part on the Kronecker factor plus the remainder.

    ``a_st(n) = int_Z f0~(z) f1~(z + n alpha) f2~(z + n beta)`` and
    ``a_er = a - a_st``; the remainder gets a Besicovitch report and verdict.
    """
    from .spectral import power_of_two_lengths

    lo, hi = n_range
    labels = [factor.T, factor.S]
    a = multicorrelation_series(system, [f0, f1, f2], labels, lo, hi - 1, threads=threads)
    proj = [factor.project(f) for f in (f0, f1, f2)]
    st = multicorrelation_series(factor.torus, proj, labels, lo, hi - 1, threads=threads).values
    a_st = CorrelationSeries(lo, hi - 1, st, "structured part")
    a_er = CorrelationSeries(lo, hi - 1, a.values - st, "remainder")
    rep = besicovitch_estimate(a_er, lengths or power_of_two_lengths(len(a_er)))
    return Decomposition(a, a_st, a_er, rep, null_verdict(rep))
