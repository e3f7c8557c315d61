"""Large triple returns for two circle rotations, plain and along shifted primes.

``r(n) = mu(A ∩ (A - n alpha) ∩ (A - n beta))`` is computed exactly on
integer arcs over a common denominator (irrational rotations enter through
their 128-bit dyadic truncation), and set membership ``r(n) > mu(A)^3 - eps``
is decided in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import systems as S
from ._parallel import chunks, ordered_map
from .arcs import ArcSet, intersection_measures
from .correlation import ergodic_average
from .numbers import IrrationalSpec
from .primes import PrimeTables, mangoldt_w, primorial_w

__all__ = [
    "triple_return",
    "triple_return_exact",
    "triple_returns",
    "scan_large_returns",
    "ReturnSetReport",
    "shifted_prime_returns",
    "ShiftedPrimeReport",
    "prime_average_compare",
    "wtrick_average_compare",
    "CompareRow",
    "WTrickRow",
    "audit_rotations",
]


def _spec(x) -> IrrationalSpec:
    return IrrationalSpec.parse(x)


def _arcs(A) -> ArcSet:
    return A if isinstance(A, ArcSet) else ArcSet.from_intervals(A)


def triple_returns(A, alpha, beta, ns, threads: int = 1) -> tuple[list[int], int]:
    """Exact numerators of r(n) over a common denominator D, for each n."""
    A = _arcs(A)
    rots = [Fraction(0), _spec(alpha).exact, _spec(beta).exact]
    ns = np.asarray(ns, dtype=np.int64)
    parts = ordered_map(lambda c: intersection_measures([A, A, A], rots, c), chunks(ns), threads)
    D = parts[0][1]
    return [m for p in parts for m in p[0]], D


def triple_return_exact(A, alpha, beta, n: int) -> Fraction:
    nums, D = triple_returns(A, alpha, beta, [n])
    return Fraction(nums[0], D)


def triple_return(A, alpha, beta, n: int) -> float:
    """``mu(A ∩ (A - n alpha) ∩ (A - n beta))``."""
    return float(triple_return_exact(A, alpha, beta, n))


def audit_rotations(alpha, beta, total: bool = False) -> list:
    """Ergodicity audit of the rotations by alpha, beta and alpha - beta."""
    system = S.TorusSystem(1, {"T": [_spec(alpha)], "S": [_spec(beta)]})
    return S.ergodicity_audit(system, [("T", "ergodic"), ("S", "ergodic"), ("T*S^-1", "ergodic")])


def _gaps(members: np.ndarray) -> int | None:
    """Largest gap between consecutive members, counting the gap from 0."""
    idx = np.flatnonzero(members) + 1
    if len(idx) == 0:
        return None
    return int(np.max(np.diff(np.concatenate([[0], idx]))))


@dataclass
class ReturnSetReport:
    eps: Fraction
    mu_A: Fraction
    threshold: Fraction
    n_max: int
    members: np.ndarray  # bool, index n - 1
    numerators: list[int]
    denominator: int
    max_gap: int | None
    density: float
    jensen_holds: bool
    audit: list
    hypotheses_verified: bool
    labels: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return int(self.members.sum())

    def r(self, n: int) -> Fraction:
        return Fraction(self.numerators[n - 1], self.denominator)

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header or 'large returns'}\n")
            fh.write("n,r_n,member\n")
            for n in range(1, self.n_max + 1):
                fh.write(f"{n},{float(self.r(n))!r},{int(self.members[n - 1])}\n")

    def summary(self) -> dict:
        return {
            "mu_A": float(self.mu_A),
            "eps": float(self.eps),
            "threshold": float(self.threshold),
            "max_gap": self.max_gap,
            "density": self.density,
            "lower_density_proxy": _lower_proxy(self.members),
        }


def _running_density(members: np.ndarray) -> np.ndarray:
    return np.cumsum(members) / np.arange(1, len(members) + 1)


def _lower_proxy(members: np.ndarray) -> float:
    run = _running_density(members)
    return float(run[len(run) // 2:].min()) if len(run) else 0.0


def _member_mask(nums: list[int], D: int, threshold: Fraction) -> np.ndarray:
    # r = m / D > p / q  <=>  m q > p D
    p, q = threshold.numerator, threshold.denominator
    return np.array([m * q > p * D for m in nums], dtype=bool)


def scan_large_returns(A, alpha, beta, n_max: int, eps, *, threads: int = 1) -> ReturnSetReport:
    """Membership of ``1 <= n <= n_max`` in ``{n : r(n) > mu(A)^3 - eps}``."""
    A = _arcs(A)
    eps = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    mu = A.measure
    thr = mu ** 3 - eps
    audit = audit_rotations(alpha, beta)
    ok = all(a.passed for a in audit)
    nums, D = triple_returns(A, alpha, beta, np.arange(1, n_max + 1), threads)
    members = _member_mask(nums, D, thr)
    labels = [] if ok else ["unconditional-hypotheses-unverified"]
    return ReturnSetReport(eps, mu, thr, n_max, members, nums, D, _gaps(members), float(members.sum()) / n_max,
                           mu >= mu ** 3, audit, ok, labels)


@dataclass
class ShiftedPrimeReport:
    eps: Fraction
    mu_A: Fraction
    threshold: Fraction
    count: int
    shift: int
    primes: np.ndarray
    members: np.ndarray
    fraction: float
    running_density: np.ndarray
    lower_density_proxy: float
    audit: list
    hypotheses_verified: bool

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header or 'shifted-prime returns'}\n")
            fh.write("n,p_n,member,running_density\n")
            for i in range(self.count):
                fh.write(f"{i + 1},{int(self.primes[i])},{int(self.members[i])},{float(self.running_density[i])!r}\n")


def shifted_prime_returns(A, alpha, beta, n_max: int, eps, tables: PrimeTables, *, sign: int = -1,
                          threads: int = 1) -> ShiftedPrimeReport:
    """Fraction of ``n <= n_max`` with ``r(p_n + sign) > mu(A)^3 - eps``."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 (p - 1) or +1 (p + 1)")
    if len(tables.primes) < n_max:
        raise ValueError(f"tables hold {len(tables.primes)} primes, need {n_max}")
    A = _arcs(A)
    eps = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    mu = A.measure
    thr = mu ** 3 - eps
    audit = audit_rotations(alpha, beta)
    # total ergodicity: every nonzero multiple of an irrational is irrational
    ok = all(a.passed for a in audit)
    ps = tables.primes[:n_max]
    nums, D = triple_returns(A, alpha, beta, ps + sign, threads)
    members = _member_mask(nums, D, thr)
    run = _running_density(members)
    return ShiftedPrimeReport(eps, mu, thr, n_max, sign, ps, members, float(members.mean()), run,
                              _lower_proxy(members), audit, ok)


@dataclass(frozen=True)
class CompareRow:
    N: int
    prime_average: complex
    mangoldt_average: complex

    @property
    def difference(self) -> float:
        return abs(self.prime_average - self.mangoldt_average)


def prime_average_compare(a, Ns: Sequence[int], tables: PrimeTables) -> list[CompareRow]:
    """``(1/pi(N)) sum_{p<N} a_p`` against ``(1/N) sum_{n<N} Lambda'(n) a_n``."""
    vals = np.asarray(a.values if hasattr(a, "values") else a, dtype=np.complex128)
    if hasattr(a, "n_min") and a.n_min != 0:
        raise ValueError("series must start at n = 0")
    out = []
    lp = tables.lam_prime
    for N in Ns:
        if N > len(vals) or N - 1 > tables.N:
            raise ValueError(f"N = {N} outside the series or the prime tables")
        if np.max(np.abs(vals[:N])) > 1 + 1e-12:
            raise ValueError("the series must be bounded by 1")
        ps = tables.primes[tables.primes < N]
        pavg = complex(np.sum(vals[ps]) / len(ps)) if len(ps) else 0j
        mavg = complex(np.sum(lp[:N] * vals[:N]) / N)
        out.append(CompareRow(int(N), pavg, mavg))
    return out


@dataclass(frozen=True)
class WTrickRow:
    N: int
    differences: dict[int, float]

    @property
    def max_difference(self) -> float:
        return max(self.differences.values())


def wtrick_average_compare(system, f, g, w: int, Ns: Sequence[int], tables: PrimeTables,
                           transforms: tuple[str, str] = ("T", "S")) -> list[WTrickRow]:
    """For each admissible residue r, the L2 norm of
    ``(1/N) sum_{n=1}^N (Lambda'_{w,r}(n) - 1) T^{Wn+r} f S^{Wn+r} g``."""
    if not isinstance(system, S.TorusSystem):
        raise ValueError("the W-trick comparison runs on torus systems")
    W, _ = primorial_w(w)
    residues = [r for r in range(W) if np.gcd(r, W) == 1]
    out = []
    for N in Ns:
        if W * N + W > tables.N:
            raise ValueError(f"prime tables must reach W N + W = {W * N + W}")
        n = np.arange(1, N + 1, dtype=np.int64)
        diffs = {}
        for r in residues:
            weights = mangoldt_w(w, r, n, tables) - 1.0
            avg = ergodic_average(system, [f, g], list(transforms), W * n + r, weights)
            diffs[r] = S.l2_norm(system, avg)
        out.append(WTrickRow(int(N), diffs))
    return out
