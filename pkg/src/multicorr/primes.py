"""Prime tables, von Mangoldt weights and the W-trick."""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PrimeTables",
    "sieve",
    "sieve_for_count",
    "primorial_w",
    "mangoldt_w",
    "save_tables",
    "load_tables",
    "cached_sieve",
    "chebyshev_residual",
]

MAX_N = 10 ** 8
CHECK_LIMIT = 10 ** 4
MAGIC = b"PRTB"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class PrimeTables:
    N: int
    is_prime: np.ndarray  # bool, index n in [0, N]
    lam: np.ndarray  # von Mangoldt Lambda(n)
    primes: np.ndarray  # increasing int64

    @property
    def lam_prime(self) -> np.ndarray:
        """Lambda restricted to the primes."""
        return np.where(self.is_prime, self.lam, 0.0)

    def pi(self, x: int) -> int:
        """Number of primes <= x."""
        return int(np.searchsorted(self.primes, x, side="right"))

    def nth(self, k: int) -> int:
        """The k-th prime, 1-based."""
        if not 1 <= k <= len(self.primes):
            raise ValueError(f"tables hold only {len(self.primes)} primes")
        return int(self.primes[k - 1])


def chebyshev_residual(lam: np.ndarray, limit: int) -> float:
    """max over 1 <= n <= limit of |sum_{d | n} Lambda(d) - log n|."""
    s = np.zeros(limit + 1)
    for d in range(2, limit + 1):
        if lam[d]:
            s[d::d] += lam[d]
    n = np.arange(1, limit + 1)
    return float(np.max(np.abs(s[1:] - np.log(n))))


def sieve(N: int, validate: bool = True) -> PrimeTables:
    """Eratosthenes up to N with Lambda on prime powers."""
    if N > MAX_N:
        raise ValueError(f"N = {N} exceeds the budget {MAX_N}")
    if N < 2:
        raise ValueError("N must be at least 2")
    is_prime = np.ones(N + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(N) + 1):
        if is_prime[p]:
            is_prime[p * p::p] = False
    primes = np.flatnonzero(is_prime).astype(np.int64)
    lam = np.zeros(N + 1)
    lam[primes] = np.log(primes.astype(float))
    for p in primes[primes <= math.isqrt(N)]:
        p = int(p)
        q = p * p
        while q <= N:
            lam[q] = math.log(p)
            q *= p
    if validate:
        res = chebyshev_residual(lam, min(N, CHECK_LIMIT))
        if res > 1e-9:
            raise RuntimeError(f"Chebyshev identity violated by {res}")
    is_prime.flags.writeable = False
    lam.flags.writeable = False
    primes.flags.writeable = False
    return PrimeTables(N, is_prime, lam, primes)


def sieve_for_count(count: int) -> PrimeTables:
    """Tables holding at least ``count`` primes."""
    n = max(count, 6)
    bound = int(n * (math.log(n) + math.log(math.log(n)))) + 10
    return sieve(bound)


def primorial_w(w: int) -> tuple[int, int]:
    """``W = prod_{p < w} p`` and ``phi(W)``; the empty product is 1."""
    W, phi = 1, 1
    for p in range(2, w):
        if all(p % q for q in range(2, math.isqrt(p) + 1)):
            W *= p
            phi *= p - 1
    return W, phi


def mangoldt_w(w: int, r: int, n, tables: PrimeTables):
    """``phi(W)/W * Lambda'(W n + r)`` for an integer or an array of n."""
    W, phi = primorial_w(w)
    m = W * np.asarray(n, dtype=np.int64) + r
    if np.any(m < 0) or np.any(m > tables.N):
        raise ValueError("W n + r outside the prime tables")
    vals = np.where(tables.is_prime[m], tables.lam[m], 0.0) * (phi / W)
    return float(vals) if np.ndim(n) == 0 else vals


def save_tables(tables: PrimeTables, path) -> None:
    """Binary cache: magic, version, N, count, then (int64 n, float64 Lambda) records."""
    idx = np.flatnonzero(tables.lam).astype("<i8")
    rec = np.empty(len(idx), dtype=[("n", "<i8"), ("lam", "<f8")])
    rec["n"] = idx
    rec["lam"] = tables.lam[idx]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQQ", FORMAT_VERSION, tables.N, len(idx)))
        fh.write(rec.tobytes())


def load_tables(path) -> PrimeTables:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError("not a prime-table file")
        version, N, count = struct.unpack("<IQQ", fh.read(20))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported prime-table version {version}")
        rec = np.frombuffer(fh.read(16 * count), dtype=[("n", "<i8"), ("lam", "<f8")])
    lam = np.zeros(N + 1)
    lam[rec["n"]] = rec["lam"]
    is_prime = np.zeros(N + 1, dtype=bool)
    ns = rec["n"]
    is_prime[ns] = np.abs(rec["lam"] - np.log(ns.astype(float))) < 1e-9
    primes = np.flatnonzero(is_prime).astype(np.int64)
    return PrimeTables(int(N), is_prime, lam, primes)


def cached_sieve(N: int, cache_dir=None) -> PrimeTables:
    """Sieve, reusing ``<cache_dir>/primes_<N>.bin`` when present."""
    if cache_dir is None:
        return sieve(N)
    path = Path(cache_dir) / f"primes_{N}.bin"
    if path.exists():
        return load_tables(path)
    t = sieve(N)
    os.makedirs(cache_dir, exist_ok=True)
    save_tables(t, path)
    return t
