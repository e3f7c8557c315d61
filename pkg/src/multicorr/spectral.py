"""Spectral analysis of single correlation sequences.

A positive-definite sequence is the Fourier transform of a finite measure;
its atoms are located from twisted averages ``(1/L) sum a(n) e(-n theta)``
and the rest of the sequence is what remains after subtracting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .correlation import (AveragingWindow, BesicovitchReport, CorrelationSeries, NullVerdict,
                          besicovitch_estimate, null_verdict)
from .numbers import ONE, IrrationalSpec, phase_exp

__all__ = [
    "Atom",
    "SpectralEstimate",
    "wiener_mass",
    "detect_atoms",
    "herglotz_decompose",
    "HerglotzSplit",
    "wiener_energy_check",
    "EnergyReport",
    "fejer_density",
    "power_of_two_lengths",
]

MASS_FLOOR = 0.05
MAX_ATOMS = 16
REFINE_TOL = 1e-10
_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Atom:
    theta: float
    mass: float
    weight: complex


@dataclass
class SpectralEstimate:
    resolution: float
    atoms: list[Atom]
    residual_energy: float
    density_theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density: np.ndarray = field(default_factory=lambda: np.zeros(0))
    truncated: bool = False

    def atoms_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("theta,mass,re_weight,im_weight\n")
            for a in self.atoms:
                fh.write(f"{float(a.theta)!r},{float(a.mass)!r},{float(a.weight.real)!r},{float(a.weight.imag)!r}\n")

    def density_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("theta,density\n")
            for t, v in zip(self.density_theta.tolist(), self.density.tolist()):
                fh.write(f"{t!r},{v!r}\n")


def _theta_fixed(theta) -> int:
    if isinstance(theta, IrrationalSpec):
        return theta.fixed
    return round(Fraction(theta) * ONE) % ONE


def _twist(values: np.ndarray, ns: np.ndarray, theta) -> complex:
    return complex(np.sum(values * phase_exp(-_theta_fixed(theta) % ONE, ns)) / len(values))


def _window(series: CorrelationSeries, window: AveragingWindow | None):
    if window is None:
        window = AveragingWindow(series.n_min, series.n_max + 1)
    return series.window(window), np.arange(window.M, window.N, dtype=np.int64), window


def wiener_mass(series: CorrelationSeries, theta, window: AveragingWindow | None = None) -> complex:
    """``(1/|W|) sum_{n in W} a(n) e(-n theta)`` with absolute indices n."""
    vals, ns, _ = _window(series, window)
    return _twist(vals, ns, theta)


def _golden_max(fn, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return (a + b) / 2


def fejer_density(series: CorrelationSeries, K: int | None = None, grid: int | None = None):
    """Fejer-smoothed spectral density ``sum_{|m|<K} (1-|m|/K) a(m) e(-m theta)``.

    Needs a(0); negative indices come from the series when present and from
    the Hermitian extension ``a(-m) = conj(a(m))`` otherwise.
    """
    if not series.n_min <= 0 <= series.n_max:
        raise ValueError("the Fejer density needs a(0) in the series")
    K = K or min(series.n_max + 1, 4096)
    if K > series.n_max + 1:
        raise ValueError("K exceeds the available non-negative range")
    G = grid or max(2 * K, 64)
    m = np.arange(-K + 1, K)
    coef = np.empty(len(m), dtype=np.complex128)
    for i, mm in enumerate(m):
        if mm >= series.n_min:
            coef[i] = series[int(mm)]
        else:
            coef[i] = np.conj(series[int(-mm)])
    coef *= 1.0 - np.abs(m) / K
    # sum_m c_m e(-m j/G) via FFT with the negative indices wrapped
    buf = np.zeros(G, dtype=np.complex128)
    np.add.at(buf, m % G, coef)
    dens = np.fft.fft(buf).real
    return np.arange(G) / G, dens


def detect_atoms(series: CorrelationSeries, window: AveragingWindow | None = None, coarse_grid_size: int | None = None,
                 mass_floor: float = MASS_FLOOR, max_atoms: int = MAX_ATOMS, density: bool = False) -> SpectralEstimate:
    """Greedy atom search: coarse FFT scan, golden-section refinement, deflation.

    Weights of the detected frequencies are refitted jointly by least squares
    over the window before masses are reported.
    """
    vals, ns, window = _window(series, window)
    L = len(vals)
    G = coarse_grid_size or 1 << max(1, (2 * L - 1).bit_length())
    residual = vals.copy()
    thetas: list[float] = []
    truncated = False
    while True:
        spec = np.abs(np.fft.fft(residual, G)) / L
        j = int(np.argmax(spec))
        if spec[j] < mass_floor / 2:
            break
        if len(thetas) == max_atoms:
            truncated = True
            break
        res = residual

        def mod(t):
            return abs(np.sum(res * np.exp(-2j * np.pi * np.mod(ns * t, 1.0)))) / L

        th = _golden_max(mod, (j - 1) / G, (j + 1) / G, REFINE_TOL) % 1.0
        w = _twist(residual, ns, th)
        if abs(w) < mass_floor:
            break
        thetas.append(th)
        residual = residual - w * np.exp(2j * np.pi * np.mod(ns * th, 1.0))
    atoms: list[Atom] = []
    if thetas:
        basis = np.exp(2j * np.pi * np.mod(np.outer(ns, thetas), 1.0))
        weights = np.linalg.lstsq(basis, vals, rcond=None)[0]
        residual = vals - basis @ weights
        order = sorted(range(len(thetas)), key=lambda i: thetas[i])
        atoms = [Atom(thetas[i], float(abs(weights[i])), complex(weights[i])) for i in order]
    est = SpectralEstimate(1.0 / G, atoms, float(np.mean(np.abs(residual) ** 2)), truncated=truncated)
    if density:
        est.density_theta, est.density = fejer_density(series)
    return est


def power_of_two_lengths(n: int, smallest: int = 1 << 10) -> tuple[int, ...]:
    """Powers of two from ``smallest`` up to n; at least three of them."""
    top = n.bit_length() - 1
    lo = min(smallest.bit_length() - 1, max(top - 2, 0))
    return tuple(1 << k for k in range(lo, top + 1))


@dataclass
class HerglotzSplit:
    atoms: list[Atom]
    psi: CorrelationSeries
    nu: CorrelationSeries
    besicovitch: BesicovitchReport
    verdict: NullVerdict


def herglotz_decompose(series: CorrelationSeries, window: AveragingWindow | None = None,
                       mass_floor: float = MASS_FLOOR, lengths=None) -> HerglotzSplit:
    """Split ``a = psi + nu`` with psi built from the detected atoms."""
    est = detect_atoms(series, window, mass_floor=mass_floor)
    ns = series.ns
    psi = np.zeros(len(ns), dtype=np.complex128)
    for a in est.atoms:
        psi += a.weight * np.exp(2j * np.pi * np.mod(ns * a.theta, 1.0))
    psi_s = CorrelationSeries(series.n_min, series.n_max, psi, "almost-periodic part")
    nu = CorrelationSeries(series.n_min, series.n_max, series.values - psi, "remainder")
    rep = besicovitch_estimate(nu, lengths or power_of_two_lengths(len(nu)))
    return HerglotzSplit(est.atoms, psi_s, nu, rep, null_verdict(rep))


@dataclass
class EnergyReport:
    mean_square: float
    atom_energy: float
    gap: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.gap >= -self.tolerance


def wiener_energy_check(series: CorrelationSeries, estimate: SpectralEstimate,
                        window: AveragingWindow | None = None, tolerance: float = 1e-3) -> EnergyReport:
    """Mean of ``|a|^2`` over the window against the sum of squared atom masses."""
    vals, _, _ = _window(series, window)
    ms = float(np.mean(np.abs(vals) ** 2))
    ae = float(sum(a.mass ** 2 for a in estimate.atoms))
    return EnergyReport(ms, ae, ms - ae, tolerance)
