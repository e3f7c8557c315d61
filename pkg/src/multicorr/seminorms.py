"""Finite-scale box seminorms for commuting transformations.

With ``P_1(h) = max(0, Re mean_{n<N_1} int conj(h) T_1^n h dmu)`` and
``P_k(h) = mean_{n<N_k} P_{k-1}(T_k^n h * conj(h))`` the estimate of
``|||f|||_{T_1..T_d}`` is ``P_d(f) ** (1/2^d)``.  Every estimate is repeated
with all window lengths doubled; the relative change is the diagnostic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import systems as S
from ._parallel import ordered_map
from .correlation import ergodic_average, multicorrelation_series

__all__ = [
    "WindowSchedule",
    "SeminormEstimate",
    "box_seminorm",
    "permutation_check",
    "ergodic_collapse_check",
    "average_bound_check",
    "PermutationReport",
    "CollapseReport",
    "AverageBoundReport",
]

MIN_LENGTH = 64
MAX_DEGREE = 3


@dataclass(frozen=True)
class WindowSchedule:
    """Window lengths ``(N_1, ..., N_d)``, one per level, all windows start at 0."""

    lengths: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(int(x) for x in self.lengths)
        if not 1 <= len(lengths) <= MAX_DEGREE:
            raise ValueError(f"schedule must have 1..{MAX_DEGREE} levels")
        if min(lengths) < MIN_LENGTH:
            raise ValueError(f"every window length must be at least {MIN_LENGTH}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def d(self) -> int:
        return len(self.lengths)

    def doubled(self) -> "WindowSchedule":
        return WindowSchedule(tuple(2 * x for x in self.lengths))


@dataclass(frozen=True)
class SeminormEstimate:
    value: float
    schedule: WindowSchedule
    doubled_value: float
    diagnostic: float
    clip: float
    transforms: tuple[str, ...]

    def csv_row(self) -> str:
        sched = "x".join(str(x) for x in self.schedule.lengths)
        nums = ",".join(repr(float(x)) for x in (self.value, self.doubled_value, self.diagnostic, self.clip))
        return f"{'|'.join(self.transforms)},{sched},{nums}"

    CSV_HEADER = "transforms,schedule,value,doubled_value,diagnostic,clip"


def _power(system, h, transforms, lengths, clips: list, threads: int = 1) -> float:
    if len(transforms) == 1:
        ser = multicorrelation_series(system, [S.conjugate(h), h], [transforms[0]], 0, lengths[0] - 1)
        v = float(np.mean(ser.values.real))
        if v < 0:
            clips.append(-v)
            return 0.0
        return v
    label, N = transforms[-1], lengths[-1]
    hbar = S.conjugate(h)

    def level(n):
        local: list = []
        g = S.pointwise_product(S.translate(system, label, int(n), h), hbar)
        return _power(system, g, transforms[:-1], lengths[:-1], local), local

    results = ordered_map(level, list(range(N)), threads)
    for _, local in results:
        clips.extend(local)
    return float(np.mean([r for r, _ in results]))


def _estimate(system, f, transforms, schedule, threads) -> tuple[float, float]:
    clips: list = []
    p = _power(system, f, tuple(transforms), schedule.lengths, clips, threads)
    return max(p, 0.0) ** (1.0 / 2 ** len(transforms)), max(clips, default=0.0)


def box_seminorm(system, f, transforms: Sequence[str], schedule: WindowSchedule | Sequence[int],
                 *, threads: int = 1) -> SeminormEstimate:
    """Estimate ``|||f|||_{T_1,...,T_d}`` and its doubling diagnostic."""
    if not isinstance(schedule, WindowSchedule):
        schedule = WindowSchedule(tuple(schedule))
    transforms = tuple(transforms)
    if len(transforms) > MAX_DEGREE:
        raise ValueError(f"degree above {MAX_DEGREE}")
    if len(transforms) != schedule.d:
        raise ValueError("schedule length must equal the number of transforms")
    for t in transforms:
        S._check_label(system, t)
    value, clip = _estimate(system, f, transforms, schedule, threads)
    doubled, clip2 = _estimate(system, f, transforms, schedule.doubled(), threads)
    diag = abs(value - doubled) / max(value, 1e-6)
    return SeminormEstimate(value, schedule, doubled, diag, max(clip, clip2), transforms)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(a, b, 1e-6)


@dataclass
class PermutationReport:
    estimates: dict[tuple[str, ...], SeminormEstimate]
    max_relative_difference: float


def permutation_check(system, f, transforms: Sequence[str], schedule, *, threads: int = 1) -> PermutationReport:
    """Seminorm estimates for every ordering of ``transforms``."""
    if len(transforms) not in (2, 3):
        raise ValueError("permutation check needs d = 2 or 3")
    ests = {}
    for perm in dict.fromkeys(itertools.permutations(transforms)):
        ests[perm] = box_seminorm(system, f, perm, schedule, threads=threads)
    vals = [e.value for e in ests.values()]
    worst = max((_rel(a, b) for a, b in itertools.combinations(vals, 2)), default=0.0)
    return PermutationReport(ests, worst)


@dataclass
class CollapseReport:
    refused: bool
    reason: str
    audit: list
    mixed: SeminormEstimate | None = None
    collapsed: dict[str, SeminormEstimate] = field(default_factory=dict)
    relative_differences: dict[str, float] = field(default_factory=dict)

    @property
    def max_relative_difference(self) -> float:
        return max(self.relative_differences.values(), default=0.0)


def ergodic_collapse_check(system, f, transforms: Sequence[str], schedule, *, threads: int = 1) -> CollapseReport:
    """Compare ``|||f|||_{T_1..T_d}`` with ``|||f|||_{T_i..T_i}`` for each i.

    Runs only when the ergodicity audit confirms every single transform.
    """
    audit = S.ergodicity_audit(system, [(t, "ergodic") for t in dict.fromkeys(transforms)])
    bad = [a.claim for a in audit if not a.passed]
    if bad:
        return CollapseReport(True, "ergodicity audit failed for " + ", ".join(bad), audit)
    mixed = box_seminorm(system, f, transforms, schedule, threads=threads)
    rep = CollapseReport(False, "", audit, mixed)
    for t in dict.fromkeys(transforms):
        est = box_seminorm(system, f, (t,) * len(transforms), schedule, threads=threads)
        rep.collapsed[t] = est
        rep.relative_differences[t] = _rel(mixed.value, est.value)
    return rep


@dataclass
class AverageBoundReport:
    average_norm: float
    seminorm: SeminormEstimate
    derived_transforms: tuple[str, ...]

    @property
    def slack(self) -> float:
        return self.seminorm.value - self.average_norm

    @property
    def holds(self) -> bool:
        return self.slack >= 0


def average_bound_check(system, observables: Sequence, transforms: Sequence[str], schedule, n_range,
                        *, threads: int = 1) -> AverageBoundReport:
    """L2 norm of ``mean_n prod S_i^n f_i`` against ``|||f_1|||_{T_1..T_d}``
    with ``T_1 = S_1`` and ``T_i = S_1 S_i^{-1}``."""
    if len(observables) != len(transforms):
        raise ValueError("one transform per observable")
    for i, f in enumerate(observables[1:], start=2):
        if f.bound > 1 + 1e-12:
            raise ValueError(f"observable {i} has bound {f.bound} > 1")
    s1 = transforms[0]
    derived = [s1]
    sys2 = system
    for si in transforms[1:]:
        name = f"{s1}*{si}^-1"
        sys2 = S.with_transform(sys2, name, {s1: 1, si: -1} if si != s1 else {s1: 0})
        derived.append(name)
    ns = np.arange(n_range[0], n_range[1], dtype=np.int64) if isinstance(n_range, tuple) else np.asarray(n_range)
    avg = ergodic_average(system, observables, transforms, ns)
    norm = S.l2_norm(system, avg)
    est = box_seminorm(sys2, observables[0], derived, schedule, threads=threads)
    return AverageBoundReport(norm, est, tuple(derived))
