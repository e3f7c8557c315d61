"""Command-line experiment runner.

Every command reads an INI config, writes CSVs plus ``summary.txt`` into the
output directory, and embeds the config hash and seed in every CSV header.
``--threads`` changes speed only: chunking is fixed, so CSV bodies are
byte-identical for any worker count.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import systems as S
from .config import ConfigError, ExperimentConfig, load_config, parse_arcs
from .correlation import CorrelationSeries, besicovitch_estimate, multicorrelation_series, null_verdict
from .numbers import IrrationalSpec, phase_exp

log = logging.getLogger("multicorr")

COMMANDS = ("correlate", "gowers", "seminorm", "spectral", "kronecker-decompose", "nil-orbit",
            "large-returns", "primes-returns", "compare-primes")


@dataclass
class Run:
    command: str
    cfg: ExperimentConfig
    out: Path
    threads: int
    results: dict = field(default_factory=dict)
    audit: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def header(self) -> str:
        return f"command={self.command} config={self.cfg.digest} seed={self.cfg.seed} version={__version__}"

    def path(self, name: str) -> Path:
        return self.out / name

    def write_rows(self, name: str, columns: str, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            fh.write(f"# {self.header}\n{columns}\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")

    def record_audit(self, entries, required: bool = True) -> bool:
        ok = True
        for a in entries:
            self.audit.append(a)
            if not a.passed:
                ok = False
                if required:
                    self.warnings.append(f"audit {a.claim} expected {a.expected}: {a.verdict}")
        return ok

    def summary(self) -> None:
        lines = [
            f"command = {self.command}",
            f"version = {__version__}",
            f"config_hash = {self.cfg.digest}",
            f"seed = {self.cfg.seed}",
        ]
        for a in self.audit:
            lines.append(f"audit.{a.claim} = {a.verdict}")
        lines.append(f"warnings = {len(self.warnings)}")
        for i, w in enumerate(self.warnings, start=1):
            lines.append(f"warning.{i} = {w}")
        for k, v in self.results.items():
            lines.append(f"{k} = {_fmt(v)}")
        self.path("summary.txt").write_text("\n".join(lines) + "\n")


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _override(run: Run, key: str, section: str, name: str, conv, default=None):
    """Value of ``section.name`` unless the flag ``key`` overrides it."""
    v = run.cfg.overrides.get(key)
    if v is not None:
        return conv(v)
    return run.cfg.convert(section, name, conv, default)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_correlate(run: Run) -> None:
    cfg, sec = run.cfg, "correlate"
    system = cfg.system()
    obs = cfg.observables(sec, "observables", system)
    transforms = cfg.names(sec, "transforms")
    n_min = cfg.integer(sec, "n_min", "0")
    n_max = _override(run, "nmax", sec, "n_max", int)
    series = multicorrelation_series(system, obs, transforms, n_min, n_max, threads=run.threads)
    series.to_csv(run.path("correlation.csv"), run.header)
    if cfg.has(sec, "audit"):
        run.record_audit(S.ergodicity_audit(system, [(c, "ergodic") for c in cfg.names(sec, "audit")]))
    from .spectral import power_of_two_lengths

    if len(series) >= 8:
        rep = besicovitch_estimate(series, power_of_two_lengths(len(series)))
        rep.to_csv(run.path("besicovitch.csv"), run.header)
        run.results["besicovitch_last"] = rep.values[-1]
        run.results["verdict"] = null_verdict(rep).verdict
    run.results.update(n_min=n_min, n_max=n_max, abs_max=float(np.max(np.abs(series.values))))


def _gowers_function(run: Run):
    from .gowers import CyclicFunction

    cfg, sec = run.cfg, "gowers"
    if cfg.has(sec, "values"):
        return CyclicFunction(cfg.convert(sec, "values", lambda s: [complex(x.replace(" ", "")) for x in s.split(",")]))
    if cfg.has(sec, "file"):
        path = Path(cfg.get(sec, "file"))
        if not path.is_absolute():
            path = Path(cfg.path).parent / path
        return CyclicFunction.from_csv(path)
    N = cfg.integer(sec, "random")
    rng = np.random.default_rng(cfg.seed)
    z = rng.normal(size=N) + 1j * rng.normal(size=N)
    return CyclicFunction(z / np.maximum(1.0, np.abs(z)))


def cmd_gowers(run: Run) -> None:
    from .gowers import gowers_parallelepiped, gowers_recursive

    cfg, sec = run.cfg, "gowers"
    f = _gowers_function(run)
    ds = cfg.ints(sec, "d", "2")
    method = cfg.get(sec, "method", "auto").strip()
    rows = []
    for d in ds:
        if method == "parallelepiped":
            norm = gowers_parallelepiped(f, d)
        else:
            norm = gowers_recursive(f, d, method)
        rows.append((f.N, d, norm, method))
        run.results[f"norm_d{d}"] = norm
    run.write_rows("gowers.csv", "N,d,norm,method", rows)
    run.write_rows("function.csv", "n,re,im", ((n, v.real, v.imag) for n, v in enumerate(f.values)))
    run.results["N"] = f.N
    run.results["norm"] = rows[-1][2]


def cmd_seminorm(run: Run) -> None:
    from .seminorms import (SeminormEstimate, WindowSchedule, average_bound_check, box_seminorm,
                            ergodic_collapse_check, permutation_check)

    cfg, sec = run.cfg, "seminorm"
    system = cfg.system()
    f = cfg.observable(cfg.get(sec, "observable").strip(), system, referrer=(sec, "observable"))
    transforms = cfg.names(sec, "transforms")
    if run.cfg.overrides.get("window") is not None:
        schedule = WindowSchedule((int(run.cfg.overrides["window"]),) * len(transforms))
    else:
        schedule = WindowSchedule(tuple(cfg.ints(sec, "schedule")))
    checks = cfg.names(sec, "checks", "")
    est = box_seminorm(system, f, transforms, schedule, threads=run.threads)
    rows = [est.csv_row()]
    run.results.update(value=est.value, doubled_value=est.doubled_value, diagnostic=est.diagnostic, clip=est.clip)
    if "permutation" in checks:
        rep = permutation_check(system, f, transforms, schedule, threads=run.threads)
        rows += [e.csv_row() for e in rep.estimates.values()]
        run.results["permutation_max_relative_difference"] = rep.max_relative_difference
    if "collapse" in checks:
        rep = ergodic_collapse_check(system, f, transforms, schedule, threads=run.threads)
        run.record_audit(rep.audit)
        if rep.refused:
            run.results["collapse"] = f"refused: {rep.reason}"
        else:
            rows += [e.csv_row() for e in rep.collapsed.values()]
            run.results["collapse_max_relative_difference"] = rep.max_relative_difference
    if "average-bound" in checks:
        obs = cfg.observables(sec, "average_observables", system)
        ts = cfg.names(sec, "average_transforms")
        n = cfg.integer(sec, "average_n", "4096")
        rep = average_bound_check(system, obs, ts, schedule, (0, n), threads=run.threads)
        rows.append(rep.seminorm.csv_row())
        run.results.update(average_norm=rep.average_norm, average_bound_slack=rep.slack,
                           average_bound_holds=rep.holds)
    with open(run.path("seminorm.csv"), "w", newline="") as fh:
        fh.write(f"# {run.header}\n{SeminormEstimate.CSV_HEADER}\n")
        fh.write("\n".join(rows) + "\n")


def _synthetic_series(run: Run, length: int) -> CorrelationSeries:
    """``sum_j c_j e(n theta_j) + decay * (n+1)^(-1/2)`` with exact phases."""
    cfg, sec = run.cfg, "spectral"
    ns = np.arange(length, dtype=np.int64)
    vals = np.zeros(length, dtype=np.complex128)
    for chunk in cfg.get(sec, "atoms", "").split(";"):
        if not chunk.strip():
            continue
        theta, _, mass = chunk.partition(":")
        try:
            spec = IrrationalSpec.parse(theta.strip())
            c = complex(mass.replace(" ", ""))
        except ValueError as exc:
            raise cfg.error(f"bad atom {chunk.strip()!r}: {exc}", sec, "atoms") from None
        vals += c * phase_exp(spec.fixed, ns)
    decay = cfg.real(sec, "decay", "0")
    if decay:
        vals += decay / np.sqrt(ns + 1.0)
    return CorrelationSeries(0, length - 1, vals, "synthetic")


def cmd_spectral(run: Run) -> None:
    from .correlation import AveragingWindow
    from .spectral import detect_atoms, herglotz_decompose, wiener_energy_check

    cfg, sec = run.cfg, "spectral"
    source = cfg.get(sec, "source", "synthetic").strip()
    length = _override(run, "nmax", sec, "length", int, "65536")
    if source == "synthetic":
        series = _synthetic_series(run, length)
    elif source == "correlate":
        system = cfg.system()
        obs = cfg.observables("correlate", "observables", system)
        series = multicorrelation_series(system, obs, cfg.names("correlate", "transforms"), 0, length - 1,
                                         threads=run.threads)
    else:
        raise cfg.error(f"unknown source {source!r}", sec, "source")
    W = _override(run, "window", sec, "window", int, str(length))
    window = AveragingWindow(0, min(W, length))
    est = detect_atoms(series, window, density=cfg.get(sec, "density", "no").strip() == "yes")
    split = herglotz_decompose(series, window)
    energy = wiener_energy_check(series, est, window)
    est.atoms_csv(run.path("atoms.csv"))
    _prepend_header(run.path("atoms.csv"), run.header)
    if len(est.density):
        est.density_csv(run.path("density.csv"))
        _prepend_header(run.path("density.csv"), run.header)
    split.besicovitch.to_csv(run.path("besicovitch.csv"), run.header)
    run.results.update(atoms=len(est.atoms), residual_energy=est.residual_energy, energy_gap=energy.gap,
                       verdict=split.verdict.verdict, window=window.length)
    for i, a in enumerate(est.atoms, start=1):
        run.results[f"atom.{i}"] = f"theta={float(a.theta)!r} mass={float(a.mass)!r}"


def _prepend_header(path: Path, header: str) -> None:
    body = path.read_text()
    path.write_text(f"# {header}\n{body}")


def cmd_kronecker(run: Run) -> None:
    from .kronecker import average_vs_limit, decompose, kronecker_factor, orbit_closure

    cfg, sec = run.cfg, "kronecker"
    system = cfg.system()
    f0, f1, f2 = cfg.observables(sec, "observables", system)
    T, S_ = cfg.get(sec, "T", "T").strip(), cfg.get(sec, "S", "S").strip()
    n_max = _override(run, "nmax", sec, "n_max", int, "65536")
    factor = kronecker_factor(system, T, S_)
    run.record_audit(S.ergodicity_audit(system, [(T, "ergodic"), (S_, "ergodic"), (f"{T}*{S_}^-1", "ergodic")]))
    dec = decompose(system, f0, f1, f2, factor, (0, n_max), threads=run.threads)
    dec.to_csv(run.path("decomposition.csv"), run.header)
    dec.besicovitch.to_csv(run.path("besicovitch.csv"), run.header)
    recon = float(np.max(np.abs(dec.a.values - dec.a_st.values - dec.a_er.values)))
    run.results.update(n_max=n_max, reconstruction_error=recon, besicovitch_last=dec.besicovitch.values[-1],
                       verdict=dec.verdict.verdict)
    if cfg.has(sec, "limit_n"):
        rel = cfg.convert(sec, "relations", lambda s: [[int(x) for x in r.split(",")] for r in s.split(";") if r.strip()], "")
        Y = orbit_closure(factor, rel or [])
        rep = average_vs_limit(system, f1, f2, factor, Y, cfg.integer(sec, "limit_n"))
        run.results["limit_distance"] = rep.distance


def cmd_nil(run: Run) -> None:
    from ._parallel import chunks, ordered_map
    from .nil import NilObservable, equidistribution_report, orbit

    cfg, sec = run.cfg, "nil"
    a = cfg.names(sec, "a")
    x0_raw = cfg.get(sec, "x0", "0, 0, 0").strip()
    if x0_raw == "random":
        x0 = [float(v) for v in np.random.default_rng(cfg.seed).random(3)]
    else:
        x0 = _split_tokens(x0_raw)
    if len(a) != 3 or len(x0) != 3:
        raise cfg.error("a and x0 need three coordinates", sec, "a")
    N = _override(run, "nmax", sec, "n_max", int, "10000")
    f = NilObservable.trigpoly(S.TrigPoly(_terms(cfg, sec))) if cfg.has(sec, "terms") else None
    parts = ordered_map(lambda c: orbit(a, x0, c), chunks(np.arange(N, dtype=np.int64)), run.threads)
    pts = np.concatenate(parts)
    vals = f(pts) if f is not None else np.zeros(N, dtype=np.complex128)
    run.write_rows("orbit.csv", "n,x,y,z,f_re,f_im",
                   ((n, p[0], p[1], p[2], v.real, v.imag) for n, (p, v) in enumerate(zip(pts, vals))))
    rep = equidistribution_report(a, x0, N, bins=cfg.integer(sec, "bins", "16"))
    run.write_rows("weyl.csv", "j,k,weyl_re,weyl_im", ((j, k, v.real, v.imag) for (j, k), v in rep.weyl.items()))
    run.results.update(N=N, max_weyl=rep.max_weyl, chi_square=rep.chi_square, dof=rep.dof)


def _split_tokens(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _terms(cfg, sec):
    from .config import parse_terms

    return cfg.convert(sec, "terms", parse_terms)


def _returns_inputs(run: Run):
    cfg, sec = run.cfg, "returns"
    A = cfg.convert(sec, "A", lambda s: parse_arcs(s)[0])
    alpha = cfg.convert(sec, "alpha", IrrationalSpec.parse)
    beta = cfg.convert(sec, "beta", IrrationalSpec.parse)
    eps = _override(run, "eps", sec, "eps", str)
    return A, alpha, beta, eps


def cmd_large_returns(run: Run) -> None:
    from .returns import scan_large_returns

    cfg, sec = run.cfg, "returns"
    A, alpha, beta, eps = _returns_inputs(run)
    n_max = _override(run, "nmax", sec, "n_max", int)
    rep = scan_large_returns(A, alpha, beta, n_max, eps, threads=run.threads)
    run.record_audit(rep.audit)
    run.warnings += rep.labels
    rep.to_csv(run.path("returns.csv"), run.header)
    run.results.update(rep.summary())
    run.results.update(count=rep.count, n_max=n_max, jensen_holds=rep.jensen_holds)
    if cfg.get(sec, "doubling", "no").strip() == "yes":
        rep2 = scan_large_returns(A, alpha, beta, 2 * n_max, eps, threads=run.threads)
        run.results["max_gap_doubled"] = rep2.max_gap
        run.results["max_gap_stable"] = rep.max_gap is not None and rep2.max_gap is not None and rep2.max_gap <= rep.max_gap


def _tables(run: Run, sec: str, limit: int):
    from .primes import cached_sieve

    cache = run.cfg.get(sec, "cache_dir", "", required=False) or None
    return cached_sieve(limit, cache)


def cmd_primes_returns(run: Run) -> None:
    import math

    from .returns import shifted_prime_returns

    cfg, sec = run.cfg, "returns"
    A, alpha, beta, eps = _returns_inputs(run)
    count = _override(run, "nmax", sec, "primes", int)
    sign = cfg.integer(sec, "sign", "-1")
    n = max(count, 6)
    tables = _tables(run, sec, int(n * (math.log(n) + math.log(math.log(n)))) + 10)
    rep = shifted_prime_returns(A, alpha, beta, count, eps, tables, sign=sign, threads=run.threads)
    run.record_audit(rep.audit)
    if not rep.hypotheses_verified:
        run.warnings.append("unconditional-hypotheses-unverified")
    rep.to_csv(run.path("primes_returns.csv"), run.header)
    run.results.update(count=count, shift=sign, fraction=rep.fraction, lower_density_proxy=rep.lower_density_proxy,
                       threshold=float(rep.threshold))


def cmd_compare_primes(run: Run) -> None:
    from .primes import primorial_w
    from .returns import prime_average_compare, wtrick_average_compare

    cfg, sec = run.cfg, "primes"
    Ns = cfg.ints(sec, "N", "1000, 10000, 100000")
    if run.cfg.overrides.get("nmax") is not None:
        Ns = [N for N in Ns if N <= int(run.cfg.overrides["nmax"])] or [int(run.cfg.overrides["nmax"])]
    theta = cfg.convert(sec, "theta", IrrationalSpec.parse, "sqrt2")
    w = cfg.integer(sec, "w", "5")
    W, _ = primorial_w(w)
    wNs = cfg.ints(sec, "wtrick_N", "") if cfg.has(sec, "wtrick_N") else []
    limit = max([max(Ns)] + [W * N + W for N in wNs])
    tables = _tables(run, sec, limit)
    ns = np.arange(max(Ns), dtype=np.int64)
    a = phase_exp(theta.fixed, ns) if theta.fixed else np.ones(len(ns), dtype=np.complex128)
    rows = prime_average_compare(a, Ns, tables)
    run.write_rows("compare.csv", "N,prime_re,prime_im,mangoldt_re,mangoldt_im,difference",
                   ((r.N, r.prime_average.real, r.prime_average.imag, r.mangoldt_average.real,
                     r.mangoldt_average.imag, r.difference) for r in rows))
    for r in rows:
        run.results[f"difference_N{r.N}"] = r.difference
    if wNs:
        system = cfg.system()
        f, g = cfg.observables(sec, "observables", system)
        T, S_ = cfg.get(sec, "T", "T").strip(), cfg.get(sec, "S", "S").strip()
        wrows = wtrick_average_compare(system, f, g, w, wNs, tables, (T, S_))
        run.write_rows("wtrick.csv", "N,r,difference",
                       ((row.N, r, d) for row in wrows for r, d in sorted(row.differences.items())))
        for row in wrows:
            run.results[f"wtrick_max_N{row.N}"] = row.max_difference


HANDLERS = {
    "correlate": cmd_correlate,
    "gowers": cmd_gowers,
    "seminorm": cmd_seminorm,
    "spectral": cmd_spectral,
    "kronecker-decompose": cmd_kronecker,
    "nil-orbit": cmd_nil,
    "large-returns": cmd_large_returns,
    "primes-returns": cmd_primes_returns,
    "compare-primes": cmd_compare_primes,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multicorr", description="Multicorrelation experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI experiment config")
        sp.add_argument("--out", default=None, help="output directory (default: [run] out, else ./out)")
        sp.add_argument("--nmax", type=int, default=None, help="override the command's range or count")
        sp.add_argument("--window", type=int, default=None, help="override the averaging window")
        sp.add_argument("--eps", type=str, default=None, help="override epsilon (exact decimal)")
        sp.add_argument("--seed", type=int, default=None, help="seed for sampled inputs")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"nmax": args.nmax, "window": args.window, "eps": args.eps, "seed": args.seed}
    try:
        cfg = load_config(args.config, overrides)
        out = Path(args.out or (cfg.get("run", "out", required=False) if cfg.has("run") else None) or "out")
        out.mkdir(parents=True, exist_ok=True)
        r = Run(args.command, cfg, out, max(1, args.threads))
        HANDLERS[args.command](r)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    r.summary()
    for w in r.warnings:
        log.warning(w)
    return 0


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
