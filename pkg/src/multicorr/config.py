"""INI experiment configs: systems, observables and per-command sections.

Layout::

    [system]
    type = torus            # torus | cat | product
    dim = 1
    T = sqrt2               # every other key is a transform label
    S = sqrt3

    [observable.f]
    kind = trigpoly         # trigpoly | arc | grid | constant | tensor
    terms = 1 : 0.5; -1 : 0.5

Products list their factors (``factors = a, b``) defined in ``[factor.a]``
sections of the same form as ``[system]``.  Errors carry the line number of
the offending key.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import systems as S
from .arcs import ArcSet

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_terms", "parse_arcs"]

_SYSTEM_KEYS = {"type", "dim", "q", "factors"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str = "<config>"):
        self.line = line
        where = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(where + message)


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """Line numbers of section headers and keys."""
    out: dict[tuple[str, str | None], int] = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = i
        elif section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            out.setdefault((section, key), i)
    return out


def parse_terms(text: str) -> dict[tuple[int, ...], complex]:
    """``"1,0 : 0.5; 0,1 : 0.5+0.1j"`` -> ``{(1, 0): 0.5, (0, 1): 0.5+0.1j}``."""
    terms: dict[tuple[int, ...], complex] = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        freq, _, coef = chunk.partition(":")
        if not coef.strip():
            raise ValueError(f"term {chunk!r} needs 'frequency : coefficient'")
        k = tuple(int(x) for x in freq.split(","))
        terms[k] = terms.get(k, 0j) + complex(coef.replace(" ", ""))
    if not terms:
        raise ValueError("no terms given")
    return terms


def parse_arcs(text: str) -> list[ArcSet]:
    """``"0 : 3/10, 1/2 : 3/5 | 0 : 1"``: arcs per coordinate, coordinates split by ``|``."""
    out = []
    for coord in text.split("|"):
        pieces = []
        for arc in coord.split(","):
            arc = arc.strip()
            if not arc:
                continue
            a, _, b = arc.partition(":")
            pieces.append((a.strip(), b.strip()))
        out.append(ArcSet.from_intervals([(Fraction(a), Fraction(b)) for a, b in pieces]))
    return out


def _split(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    path: str
    text: str
    parser: configparser.ConfigParser
    lines: dict
    overrides: dict = field(default_factory=dict)

    # -- access -------------------------------------------------------------

    def error(self, message: str, section: str, key: str | None = None) -> ConfigError:
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return ConfigError(message, line, self.path)

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def get(self, section: str, key: str, default=None, *, required: bool = True) -> str:
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        if default is not None or not required:
            return default
        if not self.parser.has_section(section):
            raise ConfigError(f"missing section [{section}]", None, self.path)
        raise self.error(f"missing key {key!r} in [{section}]", section)

    def convert(self, section: str, key: str, fn, default=None):
        """Parse ``section.key`` with fn; a string default is parsed the same way."""
        raw = self.get(section, key, default)
        try:
            return fn(raw)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise self.error(f"bad value for {key!r}: {exc}", section, key) from None

    def integer(self, section, key, default=None):
        return self.convert(section, key, int, default)

    def real(self, section, key, default=None):
        return self.convert(section, key, float, default)

    def names(self, section, key, default=None) -> list[str]:
        return self.convert(section, key, _split, default)

    def ints(self, section, key, default=None) -> list[int]:
        return self.convert(section, key, lambda s: [int(x) for x in _split(s)], default)

    # -- identity -----------------------------------------------------------

    @property
    def digest(self) -> str:
        h = hashlib.sha256(self.text.encode())
        for k in sorted(self.overrides):
            h.update(f"\n{k}={self.overrides[k]}".encode())
        return h.hexdigest()[:16]

    @property
    def seed(self) -> int:
        if "seed" in self.overrides:
            return int(self.overrides["seed"])
        return self.integer("run", "seed", "0") if self.has("run") else 0

    # -- systems and observables -------------------------------------------

    def _factor(self, section: str):
        kind = self.get(section, "type").strip().lower()
        labels = [k for k in self.parser.options(section) if k not in _SYSTEM_KEYS]
        raw = {k: self.parser.get(section, k) for k in labels}
        try:
            if kind == "torus":
                dim = self.integer(section, "dim", "1")
                return S.TorusSystem(dim, {k: _split(v) for k, v in raw.items()})
            if kind == "cat":
                q = self.integer(section, "q")
                return S.CatMapSystem(q, {k: int(v) for k, v in raw.items()} or {"T": 1})
        except ConfigError:
            raise
        except ValueError as exc:
            raise self.error(str(exc), section, labels[0] if labels else "type") from None
        raise self.error(f"unknown system type {kind!r}", section, "type")

    def system(self):
        sec = "system"
        if not self.has(sec):
            raise ConfigError("missing section [system]", None, self.path)
        kind = self.get(sec, "type").strip().lower()
        if kind == "product":
            parts = []
            for name in self.names(sec, "factors"):
                fsec = f"factor.{name}"
                if not self.has(fsec):
                    raise self.error(f"factor {name!r} has no [{fsec}] section", sec, "factors")
                parts.append(self._factor(fsec))
            return S.ProductSystem(tuple(parts))
        return self._factor(sec)

    def observable(self, name: str, system=None, *, referrer: tuple[str, str] | None = None):
        sec = f"observable.{name}"
        if not self.has(sec):
            if referrer:
                raise self.error(f"observable {name!r} is not defined", *referrer)
            raise ConfigError(f"observable {name!r} is not defined", None, self.path)
        kind = self.get(sec, "kind").strip().lower()
        try:
            if kind == "trigpoly":
                return S.TrigPoly(parse_terms(self.get(sec, "terms")))
            if kind == "constant":
                return S.constant(system, complex(self.get(sec, "value", "1").replace(" ", "")))
            if kind == "arc":
                return S.ArcIndicator(tuple(parse_arcs(self.get(sec, "arcs"))))
            if kind == "grid":
                poly = S.TrigPoly(parse_terms(self.get(sec, "terms")))
                cats = [f for f in S.factors_of(system) if isinstance(f, S.CatMapSystem)]
                if not cats:
                    raise ValueError("grid observables need a cat-map factor")
                return S.to_grid_table(cats[0], poly)
            if kind == "tensor":
                return S.Tensor(tuple(self.observable(p, system, referrer=(sec, "parts"))
                                      for p in self.names(sec, "parts")))
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise self.error(f"observable {name!r}: {exc}", sec, "terms" if self.has(sec, "terms") else "kind") from None
        raise self.error(f"unknown observable kind {kind!r}", sec, "kind")

    def observables(self, section: str, key: str, system) -> list:
        return [self.observable(n, system, referrer=(section, key)) for n in self.names(section, key)]


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = str(path)
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # transform labels are case-sensitive
    try:
        parser.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", exc.lineno, path) from None
    except configparser.ParsingError as exc:
        line, bad = exc.errors[0]
        raise ConfigError(f"cannot parse {bad.strip()!r}", line, path) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.lineno, path) from None
    clean = {k: v for k, v in (overrides or {}).items() if v is not None}
    return ExperimentConfig(path, text, parser, _line_index(text), clean)
