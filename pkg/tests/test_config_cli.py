from __future__ import annotations

import pytest

from _configs import SMALL, bodies, write
from multicorr import cli
from multicorr.config import ConfigError, load_config, parse_arcs, parse_terms


def summary(out):
    lines = (out / "summary.txt").read_text().splitlines()
    return dict(l.split(" = ", 1) for l in lines)


def test_parse_terms_and_arcs():
    assert parse_terms("1,0 : 0.5; 0,1 : 0.5+0.1j; 1,0 : 0.25") == {(1, 0): 0.75, (0, 1): 0.5 + 0.1j}
    with pytest.raises(ValueError):
        parse_terms("1,0")
    arcs = parse_arcs("0 : 3/10, 1/2 : 3/5 | 0 : 1")
    assert [float(a.measure) for a in arcs] == [0.4, 1.0]


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[system]\ntype = torus\nthis line has no separator\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.line == 3 and ":3:" in str(exc.value)


def test_bad_value_reports_line(tmp_path):
    p = write(tmp_path, "correlate", SMALL["correlate"].replace("n_max = 1023", "n_max = many"))
    cfg = load_config(p)
    with pytest.raises(ConfigError) as exc:
        cfg.integer("correlate", "n_max")
    assert exc.value.line == cfg.lines[("correlate", "n_max")]


def test_unresolved_observable(tmp_path, capsys):
    p = write(tmp_path, "correlate", SMALL["correlate"].replace("f0, f1, f1", "f0, f1, nope"))
    assert cli.run(["correlate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    line = p.read_text().splitlines().index("observables = f0, f1, nope") + 1
    assert "'nope' is not defined" in err and f":{line}:" in err


def test_duplicate_key(tmp_path):
    p = tmp_path / "dup.ini"
    p.write_text("[a]\nx = 1\nx = 2\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.line == 3


def test_digest_tracks_overrides(tmp_path):
    p = write(tmp_path, "gowers")
    a, b = load_config(p), load_config(p, {"seed": 4})
    assert a.digest != b.digest and a.seed == 3 and b.seed == 4


def test_gowers_point_mass(tmp_path):
    p = write(tmp_path, "gowers", "[gowers]\nvalues = 1, 0, 0, 0\nd = 2\n")
    out = tmp_path / "o"
    assert cli.run(["gowers", "--config", str(p), "--out", str(out)]) == 0
    assert abs(float(summary(out)["norm"]) - 4 ** -0.75) <= 1e-12


def test_correlate_constants_all_ones(tmp_path):
    text = SMALL["correlate"].replace("terms = 0 : 0.5; -2 : 0.5", "terms = 0 : 1").replace("terms = 1 : 1", "terms = 0 : 1")
    p = write(tmp_path, "correlate", text)
    out = tmp_path / "o"
    assert cli.run(["correlate", "--config", str(p), "--out", str(out), "--nmax", "50"]) == 0
    rows = bodies(out)["correlation.csv"]
    assert rows[0] == "n,re,im" and len(rows) == 52
    assert all(r.split(",")[1:] == ["1.0", "0.0"] for r in rows[1:])


def test_large_returns_degenerate_threshold(tmp_path):
    p = write(tmp_path, "large-returns")
    out = tmp_path / "o"
    assert cli.run(["large-returns", "--config", str(p), "--out", str(out), "--eps", "0.05", "--nmax", "500"]) == 0
    s = summary(out)
    assert float(s["density"]) == 1.0 and s["max_gap"] == "1"
    rows = bodies(out)["returns.csv"]
    assert all(r.endswith(",1") for r in rows[1:])


def test_audit_failure_becomes_warning(tmp_path):
    p = write(tmp_path, "correlate", SMALL["correlate"].replace("T = sqrt2", "T = 1/4"))
    out = tmp_path / "o"
    assert cli.run(["correlate", "--config", str(p), "--out", str(out), "--nmax", "16"]) == 0
    s = summary(out)
    assert int(s["warnings"]) >= 1 and s["audit.T"] != "pass"


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_command_writes_summary(tmp_path, command):
    p = write(tmp_path, command)
    out = tmp_path / "o"
    assert cli.run([command, "--config", str(p), "--out", str(out)]) == 0
    s = summary(out)
    for key in ("command", "version", "config_hash", "seed", "warnings"):
        assert key in s
    assert s["command"] == command and s["config_hash"] == load_config(p).digest
    csvs = list(out.glob("*.csv"))
    assert csvs
    for c in csvs:
        first = c.read_text().splitlines()[0]
        assert f"seed={s['seed']}" in first or not first.startswith("#")


@pytest.mark.parametrize("command", ["correlate", "large-returns", "kronecker-decompose", "nil-orbit"])
def test_thread_count_does_not_change_csvs(tmp_path, command):
    p = write(tmp_path, command)
    assert cli.run([command, "--config", str(p), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert cli.run([command, "--config", str(p), "--out", str(tmp_path / "b"), "--threads", "4"]) == 0
    assert bodies(tmp_path / "a") == bodies(tmp_path / "b")


def test_missing_config_section(tmp_path, capsys):
    p = write(tmp_path, "gowers", "[run]\nseed = 1\n")
    assert cli.run(["gowers", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
