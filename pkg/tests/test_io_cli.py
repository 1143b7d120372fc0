import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cqednet import cli, io
from cqednet import cqedparams as cp


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


# ------------------------------------------------------------------- configs

cfg_strategy = st.builds(
    io.ScenarioConfig,
    command=st.sampled_from(sorted(cli.COMMANDS)),
    seed=st.one_of(st.none(), st.integers(0, 2**32)),
    trials=st.one_of(st.none(), st.integers(1, 10**6)),
    workers=st.integers(1, 8),
    format=st.sampled_from(["csv", "json"]),
    preset=st.one_of(st.none(), st.sampled_from(["ideal", "paper2012"])),
    options=st.dictionaries(st.sampled_from(["xi", "points", "trials"]), st.integers(2, 100)),
    sweep=st.one_of(st.none(), st.builds(io.Sweep, parameter=st.just("delta"), start=st.floats(-50, 0),
                                         stop=st.floats(0, 50), points=st.integers(2, 500))),
)


@given(cfg_strategy)
def test_config_round_trip(cfg):
    text = io.json_text(cfg.to_dict())
    back = io.ScenarioConfig.from_dict(json.loads(text))
    assert back == cfg


def test_config_rejects_unknown_and_bad(tmp_path):
    with pytest.raises(io.ConfigError, match="unknown"):
        io.ScenarioConfig.from_dict({"command": "scan", "colour": 1})
    with pytest.raises(io.ConfigError):
        io.ScenarioConfig.from_dict({"command": "scan", "schema_version": 99})
    with pytest.raises(io.ConfigError):
        io.ScenarioConfig.from_dict({"command": "scan", "sweep": {"parameter": "d", "start": 0, "stop": 1, "points": 1}})
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(io.ConfigError):
        io.load_config(p)


# ----------------------------------------------------------------- writers

@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_floats_round_trip_exactly(xs):
    text = io.csv_text(["x"], [[x] for x in xs])
    assert "\r" not in text and text.endswith("\n")
    assert [float(line) for line in text.splitlines()[1:]] == xs


def test_csv_and_json_bytes(tmp_path):
    a = io.write_csv(tmp_path / "a.csv", ["x", "y"], [(0.1, 1), (np.float64(1 / 3), True)])
    assert a.read_bytes() == b"x,y\n0.10000000000000001,1\n0.33333333333333331,1\n"
    j = io.write_json(tmp_path / "a.json", {"b": 1, "a": np.arange(2)})
    assert j.read_bytes() == b'{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1\n}\n'
    with pytest.raises(ValueError):
        io.csv_text(["x"], [(1, 2)])


def test_unit_conversions():
    assert cli.MHZ == pytest.approx(2 * np.pi * 1e6, rel=1e-15)
    r = cp.RateSet.from_mhz(g=7.0, kappa_l=2.5, gamma=3.0)
    assert r.g == pytest.approx(4.398229715025710e7, rel=1e-14)
    assert r.to_mhz_dict()["kappa_l"] == pytest.approx(2.5, rel=1e-14)


# --------------------------------------------------------------------- CLI

def test_repeater_trivial(tmp_path, capsys):
    code, out = run(["--seed", 1, "--out", tmp_path, "repeater", "--segments", 1, "--p-link", 1, "--trials", 100],
                    capsys)
    assert code == 0
    assert json.loads(out.out)["mean_attempts"] == 1.0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert {e["path"] for e in man["outputs"]} == {"attempts_histogram.csv", "rate_estimate.json"}
    assert "duration_s" not in man and (tmp_path / "timing.json").exists()


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert run(["--out", tmp_path, "repeater"], capsys)[0] == cli.EXIT_CONFIG  # no seed
    assert run(["nosuchcommand"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["--out", tmp_path, "scan", "--points", 1], capsys)[0] == cli.EXIT_CONFIG
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["--seed", 0, "--out", blocker / "sub", "repeater", "--trials", 10], capsys)[0] == cli.EXIT_IO

    def boom(args, r):
        raise RuntimeError("solver diverged")

    monkeypatch.setitem(cli.COMMANDS, "scan", boom)
    code, out = run(["--out", tmp_path, "scan"], capsys)
    assert code == cli.EXIT_RUNTIME and "solver diverged" in out.err


def test_config_file_unknown_option(tmp_path, capsys):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"command": "scan", "options": {"nonsense": 3}}))
    assert run(["--config", c, "--out", tmp_path, "scan"], capsys)[0] == cli.EXIT_CONFIG
    c.write_text(json.dumps({"command": "hom"}))
    assert run(["--config", c, "--out", tmp_path, "scan"], capsys)[0] == cli.EXIT_CONFIG


def _outputs(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.json"}


@pytest.mark.parametrize("argv", [
    ["hom", "--trials", 20000, "--detuning", 2.0],
    ["protocol", "teleport", "--preset", "paper2013", "--trials", 50000],
    ["repeater", "--segments", 4, "--p-link", 0.3, "--cutoff", 4, "--trials", 20000],
    ["bsm", "--state", "PsiPlus", "--trials", 1000],
])
def test_manifest_config_reproduces_run(tmp_path, capsys, argv):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(["--seed", 42, "--out", a] + argv, capsys)[0] == 0
    cfg = tmp_path / "cfg.json"
    io.write_json(cfg, json.loads((a / "manifest.json").read_text())["config"])
    assert run(["--config", cfg, "--out", b, argv[0]] + argv[1:2] * (argv[0] == "protocol"), capsys)[0] == 0
    assert run(["--seed", 42, "--workers", 3, "--out", c] + argv, capsys)[0] == 0
    assert _outputs(a) == _outputs(b) == _outputs(c)


def test_json_format_flag(tmp_path, capsys):
    assert run(["--format", "json", "--out", tmp_path, "scan", "--points", 5], capsys)[0] == 0
    data = json.loads((tmp_path / "scan.json").read_text())
    assert len(data["R"]) == 5


def test_scan_empty_cavity_peak(tmp_path, capsys):
    rates = tmp_path / "r.json"
    rates.write_text(json.dumps({"g": 0.0, "kappa_l": 2.5, "kappa_r": 2.5, "gamma": 3.0}))
    code, out = run(["--out", tmp_path, "scan", "--rates", rates, "--from", -10, "--to", 10, "--points", 201], capsys)
    s = json.loads(out.out)
    assert code == 0 and s["max_T_detuning_over_2pi_MHz"] == pytest.approx(0.0, abs=0.1)
    assert s["max_T"] == pytest.approx(1.0, abs=1e-12)


def test_params_from_rates(tmp_path, capsys):
    f = tmp_path / "in.json"
    f.write_text(json.dumps({"rates": {"g": 7.0, "kappa_l": 2.5, "gamma": 3.0}}))
    code, out = run(["--out", tmp_path, "params", "--input", f], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "params.json").read_text())
    kappa = summary["rates_over_2pi_MHz"]["kappa_l"] + summary["rates_over_2pi_MHz"].get("kappa_r", 0.0)
    assert summary["cooperativity"] == pytest.approx(49 / (2 * kappa * 3.0), rel=1e-12)


def test_tomo_and_bayes(tmp_path, capsys):
    from cqednet import estimate as E

    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    rows = [(r.setting, k, v * 1000) for r in E.exact_records(np.outer(psi, psi)) for k, v in r.counts.items()]
    f = io.write_csv(tmp_path / "counts.csv", ["setting", "outcome", "count"], rows)
    code, out = run(["--out", tmp_path / "t", "tomo", "--input", f], capsys)
    assert code == 0 and json.loads(out.out)["purity"] == pytest.approx(1.0, abs=1e-9)

    g = io.write_csv(tmp_path / "clicks.csv", ["counts"], [[k] for k in [2, 1, 0, 1, 2, 0, 1]])
    code, out = run(["--out", tmp_path / "b", "bayes", "--input", g, "--base-rate-per-us", 0.2], capsys)
    assert code == 0 and json.loads(out.out)["bins"] == 7
    header, body = io.read_csv(tmp_path / "b" / "posterior.csv")
    assert header[:4] == ["bin", "p_alpha0", "p_alpha1", "p_alpha2"]
    for r in body:
        assert sum(float(x) for x in r[1:4]) == pytest.approx(1.0, abs=1e-12)
