import json
import os

import numpy as np
import pytest

from mfexcite import cli
from mfexcite.config import ScenarioError, format_config, parse_config
from mfexcite.presets import load_preset, preset_names, round_trip_ok

GOOD = """\
# small reduced run
[scenario]
name = tiny

[model]
name = cucker_smale
d = 1

[coupling]
k = 1
sigma2 = 0.2
delta = 1.0

[run]
mode = reduced
dt = 0.01
t_end = 60
record_every = 100
m0 = 0.5

[output]
dir = out
prefix = tiny
"""


def test_fig_u02_preset_values():
    cfg = load_preset("fig_u02")
    p = cfg.model.param_dict
    assert cfg.model.name == "fhn"
    assert (p["a"], p["b"], p["tau"]) == pytest.approx((1 / 3, 1.0, 10.0))
    assert cfg.coupling.k == (1.0, 1.0) and cfg.coupling.sigma2 == pytest.approx((0.2, 0.2))
    assert cfg.coupling.delta == 0.2 and cfg.run.N == 50_000 and cfg.run.t_end == 800.0


def test_sl_cycle_preset_values():
    cfg = load_preset("fig_SL_cycle")
    p = cfg.model.param_dict
    assert cfg.model.name == "stuart_landau_modified"
    assert (p["omega"], p["b"]) == (1.0, 1.01)
    assert cfg.coupling.noise_key == "sigma" and cfg.coupling.noise == (0.3, 0.3) and cfg.coupling.k == (1.0, 1.0)
    assert cfg.coupling.delta == 0.5 and cfg.run.N == 20_000


@pytest.mark.parametrize("name", preset_names())
def test_preset_round_trip(name):
    assert round_trip_ok(name)
    cfg = load_preset(name)
    assert format_config(parse_config(format_config(cfg))) == format_config(cfg)


def test_all_errors_reported_with_lines():
    bad = GOOD.replace("sigma2 = 0.2", "sigma2 = lots").replace("mode = reduced", "mode = particles")
    bad = bad.replace("dt = 0.01\n", "").replace("[output]", "[output]\ncolour = red")
    with pytest.raises(ScenarioError) as ei:
        parse_config(bad)
    msgs = [m for _, m in ei.value.errors]
    assert any("run.dt required" in m for m in msgs)
    assert any("sigma2" in m for m in msgs)
    assert any("colour" in m for m in msgs)
    assert all(isinstance(ln, int) for ln, _ in ei.value.errors)
    assert ei.value.to_dict()["kind"] == "config"


def test_overrides_and_seed_default():
    cfg = parse_config(GOOD, ["run.t_end=5", "coupling.delta=0.5"])
    assert cfg.run.t_end == 5.0 and cfg.coupling.delta == 0.5 and cfg.run.seed == 0
    with pytest.raises(ScenarioError) as ei:
        parse_config(GOOD, ["run.t_end=soon"])
    assert ei.value.errors[0][0] == "override[0]"


def test_unknown_model():
    with pytest.raises(ScenarioError):
        parse_config(GOOD.replace("cucker_smale", "kuramoto"))


def _run(argv, capsys):
    code = cli.main(argv)
    return code, json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_cli_reduced_cucker_smale(tmp_path, capsys):
    code, out = _run(["run", "--preset", "cs_reduced", "--out", str(tmp_path)], capsys)
    assert code == 0 and out["status"] == "ok"
    summary = json.load(open(tmp_path / "cs_reduced_summary.json"))
    assert set(summary) >= {"scenario", "seed", "cycles", "bifurcations", "diagnostics", "timing"}
    assert summary["diagnostics"]["reduced_terminal_norm"] == pytest.approx(np.sqrt(0.4), abs=1e-4)
    # manifest is complete and exact
    assert sorted(out["files"]) == sorted(os.listdir(tmp_path))


def test_cli_byte_identical_rerun(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text(GOOD.replace("mode = reduced", "mode = both").replace("t_end = 60", "t_end = 2")
                   + "")
    args = ["run", "--config", str(cfg), "--override", "run.N=300", "--seed", "4"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for f in ("tiny_particles.csv", "tiny_reduced.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    s = json.load(open(tmp_path / "a" / "tiny_summary.json"))
    assert s["seed"] == 4 and "sup_gap_particles_reduced" in s["diagnostics"]


def test_cli_hopf_and_pitchfork_sweeps(tmp_path, capsys):
    code, out = _run(["sweep", "--preset", "sweep_fhn_hopf", "--out", str(tmp_path / "h")], capsys)
    assert code == 0
    pt = json.load(open(tmp_path / "h" / "sweep_fhn_hopf_bifurcation_00.json"))
    assert pt["kind"] == "hopf" and pt["value"] == pytest.approx(0.88604, abs=1e-4)
    code, out = _run(["sweep", "--preset", "sweep_fhn_pitchfork", "--out", str(tmp_path / "p")], capsys)
    pt = json.load(open(tmp_path / "p" / "sweep_fhn_pitchfork_bifurcation_00.json"))
    assert code == 0 and pt["kind"] == "pitchfork"
    assert pt["value"] == pytest.approx(1 / 1.45, abs=1e-12)


def test_cli_cucker_smale_has_no_cycles(tmp_path, capsys):
    code, _ = _run(["sweep", "--preset", "sweep_cs_cycles", "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = json.load(open(tmp_path / "sweep_cs_cycles_summary.json"))["diagnostics"]["cycle_presence"]
    assert len(rows) == 5 and not any(r["present"] for r in rows)


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(GOOD.replace("dt = 0.01\n", ""))
    code, out = _run(["validate", "--config", str(bad)], capsys)
    assert code == cli.EXIT_CONFIG and out["kind"] == "config"
    assert any("run.dt required" in e["message"] for e in out["errors"])
    code, out = _run(["validate", "--config", str(tmp_path / "missing.ini")], capsys)
    assert code == cli.EXIT_IO
    code, out = _run(["run", "--preset", "nope"], capsys)
    assert code == cli.EXIT_CONFIG
    code, out = _run(["sweep", "--preset", "cs_reduced", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_CONFIG
    blow = tmp_path / "blow.ini"
    blow.write_text(GOOD.replace("cucker_smale", "saddle_node_toy\na = -1\nb = 1")
                    .replace("d = 1\n", "").replace("k = 1\nsigma2 = 0.2", "k = 1, 1\nsigma2 = 0.2, 0.2")
                    .replace("m0 = 0.5", "m0 = 0, 0").replace("t_end = 60", "t_end = 1000"))
    code, out = _run(["run", "--config", str(blow), "--out", str(tmp_path / "bl")], capsys)
    assert code == cli.EXIT_NUMERIC and out["kind"] in ("blowup", "numeric")


def test_cli_presets_listing(capsys):
    assert cli.main(["presets"]) == 0
    assert "fig_u02" in capsys.readouterr().out.split()
    assert cli.main(["presets", "--show", "fig_u02"]) == 0
    assert "[model]" in capsys.readouterr().out
