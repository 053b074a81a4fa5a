import dataclasses
import hashlib
import json

import pytest

from tunnelshift import __version__, cli
from tunnelshift.numerics import NumericsError
from tunnelshift.scenarios import CATALOG, SCENARIO_IDS, ConfigError, ScenarioFailure, parse_config, run
from tunnelshift.scenarios.runner import render_csv


def _cfg(sid, physics="", numerics="", extra=""):
    text = f"[scenario]\nid = {sid}\n{extra}"
    if physics:
        text += f"[physics]\n{physics}\n"
    if numerics:
        text += f"[numerics]\n{numerics}\n"
    return parse_config(text)


def test_fig5_defaults_recorded():
    cfg = _cfg("fig5")
    assert cfg.physics["K"] == 30
    assert (cfg.physics["alpha_min"], cfg.physics["alpha_max"]) == (0.0, 8.0)
    assert cfg.numerics["points"] == 400
    assert "physics.K" in cfg.defaulted and "numerics.points" in cfg.defaulted
    assert cfg.preset == "desk"


def test_malformed_number_names_field():
    with pytest.raises(ConfigError, match=r"line 4.*physics\.alpha_max"):
        _cfg("fig5", "alpha_max = eight")


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError, match=r"line 5: unknown key 'Kay'"):
        _cfg("fig5", "K = 12\nKay = 3")


def test_unknown_section_and_scenario():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[scenario]\nid = fig5\n[plots]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown scenario id 'fig11'"):
        parse_config("[scenario]\nid = fig11\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("K = 3\n[scenario]\nid = fig5\n")


def test_eps_out_of_range_cites_constraint():
    with pytest.raises(ConfigError, match=r"physics\.eps.*0 < eps <= 1"):
        _cfg("fig9", "eps = 1.5")


def test_inline_comments_and_case_sensitive_keys():
    cfg = _cfg("fig5", "K = 12 ; fewer moments\nalpha_max = 4  # shorter sweep")
    assert cfg.physics["K"] == 12 and cfg.physics["alpha_max"] == 4.0
    with pytest.raises(ConfigError):
        _cfg("fig5", "k = 12")


def test_preset_resolution():
    cfg = _cfg("fig9", extra="preset = paper\n")
    assert cfg.physics["p0d"] == 1e5
    assert cfg.with_preset("desk").physics["p0d"] == 1e3
    pinned = _cfg("fig9", "p0d = 500", extra="preset = paper\n")
    assert pinned.with_preset("desk").physics["p0d"] == 500
    with pytest.raises(ConfigError, match="no preset 'paper'"):
        _cfg("fig5", extra="preset = paper\n")


def _csvs(path):
    return sorted(p.name for p in path.glob("*.csv"))


def test_fig3_writes_three_tables(tmp_path):
    m = run(_cfg("fig3"), tmp_path)
    assert _csvs(tmp_path) == ["fig3a_eta.csv", "fig3b_eta.csv", "fig3c_eta.csv"]
    assert [o["file"] for o in m.outputs] == _csvs(tmp_path)


def test_fig8_writes_two_pairs(tmp_path):
    run(_cfg("fig8"), tmp_path)
    assert _csvs(tmp_path) == [
        "fig8_above_free.csv", "fig8_above_transmitted.csv", "fig8_tunnel_free.csv", "fig8_tunnel_transmitted.csv",
    ]


def test_zero_barrier_custom_files_identical(tmp_path):
    run(_cfg("custom", "W = 0"), tmp_path)
    assert (tmp_path / "custom_free.csv").read_bytes() == (tmp_path / "custom_transmitted.csv").read_bytes()


def test_csv_header_layout(tmp_path):
    run(_cfg("fig5"), tmp_path)
    lines = (tmp_path / "fig5_sweep.csv").read_text().splitlines()
    assert lines[0] == f"# tunnelshift {__version__}"
    assert lines[1] == "# scenario: fig5 (preset desk)"
    cols = [ln for ln in lines if ln.startswith("# column: ")]
    assert cols and all(" | unit: " in c and " | producer: " in c for c in cols)
    header = next(ln for ln in lines if not ln.startswith("#"))
    assert header.split(",") == [c.split(" | ")[0][len("# column: "):] for c in cols]
    metas = [ln for ln in lines if ln.startswith("# meta: ")]
    assert metas == sorted(metas)


@pytest.mark.parametrize("sid", ["fig3", "fig7", "pointer", "larmor"])
def test_rerun_checksums_identical(tmp_path, sid):
    a = run(_cfg(sid), tmp_path / "a", seed=11)
    b = run(_cfg(sid), tmp_path / "b", seed=11)
    assert a.outputs == b.outputs
    for o in a.outputs:
        assert hashlib.sha256((tmp_path / "a" / o["file"]).read_bytes()).hexdigest() == o["sha256"]


def test_seed_changes_samples_only(tmp_path):
    a = run(_cfg("pointer"), tmp_path / "a", seed=1)
    b = run(_cfg("pointer"), tmp_path / "b", seed=2)
    diff = {x["file"] for x, y in zip(a.outputs, b.outputs) if x["sha256"] != y["sha256"]}
    assert diff == {"pointer_samples.csv"}


def test_manifest_contents(tmp_path):
    m = run(_cfg("fig6"), tmp_path, seed=3)
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["version"] == __version__ and data["seed"] == 3
    assert data["config"]["scenario"]["id"] == "fig6"
    assert {o["file"] for o in data["outputs"]} == set(_csvs(tmp_path))
    assert set(data["timings"]) == {"compute_s", "write_s"}
    assert "warnings" in data and data == json.loads(m.to_json())


def test_numeric_failure_writes_nothing(tmp_path, monkeypatch):
    def boom(cfg, ctx):
        raise NumericsError("window criterion violated")

    monkeypatch.setitem(CATALOG, "fig5", dataclasses.replace(CATALOG["fig5"], run=boom))
    with pytest.raises(ScenarioFailure, match="window criterion"):
        run(_cfg("fig5"), tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_invalid_parameter_combination_is_config_error(tmp_path):
    # too few comb points for the requested moments
    with pytest.raises((ConfigError, ScenarioFailure)):
        run(_cfg("fig4", numerics="points = 5"), tmp_path / "out")
    assert not (tmp_path / "out").exists() or not list((tmp_path / "out").iterdir())


def test_render_rejects_complex_columns():
    from tunnelshift.scenarios import Column, Table
    import numpy as np

    t = Table("z", (Column("a", "1", "x"),), (np.array([1j]),), {})
    with pytest.raises(TypeError):
        render_csv(t, "fig5", "desk")


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.ini"
    good.write_text("[scenario]\nid = fig3\n")
    assert cli.main(["run", str(good), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "manifest.json").exists()
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nid = fig9\n[physics]\neps = 1.5\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert "0 < eps <= 1" in capsys.readouterr().err
    assert cli.main(["validate", str(good)]) == 0
    assert cli.main(["run", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["list"]) == 0
    listed = capsys.readouterr().out
    assert all(sid in listed for sid in SCENARIO_IDS)


def test_cli_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg, ctx):
        raise NumericsError("quadrature did not converge")

    monkeypatch.setitem(CATALOG, "fig3", dataclasses.replace(CATALOG["fig3"], run=boom))
    cfg = tmp_path / "c.ini"
    cfg.write_text("[scenario]\nid = fig3\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_rejects_bad_seed():
    with pytest.raises(SystemExit):
        cli.main(["run", "x.ini", "--seed", "-1"])
