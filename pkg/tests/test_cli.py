"""CLI contract: config handling, artifacts, manifest, determinism, exits."""

import json
import shutil
import subprocess

import pytest

from heatpoint.cli import main
from heatpoint.errors import ConfigError
from heatpoint.experiments import ExperimentConfig
from heatpoint.reporting import fmt_num, sha256_file

SMALL = {
    "T": 0.5,
    "eps_start": 0.125, "eps_ratio": 0.5, "eps_count": 4,
    "N_start": 2, "N_limit": 8,
    "bits": [128, 256],
    "datum": [1.0, 0.5],
    "control_eps": 0.1,
    "lemma_delta": 0.05, "lemma_levels": 2, "lemma_modes": 8,
    "seed": 0,
}

EXPECTED_FILES = {
    "config.json", "manifest.json",
    "classify.json", "exponents.csv", "exponents.png",
    "sweep.csv", "fit.json", "plot.dat", "plot.gp", "sweep.png",
    "control.json", "signals.csv", "signals.png", "blowup.csv", "blowup.png",
    "lemmas.json", "lemmas.png",
}


@pytest.fixture(scope="module")
def all_run(tmp_path_factory):
    """One full run shared by the artifact assertions."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps(SMALL), encoding="utf-8")
    out = root / "out"
    code = main(["all", "--config", str(cfg), "--out", str(out)])
    return code, cfg, out


def test_all_run_exits_clean_and_emits_everything(all_run):
    code, _, out = all_run
    assert code == 0
    assert {p.name for p in out.iterdir()} == EXPECTED_FILES


def test_manifest_lists_every_file_with_matching_checksum(all_run):
    _, _, out = all_run
    manifest = json.loads((out / "manifest.json").read_text())
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert set(manifest["files"]) == on_disk
    for name, digest in manifest["files"].items():
        assert sha256_file(out / name) == digest
    assert manifest["tool"].startswith("heatpoint ")
    assert set(manifest["tasks"]) == {"classify", "obs-sweep", "control", "lemmas"}
    assert all(t["status"] == "ok" for t in manifest["tasks"].values())


def test_manifest_echoes_resolved_config(all_run):
    _, _, out = all_run
    manifest = json.loads((out / "manifest.json").read_text())
    echoed = ExperimentConfig.from_json(manifest["config"])
    expected = ExperimentConfig.from_json(SMALL).override(out=str(out))
    assert echoed == expected
    # the standalone echo matches the manifest copy
    assert json.loads((out / "config.json").read_text()) == manifest["config"]


def test_sweep_table_columns_and_plot_dat(all_run):
    _, _, out = all_run
    header, *rows = (out / "sweep.csv").read_text().splitlines()
    assert header == "eps,lambda_min,sqrt_scale,N_used,converged,precision_bits"
    assert len(rows) == SMALL["eps_count"]
    for row in rows:
        eps, lam, scale, n_used, conv, bits = row.split(",")
        assert float(eps) > 0 and float(lam) > 0 and float(scale) > 0
        assert int(n_used) <= SMALL["N_limit"]
        assert conv in ("true", "false")
        assert int(bits) in SMALL["bits"]
    dat = (out / "plot.dat").read_text().splitlines()
    assert dat[0].startswith("# eps sqrt_scale")
    assert len(dat) == 1 + len(rows)
    assert "plot.dat" in (out / "plot.gp").read_text()


def test_rerun_is_byte_identical(all_run, tmp_path):
    _, cfg, out = all_run
    before = {p.name: p.read_bytes() for p in out.iterdir()}
    # wipe and re-run with the identical config and destination
    for p in out.iterdir():
        p.unlink()
    code = main(["all", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    after = {p.name: p.read_bytes() for p in out.iterdir()}
    assert before == after


def test_parallel_sweep_matches_serial(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL), encoding="utf-8")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["obs-sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["obs-sweep", "--config", str(cfg), "--out", str(b),
                 "--jobs", "3"]) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "plot.dat").read_bytes() == (b / "plot.dat").read_bytes()


def test_partial_failures_exit_three(tmp_path, capsys):
    cfg = dict(SMALL)
    cfg.update({"anchor": {"kind": "rational", "p": 1, "q": 2},
                "datum": [0.0, 1.0]})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "out"
    code = main(["control", "--config", str(path), "--out", str(out)])
    assert code == 3
    doc = json.loads((out / "control.json").read_text())
    assert doc["moment_point"]["error"]["type"] == "PointwiseNotControllableError"
    assert doc["hum_point"]["error"]["type"] == "TruncationNotControllableError"
    assert "error" not in doc["hum_interval"]
    manifest = json.loads((out / "manifest.json").read_text())
    kinds = {f["type"] for f in manifest["tasks"]["control"]["failures"]}
    assert "PointwiseNotControllableError" in kinds
    assert "failure" in capsys.readouterr().out


def test_classify_rational_anchor(tmp_path):
    cfg = dict(SMALL)
    cfg["anchor"] = {"kind": "rational", "p": 1, "q": 2}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["classify", "--config", str(path), "--out", str(out)]) == 0
    doc = json.loads((out / "classify.json").read_text())
    assert doc["method"] == "exact-rational"
    assert doc["resonant_n"] == 2
    table = (out / "exponents.csv").read_text()
    assert "+inf" in table  # resonant modes carry an infinite exponent


def test_flag_overrides_land_in_manifest(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL), encoding="utf-8")
    out = tmp_path / "out"
    code = main(["lemmas", "--config", str(cfg), "--out", str(out),
                 "--seed", "7", "--bits", "128", "--jobs", "2"])
    assert code == 0
    echoed = json.loads((out / "manifest.json").read_text())["config"]
    assert echoed["seed"] == 7
    assert echoed["bits"] == [128]
    assert echoed["jobs"] == 2
    assert echoed["out"] == str(out)


@pytest.mark.parametrize("bad", [
    {"eps_ratio": 1.5},
    {"eps_ratio": 0},
    {"T": -1},
    {"bits": []},
    {"bits": [256, 128]},
    {"bits": [32]},
    {"N_start": 16, "N_limit": 8},
    {"datum": []},
    {"datum": [1.0] * 99},
    {"seed": 2 ** 64},
    {"unknown_knob": 1},
    {"anchor": {"kind": "nonsense"}},
])
def test_config_rejections(bad):
    obj = dict(SMALL)
    obj.update(bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(obj)


def test_config_round_trip_identity():
    cfg = ExperimentConfig.from_json(SMALL)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    # defaults round-trip too
    dflt = ExperimentConfig()
    assert ExperimentConfig.from_json(dflt.to_json()) == dflt


def test_cli_exit_two_on_bad_inputs(tmp_path, capsys):
    missing = tmp_path / "absent.json"
    assert main(["all", "--config", str(missing)]) == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json", encoding="utf-8")
    assert main(["all", "--config", str(junk)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"eps_ratio": 2}), encoding="utf-8")
    assert main(["all", "--config", str(bad)]) == 2
    cfg = tmp_path / "ok.json"
    cfg.write_text(json.dumps(SMALL), encoding="utf-8")
    assert main(["all", "--config", str(cfg), "--seed", "-1"]) == 2
    assert main(["all", "--config", str(cfg), "--bits", "x,y"]) == 2
    assert main(["all", "--config", str(cfg), "--jobs", "0"]) == 2
    assert "config error" in capsys.readouterr().err


def test_fmt_num_shortest_round_trip():
    assert fmt_num(0.125) == "0.125"
    assert fmt_num(1 / 3) == repr(1 / 3)
    assert fmt_num(True) == "true" and fmt_num(False) == "false"
    assert fmt_num(None) == ""
    assert fmt_num(7) == "7"
    from mpmath import mp
    # far below the double range: falls back to 20-digit scientific
    tiny = mp.mpf("1e-400")
    s = fmt_num(tiny)
    assert ("e-400" in s or "e-401" in s) and mp.mpf(s) > 0
    assert float(fmt_num(mp.mpf("0.1"))) == 0.1


@pytest.mark.skipif(shutil.which("heatpoint") is None,
                    reason="console script not on PATH")
def test_console_script_entry(tmp_path):
    proc = subprocess.run(
        ["heatpoint", "all", "--config", str(tmp_path / "absent.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "config error" in proc.stderr
