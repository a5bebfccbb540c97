import json

import pytest

from esls import __version__
from esls.cli import main


def test_run_writes_trace_and_echo(tmp_path, capsys):
    assert main(["run", "--seed", "3", "--max-steps", "40", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(lines) == 41 and lines[0].startswith("t,cx,cy,cz,ex,ey,ez,err_norm,dist_centroid,sigma")
    echo = json.loads((tmp_path / "config.json").read_text())
    assert echo["seed"] == 3 and echo["max_research_steps"] == 40
    assert "seed=3" in capsys.readouterr().out


def test_run_with_config_file_and_mode(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": 0.02, "max_research_steps": 10}))
    assert main(["run", "--config", str(cfg), "--mode", "ls", "--out", str(tmp_path / "o")]) == 0
    echo = json.loads((tmp_path / "o" / "config.json").read_text())
    assert echo["gamma"] == 0.02 and echo["mode"] == "ls"


def test_mc_outputs(tmp_path, capsys):
    rc = main(["mc", "--runs", "2", "--seed", "1", "--modes", "es,esls", "--max-steps", "60",
               "--threshold", "40", "--window", "3", "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert [m["mode"] for m in doc["modes"]] == ["es", "esls"]
    assert doc["criterion"] == {"threshold": 40.0, "window": 3, "max_steps": 60}
    assert (tmp_path / "boxplot.csv").read_text().startswith("mode,runs")


def test_exit_codes(tmp_path, capsys):
    assert main(["mc", "--runs", "0", "--out", str(tmp_path / "a")]) == 1
    assert not (tmp_path / "a").exists()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma": -1}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "b")]) == 1
    assert "gamma" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", "--max-steps", "3", "--out", str(blocker / "x")]) == 2
    assert main(["run", "--seed", "-4", "--out", str(tmp_path)]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["mc", "--runs", "1", "--modes", "xx", "--out", str(tmp_path / "c")]) == 1


def test_version_and_help(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["--version"])
    assert ei.value.code == 0 and __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit) as ei:
        main(["mc", "--help"])
    assert ei.value.code == 0 and "--runs" in capsys.readouterr().out
