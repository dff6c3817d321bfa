import json
import os

import numpy as np
import pytest

from ltavg.cli import main, selftest
from ltavg.config import ConfigError, RunConfig, from_dict, load


def test_defaults_and_validation():
    cfg = RunConfig().validate()
    assert cfg.mesh == (80, 80) and cfg.method == "sos"
    for bad in ({"dV": 3}, {"mesh": (1, 5)}, {"gamma_range": (1, 1)}, {"h": 2.0}, {"solver": {"nope": 1}},
                {"dns": {"nope": 1}}, {"dV": 10, "dV_max": 8}):
        with pytest.raises(ConfigError):
            from_dict(bad).validate()
    with pytest.raises(ConfigError):
        from_dict({"unknown_key": 1})


def test_file_then_flags(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"r": 0.4, "mesh": [10, 12], "gamma": 1.0}))
    cfg = load(str(path), {"r": 0.3, "g": None})
    assert cfg.r == 0.3 and cfg.mesh == (10, 12) and cfg.g == 0.01
    with pytest.raises(ConfigError):
        load(str(tmp_path / "missing.json"))
    (tmp_path / "bad.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load(str(tmp_path / "bad.json"))


def test_point_required():
    with pytest.raises(ConfigError):
        RunConfig().point()


def test_bound_exit_codes(capsys):
    assert main(["bound", "--gamma", "1.5", "--h", "0.3", "--dv", "6"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["label"] == "Stable" and rec["params"]["gamma"] == 1.5
    assert main(["bound", "--gamma", "2.0", "--h", "0.3", "--dv", "6"]) == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(["bound", "--gamma", "1.0"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["nosuch"])
    assert e.value.code == 1
    assert main(["bound", "--gamma", "1.0", "--h", "1.5"]) == 1
    assert main(["floquet", "--gamma", "1.0", "--h", "0.1", "--phi", "1.0", "--variant", "general"]) == 1


def test_floquet_command(capsys):
    assert main(["floquet", "--gamma", "2.0", "--h", "0.3", "--variant", "simplified"]) == 2
    rec = json.loads(capsys.readouterr().out)
    assert len(rec["roots"]) == 4
    assert main(["floquet", "--gamma", "2.0", "--h", "0.3", "--variant", "monodromy"]) == 2


def test_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["sweep", "--method", "floquet-general,floquet-simplified", "--mesh", "12", "8",
            "--gamma-range", "-3", "3", "--h-range", "0", "1", "--out", str(out)]
    assert main(args) == 0
    names = sorted(os.listdir(out))
    for m in ("floquet-general", "floquet-simplified"):
        assert f"sweep_{m}.csv" in names and f"boundary_{m}.csv" in names and f"boundary_{m}.svg" in names
    assert "disagreement.csv" in names
    first = (out / "sweep_floquet-general.csv").read_bytes()
    assert main(args) == 0
    assert (out / "sweep_floquet-general.csv").read_bytes() == first
    rows = first.decode().splitlines()
    assert len(rows) == 1 + 12 * 8
    assert main(["sweep", "--method", "bogus", "--out", str(out)]) == 1


def test_selftest_passes_and_fails():
    class Sink:
        text = ""

        def write(self, s):
            Sink.text += s

    assert selftest(RunConfig(), Sink())
    assert Sink.text.count("PASS") == 5
    Sink.text = ""
    loose = RunConfig(solver={"feas_tol": 1e2, "gap_tol": 1e2, "report_feas_tol": 1e2, "report_gap_tol": 1e2})
    sink = Sink()
    assert not selftest(loose, sink)
    assert "FAIL" in sink.text
