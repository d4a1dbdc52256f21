import json
import subprocess
import sys

import pytest

from qrestrict.cli import (
    DEFAULTS,
    EXIT_CHECKS,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    build_config,
    main,
    payload,
    read_config_file,
    run_scenario,
)
from qrestrict.errors import ConfigError

SYM = ["--a1", "0.7071,0", "--a2", "0.7071,0"]


def raw(**kw):
    d = dict(DEFAULTS)
    d.update({k.replace("_", "-"): v for k, v in kw.items()})
    return d


def run_json(tmp_path, *args):
    out = tmp_path / "report"
    code = main(list(args) + ["--out", str(out)])
    return code, json.loads(out.with_suffix(".json").read_text())


class TestConfig:
    def test_defaults_resolved(self):
        cfg = build_config(raw(scenario="moments"))
        d = cfg.resolved()
        assert d["events"] == 100_000 and d["alpha"] == 0.05 and d["seed"] == 0
        assert d["a1"] == pytest.approx([2**-0.5, 0.0])

    def test_auto_normalize(self, caplog):
        cfg = build_config(raw(scenario="nogo", a1="0.7071,0", a2="0.7071,0"))
        s = cfg.spin
        assert abs(s.a1) ** 2 + abs(s.a2) ** 2 == pytest.approx(1.0, abs=1e-15)
        assert "rescaled" in caplog.text

    @pytest.mark.parametrize("bad", [
        dict(scenario="nope"),
        dict(scenario="nogo", a1="1,0", a2="1,0"),
        dict(scenario="nogo", a1="x,0"),
        dict(scenario="nogo", a1="1"),
        dict(scenario="moments", events="0"),
        dict(scenario="moments", alpha="1"),
        dict(scenario="moments", seed="-1"),
        dict(scenario="moments", q="1,1"),
        dict(scenario="decoherence", overlap="gauss:1"),
        dict(scenario="decoherence", overlap="fixed:2"),
        dict(scenario="moments", format="xml"),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            build_config(raw(**bad))

    def test_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("scenario = moments\nevents = 500\nseed = 3\n")
        assert read_config_file(str(cfg))["events"] == "500"
        code, rep = run_json(tmp_path, "--config", str(cfg), "--seed", "4", "--moments", "2")
        assert code == EXIT_OK
        assert rep["config"]["events"] == 500 and rep["config"]["seed"] == 4

    def test_missing_config_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "none.ini"), "--scenario", "nogo"]) == EXIT_CONFIG


class TestExitCodes:
    def test_unknown_scenario(self):
        assert main(["--scenario", "bogus"]) == EXIT_CONFIG

    def test_unwritable(self, tmp_path):
        out = tmp_path / "missing_dir" / "r"
        assert main(["--scenario", "nogo", "--out", str(out)]) == EXIT_IO

    def test_failed_checks(self, tmp_path):
        # one Haar draw at N_E = 4 is too few for the median bound
        code, rep = run_json(tmp_path, "--scenario", "decoherence", *SYM, "--trials", "1")
        assert code == EXIT_CHECKS
        failed = [c["name"] for c in rep["checks"] if not c["passed"]]
        assert failed == ["haar_NE4_median_suppression"]


class TestScenarios:
    def test_nogo_example(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "nogo", *SYM)
        assert code == EXIT_OK
        assert rep["results"]["verdict"] == "infeasible"
        assert rep["results"]["solution_dimension"] == 1
        assert set(rep) == {"scenario", "config", "results", "checks", "generated_at"}

    def test_nogo_product_state(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "nogo", "--a1", "0,0", "--a2", "1,0")
        assert code == EXIT_OK and rep["results"]["verdict"] == "feasible"

    def test_moments_example(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "moments", "--a1", "0.6,0", "--a2", "0.8,0",
                             "--moments", "3", "--events", "20000")
        assert code == EXIT_OK
        assert rep["results"]["analytic"] == pytest.approx([-0.28, 1.0, -0.28], abs=1e-12)

    def test_interference_single_event(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "interference", *SYM, "--events", "1")
        assert rep["results"]["discrimination"]["decision"] == "undecided"
        assert code == EXIT_OK

    def test_collapse(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "collapse", "--a1", "0.6,0", "--a2", "0,0.8",
                             "--events", "20000")
        assert code == EXIT_OK
        assert rep["results"]["partial_trace_information_pattern"]["uncertain"] == ["Q_O"]

    def test_decoherence(self, tmp_path):
        code, rep = run_json(tmp_path, "--scenario", "decoherence", *SYM, "--trials", "200")
        assert code == EXIT_OK
        names = {c["name"] for c in rep["checks"]}
        assert {"product_law", "haar_NE4_median_suppression"} <= names

    @pytest.mark.parametrize("fmt,suffixes", [("structured", {".json"}), ("csv", {".csv"}),
                                              ("both", {".json", ".csv"})])
    def test_formats(self, tmp_path, fmt, suffixes):
        out = tmp_path / "r"
        main(["--scenario", "nogo", *SYM, "--format", fmt, "--out", str(out)])
        assert {p.suffix for p in tmp_path.iterdir()} == suffixes

    def test_csv_header(self, tmp_path):
        out = tmp_path / "r"
        main(["--scenario", "decoherence", *SYM, "--trials", "3", "--format", "csv", "--out", str(out)])
        assert out.with_suffix(".csv").read_text().splitlines()[0] == "N_E,trial,offdiag,prediction"

    def test_stdout(self, capsys):
        assert main(["--scenario", "nogo", *SYM]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["scenario"] == "nogo"


def test_payload_deterministic():
    cfg = build_config(raw(scenario="interference", events="2000", seed="11"))
    a = payload(run_scenario(cfg)[0])
    b = payload(run_scenario(cfg)[0])
    assert a == b and "generated_at" not in a


def test_module_entry_point(tmp_path):
    out = tmp_path / "r"
    proc = subprocess.run([sys.executable, "-m", "qrestrict", "--scenario", "nogo", *SYM, "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.with_suffix(".json").read_text())["results"]["verdict"] == "infeasible"
