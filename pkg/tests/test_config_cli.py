import json
import math
import os

import numpy as np
import pytest

from pgglmc import ConfigError, ExperimentConfig, max_step_size
from pgglmc.cli import main


def base_doc(**overrides):
    doc = {
        "potential": {"name": "quadratic", "d": 2, "lambda": 0.5, "params": {}},
        "smoothing": {"mu": 0.1, "n": 2, "p": 2.0},
        "lmc": {"eta": 0.05, "steps": 20, "chains": 5,
                "init": {"kind": "point", "value": 0.0}, "seed": 1234},
        "report": {"thinning": "auto", "resamples": 2,
                   "csv": "samples.csv", "json": "report.json"},
    }
    doc.update(overrides)
    return doc


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestConfigParsing:
    def test_happy_path(self):
        cfg = ExperimentConfig.from_dict(base_doc())
        assert cfg.potential_name == "quadratic"
        assert cfg.d == 2 and cfg.lam == 0.5
        assert cfg.mu == 0.1 and cfg.n == 2 and cfg.p == 2.0
        assert cfg.eta == 0.05 and cfg.steps == 20 and cfg.chains == 5
        assert cfg.seed == 1234

    def test_echo_round_trip(self):
        cfg = ExperimentConfig.from_dict(base_doc())
        assert ExperimentConfig.from_dict(cfg.echo()) == cfg

    @pytest.mark.parametrize("section,key", [
        ("potential", "curvature"), ("smoothing", "sigma"),
        ("lmc", "step_size"), ("report", "format"),
    ])
    def test_unknown_key_rejected(self, section, key):
        doc = base_doc()
        doc[section][key] = 1.0
        with pytest.raises(ConfigError, match=key):
            ExperimentConfig.from_dict(doc)

    def test_unknown_top_level_key(self):
        doc = base_doc()
        doc["extras"] = {}
        with pytest.raises(ConfigError, match="extras"):
            ExperimentConfig.from_dict(doc)

    def test_missing_mu_named(self):
        doc = base_doc()
        del doc["smoothing"]["mu"]
        with pytest.raises(ConfigError, match="mu"):
            ExperimentConfig.from_dict(doc)

    @pytest.mark.parametrize("patch,field", [
        ({"mu": -0.1}, "mu"), ({"n": 0}, "n"), ({"p": 2.5}, "p"), ({"p": 0.5}, "p"),
    ])
    def test_smoothing_ranges(self, patch, field):
        doc = base_doc()
        doc["smoothing"].update(patch)
        with pytest.raises(ConfigError, match=field):
            ExperimentConfig.from_dict(doc)

    def test_eta_strings_other_than_auto_rejected(self):
        doc = base_doc()
        doc["lmc"]["eta"] = "fast"
        with pytest.raises(ConfigError, match="eta"):
            ExperimentConfig.from_dict(doc)

    def test_bool_is_not_a_number(self):
        doc = base_doc()
        doc["smoothing"]["n"] = True
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_gaussian_init(self):
        doc = base_doc()
        doc["lmc"]["init"] = {"kind": "gaussian", "mean": 1.0, "scale": 2.0}
        cfg = ExperimentConfig.from_dict(doc)
        assert cfg.init.kind == "gaussian" and cfg.init.scale == 2.0

    def test_bad_init_kind(self):
        doc = base_doc()
        doc["lmc"]["init"] = {"kind": "uniform"}
        with pytest.raises(ConfigError, match="kind"):
            ExperimentConfig.from_dict(doc)

    def test_eta_auto_resolution(self):
        doc = base_doc()
        doc["lmc"]["eta"] = "auto"
        cfg = ExperimentConfig.from_dict(doc)
        pot = cfg.build_potential()
        cap = max_step_size(pot, cfg.mu, cfg.p)
        assert cfg.resolve_eta(pot) == pytest.approx(0.9 * cap, rel=1e-12)

    def test_json_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"potential": }', encoding="utf-8")
        with pytest.raises(ConfigError, match="line"):
            ExperimentConfig.from_file(path)


class TestCliSample:
    def test_smoke(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, base_doc())
        code = main(["sample", "--config", cfg_path, "--out", str(tmp_path)])
        assert code == 0
        csv_lines = (tmp_path / "samples.csv").read_text(encoding="utf-8").splitlines()
        assert csv_lines[0] == "chain,coordinate_0,coordinate_1"
        assert len(csv_lines) == 6  # header + 5 chains
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["config"]["lmc"]["seed"] == 1234
        assert report["metrics"]["evals_total"] == 5 * 20 * 3
        assert "empirical_w2_to_target" in report["metrics"]

    def test_eta_auto_reported(self, tmp_path):
        doc = base_doc()
        doc["lmc"]["eta"] = "auto"
        cfg_path = write_config(tmp_path, doc)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path),
                     "--quiet"]) == 0
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["resolved"]["eta"] == pytest.approx(
            0.9 * report["resolved"]["eta_cap"], rel=1e-12)
        assert report["config"]["lmc"]["eta"] == "auto"

    def test_corrupt_json_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["sample", "--config", str(path), "--out", str(tmp_path)]) == 2
        assert "line" in capsys.readouterr().err

    def test_missing_mu_exits_2(self, tmp_path, capsys):
        doc = base_doc()
        del doc["smoothing"]["mu"]
        cfg_path = write_config(tmp_path, doc)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path)]) == 2
        assert "mu" in capsys.readouterr().err

    def test_step_cap_violation_exits_4(self, tmp_path, capsys):
        doc = base_doc()
        doc["lmc"]["eta"] = 100.0
        cfg_path = write_config(tmp_path, doc)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path)]) == 4
        assert "cap" in capsys.readouterr().err

    def test_divergence_exits_3(self, tmp_path, capsys):
        doc = base_doc()
        doc["lmc"]["init"] = {"kind": "point", "value": 1e9}
        doc["lmc"]["steps"] = 3
        doc["lmc"]["chains"] = 2
        cfg_path = write_config(tmp_path, doc)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path),
                     "--quiet"]) == 3
        assert "diverged" in capsys.readouterr().err

    def test_seed_override_changes_states(self, tmp_path):
        cfg_path = write_config(tmp_path, base_doc())
        main(["sample", "--config", cfg_path, "--out", str(tmp_path / "a"), "--quiet"])
        main(["sample", "--config", cfg_path, "--out", str(tmp_path / "b"), "--quiet",
              "--seed", "999"])
        a = (tmp_path / "a" / "samples.csv").read_bytes()
        b = (tmp_path / "b" / "samples.csv").read_bytes()
        assert a != b

    def test_byte_identical_across_runs_and_threads(self, tmp_path):
        cfg_path = write_config(tmp_path, base_doc())
        outs = []
        for sub, threads in (("r1", "1"), ("r2", "1"), ("r3", "3")):
            main(["sample", "--config", cfg_path, "--out", str(tmp_path / sub),
                  "--quiet", "--threads", threads])
            outs.append((tmp_path / sub / "samples.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_threads_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PGGLMC_THREADS", "2")
        from pgglmc.cli import build_parser
        args = build_parser().parse_args(["sample", "--config", "x.json"])
        assert args.threads == 2

    def test_report_config_echo_is_lossless(self, tmp_path):
        doc = base_doc()
        doc["lmc"]["eta"] = "auto"
        doc["lmc"]["init"] = {"kind": "gaussian", "mean": 0.25, "scale": 1.5}
        cfg_path = write_config(tmp_path, doc)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path),
                     "--quiet"]) == 0
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        reparsed = ExperimentConfig.from_dict(report["config"])
        assert reparsed == ExperimentConfig.from_dict(doc)


class TestCliBounds:
    def test_prints_itemized_terms(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, base_doc())
        assert main(["bounds", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        for term in ("geometric", "discretization", "smoothing_bias", "smoothing_w2",
                     "variance_mu", "variance_grad", "regularization_m2", "total"):
            assert term in out
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["bounds"]["theorem1"]["C"] == 0.0

    def test_cap_violation_exits_4(self, tmp_path):
        doc = base_doc()
        doc["lmc"]["eta"] = 100.0
        cfg_path = write_config(tmp_path, doc)
        assert main(["bounds", "--config", cfg_path, "--out", str(tmp_path)]) == 4

    def test_mu_sweep_monotone_a(self, tmp_path):
        values = []
        for i, mu in enumerate((0.1, 0.01, 0.001)):
            doc = base_doc()
            doc["smoothing"]["mu"] = mu
            cfg_path = write_config(tmp_path, doc, name=f"cfg{i}.json")
            main(["bounds", "--config", cfg_path, "--out", str(tmp_path / str(i)),
                  "--quiet"])
            report = json.loads((tmp_path / str(i) / "report.json").read_text())
            values.append(report["bounds"]["a"])
        assert values[0] > values[1] > values[2]


class TestCliVerify:
    def test_unknown_suite_exits_2(self, tmp_path, capsys):
        assert main(["verify", "nonsense", "--out", str(tmp_path)]) == 2

    def test_transport_suite_passes(self, tmp_path, capsys):
        code = main(["verify", "transport", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out
        report = json.loads((tmp_path / "verify_transport.json").read_text())
        assert report["all_passed"] is True
        names = {c["name"] for s in report["suites"] for c in s["checks"]}
        assert "assignment_equals_bruteforce" in names
