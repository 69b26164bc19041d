import csv
import io
import json
from dataclasses import replace

import pytest

from onticlab.checks import CheckReport, LabeledEstimate
from onticlab.cli import (
    RunConfig,
    emit_report,
    expected_patterns,
    load_catalog,
    main,
    report_as_dict,
    run,
)

FAST = {"samples": 20_000}


def run_json(tmp_path=None, **kwargs):
    code, reports = run(RunConfig(**{**FAST, **kwargs}))
    return code, json.loads(emit_report(reports, "json"))


class TestRun:
    def test_cap_model_audit_passes(self):
        code, payload = run_json(model_name="ks", check_names=("audit",))
        assert code == 0
        assert payload[0]["verdict"] == "satisfied"
        assert "prep-nc=violated" in payload[0]["details"]
        assert "max-epistemic=satisfied" in payload[0]["details"]

    def test_pair_model_expected_violation_passes(self):
        code, payload = run_json(model_name="bell-mermin", check_names=("max-epistemic",))
        assert code == 0
        assert payload[0]["verdict"] == "violated"

    def test_undersampled_run_is_inconclusive(self):
        code, reports = run(RunConfig(model_name="ks", check_names=("born",), samples=10))
        assert code == 1
        assert reports[0].verdict == "inconclusive"
        assert reports[0].n_samples == 100

    def test_unknown_model_fails_fast(self, capsys):
        code, reports = run(RunConfig(model_name="mystery"))
        assert code == 2 and reports == []
        assert "valid names" in capsys.readouterr().err

    def test_unknown_check_fails_fast(self, capsys):
        code, reports = run(RunConfig(model_name="ks", check_names=("born", "vibes")))
        assert code == 2 and reports == []
        assert "vibes" in capsys.readouterr().err

    def test_precondition_error_exits_2(self, capsys):
        code, _ = run(RunConfig(model_name="const-half", check_names=("nonlocality",), **FAST))
        assert code == 2
        assert "Born" in capsys.readouterr().err

    def test_checks_run_in_declared_order(self):
        code, reports = run(
            RunConfig(model_name="ks", check_names=("classify", "born"), **FAST)
        )
        assert [r.check_name for r in reports] == ["classify", "born"]
        assert code == 0

    def test_expected_patterns_cover_all_models(self):
        patterns = expected_patterns()
        assert set(patterns) == {"ks", "bell-mermin", "const-half", "label-reader"}
        for name in ("ks", "bell-mermin"):
            assert set(patterns[name]) >= {
                "born", "determinism", "measurement-nc", "max-epistemic",
                "classify", "prep-nc", "omega", "nonlocality", "audit",
            }

    def test_omega_check_matches_pattern(self):
        code, payload = run_json(model_name="bell-mermin", check_names=("omega",))
        assert code == 0
        assert payload[0]["verdict"] == "violated"
        assert abs(payload[0]["estimates"][0]["mean"] - 0.5) < 0.02


class TestEmit:
    def example_report(self):
        return CheckReport(
            check_name="born",
            model_name="ks",
            verdict="satisfied",
            estimates=(LabeledEstimate("+z|z|+z", 1.0, 0.0),),
            tolerance=0.01,
            n_samples=1000,
            seed=42,
            details="all good",
            duration_ms=12.5,
        )

    def test_empty_json(self):
        assert emit_report([], "json") == "[]\n"

    def test_json_round_trip(self):
        reports = [self.example_report()]
        parsed = json.loads(emit_report(reports, "json"))
        assert parsed == [report_as_dict(reports[0])]

    def test_text_contains_verdict(self):
        text = emit_report([self.example_report()], "text")
        lines = text.strip().splitlines()
        assert len(lines) == 2
        assert "satisfied" in lines[1]

    def test_csv_one_row_per_estimate(self):
        rows = list(csv.reader(io.StringIO(emit_report([self.example_report()], "csv"))))
        assert rows[0][:4] == ["check_name", "model_name", "verdict", "label"]
        assert len(rows) == 2
        assert rows[1][2] == "satisfied"

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit_report([], "yaml")


class TestCatalogIngestion:
    def test_load_and_run(self, tmp_path):
        path = tmp_path / "catalog.json"
        path.write_text(
            json.dumps(
                [
                    {"bloch": [0, 0, 1], "label": "up"},
                    {"theta": 1.5707963267948966, "phi": 0.0, "label": "side"},
                ]
            )
        )
        catalog = load_catalog(str(path))
        assert len(catalog.states) == 4           # closed under complements
        assert len(catalog.bases) == 2
        code, reports = run(
            RunConfig(model_name="ks", check_names=("born",), catalog_path=str(path), **FAST)
        )
        assert code == 0 and reports[0].verdict == "satisfied"

    def test_malformed_catalog_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{}")
        code, reports = run(RunConfig(model_name="ks", catalog_path=str(path)))
        assert code == 2 and reports == []

    def test_missing_file_exits_2(self):
        code, reports = run(RunConfig(model_name="ks", catalog_path="/nonexistent.json"))
        assert code == 2


class TestMain:
    def test_json_output_and_exit_code(self, capsys):
        code = main(
            ["--model", "bell-mermin", "--check", "classify", "--samples", "20000",
             "--format", "json"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert json.loads(out)[0]["verdict"] == "psi-ontic"

    def test_repeatable_check_flag(self, capsys):
        code = main(
            ["--model", "ks", "--check", "classify", "--check", "determinism",
             "--samples", "20000", "--format", "json"]
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert [r["check_name"] for r in payload] == ["classify", "determinism"]

    def test_unknown_model_exit_2(self, capsys):
        assert main(["--model", "zeta", "--samples", "20000"]) == 2


class TestDeterminism:
    def test_identical_configs_give_identical_json(self):
        config = RunConfig(
            model_name="ks", check_names=("born", "prep-nc"), samples=20_000, seed=7,
            output_format="json",
        )
        outputs = []
        for _ in range(2):
            code, reports = run(config)
            assert code == 0
            normalized = [replace(r, duration_ms=0.0) for r in reports]
            outputs.append(emit_report(normalized, "json"))
        assert outputs[0] == outputs[1]
