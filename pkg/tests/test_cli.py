import csv
import json

import pytest

from exobench.cli import main
from exobench.dynamics import (CompensationTables, ExoParams,
                               save_calibration)
from exobench.fuzzy import default_fuzzy_model
from exobench.questionnaire import default_definition
from exobench.synthdata import (synth_physio_session,
                                synth_questionnaire_response,
                                synth_session_set)


@pytest.fixture(scope="module")
def calibration(tmp_path_factory):
    path = tmp_path_factory.mktemp("calib") / "calibration.json"
    save_calibration(path, ExoParams(), CompensationTables.default_synthetic())
    return path


@pytest.fixture(scope="module")
def session_set(tmp_path_factory):
    root = tmp_path_factory.mktemp("set") / "sessions"
    synth_session_set(root, subjects=2, seed=11, gait_seconds=3.0,
                      control_rate=1000.0)
    return root


class TestSimAndTrain:
    def test_training_protocol_to_model(self, tmp_path):
        data = tmp_path / "training.csv"
        model = tmp_path / "model.json"
        assert main(["sim", "--kind", "training", "--out", str(data),
                     "--seed", "3"]) == 0
        assert main(["train", str(data), "--out", str(model)]) == 0
        doc = json.loads(model.read_text())
        assert doc["rmse"] < 0.15
        assert len(doc["weights"]) == 6

    def test_missing_stage_exits_two(self, tmp_path, capsys):
        data = tmp_path / "training.csv"
        main(["sim", "--kind", "training", "--out", str(data), "--seed", "3"])
        # drop the right-swing stage entirely
        lines = data.read_text().splitlines()
        kept = [lines[0]] + [ln for ln in lines[1:] if "right_swing" not in ln]
        data.write_text("\n".join(kept) + "\n")
        assert main(["train", str(data), "--out",
                     str(tmp_path / "m.json")]) == 2
        assert "right_swing" in capsys.readouterr().err

    def test_corrupt_csv_exits_one_with_line(self, tmp_path, capsys):
        data = tmp_path / "training.csv"
        main(["sim", "--kind", "training", "--out", str(data), "--seed", "3"])
        lines = data.read_text().splitlines()
        broken = lines[:500] + [lines[500].replace(",", ";", 3)] + lines[501:]
        data.write_text("\n".join(broken) + "\n")
        assert main(["train", str(data), "--out",
                     str(tmp_path / "m.json")]) == 1
        assert "line" in capsys.readouterr().err

    def test_gait_stream_frame_count(self, tmp_path, capsys):
        out = tmp_path / "gait.csv"
        assert main(["sim", "--kind", "gait", "--out", str(out), "--seed",
                     "1", "--seconds", "2.4", "--rate", "500"]) == 0
        n_lines = len(out.read_text().splitlines())
        assert n_lines == 2 * 600 + 1  # two 1.2 s cycles at 500 Hz + header


class TestReplay:
    def test_replay_produces_log_and_report(self, tmp_path, calibration):
        data = tmp_path / "training.csv"
        model = tmp_path / "model.json"
        stream = tmp_path / "stream.csv"
        main(["sim", "--kind", "training", "--out", str(data), "--seed", "5"])
        main(["train", str(data), "--out", str(model)])
        main(["sim", "--kind", "gait", "--out", str(stream), "--seed", "6",
              "--seconds", "2.4", "--rate", "1000"])
        log = tmp_path / "log.csv"
        rep = tmp_path / "replay.json"
        assert main(["replay", str(stream), "--model", str(model),
                     "--calibration", str(calibration), "--out", str(log),
                     "--report", str(rep)]) == 0
        doc = json.loads(rep.read_text())
        assert doc["commands"] == 2400
        assert doc["timing"]["p50_us"] > 0
        with open(log) as f:
            rows = list(csv.reader(f))
        assert rows[0][:3] == ["t", "raw_phase", "gamma_l"]
        assert len(rows) == 2401

    def test_replay_commands_deterministic(self, tmp_path, calibration):
        data = tmp_path / "training.csv"
        model = tmp_path / "model.json"
        stream = tmp_path / "stream.csv"
        main(["sim", "--kind", "training", "--out", str(data), "--seed", "5"])
        main(["train", str(data), "--out", str(model)])
        main(["sim", "--kind", "gait", "--out", str(stream), "--seed", "6",
              "--seconds", "1.2", "--rate", "1000"])
        logs = []
        for k in range(2):
            log = tmp_path / f"log{k}.csv"
            main(["replay", str(stream), "--model", str(model),
                  "--calibration", str(calibration), "--out", str(log)])
            with open(log) as f:
                rows = [r[:9] for r in csv.reader(f)]  # drop step_time column
            logs.append(rows)
        assert logs[0] == logs[1]


class TestAnalyze:
    def test_full_report(self, session_set, tmp_path):
        out = tmp_path / "report.json"
        assert main(["analyze", str(session_set), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        for section in ("physiology", "psychophysiology", "questionnaire",
                        "controller"):
            assert doc[section]["status"] == "ok"
        assert doc["summary"]["total_invalid_flags"] == 0
        assert (tmp_path / "report.timing.json").exists()
        # canonical round trip: parse and re-serialise byte-identically
        from exobench.report import canonical_json
        assert canonical_json(json.loads(out.read_text())) == out.read_text()

    def test_not_a_session_set(self, tmp_path, capsys):
        assert main(["analyze", str(tmp_path), "--out",
                     str(tmp_path / "r.json")]) == 1
        assert "set_manifest" in capsys.readouterr().err

    def test_missing_gsr_degrades_but_completes(self, tmp_path):
        root = tmp_path / "set"
        synth_session_set(root, subjects=1, seed=21, gait_seconds=1.2,
                          control_rate=500.0)
        # strip the GSR channel from the subject's recording
        physio = root / "subjects" / "s01" / "physio"
        manifest = json.loads((physio / "manifest.json").read_text())
        del manifest["channels"]["gsr"]
        (physio / "manifest.json").write_text(json.dumps(manifest))
        (physio / "gsr.csv").unlink()
        out = tmp_path / "report.json"
        assert main(["analyze", str(root), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        subject = doc["psychophysiology"]["subjects"]["s01"]
        assert subject["invalid_inputs"] > 0
        assert any("attention" in s["degraded"] for s in subject["scores"])
        assert doc["summary"]["total_invalid_flags"] > 0

    def test_off_protocol_durations_need_lenient(self, tmp_path):
        root = tmp_path / "set"
        synth_session_set(root, subjects=1, seed=22, gait_seconds=1.2,
                          control_rate=500.0)
        physio = root / "subjects" / "s01" / "physio"
        manifest = json.loads((physio / "manifest.json").read_text())
        # claim a 200 s seated baseline: outside the +-5% protocol window
        manifest["markers"]["sit"] = [0.0, 200.0]
        manifest["markers"]["sit_exo"] = [200.0, 420.0]
        (physio / "manifest.json").write_text(json.dumps(manifest))
        out = tmp_path / "report.json"
        assert main(["analyze", str(root), "--out", str(out)]) == 1
        assert main(["analyze", str(root), "--out", str(out),
                     "--lenient"]) == 0

    def test_set_without_questionnaire_marks_section_skipped(self, tmp_path):
        root = tmp_path / "set"
        synth_session_set(root, subjects=1, seed=23, gait_seconds=1.2,
                          control_rate=500.0)
        manifest = json.loads((root / "set_manifest.json").read_text())
        del manifest["files"]["responses"]
        del manifest["files"]["preferences"]
        (root / "set_manifest.json").write_text(json.dumps(manifest))
        out = tmp_path / "report.json"
        assert main(["analyze", str(root), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["questionnaire"]["status"] == "skipped"
        assert "reason" in doc["questionnaire"]


class TestValidate:
    def test_valid_files_pass(self, tmp_path, calibration, capsys):
        eq = tmp_path / "eq.json"
        default_definition().save(eq)
        fz = tmp_path / "fuzzy.json"
        fz.write_text(json.dumps(default_fuzzy_model().to_dict()))
        assert main(["validate", str(eq), str(fz), str(calibration)]) == 0
        out = capsys.readouterr().out
        assert out.count("ok ") == 3

    def test_eq_with_131_items_fails(self, tmp_path, capsys):
        doc = default_definition().to_dict()
        doc["items"] = doc["items"][:131]
        bad = tmp_path / "eq.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", str(bad)]) == 1
        assert "expected 132" in capsys.readouterr().out

    def test_fuzzy_coverage_gap_names_variable(self, tmp_path, capsys):
        doc = default_fuzzy_model().to_dict()
        del doc["inputs"]["hr"]["medium"]
        bad = tmp_path / "fuzzy.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", str(bad)]) == 1
        assert "hr coverage gap" in capsys.readouterr().out


class TestConfigFallback:
    def test_env_config_supplies_seed(self, tmp_path, monkeypatch):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"seed": 9}))
        monkeypatch.setenv("EXOBENCH_CONFIG", str(config))
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        main(["sim", "--kind", "gait", "--out", str(out_a), "--seconds",
              "1.2", "--rate", "200"])
        main(["sim", "--kind", "gait", "--out", str(out_b), "--seconds",
              "1.2", "--rate", "200"])
        assert out_a.read_text() == out_b.read_text()
        # explicit flag wins over the config file
        out_c = tmp_path / "c.csv"
        main(["sim", "--kind", "gait", "--out", str(out_c), "--seed", "10",
              "--seconds", "1.2", "--rate", "200"])
        assert out_c.read_text() != out_a.read_text()


class TestSynthData:
    def test_physio_session_passes_protocol_check(self):
        session = synth_physio_session(seed=1)
        session.validate_protocol()

    def test_questionnaire_response_scores_cleanly(self):
        from exobench.questionnaire import score_session
        definition = default_definition()
        resp = synth_questionnaire_response(definition, seed=2, subject_id="x")
        report = score_session(resp, definition)
        assert report.consistency_pct > 80.0
        for fs in report.factor_scores.values():
            assert 1.0 <= fs <= 7.0

    def test_session_set_reproducible(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        synth_session_set(a, subjects=1, seed=4, gait_seconds=1.2,
                          control_rate=500.0)
        synth_session_set(b, subjects=1, seed=4, gait_seconds=1.2,
                          control_rate=500.0)
        for rel in ("subjects/s01/physio/ecg.csv", "subjects/s01/training.csv",
                    "questionnaire_responses.csv"):
            assert (a / rel).read_text() == (b / rel).read_text()
