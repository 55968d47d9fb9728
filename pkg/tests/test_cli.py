import json
import subprocess
import sys

import pytest

from zsmat.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "seq"
    assert run_cli("synth", "--preset", "easy", "--out-dir", str(out)) == 0
    return out


class TestSynth:
    def test_writes_three_artifacts(self, synth_dir):
        assert (synth_dir / "gt.txt").exists()
        assert (synth_dir / "detections.jsonl").exists()
        assert (synth_dir / "scenario.json").exists()

    def test_scenario_echo_reproduces(self, synth_dir, tmp_path):
        out2 = tmp_path / "seq2"
        assert run_cli("synth", "--scenario", str(synth_dir / "scenario.json"), "--out-dir", str(out2)) == 0
        assert (out2 / "detections.jsonl").read_bytes() == (synth_dir / "detections.jsonl").read_bytes()
        assert (out2 / "gt.txt").read_bytes() == (synth_dir / "gt.txt").read_bytes()

    def test_unknown_preset_is_config_error(self, tmp_path):
        assert run_cli("synth", "--preset", "nope", "--out-dir", str(tmp_path / "x")) == 1


class TestThreshold:
    def test_prints_and_writes(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "threshold.json"
        assert run_cli("threshold", "--detections", str(synth_dir / "detections.jsonl"), "--out", str(out)) == 0
        captured = capsys.readouterr().out
        assert "tau =" in captured
        data = json.loads(out.read_text())
        assert 0.0 <= data["tau"] <= 1.0
        assert data["mode"] == "adaptive"
        assert sum(r["count"] for r in data["histogram"]) == data["n_scores"]


class TestTrack:
    def test_oracle_track_and_eval(self, synth_dir, tmp_path, capsys):
        run_dir = tmp_path / "run"
        assert (
            run_cli(
                "track",
                "--detections", str(synth_dir / "detections.jsonl"),
                "--segmenter", "oracle",
                "--out", str(run_dir),
            )
            == 0
        )
        for name in ("results.txt", "events.jsonl", "threshold.json", "run_config.txt"):
            assert (run_dir / name).exists(), name
        assert (
            run_cli(
                "eval",
                "--gt", str(synth_dir / "gt.txt"),
                "--pred", str(run_dir / "results.txt"),
                "--out", str(run_dir / "eval"),
            )
            == 0
        )
        data = json.loads((run_dir / "eval.json").read_text())
        assert data["pooled"]["hota"] > 0.5
        table = capsys.readouterr().out
        assert "POOLED" in table

    def test_missing_scenario_is_error(self, tmp_path):
        det = tmp_path / "d.jsonl"
        det.write_text('{"frame":0,"detections":[]}\n')
        assert run_cli("track", "--detections", str(det), "--segmenter", "oracle", "--out", str(tmp_path / "o")) == 1

    def test_exec_segmenter(self, synth_dir, tmp_path):
        scenario = synth_dir / "scenario.json"
        cfg = json.loads(scenario.read_text())
        run_dir = tmp_path / "run_exec"
        code = run_cli(
            "track",
            "--detections", str(synth_dir / "detections.jsonl"),
            "--segmenter", f"exec:{sys.executable} -m zsmat.oracle_server {scenario}",
            "--size", f"{cfg['width']}x{cfg['height']}",
            "--frames", str(cfg["frames"]),
            "--out", str(run_dir),
        )
        assert code == 0
        assert (run_dir / "results.txt").exists()

    def test_exec_without_size_is_error(self, synth_dir, tmp_path):
        assert (
            run_cli(
                "track",
                "--detections", str(synth_dir / "detections.jsonl"),
                "--segmenter", "exec:whatever",
                "--out", str(tmp_path / "o"),
            )
            == 1
        )

    def test_dead_segmenter_exits_2(self, synth_dir, tmp_path):
        code = run_cli(
            "track",
            "--detections", str(synth_dir / "detections.jsonl"),
            "--segmenter", f"exec:{sys.executable} -c pass",
            "--size", "160x120",
            "--frames", "90",
            "--out", str(tmp_path / "o"),
        )
        assert code == 2


class TestReport:
    def test_report_from_two_runs(self, synth_dir, tmp_path):
        runs = []
        for name, extra in (("adaptive", []), ("fixed", ["--config"])):
            run_dir = tmp_path / name
            argv = [
                "track",
                "--detections", str(synth_dir / "detections.jsonl"),
                "--segmenter", "oracle",
                "--out", str(run_dir),
            ]
            if extra:
                cfg = tmp_path / "fixed.cfg"
                cfg.write_text("detection_threshold = 0.3\n")
                argv += ["--config", str(cfg)]
            assert run_cli(*argv) == 0
            assert run_cli(
                "eval",
                "--gt", str(synth_dir / "gt.txt"),
                "--pred", str(run_dir / "results.txt"),
                "--out", str(run_dir / "eval"),
            ) == 0
            runs.append(run_dir)
        out = tmp_path / "report"
        assert run_cli("report", "--runs", *[str(r) for r in runs], "--out", str(out)) == 0
        comparison = (out / "comparison.csv").read_text().splitlines()
        assert len(comparison) == 3  # header + one row per run
        assert comparison[0].startswith("run,hota")
        histograms = (out / "histograms.csv").read_text()
        assert "adaptive" in histograms and "fixed" in histograms

    def test_missing_inputs_listed(self, tmp_path, capsys):
        empty = tmp_path / "empty_run"
        empty.mkdir()
        assert run_cli("report", "--runs", str(empty), "--out", str(tmp_path / "r")) == 1
        err = capsys.readouterr().err
        assert "threshold.json" in err and "events.jsonl" in err and "eval.json" in err

    def test_shifted_score_modes_give_different_taus(self, tmp_path):
        # two synthetic worlds whose true-positive modes sit at different
        # levels produce visibly different thresholds in the report table
        import json as _json

        from zsmat.world import scenario_to_dict
        from zsmat.presets import easy

        taus = []
        runs = []
        for name, tp_mean in (("lo", 0.55), ("hi", 0.9)):
            scenario = scenario_to_dict(easy())
            scenario["detector_noise"]["tp_score_mode"] = [tp_mean, 0.04]
            scenario_path = tmp_path / f"{name}.json"
            scenario_path.write_text(_json.dumps(scenario))
            seq = tmp_path / f"seq_{name}"
            assert run_cli("synth", "--scenario", str(scenario_path), "--out-dir", str(seq)) == 0
            run_dir = tmp_path / f"run_{name}"
            assert run_cli(
                "track",
                "--detections", str(seq / "detections.jsonl"),
                "--segmenter", "oracle",
                "--out", str(run_dir),
            ) == 0
            assert run_cli(
                "eval",
                "--gt", str(seq / "gt.txt"),
                "--pred", str(run_dir / "results.txt"),
                "--out", str(run_dir / "eval"),
            ) == 0
            taus.append(json.loads((run_dir / "threshold.json").read_text())["tau"])
            runs.append(run_dir)
        assert abs(taus[0] - taus[1]) > 0.1
        out = tmp_path / "report"
        assert run_cli("report", "--runs", *[str(r) for r in runs], "--out", str(out)) == 0
        hist = (out / "histograms.csv").read_text()
        assert f"{taus[0]}" in hist and f"{taus[1]}" in hist


class TestConform:
    def test_oracle_server_conforms(self, synth_dir, capsys):
        scenario = synth_dir / "scenario.json"
        cfg = json.loads(scenario.read_text())
        code = run_cli(
            "conform",
            "--command", f"{sys.executable} -m zsmat.oracle_server {scenario}",
            "--size", f"{cfg['width']}x{cfg['height']}",
            "--frames", str(cfg["frames"]),
        )
        assert code == 0
        assert "conformance: ok" in capsys.readouterr().out


class TestEntryPoint:
    def test_console_script_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "zsmat.cli", "--version"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert "zs-mat" in proc.stdout
