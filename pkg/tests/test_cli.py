import json
import os

import numpy as np
import pytest

from labnet.audio_io import read_wav, write_wav
from labnet.cli import main
from labnet.datagen import read_dataset, read_manifest

TINY_CONFIG = {
    "profile": "desk",
    "stft": {"fft_size": 64, "window_length_ms": 4.0},
    "codec": {"bins": 14, "theta_step_deg": 15.0},
    "model": {"crf_rnn_hidden": 8, "crf_head_hidden": 8, "bf_rnn_hidden": 8,
              "crf_half_width": 0},
    "train": {"batch_size": 2, "epochs": 2},
    "data": {"duration_s": 0.25,
             "constraints": {"source_distance": [0.8, 2.0]}},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(TINY_CONFIG))
    data = root / "data"
    rc = main(["simulate", "--config", str(cfg_path), "--out", str(data),
               "--n", "4", "--n-val", "2", "--seed", "5"])
    assert rc == 0
    run = root / "run"
    rc = main(["train", "--config", str(cfg_path), "--data", str(data),
               "--out", str(run), "--seed", "5"])
    assert rc == 0
    return {"root": root, "config": cfg_path, "data": data, "run": run}


class TestSimulate:
    def test_fixed_seed_byte_identical_manifests(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(TINY_CONFIG))
        for name in ("a", "b"):
            rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name),
                       "--n", "3", "--seed", "7"])
            assert rc == 0
        a = (tmp_path / "a" / "train" / "manifest.jsonl").read_bytes()
        b = (tmp_path / "b" / "train" / "manifest.jsonl").read_bytes()
        assert a == b

    def test_zero_examples_is_valid_empty_dataset(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(TINY_CONFIG))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "d"),
                   "--n", "0", "--seed", "1"])
        assert rc == 0
        assert read_manifest(tmp_path / "d", "train") == []
        assert read_dataset(tmp_path / "d", "train") == []

    def test_bucket_summary_sums_to_hundred(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(TINY_CONFIG))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "d"),
                   "--n", "6", "--seed", "2"])
        assert rc == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if "bucket" in l]
        assert len(lines) == 4
        total = sum(float(l.split("(")[1].rstrip("%)")) for l in lines)
        assert total == pytest.approx(100.0, abs=0.21)  # one-decimal rounding


class TestTrainCmd:
    def test_outputs_exist(self, workspace):
        run = workspace["run"]
        assert (run / "last.ckpt").exists()
        assert (run / "best.ckpt").exists()
        assert (run / "history.jsonl").exists()
        summary = json.loads((run / "train_summary.json").read_text())
        assert summary["epochs_run"] == 2

    def test_resume_continues(self, workspace):
        rc = main(["train", "--config", str(workspace["config"]),
                   "--data", str(workspace["data"]), "--out", str(workspace["run"]),
                   "--seed", "5", "--resume", "--epochs", "3"])
        assert rc == 0
        lines = (workspace["run"] / "history.jsonl").read_text().splitlines()
        assert json.loads(lines[-1])["epoch"] == 3


class TestEvaluateCmd:
    def test_oracle_passthrough_clips_at_sixty(self, workspace, tmp_path):
        report_path = tmp_path / "oracle.json"
        rc = main(["evaluate", "--config", str(workspace["config"]),
                   "--data", str(workspace["data"]), "--split", "train",
                   "--report", str(report_path), "--passthrough", "oracle"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert all(r["si_sdr_db"] == 60.0 for r in report["scatter"])

    def test_mixture_floor_is_finite(self, workspace, tmp_path):
        report_path = tmp_path / "floor.json"
        rc = main(["evaluate", "--config", str(workspace["config"]),
                   "--data", str(workspace["data"]), "--split", "train",
                   "--report", str(report_path), "--passthrough", "mixture"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert np.isfinite(report["average"]["si_sdr_db"])

    def test_model_report_schema(self, workspace, tmp_path):
        report_path = tmp_path / "model.json"
        csv_path = tmp_path / "scatter.csv"
        rc = main(["evaluate", "--data", str(workspace["data"]), "--split", "train",
                   "--checkpoint", str(workspace["run"] / "best.ckpt"),
                   "--report", str(report_path), "--csv", str(csv_path)])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert set(report) == {"buckets", "average", "total_examples", "scatter"}
        assert report["total_examples"] == 4
        assert len(report["scatter"]) == 4
        for record in report["scatter"]:
            assert record["doa_mae_deg"] is not None
        assert len(csv_path.read_text().splitlines()) == 5

    def test_missing_checkpoint_is_error(self, workspace, tmp_path):
        rc = main(["evaluate", "--data", str(workspace["data"]), "--split", "train",
                   "--checkpoint", str(tmp_path / "none.ckpt"),
                   "--report", str(tmp_path / "r.json")])
        assert rc == 1

    def test_non_checkpoint_file_is_error(self, workspace, tmp_path):
        bogus = tmp_path / "bogus.ckpt"
        bogus.write_bytes(b"not a checkpoint")
        rc = main(["evaluate", "--data", str(workspace["data"]), "--split", "train",
                   "--checkpoint", str(bogus), "--report", str(tmp_path / "r.json")])
        assert rc == 1


class TestSeparateCmd:
    def test_outputs_match_input_length(self, workspace, tmp_path):
        wav = workspace["data"] / "train" / "train-00000.mix.wav"
        out = tmp_path / "sep"
        rc = main(["separate", "--checkpoint", str(workspace["run"] / "best.ckpt"),
                   "--input", str(wav), "--out", str(out)])
        assert rc == 0
        files = sorted(os.listdir(out))
        assert len(files) == 2
        mix, _ = read_wav(wav)
        for f in files:
            est, rate = read_wav(out / f)
            assert rate == 16000
            assert est.shape[0] == mix.shape[0]

    def test_deterministic_outputs(self, workspace, tmp_path):
        wav = workspace["data"] / "train" / "train-00001.mix.wav"
        outs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            rc = main(["separate", "--checkpoint", str(workspace["run"] / "best.ckpt"),
                       "--input", str(wav), "--out", str(out)])
            assert rc == 0
            outs.append((out / sorted(os.listdir(out))[0]).read_bytes())
        assert outs[0] == outs[1]

    def test_wrong_channel_count_rejected(self, workspace, tmp_path):
        bad = tmp_path / "mono.wav"
        write_wav(bad, np.zeros((4000, 1), dtype=np.float32), 16000)
        rc = main(["separate", "--checkpoint", str(workspace["run"] / "best.ckpt"),
                   "--input", str(bad), "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_wrong_sample_rate_rejected(self, workspace, tmp_path):
        bad = tmp_path / "slow.wav"
        write_wav(bad, np.zeros((4000, 6), dtype=np.float32), 8000)
        rc = main(["separate", "--checkpoint", str(workspace["run"] / "best.ckpt"),
                   "--input", str(bad), "--out", str(tmp_path / "out")])
        assert rc == 1


class TestLocateCmd:
    def test_csv_layout(self, workspace, tmp_path):
        wav = workspace["data"] / "train" / "train-00000.mix.wav"
        out = tmp_path / "tracks.csv"
        rc = main(["locate", "--checkpoint", str(workspace["run"] / "best.ckpt"),
                   "--input", str(wav), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "source,frame,theta1_deg,theta2_deg,x_m,y_m"
        mix, _ = read_wav(wav)
        from labnet.dsp import StftConfig, frame_count

        frames = frame_count(mix.shape[0], StftConfig(fft_size=64, window_length_ms=4.0), 16000)
        assert len(lines) == 1 + 2 * frames
        first = lines[1].split(",")
        assert len(first) == 6
        float(first[2]), float(first[4])  # parseable angles and coordinates