import json
import subprocess
import sys

import numpy as np
import pytest

from tilda import io as tio
from tilda.cli import main


@pytest.fixture
def synth_files(tmp_path, monkeypatch):
    monkeypatch.setenv(tio.DATA_DIR_ENV, str(tmp_path))
    rc = main([
        "synth", "--classes", "3", "--dim", "8", "--per-class", "20", "--sep", "6",
        "--seed", "1", "--out", "train.tfv,train.txt",
        "--test-per-class", "5", "--test-out", "test.tfv,test.txt",
    ])
    assert rc == 0
    return tmp_path


def test_synth_writes_files(synth_files):
    assert tio.read_features(synth_files / "train.tfv").shape == (60, 8)
    assert len(tio.read_labels(synth_files / "test.txt")) == 15


def test_train_then_predict(synth_files, capsys):
    assert main(["train", "--features", "train.tfv", "--labels", "train.txt",
                 "--model", "m.tilda", "-P", "2", "-k", "3", "--seed", "4"]) == 0
    store = tio.load_model(synth_files / "m.tilda")
    assert (store.config.P, store.config.k, store.config.seed) == (2, 3, 4)
    capsys.readouterr()
    assert main(["predict", "--model", "m.tilda", "--features", "test.tfv", "--out", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,label"
    predicted = [line.split(",")[1] for line in lines[1:]]
    assert predicted == tio.read_labels(synth_files / "test.txt")


def test_predict_json(synth_files, capsys):
    main(["train", "--features", "train.tfv", "--labels", "train.txt", "--model", "m.tilda", "-P", "2", "-k", "2"])
    capsys.readouterr()
    assert main(["predict", "--model", "m.tilda", "--features", "test.tfv", "--out", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out) == 15 and out[0]["index"] == 0


def test_train_tilda_p_forces_single_subspace(synth_files):
    main(["train", "--features", "train.tfv", "--labels", "train.txt", "--model", "p.tilda",
          "--method", "tilda-p", "-P", "4", "-k", "2"])
    assert tio.load_model(synth_files / "p.tilda").config.P == 1


@pytest.mark.parametrize("scenario,rows", [("ci", 3), ("ei", 4), ("oneshot", 1)])
def test_bench_json(synth_files, capsys, scenario, rows):
    capsys.readouterr()
    rc = main(["bench", "--scenario", scenario, "--method", "tilda", "-P", "2", "-k", "3",
               "--parts", "4", "--train", "train.tfv,train.txt", "--test", "test.tfv,test.txt",
               "--report", "json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["rows"]) == rows
    assert report["summary"]["accuracy"] == 1.0


def test_bench_output_file(synth_files):
    rc = main(["bench", "--scenario", "ci", "--method", "nn", "--train", "train.tfv,train.txt",
               "--test", "test.tfv,test.txt", "--report", "csv", "--output", "r.csv"])
    assert rc == 0
    assert (synth_files / "r.csv").read_text().startswith("stage,classes,examples,accuracy,bytes\n")


def test_bench_csv_input(tmp_path, capsys):
    X = np.random.default_rng(0).normal(size=(20, 4)) + np.repeat([[0, 0, 0, 0], [9, 9, 9, 9]], 10, axis=0)
    labels = ["a"] * 10 + ["b"] * 10
    tio.write_csv_features(tmp_path / "d.csv", X, labels)
    rc = main(["bench", "--scenario", "oneshot", "--method", "ncm",
               "--train", str(tmp_path / "d.csv"), "--test", str(tmp_path / "d.csv")])
    assert rc == 0
    assert "accuracy 1.0000" in capsys.readouterr().out


def test_augment_command(tmp_path):
    imgs = np.random.default_rng(0).integers(0, 256, size=(2, 4, 5, 3), dtype=np.uint8)
    tio.write_images(tmp_path / "in.timg", imgs)
    assert main(["augment", "--images", str(tmp_path / "in.timg"), "--out", str(tmp_path / "out.timg")]) == 0
    out = tio.read_images(tmp_path / "out.timg")
    assert out.shape == (20, 4, 5, 3)
    assert np.array_equal(out[0], imgs[0]) and np.array_equal(out[10], imgs[1])


def test_image_training_uses_augmentation(tmp_path, capsys):
    rng = np.random.default_rng(0)
    imgs = np.concatenate([
        rng.integers(0, 60, size=(6, 4, 4, 1)),
        rng.integers(190, 256, size=(6, 4, 4, 1)),
    ]).astype(np.uint8)
    tio.write_images(tmp_path / "i.timg", imgs)
    tio.write_labels(tmp_path / "l.txt", ["dark"] * 6 + ["light"] * 6)
    assert main(["train", "--features", str(tmp_path / "i.timg"), "--labels", str(tmp_path / "l.txt"),
                 "--model", str(tmp_path / "m.tilda"), "-P", "4", "-k", "2"]) == 0
    store = tio.load_model(tmp_path / "m.tilda")
    assert store.learned_count("dark") == 60
    capsys.readouterr()
    assert main(["predict", "--model", str(tmp_path / "m.tilda"), "--features", str(tmp_path / "i.timg")]) == 0
    assert capsys.readouterr().out.split() == ["dark"] * 6 + ["light"] * 6


def test_usage_errors_exit_1(synth_files, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--scenario", "nope", "--train", "a,b", "--test", "a,b"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 1
    assert main(["train", "--features", "train.tfv", "--labels", "train.txt", "--model", "m", "--method", "nn"]) == 1
    assert main(["train", "--features", "train.tfv", "--labels", "train.txt", "--model", "m", "-P", "3"]) == 1


def test_data_errors_exit_2(synth_files, capsys):
    (synth_files / "bad.tfv").write_bytes(b"nope")
    assert main(["train", "--features", "bad.tfv", "--labels", "train.txt", "--model", "m"]) == 2
    assert main(["train", "--features", "missing.tfv", "--labels", "train.txt", "--model", "m"]) == 2
    assert main(["train", "--features", "train.tfv", "--labels", "test.txt", "--model", "m"]) == 2
    (synth_files / "m.bin").write_bytes(b"garbage-model")
    assert main(["predict", "--model", "m.bin", "--features", "test.tfv"]) == 2
    assert "data error" in capsys.readouterr().err


def test_console_script_exit_codes(tmp_path):
    run = lambda *a: subprocess.run([sys.executable, "-m", "tilda.cli", *a], capture_output=True, text=True)
    assert run("--help").returncode == 0
    assert run("bench").returncode == 1
    assert run("predict", "--model", str(tmp_path / "none"), "--features", "x").returncode == 2
