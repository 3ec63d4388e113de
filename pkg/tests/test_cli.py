from __future__ import annotations

from pathlib import Path

import pytest

from asrkit.cli import main
from asrkit.lm import read_arpa


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth-data -> lm-train -> train, exercised through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth-data", "--out-dir", str(root / "data"), "--seed", "3",
                 "--train", "6", "--dev", "2", "--test", "2"]) == 0
    source = root / "data" / "source"

    assert main(["lm-train", "--corpus", str(source / "corpus.txt"),
                 "--order", "2", "--out", str(root / "lm.arpa"),
                 "--alphabet", str(source / "alphabet.txt")]) == 0

    (root / "config.txt").write_text(
        f"alphabet={source}/alphabet.txt\n"
        f"train_manifest={source}/train.csv\n"
        f"dev_manifest={source}/dev.csv\n"
        f"test_manifest={source}/test.csv\n"
        f"run_dir={root}/run\n"
        "seed=4\nepochs=2\nbatch_size=3\nlr=0.002\ndropout=0.1\n"
        "hidden=8\ncontext_radius=1\nbeam_width=8\n", encoding="utf-8")
    assert main(["train", "--config", str(root / "config.txt")]) == 0
    return root


def test_synth_data_layout(workspace):
    for lang in ("source", "target"):
        base = workspace / "data" / lang
        for name in ("alphabet.txt", "corpus.txt", "train.csv", "dev.csv", "test.csv"):
            assert (base / name).is_file(), (lang, name)


def test_lm_train_writes_readable_arpa(workspace):
    lm = read_arpa(workspace / "lm.arpa")
    assert lm.order == 2
    assert " " in lm.chars


def test_train_produces_run_dir(workspace):
    run = workspace / "run"
    assert (run / "best.ckpt").exists()
    assert (run / "curve.csv").is_file()
    assert (run / "curve.png").is_file()


def test_finetune_cli(workspace):
    target = workspace / "data" / "target"
    (workspace / "ft.txt").write_text(
        f"alphabet={target}/alphabet.txt\n"
        f"train_manifest={target}/train.csv\n"
        f"dev_manifest={target}/dev.csv\n"
        f"run_dir={workspace}/ft_run\n"
        "seed=4\nepochs=1\nbatch_size=3\nlr=0.002\ndropout=0.1\n"
        "hidden=8\ncontext_radius=1\n", encoding="utf-8")
    assert main(["finetune", "--config", str(workspace / "ft.txt"),
                 "--init", str(workspace / "run" / "best.ckpt"),
                 "--freeze", "2"]) == 0
    assert (workspace / "ft_run" / "best.ckpt").exists()


def test_decode_cli(workspace, capsys):
    manifest = (workspace / "data" / "source" / "train.csv").read_text(encoding="utf-8")
    wav = manifest.strip().split("\n")[1].split(",")[0]
    wav_path = workspace / "data" / "source" / wav
    assert main(["decode", "--checkpoint", str(workspace / "run" / "best.ckpt"),
                 "--wav", str(wav_path)]) == 0
    capsys.readouterr()
    assert main(["decode", "--checkpoint", str(workspace / "run" / "best.ckpt"),
                 "--wav", str(wav_path), "--lm", str(workspace / "lm.arpa"),
                 "--beam-width", "8"]) == 0


def test_suite_cli(workspace, capsys, tmp_path):
    target = workspace / "data" / "target"
    (tmp_path / "suite.txt").write_text(
        f"alphabet={target}/alphabet.txt\n"
        f"train_manifest={target}/train.csv\n"
        f"dev_manifest={target}/dev.csv\n"
        f"test_manifest={target}/test.csv\n"
        f"lm_corpus={target}/corpus.txt\n"
        f"run_dir={tmp_path}/suite\n"
        "seed=4\nepochs=1\nbatch_size=3\nlr=0.002\ndropout=0.1\n"
        "hidden=8\ncontext_radius=1\nbeam_width=4\nlm_order=2\n",
        encoding="utf-8")
    assert main(["suite", "--config", str(tmp_path / "suite.txt"),
                 "--source-checkpoint", str(workspace / "run" / "best.ckpt")]) == 0
    out = [l for l in capsys.readouterr().out.strip().split("\n") if "," in l]
    assert len(out) == 6
    assert out[0].startswith("Reference,")
    assert (tmp_path / "suite" / "results.csv").is_file()
    assert (tmp_path / "suite" / "figures" / "results.png").is_file()


def test_eval_cli_report_format(workspace, capsys):
    assert main(["eval", "--checkpoint", str(workspace / "run" / "best.ckpt"),
                 "--manifest", str(workspace / "data" / "source" / "test.csv"),
                 "--lm", str(workspace / "lm.arpa"), "--beam-width", "8",
                 "--method", "smoke",
                 "--out", str(workspace / "report.csv")]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[-2] == "method,wer,cer"
    fields = out[-1].split(",")
    assert fields[0] == "smoke"
    assert len(fields[1].split(".")[1]) == 4  # four decimal places
    report = Path(workspace / "report.csv").read_text(encoding="utf-8").strip().split("\n")
    assert report[0] == "method,wer,cer"
    assert report[1] == out[-1]
