import csv
import json
from pathlib import Path

import pytest

from src.application.cli import CLI
from src.services.run_config_loader import load_run_config

RUN_CONFIG: str = """
[data]
merges = 60

[model]
num_layers = 1
d_model = 16
d_ff = 32
heads = 2
p_drop = 0.1
max_position = 64

[sharing]
strategy = KV_BOTH

[training]
warmup = 20
token_budget = 150
max_steps = 8
eval_interval = 4
log_interval = 2
seed = 5
prefetch = 2

[decode]
width = 2
extra_length = 4

[output]
directory = run

[pair.cp]
train_source = toy/train.en
train_target = toy/train.cp
dev_source = toy/dev.en
dev_target = toy/dev.cp

[pair.rv]
train_source = toy/train.en
train_target = toy/train.rv
dev_source = toy/dev.en
dev_target = toy/dev.rv
"""


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """Fixture for a toy corpus and a run config next to it."""
    assert CLI().run(["make-toy", "--output-dir", str(tmp_path / "toy"), "--sentences", "30", "--dev", "4"]) == 0
    (tmp_path / "run.cfg").write_text(RUN_CONFIG, encoding="utf-8")
    return tmp_path


def test_train_resume_translate_score(workspace: Path, capsys: pytest.CaptureFixture) -> None:
    """Test the command-line workflow from raw toy text to BLEU."""
    config = str(workspace / "run.cfg")
    run_dir = workspace / "run"

    assert CLI().run(["train", "--config", config]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["steps"] == 8
    for name in ("best.ckpt", "last.ckpt", "metrics.csv", "run.cfg", "vocab.txt", "model.bpe"):
        assert (run_dir / name).exists(), name
    resolved = load_run_config(run_dir / "run.cfg")
    assert resolved.model.vocab_size > 4 + 2

    resume = ["--set", "training.max_steps=10", "--resume", str(run_dir / "last.ckpt")]
    assert CLI().run(["train", "--config", config, *resume]) == 0
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["steps"] == 10
    with open(run_dir / "metrics.csv", encoding="utf-8") as handle:
        steps = [int(row["step"]) for row in csv.DictReader(handle)]
    assert steps == [2, 4, 6, 8, 10]

    hypothesis = workspace / "dev.hyp.rv"
    translate = ["translate", "--checkpoint", str(run_dir / "best.ckpt"), "--input", str(workspace / "toy" / "dev.en")]
    assert CLI().run(translate + ["--lang", "rv", "--output", str(hypothesis), "--beam", "2"]) == 0
    assert len(hypothesis.read_text(encoding="utf-8").splitlines()) == 4

    score = ["score", "--hyp", str(hypothesis), "--ref", str(workspace / "toy" / "dev.rv"), "--lang", "rv"]
    assert CLI().run(score + ["--fmeasure", "--train-corpus", str(workspace / "toy" / "train.rv")]) == 0
    assert capsys.readouterr().out.startswith("BLEU = ")
    assert (workspace / "dev.hyp.rv.fmeasure.csv").exists()


def test_resume_with_another_strategy_is_refused(workspace: Path) -> None:
    """Test that a checkpoint only resumes under the plan it was trained with."""
    config = str(workspace / "run.cfg")
    assert CLI().run(["train", "--config", config, "--set", "training.max_steps=2"]) == 0

    last = str(workspace / "run" / "last.ckpt")
    assert CLI().run(["train", "--config", config, "--strategy", "FULL", "--resume", last]) == 1
