import csv
from pathlib import Path

import numpy as np
import pytest

from src.model.beam_config import BeamConfig
from src.model.errors import PlanError, TrainingError
from src.model.example import Example
from src.model.model_config import ModelConfig
from src.model.sharing_plan import BUILT_IN_STRATEGIES, Strategy
from src.model.train_config import TrainConfig
from src.services.batcher import make_batches
from src.services.bpe import BpeCodec, learn_bpe
from src.services.checkpoint_store import load_checkpoint
from src.services.corpus import ParallelCorpus, prepare_corpus
from src.services.sharing import plan_from_strategy, verify_plan
from src.services.toy_tasks import generate_toy_corpus
from src.services.trainer import DevSet, Trainer, build_model
from src.services.translator import Translator
from src.services.vocabulary import Vocabulary

TASKS: tuple[str, ...] = ("cp", "rv")
SEED: int = 0
TRAIN_CONFIG: TrainConfig = TrainConfig(
    warmup=10, token_budget=120, max_steps=6, eval_interval=3, log_interval=2, seed=7, prefetch=2
)
MONOTONE_STEPS: int = 50
FULL_BATCH_BUDGET: int = 100_000


class Toy:
    """Tiny copy/reverse corpus with its BPE codec, vocabulary and examples."""

    def __init__(self):
        sources, targets = generate_toy_corpus(24, TASKS, seed=3, lexicon_size=12, max_words=4)
        self.codec = BpeCodec(learn_bpe(sources, 20))
        self.vocab = Vocabulary.build([self.codec.encode_line(line) for line in sources], TASKS)
        self.examples: list[Example] = list()
        self.dev_sets: list[DevSet] = list()
        for task in TASKS:
            corpus = ParallelCorpus(sources, targets[task], task)
            examples = prepare_corpus(corpus, self.codec, self.vocab)
            self.examples.extend(examples)
            self.dev_sets.append(DevSet(task, examples[:4], sources[:4], targets[task][:4]))
        self.config = ModelConfig(num_layers=1, d_model=8, d_ff=16, heads=2, vocab_size=self.vocab.size)


@pytest.fixture(scope="module")
def toy() -> Toy:
    """Fixture for the shared toy setup."""
    return Toy()


def trainer_for(toy: Toy, strategy: str = "FULL", config: TrainConfig = TRAIN_CONFIG, **kwargs) -> Trainer:
    model = build_model(toy.config, plan_from_strategy(strategy, TASKS, toy.config.num_layers), SEED)
    return Trainer(model, config, toy.examples, vocab_hash=toy.vocab.fingerprint, **kwargs)


def read_metrics(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8") as handle:
        return [{k: v for k, v in row.items() if k != "tokens_per_sec"} for row in csv.DictReader(handle)]


def test_metrics_are_deterministic(toy: Toy, tmp_path: Path) -> None:
    """Test that two runs with the same seeds log identical metrics apart from throughput."""
    for run in ("first", "second"):
        trainer_for(toy, dev_sets=toy.dev_sets, output_dir=tmp_path / run).train()

    first = read_metrics(tmp_path / "first" / "metrics.csv")
    second = read_metrics(tmp_path / "second" / "metrics.csv")
    assert [row["step"] for row in first] == ["2", "3", "4", "6"]
    assert first == second


def test_full_sharing_equals_a_unified_model(toy: Toy) -> None:
    """Test that FULL over two targets trains bit-identically to one decoder shared by routing."""
    shared = trainer_for(toy)
    unified_model = build_model(toy.config, plan_from_strategy("FULL", ("u",), toy.config.num_layers), SEED)
    unified = Trainer(unified_model, TRAIN_CONFIG, toy.examples, routing={task: "u" for task in TASKS})

    shared.train()
    unified.train()

    left, right = shared.checkpoint().parameters, unified.checkpoint().parameters
    assert len(left) == len(right)
    for a, b in zip(left.values(), right.values()):
        np.testing.assert_array_equal(a, b)


def test_resume_matches_uninterrupted_training(toy: Toy, tmp_path: Path) -> None:
    """Test that stopping, checkpointing and resuming gives the same parameters as one run."""
    straight = trainer_for(toy, "KQ_BOTH")
    straight.train()

    half = TRAIN_CONFIG.model_copy(update={"max_steps": 3})
    trainer_for(toy, "KQ_BOTH", half, output_dir=tmp_path).train()
    checkpoint = load_checkpoint(tmp_path / "last.ckpt", vocab_hash=toy.vocab.fingerprint)
    resumed = trainer_for(toy, "KQ_BOTH").restore(checkpoint)
    assert resumed.step == 3
    resumed.train()

    assert resumed.step == straight.step == TRAIN_CONFIG.max_steps
    for name, values in straight.checkpoint().parameters.items():
        np.testing.assert_array_equal(resumed.checkpoint().parameters[name], values)


@pytest.mark.parametrize("strategy", BUILT_IN_STRATEGIES)
def test_plan_holds_after_training(toy: Toy, strategy: Strategy) -> None:
    """Test partition, shapes and aliasing of every built-in plan after optimization steps.

    Args:
        strategy (Strategy): Built-in strategy
    """
    plan = plan_from_strategy(strategy, TASKS, toy.config.num_layers)
    model = build_model(toy.config, plan, SEED)
    trainer = Trainer(model, TRAIN_CONFIG, toy.examples)
    trainer.train()

    assert trainer.optimizer.state.step == TRAIN_CONFIG.max_steps
    report = verify_plan(toy.config, plan, model.table)
    assert report.ok, report.violations


def test_non_finite_parameters_abort_training(toy: Toy) -> None:
    """Test that a poisoned cell stops training with the failing step in the message."""
    model = build_model(toy.config, plan_from_strategy("EMBED", TASKS, toy.config.num_layers), SEED)
    cell = next(iter(model.table.cells.values()))
    cell.assign(np.full(cell.shape, np.nan, dtype=cell.dtype))

    with pytest.raises(TrainingError, match="step 1"):
        Trainer(model, TRAIN_CONFIG, toy.examples).train()


def test_evaluation_with_bleu(toy: Toy, tmp_path: Path) -> None:
    """Test per-language dev BLEU in the metrics file and the best checkpoint on disk."""
    model = build_model(toy.config, plan_from_strategy("ATTN_BOTH", TASKS, toy.config.num_layers), SEED)
    translator = Translator(model, toy.vocab, toy.codec, BeamConfig(width=1, extra_length=2))
    config = TRAIN_CONFIG.model_copy(update={"max_steps": 2, "eval_interval": 2})
    trainer = Trainer(model, config, toy.examples, toy.vocab.fingerprint, toy.dev_sets, translator, tmp_path)

    summary = trainer.train()
    rows = read_metrics(tmp_path / "metrics.csv")

    assert summary.best_step == 2
    assert (tmp_path / "best.ckpt").exists()
    assert (tmp_path / "last.ckpt").exists()
    assert 0.0 <= float(rows[-1]["dev_bleu_cp"]) <= 100.0
    assert 0.0 <= float(rows[-1]["dev_bleu_rv"]) <= 100.0
    assert float(rows[-1]["dev_loss"]) > 0.0


def test_evaluate_reports_each_dev_language(toy: Toy) -> None:
    """Test teacher-forced loss and accuracy per dev language without a translator."""
    evaluation = trainer_for(toy, dev_sets=toy.dev_sets).evaluate()

    assert [lang.lang for lang in evaluation.languages] == list(TASKS)
    assert all(lang.bleu is None and 0.0 <= lang.token_accuracy <= 1.0 for lang in evaluation.languages)
    assert evaluation.loss > 0.0


def test_routing_to_an_unknown_decoder(toy: Toy) -> None:
    """Test that every routed language needs a decoder in the plan."""
    with pytest.raises(PlanError):
        trainer_for(toy, routing={"cp": "xx"})


def test_token_accuracy_range(toy: Toy) -> None:
    """Test teacher-forced accuracy over the training examples."""
    assert 0.0 <= trainer_for(toy).token_accuracy() <= 1.0


def test_resume_keeps_the_best_step(toy: Toy, tmp_path: Path) -> None:
    """Test that the step of the best checkpoint survives a restart."""
    half = TRAIN_CONFIG.model_copy(update={"max_steps": 3})
    trainer_for(toy, config=half, dev_sets=toy.dev_sets, output_dir=tmp_path).train()
    checkpoint = load_checkpoint(tmp_path / "last.ckpt", vocab_hash=toy.vocab.fingerprint)
    assert checkpoint.header.best_step == 3

    summary = trainer_for(toy, dev_sets=toy.dev_sets).restore(checkpoint).train()
    assert summary.best_step in (3, 6)


def test_sentence_weighting_trains(toy: Toy) -> None:
    """Test that the per-sentence mode gives a finite loss different from the token mode on the same batch."""
    batch = make_batches(toy.examples, TRAIN_CONFIG.token_budget, "balanced", np.random.default_rng(0))[0]
    sentences = TRAIN_CONFIG.model_copy(update={"loss_weighting": "sentences"})

    by_sentence, _, tokens = trainer_for(toy, config=sentences).train_step(batch, 1)
    by_token, _, same_tokens = trainer_for(toy).train_step(batch, 1)

    assert np.isfinite(by_sentence)
    assert by_sentence != pytest.approx(by_token)
    assert tokens == same_tokens == batch.target_mask.sum()


@pytest.mark.parametrize("strategy", BUILT_IN_STRATEGIES)
def test_loss_decreases_over_the_first_steps(toy: Toy, strategy: Strategy) -> None:
    """Test that the full-batch training loss, smoothed over a window of 5 steps, never rises in 50 steps.

    Args:
        strategy (Strategy): Built-in strategy
    """
    batch = make_batches(toy.examples, FULL_BATCH_BUDGET, "balanced", np.random.default_rng(0))[0]
    config = toy.config.model_copy(update={"p_drop": 0.0})
    model = build_model(config, plan_from_strategy(strategy, TASKS, config.num_layers), SEED)
    trainer = Trainer(model, TrainConfig(warmup=400, lr_scale=1.0), toy.examples)

    losses = [trainer.train_step(batch, step)[0] for step in range(1, MONOTONE_STEPS + 1)]
    smoothed = np.convolve(losses, np.ones(5) / 5, mode="valid")

    assert len(batch.languages) == len(toy.examples)
    assert all(later <= earlier for earlier, later in zip(smoothed, smoothed[1:]))
    assert losses[-1] < losses[0]
