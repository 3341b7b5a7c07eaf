import pytest
from pydantic import ValidationError

from src.model.evaluation import Evaluation, LanguageEvaluation
from src.model.fmeasure import WordFMeasure
from src.model.model_config import ModelConfig
from src.model.run_config import PairConfig, SharingConfig
from src.model.sharing_plan import SharingPlan, Strategy


def test_model_config_defaults_are_the_base_model() -> None:
    """Test the default architecture (6 layers, 512/2048, 8 heads)."""
    config = ModelConfig()

    assert (config.num_layers, config.d_model, config.d_ff, config.heads) == (6, 512, 2048, 8)
    assert config.d_head == 64
    assert config.p_drop == pytest.approx(0.1)


@pytest.mark.parametrize(
    "fields",
    [
        {"d_model": 10, "heads": 4},
        {"p_drop": 1.0},
        {"vocab_size": 0},
        {"norm_placement": "middle"},
        {"unknown": 1},
    ],
)
def test_model_config_rejects_invalid_values(fields: dict) -> None:
    """Test indivisible head widths, out-of-range dropout and unknown keys.

    Args:
        fields (dict): Invalid overrides
    """
    with pytest.raises(ValidationError):
        ModelConfig(**fields)


def test_sharing_config_normalizes_the_strategy_name() -> None:
    """Test that strategy names are upper-cased."""
    assert SharingConfig(strategy="kq_both").strategy == "KQ_BOTH"


@pytest.mark.parametrize("fields", [{"strategy": "PARTIAL"}, {"strategy": "EXPLICIT"}])
def test_sharing_config_rejects_unknown_or_planless_strategies(fields: dict) -> None:
    """Test unknown names and EXPLICIT without a plan file.

    Args:
        fields (dict): Invalid sharing section
    """
    with pytest.raises(ValidationError):
        SharingConfig(**fields)


def test_pair_config_needs_both_dev_files() -> None:
    """Test that a dev source without its reference is rejected."""
    with pytest.raises(ValidationError):
        PairConfig(train_source="a.en", train_target="a.de", dev_source="d.en")


def test_sharing_plan_rejects_duplicate_targets() -> None:
    """Test that the same target language cannot appear twice."""
    with pytest.raises(ValidationError):
        SharingPlan(strategy=Strategy.FULL, targets=("de", "de"), num_layers=0, groups=())


@pytest.mark.parametrize(
    "counts, precision, recall, f",
    [
        ((2, 2, 2), 1.0, 1.0, 1.0),
        ((1, 2, 4), 0.5, 0.25, 1 / 3),
        ((0, 3, 0), 0.0, 0.0, 0.0),
    ],
)
def test_word_fmeasure(counts: tuple[int, int, int], precision: float, recall: float, f: float) -> None:
    """Test precision, recall and their harmonic mean, including the empty-reference case.

    Args:
        counts (tuple[int, int, int]): match, hyp_count, ref_count
        precision (float): Expected precision
        recall (float): Expected recall
        f (float): Expected F-measure
    """
    word = WordFMeasure(match=counts[0], hyp_count=counts[1], ref_count=counts[2])

    assert word.precision == pytest.approx(precision)
    assert word.recall == pytest.approx(recall)
    assert word.f == pytest.approx(f)


def test_word_fmeasure_addition_sums_counts() -> None:
    """Test that bucket aggregation adds raw counts."""
    total = WordFMeasure(match=1, hyp_count=2, ref_count=3) + WordFMeasure(match=2, hyp_count=2, ref_count=2)
    assert (total.match, total.hyp_count, total.ref_count) == (3, 4, 5)


def evaluation(bleu: float, loss: float) -> Evaluation:
    return Evaluation(
        step=1,
        languages=(
            LanguageEvaluation(lang="de", loss=loss, token_accuracy=0.5, bleu=bleu),
            LanguageEvaluation(lang="nl", loss=loss, token_accuracy=0.5, bleu=bleu),
        ),
    )


def test_evaluation_prefers_bleu_then_loss() -> None:
    """Test the model-selection rule: higher mean BLEU wins, ties go to lower dev loss."""
    assert evaluation(20.0, 3.0).improves_on(None, None)
    assert evaluation(21.0, 9.0).improves_on(20.0, 3.0)
    assert not evaluation(19.0, 1.0).improves_on(20.0, 3.0)
    assert evaluation(20.0, 2.0).improves_on(20.0, 3.0)
    assert not evaluation(20.0, 3.0).improves_on(20.0, 3.0)
