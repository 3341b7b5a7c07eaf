import csv
import itertools
import logging
import time
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar

import numpy as np
from tqdm import tqdm

from src.engine.tape import Tape
from src.model.adam_state import AdamState
from src.model.batch import Batch
from src.model.checkpoint import Checkpoint, CheckpointHeader
from src.model.errors import PlanError, ShareMTError, TrainingError
from src.model.evaluation import Evaluation, LanguageEvaluation, TrainingSummary
from src.model.example import Example
from src.model.model_config import ModelConfig
from src.model.sharing_plan import SharingPlan
from src.model.train_config import TrainConfig
from src.services.batcher import Prefetcher, epochs, make_batches
from src.services.bleu import corpus_bleu
from src.services.checkpoint_store import save_checkpoint
from src.services.losses import label_smoothed_ce, multilingual_loss
from src.services.optimizer import Adam
from src.services.schedule import lr_at
from src.services.sharing import resolve
from src.services.transformer import Transformer
from src.services.translator import Translator
from src.services.vocabulary import PAD_ID

logger = logging.getLogger(__name__)


def build_model(architecture: ModelConfig, plan: SharingPlan, seed: int, dtype: type = np.float32) -> Transformer:
    """Resuelve e inicializa la tabla y crea el modelo con su generador de dropout.

    La inicialización y el dropout usan flujos independientes derivados de `seed`.
    """
    table = resolve(architecture, plan, rng=np.random.default_rng([seed, 0]), dtype=dtype)
    return Transformer(table, rng=np.random.default_rng([seed, 1]), pad_id=PAD_ID)


@dataclass
class DevSet:
    """Conjunto de desarrollo de un idioma: ejemplos para la pérdida y texto para BLEU."""

    lang: str
    examples: list[Example]
    sources: list[str] = field(default_factory=list)
    references: list[str] = field(default_factory=list)


class MetricsLog:
    """CSV de métricas: step, lr, train_loss, dev_bleu_<lang>..., dev_loss, tokens_per_sec."""

    def __init__(self, path: Path, languages: list[str], append: bool = False):
        self.__path: Path = path
        self.__columns: list[str] = (
            ["step", "lr", "train_loss", "train_accuracy"]
            + [f"dev_bleu_{lang}" for lang in languages]
            + ["dev_loss", "tokens_per_sec"]
        )
        if not append or not path.exists():
            with open(path, "w", newline="", encoding="utf-8") as handle:
                csv.writer(handle).writerow(self.__columns)

    def write(self, row: dict) -> "MetricsLog":
        with open(self.__path, "a", newline="", encoding="utf-8") as handle:
            csv.DictWriter(handle, fieldnames=self.__columns, restval="").writerow(row)
        return self


class Trainer:
    """Bucle de entrenamiento multilingüe con selección del mejor checkpoint en desarrollo.

    Cada paso divide el lote por idioma, hace un forward por idioma en el
    orden de los decodificadores del plan, combina las pérdidas con
    `multilingual_loss`, propaga hacia atrás una sola vez y aplica Adam con
    la tasa `lr_at(step)`. El mapa `routing` permite dirigir varios idiomas
    al mismo decodificador (un único modelo unificado).

    Attributes:
        __model (Transformer): Modelo con la tabla de parámetros
        __config (TrainConfig): Hiperparámetros
        __examples (list[Example]): Ejemplos de entrenamiento ya filtrados
        __routing (dict[str, str]): Idioma -> decodificador
        __optimizer (Adam): Estado de Adam por celda
    """

    STEP_LOG_MSG: ClassVar[str] = "step %d lr %.3e loss %.4f acc %.4f"

    def __init__(
        self,
        model: Transformer,
        config: TrainConfig,
        examples: list[Example],
        vocab_hash: str = "",
        dev_sets: list[DevSet] | None = None,
        translator: Translator | None = None,
        output_dir: str | Path | None = None,
        routing: dict[str, str] | None = None,
        progress: bool = False,
    ):
        self.__model: Transformer = model
        self.__config: TrainConfig = config
        self.__examples: list[Example] = examples
        self.__vocab_hash: str = vocab_hash
        self.__dev_sets: list[DevSet] = dev_sets or list()
        self.__translator: Translator | None = translator
        self.__output_dir: Path | None = Path(output_dir) if output_dir is not None else None
        self.__progress: bool = progress
        self.__optimizer: Adam = Adam(config)

        languages = sorted({example.target_lang for example in examples} | {d.lang for d in self.__dev_sets})
        self.__routing: dict[str, str] = {lang: lang for lang in languages}
        self.__routing.update(routing or {})
        unknown = sorted({t for t in self.__routing.values() if t not in model.targets})
        if unknown:
            raise PlanError(PlanError.UNKNOWN_TARGET_MSG.format(target=unknown[0], targets=model.targets))
        self.__languages: list[str] = languages

        self.__step: int = 0
        self.__batches_consumed: int = 0
        self.__best_metric: float | None = None
        self.__best_loss: float | None = None
        self.__best_step: int | None = None
        self.__bad_evals: int = 0

    @property
    def step(self) -> int:
        return self.__step

    @property
    def optimizer(self) -> Adam:
        return self.__optimizer

    @property
    def languages(self) -> list[str]:
        return self.__languages

    def decoder_for(self, lang: str) -> str:
        return self.__routing[lang]

    def __ordered_languages(self, batch: Batch) -> list[str]:
        targets = self.__model.targets
        return sorted(batch.sentence_counts, key=lambda lang: (targets.index(self.__routing[lang]), lang))

    def train_step(self, batch: Batch, step: int) -> tuple[float, float, int]:
        """Un paso de optimización.

        Returns:
            tuple[float, float, int]: Pérdida del lote, exactitud por token y tokens destino
        """
        config = self.__config
        parts_by_lang = batch.by_language()
        parts = list()
        correct = tokens = 0
        per_sentence = config.loss_weighting == "sentences"
        with Tape() as tape:
            for lang in self.__ordered_languages(batch):
                part = parts_by_lang[lang]
                logits = self.__model.forward(part.source, part.target_in, self.__routing[lang], training=True)
                parts.append(label_smoothed_ce(logits, part.target_out, config.label_smoothing, PAD_ID, per_sentence))
                tokens += int(part.target_mask.sum())
                predictions = logits.data.argmax(axis=-1)
                correct += int(((predictions == part.target_out) & part.target_mask).sum())
            loss = multilingual_loss(parts, config.loss_weighting)
        tape.backward(loss)
        lr = lr_at(step, self.__model.config.d_model, config.warmup, config.lr_scale)
        self.__optimizer.step(self.__model.table, lr)
        return loss.item(), correct / tokens, tokens

    def evaluate(self) -> Evaluation:
        """Pérdida y exactitud con teacher forcing, y BLEU si hay traductor y texto de desarrollo."""
        results: list[LanguageEvaluation] = list()
        for dev in self.__dev_sets:
            loss_sum, tokens, correct = 0.0, 0, 0
            for batch in make_batches(dev.examples, self.__config.token_budget, "bilingual", np.random.default_rng(0)):
                logits = self.__model.forward(batch.source, batch.target_in, self.__routing[dev.lang])
                loss, count = label_smoothed_ce(logits, batch.target_out, self.__config.label_smoothing, PAD_ID)
                loss_sum += loss.item()
                tokens += count
                correct += int(((logits.data.argmax(axis=-1) == batch.target_out) & batch.target_mask).sum())
            bleu = None
            if self.__translator is not None and dev.sources:
                hypotheses = self.__translator.translate_lines(dev.sources, dev.lang, target=self.__routing[dev.lang])
                bleu = corpus_bleu(hypotheses, dev.references).score
            results.append(
                LanguageEvaluation(
                    lang=dev.lang,
                    loss=loss_sum / tokens if tokens else 0.0,
                    token_accuracy=correct / tokens if tokens else 0.0,
                    bleu=bleu,
                )
            )
        return Evaluation(step=self.__step, languages=tuple(results))

    def token_accuracy(self, examples: list[Example] | None = None) -> float:
        """Exactitud por token con teacher forcing (por defecto sobre el conjunto de entrenamiento)."""
        examples = self.__examples if examples is None else examples
        correct = total = 0
        for batch in make_batches(examples, self.__config.token_budget, "bilingual", np.random.default_rng(0)):
            for lang, part in batch.by_language().items():
                logits = self.__model.forward(part.source, part.target_in, self.__routing[lang])
                correct += int(((logits.data.argmax(axis=-1) == part.target_out) & part.target_mask).sum())
                total += int(part.target_mask.sum())
        return correct / total if total else 0.0

    def checkpoint(self) -> Checkpoint:
        table = self.__model.table
        rng = self.__model.rng
        return Checkpoint(
            header=CheckpointHeader(
                architecture=self.__model.config,
                plan=table.plan.describe(),
                vocab_hash=self.__vocab_hash,
                step=self.__step,
                best_metric=self.__best_metric,
                best_loss=self.__best_loss,
                best_step=self.__best_step,
                bad_evals=self.__bad_evals,
                batches_consumed=self.__batches_consumed,
                adam_step=self.__optimizer.state.step,
                rng_state=rng.bit_generator.state if rng is not None else None,
                training=self.__config,
            ),
            parameters=table.state(),
            first_moments={name: m.copy() for name, m in self.__optimizer.state.first.items()},
            second_moments={name: v.copy() for name, v in self.__optimizer.state.second.items()},
        )

    def restore(self, checkpoint: Checkpoint) -> "Trainer":
        """Continúa desde un checkpoint: parámetros, Adam, generador de dropout y posición del flujo."""
        header = checkpoint.header
        if header.plan != self.__model.table.plan.describe():
            raise PlanError(f"checkpoint plan {header.plan} does not match {self.__model.table.plan.describe()}")
        self.__model.table.load_state(checkpoint.parameters)
        self.__optimizer = Adam(
            self.__config,
            AdamState(
                step=header.adam_step,
                first={k: v.copy() for k, v in checkpoint.first_moments.items()},
                second={k: v.copy() for k, v in checkpoint.second_moments.items()},
            ),
        )
        if header.rng_state is not None and self.__model.rng is not None:
            self.__model.rng.bit_generator.state = header.rng_state
        self.__step = header.step
        self.__batches_consumed = header.batches_consumed
        self.__best_metric, self.__best_loss = header.best_metric, header.best_loss
        self.__best_step = header.best_step
        self.__bad_evals = header.bad_evals
        logger.info("Resumed training at step %d", self.__step)
        return self

    def __batches(self) -> Iterator[Batch]:
        config = self.__config
        rng = np.random.default_rng([config.seed, 2])
        stream = epochs(self.__examples, config.token_budget, config.batch_mode, rng)
        return itertools.islice(stream, self.__batches_consumed, None)

    def __save(self, name: str) -> None:
        if self.__output_dir is not None:
            save_checkpoint(self.checkpoint(), self.__output_dir / name)

    def __after_evaluation(self, evaluation: Evaluation) -> bool:
        """Guarda el mejor checkpoint y actualiza la paciencia; True si hay que parar."""
        for lang in evaluation.languages:
            logger.info(
                "eval step %d %s: loss %.4f acc %.4f bleu %s",
                evaluation.step,
                lang.lang,
                lang.loss,
                lang.token_accuracy,
                "-" if lang.bleu is None else f"{lang.bleu:.2f}",
            )
        if evaluation.improves_on(self.__best_metric, self.__best_loss):
            self.__best_metric, self.__best_loss = evaluation.mean_bleu, evaluation.loss
            self.__best_step, self.__bad_evals = evaluation.step, 0
            self.__save("best.ckpt")
        else:
            self.__bad_evals += 1
        self.__save("last.ckpt")
        return self.__bad_evals >= self.__config.patience

    def train(self) -> TrainingSummary:
        """Entrena hasta max_steps o hasta agotar la paciencia en desarrollo.

        Returns:
            TrainingSummary: Pasos dados, última pérdida y mejor checkpoint

        Raises:
            TrainingError: Cualquier fallo de un paso, con el número de paso
        """
        config = self.__config
        metrics = None
        if self.__output_dir is not None:
            self.__output_dir.mkdir(parents=True, exist_ok=True)
            metrics = MetricsLog(self.__output_dir / "metrics.csv", self.__languages, append=self.__step > 0)

        loss = float("nan")
        stopped_early = False
        started, tokens_seen = time.perf_counter(), 0
        steps = range(self.__step + 1, config.max_steps + 1)
        with Prefetcher(self.__batches(), depth=max(config.prefetch, 1)) as stream:
            for step in tqdm(steps, desc="training", unit="step", disable=not self.__progress):
                try:
                    batch = next(stream)
                    self.__batches_consumed += 1
                    loss, accuracy, tokens = self.train_step(batch, step)
                    self.__step = step
                    tokens_seen += tokens

                    evaluation = None
                    if self.__dev_sets and step % config.eval_interval == 0:
                        evaluation = self.evaluate()
                        stopped_early = self.__after_evaluation(evaluation)
                except ShareMTError as e:
                    raise TrainingError(TrainingError.STEP_FAILURE_MSG.format(step=step, error=e)) from e

                if step % config.log_interval == 0 or evaluation is not None or step == config.max_steps:
                    elapsed = time.perf_counter() - started
                    lr = lr_at(step, self.__model.config.d_model, config.warmup, config.lr_scale)
                    logger.info(self.STEP_LOG_MSG, step, lr, loss, accuracy)
                    if metrics is not None:
                        row = {"step": step, "lr": f"{lr:.6e}", "train_loss": f"{loss:.6f}"}
                        row["train_accuracy"] = f"{accuracy:.6f}"
                        row["tokens_per_sec"] = f"{tokens_seen / elapsed:.1f}" if elapsed > 0 else ""
                        if evaluation is not None:
                            row["dev_loss"] = f"{evaluation.loss:.6f}"
                            for lang in evaluation.languages:
                                row[f"dev_bleu_{lang.lang}"] = "" if lang.bleu is None else f"{lang.bleu:.2f}"
                        metrics.write(row)
                if stopped_early:
                    logger.info("No dev improvement for %d evaluations; stopping at step %d", config.patience, step)
                    break

        self.__save("last.ckpt")
        return TrainingSummary(
            steps=self.__step,
            final_loss=loss,
            best_step=self.__best_step,
            best_metric=self.__best_metric,
            stopped_early=stopped_early,
        )
