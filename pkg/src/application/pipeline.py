import logging
from pathlib import Path

from src.model.bpe_model import BpeModel
from src.model.errors import ConfigurationError
from src.model.evaluation import TrainingSummary
from src.model.run_config import RunConfig
from src.model.sharing_plan import SharingPlan
from src.services.bpe import BpeCodec, BpeLearner, load_bpe, save_bpe, word_counts
from src.services.checkpoint_store import load_checkpoint
from src.services.corpus import ParallelCorpus, prepare_corpus, read_lines
from src.services.run_config_loader import write_run_config
from src.services.sharing import load_plan_file, plan_from_description, plan_from_strategy, resolve
from src.services.trainer import DevSet, Trainer, build_model
from src.services.transformer import Transformer
from src.services.translator import Translator
from src.services.vocabulary import Vocabulary

logger = logging.getLogger(__name__)

BPE_FILE, VOCAB_FILE, CONFIG_FILE = "model.bpe", "vocab.txt", "run.cfg"


def build_plan(config: RunConfig) -> SharingPlan:
    """Plan de la ejecución: fichero explícito si se indica, si no la estrategia por nombre."""
    if not config.targets:
        raise ConfigurationError("the config declares no [pair.<lang>] sections")
    if config.sharing.plan_file is not None:
        return load_plan_file(config.sharing.plan_file, config.targets, config.model.num_layers)
    return plan_from_strategy(config.sharing.strategy, config.targets, config.model.num_layers)


def training_corpora(config: RunConfig) -> dict[str, ParallelCorpus]:
    return {
        lang: ParallelCorpus.from_files(pair.train_source, pair.train_target, lang)
        for lang, pair in config.pairs.items()
    }


def combined_lines(config: RunConfig) -> list[str]:
    """Texto de entrenamiento de todos los pares; cada fichero se lee una sola vez."""
    paths: dict[Path, None] = dict()
    for pair in config.pairs.values():
        paths.setdefault(pair.train_source.resolve())
        paths.setdefault(pair.train_target.resolve())
    return [line for path in paths for line in read_lines(path)]


def ensure_bpe(config: RunConfig, lines: list[str], output_dir: Path) -> BpeModel:
    if config.data.bpe is not None and config.data.bpe.is_file():
        model = load_bpe(config.data.bpe)
    else:
        model = BpeLearner(word_counts(lines), marker=config.data.marker).learn(config.data.merges)
    save_bpe(model, output_dir / BPE_FILE)
    return model


def ensure_vocab(config: RunConfig, lines: list[str], codec: BpeCodec, output_dir: Path) -> Vocabulary:
    if config.data.vocab is not None and config.data.vocab.is_file():
        vocab = Vocabulary.load(config.data.vocab)
    else:
        alphabet = {char for word in word_counts(lines) for char in word}
        vocab = Vocabulary.build(
            (codec.encode_line(line) for line in lines), config.targets, alphabet, marker=codec.marker
        )
    return vocab.save(output_dir / VOCAB_FILE)


def dev_sets(config: RunConfig, codec: BpeCodec, vocab: Vocabulary) -> list[DevSet]:
    sets: list[DevSet] = list()
    for lang, pair in config.pairs.items():
        if pair.dev_source is None or pair.dev_target is None:
            continue
        corpus = ParallelCorpus.from_files(pair.dev_source, pair.dev_target, lang)
        sets.append(
            DevSet(
                lang=lang,
                examples=prepare_corpus(corpus, codec, vocab, config.training.max_length),
                sources=corpus.source,
                references=corpus.target,
            )
        )
    return sets


def run_training(config: RunConfig, resume: Path | None = None) -> TrainingSummary:
    """Aprende (o carga) BPE y vocabulario, prepara los datos y entrena.

    La configuración resuelta, con el tamaño real del vocabulario, se
    escribe como `run.cfg` en el directorio de salida.
    """
    plan = build_plan(config)
    output_dir = config.output.directory
    output_dir.mkdir(parents=True, exist_ok=True)

    corpora = training_corpora(config)
    lines = combined_lines(config)
    codec = BpeCodec(ensure_bpe(config, lines, output_dir))
    vocab = ensure_vocab(config, lines, codec, output_dir)

    architecture = config.model.model_copy(update={"vocab_size": vocab.size})
    resolved = config.model_copy(update={"model": architecture})
    write_run_config(resolved, output_dir / CONFIG_FILE)

    examples = [
        example
        for corpus in corpora.values()
        for example in prepare_corpus(corpus, codec, vocab, config.training.max_length)
    ]
    model = build_model(architecture, plan, config.training.seed)
    trainer = Trainer(
        model,
        config.training,
        examples,
        vocab_hash=vocab.fingerprint,
        dev_sets=dev_sets(config, codec, vocab),
        translator=Translator(model, vocab, codec, config.decode),
        output_dir=output_dir,
        progress=config.output.progress,
    )
    if resume is not None:
        trainer.restore(load_checkpoint(resume, vocab_hash=vocab.fingerprint, plan=plan.describe()))
    logger.info(
        "Training %s plan on %d example(s) for targets %s", plan.strategy.value, len(examples), ",".join(plan.targets)
    )
    return trainer.train()


def load_translation_model(
    checkpoint: Path, vocab_path: Path | None = None, bpe_path: Path | None = None
) -> tuple[Transformer, Vocabulary, BpeCodec]:
    """Modelo en modo inferencia; vocabulario y BPE se buscan junto al checkpoint si no se indican."""
    vocab = Vocabulary.load(vocab_path or checkpoint.parent / VOCAB_FILE)
    codec = BpeCodec(load_bpe(bpe_path or checkpoint.parent / BPE_FILE))
    loaded = load_checkpoint(checkpoint, vocab_hash=vocab.fingerprint)
    plan = plan_from_description(loaded.header.plan)
    model = Transformer(resolve(loaded.header.architecture, plan).load_state(loaded.parameters))
    return model, vocab, codec


def training_word_counts(path: Path) -> dict[str, int]:
    return dict(word_counts(read_lines(path)))
