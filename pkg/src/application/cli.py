import argparse
import csv
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import ClassVar

from pydantic import ValidationError

from src.application.pipeline import CONFIG_FILE, load_translation_model, run_training, training_word_counts
from src.model.beam_config import BeamConfig
from src.model.errors import ConfigurationError, ShareMTError
from src.model.parameter_count import ParameterCount
from src.model.sharing_plan import BUILT_IN_STRATEGIES
from src.services.bleu import corpus_bleu
from src.services.bpe import BpeCodec, BpeLearner, load_bpe, save_bpe, word_counts
from src.services.corpus import read_lines
from src.services.fmeasure import DEFAULT_BOUNDS, fmeasure_buckets, word_fmeasures, write_bucket_csv, write_word_csv
from src.services.run_config_loader import load_run_config
from src.services.sharing import count_parameters, load_plan_file, plan_from_strategy
from src.services.toy_tasks import TOY_TASKS, generate_toy_corpus, write_toy_corpus
from src.services.translator import Translator
from src.services.vocabulary import Vocabulary

logger = logging.getLogger(__name__)

LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_TARGETS: tuple[str, ...] = ("de", "nl")


class CLI:
    """Interfaz de línea de comandos: aprende BPE, construye vocabularios,
    entrena, traduce, puntúa y cuenta parámetros.

    Cada comando es un método que recibe los argumentos ya interpretados y
    devuelve el código de salida. Los errores del proyecto se convierten en
    un diagnóstico de una línea en stderr.

    Attributes:
        __parser (argparse.ArgumentParser): Parser con un subcomando por operación
    """

    ERROR_MSG: ClassVar[str] = "sharemt {command}: error: {error}"
    COUNT_HEADER: ClassVar[tuple[str, ...]] = ("strategy", "total", "total_M", "weights_only", "weights_M")

    def __init__(self):
        self.__parser: argparse.ArgumentParser = argparse.ArgumentParser(
            prog="sharemt",
            description="Multilingual NMT with configurable decoder parameter sharing.",
        )
        self.__parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
        self.__set_up_commands()

    @property
    def parser(self) -> argparse.ArgumentParser:
        return self.__parser

    def __set_up_commands(self) -> "CLI":
        commands = self.__parser.add_subparsers(dest="command", required=True)

        learn = commands.add_parser("learn-bpe", help="learn BPE merges from tokenized text")
        learn.add_argument("--input", nargs="+", required=True, type=Path)
        learn.add_argument("--merges", type=int, required=True)
        learn.add_argument("--output", required=True, type=Path)
        learn.add_argument("--marker", default="@@")
        learn.set_defaults(handler=self.learn_bpe)

        vocab = commands.add_parser("build-vocab", help="build the joint vocabulary")
        vocab.add_argument("--input", nargs="+", required=True, type=Path)
        vocab.add_argument("--bpe", required=True, type=Path)
        vocab.add_argument("--targets", nargs="+", required=True)
        vocab.add_argument("--output", required=True, type=Path)
        vocab.set_defaults(handler=self.build_vocab)

        train = commands.add_parser("train", help="train a model from a run config")
        train.add_argument("--config", required=True, type=Path)
        train.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        train.add_argument("--strategy")
        train.add_argument("--seed", type=int)
        train.add_argument("--output-dir", type=Path)
        train.add_argument("--resume", type=Path)
        train.set_defaults(handler=self.train)

        translate = commands.add_parser("translate", help="translate a file line by line")
        translate.add_argument("--checkpoint", required=True, type=Path)
        translate.add_argument("--input", required=True, type=Path)
        translate.add_argument("--lang", required=True)
        translate.add_argument("--output", type=Path)
        translate.add_argument("--beam", type=int)
        translate.add_argument("--alpha", type=float)
        translate.add_argument("--extra-length", type=int)
        translate.add_argument("--normalization", choices=["gnmt", "average"])
        translate.add_argument("--workers", type=int, default=1)
        translate.add_argument("--vocab", type=Path)
        translate.add_argument("--bpe", type=Path)
        translate.set_defaults(handler=self.translate)

        score = commands.add_parser("score", help="corpus BLEU and frequency-bucketed F-measure")
        score.add_argument("--hyp", required=True, type=Path)
        score.add_argument("--ref", required=True, type=Path)
        score.add_argument("--lang", default="-")
        score.add_argument("--csv", type=Path)
        score.add_argument("--fmeasure", action="store_true")
        score.add_argument("--train-corpus", type=Path)
        score.add_argument("--bounds", default=",".join(str(b) for b in DEFAULT_BOUNDS))
        score.add_argument("--fmeasure-csv", type=Path)
        score.add_argument("--words-csv", type=Path)
        score.set_defaults(handler=self.score)

        count = commands.add_parser("count-params", help="parameter counts per sharing strategy")
        count.add_argument("--config", type=Path)
        count.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        count.add_argument("--strategy", default="all")
        count.add_argument("--targets", nargs="+")
        count.set_defaults(handler=self.count_params)

        toy = commands.add_parser("make-toy", help="write a synthetic copy/reverse/sort corpus")
        toy.add_argument("--output-dir", required=True, type=Path)
        toy.add_argument("--sentences", type=int, default=64)
        toy.add_argument("--dev", type=int, default=16)
        toy.add_argument("--tasks", nargs="+", default=list(TOY_TASKS), choices=list(TOY_TASKS))
        toy.add_argument("--seed", type=int, default=0)
        toy.set_defaults(handler=self.make_toy)
        return self

    def run(self, argv: Sequence[str] | None = None) -> int:
        """Interpreta `argv`, configura el logging y ejecuta el comando.

        Returns:
            int: 0 si todo va bien; 2 para errores de configuración, 1 para el resto
        """
        args = self.__parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
        try:
            return args.handler(args)
        except ShareMTError as e:
            print(self.ERROR_MSG.format(command=args.command, error=e), file=sys.stderr)
            return e.EXIT_CODE
        except OSError as e:
            print(self.ERROR_MSG.format(command=args.command, error=e), file=sys.stderr)
            return 1

    def learn_bpe(self, args: argparse.Namespace) -> int:
        counts = word_counts(line for path in args.input for line in read_lines(path))
        save_bpe(BpeLearner(counts, marker=args.marker).learn(args.merges), args.output)
        return 0

    def build_vocab(self, args: argparse.Namespace) -> int:
        codec = BpeCodec(load_bpe(args.bpe))
        lines = [line for path in args.input for line in read_lines(path)]
        alphabet = {char for word in word_counts(lines) for char in word}
        Vocabulary.build((codec.encode_line(line) for line in lines), args.targets, alphabet, codec.marker).save(
            args.output
        )
        return 0

    def train(self, args: argparse.Namespace) -> int:
        overrides = list(args.overrides)
        for option, value in (
            ("sharing.strategy", args.strategy),
            ("training.seed", args.seed),
            ("output.directory", args.output_dir.resolve() if args.output_dir else None),
        ):
            if value is not None:
                overrides.append(f"{option}={value}")
        config = load_run_config(args.config, overrides)
        summary = run_training(config, resume=args.resume)
        print(summary.model_dump_json())
        return 0

    def translate(self, args: argparse.Namespace) -> int:
        if args.workers < 1:
            raise ConfigurationError("--workers must be at least 1")
        beam = self.__beam_config(args)
        model, vocab, codec = load_translation_model(args.checkpoint, args.vocab, args.bpe)
        lines = read_lines(args.input)
        translations = Translator(model, vocab, codec, beam).translate_lines(lines, args.lang, args.workers)
        text = "\n".join(translations) + ("\n" if translations else "")
        if args.output is not None:
            args.output.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0

    def __beam_config(self, args: argparse.Namespace) -> BeamConfig:
        """Sección `[decode]` del `run.cfg` junto al checkpoint, con los flags explícitos por encima.

        Raises:
            ConfigurationError: Si algún valor no es válido
        """
        run_file = args.checkpoint.parent / CONFIG_FILE
        decode = load_run_config(run_file).decode if run_file.is_file() else BeamConfig()
        flags = {
            "width": args.beam,
            "alpha": args.alpha,
            "extra_length": args.extra_length,
            "normalization": args.normalization,
        }
        try:
            return BeamConfig.model_validate(decode.model_dump() | {k: v for k, v in flags.items() if v is not None})
        except ValidationError as e:
            first = e.errors()[0]
            raise ConfigurationError(f"invalid decode option {first['loc'][0]}: {first['msg']}") from e

    def score(self, args: argparse.Namespace) -> int:
        """BLEU de corpus y, con `--fmeasure`, F-measure por cubetas de frecuencia.

        El informe se imprime y las métricas se escriben en CSV junto a la
        hipótesis salvo que se indique otra ruta.
        """
        hypotheses, references = read_lines(args.hyp), read_lines(args.ref)
        bleu = corpus_bleu(hypotheses, references)
        print(bleu)
        bounds = self.__parse_bounds(args.bounds) if args.fmeasure else ()
        if args.fmeasure and args.train_corpus is None:
            raise ConfigurationError("--fmeasure needs --train-corpus")

        with open(args.csv or self.__sibling(args.hyp, ".bleu.csv"), "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["metric", "language", "value"])
            writer.writerow(["bleu", args.lang, f"{bleu.score:.2f}"])
            writer.writerow(["brevity_penalty", args.lang, f"{bleu.brevity_penalty:.4f}"])
            for n, precision in enumerate(bleu.precisions, start=1):
                writer.writerow([f"precision_{n}", args.lang, f"{precision:.2f}"])

        if args.fmeasure:
            train_counts = training_word_counts(args.train_corpus)
            buckets = fmeasure_buckets(hypotheses, references, train_counts, bounds)
            for bucket in buckets:
                high = "inf" if bucket.high is None else bucket.high
                print(f"[{bucket.low}, {high}]\ttypes={bucket.types}\tF={bucket.f:.4f}")
            write_bucket_csv(buckets, args.fmeasure_csv or self.__sibling(args.hyp, ".fmeasure.csv"))
            if args.words_csv is not None:
                write_word_csv(word_fmeasures(hypotheses, references), train_counts, args.words_csv)
        return 0

    def __parse_bounds(self, text: str) -> tuple[int, ...]:
        try:
            bounds = tuple(int(b) for b in text.split(","))
        except ValueError as e:
            raise ConfigurationError(f"--bounds must be comma-separated integers, got '{text}'") from e
        if bounds[0] != 0 or any(a >= b for a, b in zip(bounds, bounds[1:])):
            raise ConfigurationError(f"--bounds must start at 0 and be strictly ascending, got '{text}'")
        return bounds

    @staticmethod
    def __sibling(path: Path, suffix: str) -> Path:
        return path.with_name(path.name + suffix)

    def count_params(self, args: argparse.Namespace) -> int:
        """Tabla de parámetros por estrategia.

        `--strategy all` recorre las estrategias predefinidas; `config` usa el
        plan de la configuración (fichero explícito o estrategia). Sin pares
        declarados se asumen dos destinos, `de` y `nl`.
        """
        config = load_run_config(args.config, args.overrides)
        targets = tuple(args.targets or config.targets or DEFAULT_TARGETS)
        num_layers = config.model.num_layers
        if args.strategy == "all":
            plans = [plan_from_strategy(s, targets, num_layers) for s in BUILT_IN_STRATEGIES]
        elif args.strategy == "config" and config.sharing.plan_file is not None:
            plans = [load_plan_file(config.sharing.plan_file, targets, num_layers)]
        elif args.strategy == "config":
            plans = [plan_from_strategy(config.sharing.strategy, targets, num_layers)]
        else:
            plans = [plan_from_strategy(args.strategy, targets, num_layers)]
        print(self.format_counts([count_parameters(config.model, plan) for plan in plans]))
        return 0

    def format_counts(self, counts: Sequence[ParameterCount]) -> str:
        rows = [self.COUNT_HEADER] + [
            (
                c.strategy,
                str(c.total),
                f"{c.total / 1e6:.0f}",
                str(c.weights_only),
                f"{c.weights_only / 1e6:.0f}",
            )
            for c in counts
        ]
        widths = [max(len(row[i]) for row in rows) for i in range(len(self.COUNT_HEADER))]
        return "\n".join("  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in rows)

    def make_toy(self, args: argparse.Namespace) -> int:
        """Corpus sintético: `train.*` completo y `dev.*` con sus primeras `--dev` frases."""
        if args.sentences < 1 or not 0 <= args.dev <= args.sentences:
            raise ConfigurationError("--sentences must be positive and --dev at most --sentences")
        source, targets = generate_toy_corpus(args.sentences, tuple(args.tasks), seed=args.seed)
        write_toy_corpus(args.output_dir, source, targets, prefix="train")
        if args.dev:
            dev_targets = {task: lines[: args.dev] for task, lines in targets.items()}
            write_toy_corpus(args.output_dir, source[: args.dev], dev_targets, prefix="dev")
        return 0


def main(argv: Sequence[str] | None = None) -> int:
    return CLI().run(argv)
