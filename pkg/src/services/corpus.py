import logging
from collections.abc import Iterator, Sequence
from pathlib import Path

from src.model.errors import CorpusError
from src.model.example import Example
from src.services.bpe import BpeCodec
from src.services.vocabulary import BOS_ID, EOS_ID, Vocabulary

logger = logging.getLogger(__name__)

MAX_LENGTH: int = 70


def read_lines(path: str | Path) -> list[str]:
    """Una frase por línea, UTF-8; conserva las líneas vacías para no romper el alineamiento."""
    try:
        with open(path, encoding="utf-8") as handle:
            return [line.rstrip("\n") for line in handle]
    except OSError as e:
        raise CorpusError(f"cannot read corpus file {path}: {e}") from e


class ParallelCorpus:
    """Ficheros paralelos alineados por línea para un idioma destino.

    Attributes:
        __source (list[str]): Frases fuente
        __target (list[str]): Frases destino
        __target_lang (str): Idioma destino
    """

    def __init__(self, source: Sequence[str], target: Sequence[str], target_lang: str):
        if len(source) != len(target):
            raise CorpusError(
                CorpusError.MISALIGNED_MSG.format(
                    source="<source>", target="<target>", n_source=len(source), n_target=len(target)
                )
            )
        self.__source: list[str] = list(source)
        self.__target: list[str] = list(target)
        self.__target_lang: str = target_lang

    @classmethod
    def from_files(cls, source_path: str | Path, target_path: str | Path, target_lang: str) -> "ParallelCorpus":
        source, target = read_lines(source_path), read_lines(target_path)
        if len(source) != len(target):
            raise CorpusError(
                CorpusError.MISALIGNED_MSG.format(
                    source=source_path, target=target_path, n_source=len(source), n_target=len(target)
                )
            )
        logger.info("Loaded %d sentence pair(s) for %s from %s", len(source), target_lang, source_path)
        return cls(source, target, target_lang)

    @property
    def target_lang(self) -> str:
        return self.__target_lang

    @property
    def source(self) -> list[str]:
        return self.__source

    @property
    def target(self) -> list[str]:
        return self.__target

    def __len__(self) -> int:
        return len(self.__source)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return zip(self.__source, self.__target)


def prepare_example(
    src_tokens: Sequence[str],
    tgt_tokens: Sequence[str],
    target_lang: str,
    vocab: Vocabulary,
    max_length: int = MAX_LENGTH,
) -> Example | None:
    """Convierte un par segmentado en ids con token de idioma, <s> y </s>.

    El límite de longitud se aplica al número de subpalabras antes de añadir
    los tokens especiales.

    Returns:
        Example | None: None si algún lado supera `max_length` o el destino está vacío

    Raises:
        VocabularyError: Si el idioma destino no tiene token en el vocabulario
    """
    lang_id = vocab.language_id(target_lang)
    if not tgt_tokens or len(src_tokens) > max_length or len(tgt_tokens) > max_length:
        return None
    target_ids = vocab.encode(tgt_tokens)
    return Example(
        target_lang=target_lang,
        source_ids=(lang_id, *vocab.encode(src_tokens)),
        target_in=(BOS_ID, *target_ids),
        target_out=(*target_ids, EOS_ID),
        source_length=len(src_tokens),
        target_length=len(tgt_tokens),
    )


def prepare_corpus(
    corpus: ParallelCorpus, codec: BpeCodec, vocab: Vocabulary, max_length: int = MAX_LENGTH
) -> list[Example]:
    """Segmenta y convierte un corpus completo, descartando los pares filtrados."""
    examples: list[Example] = list()
    for source, target in corpus:
        example = prepare_example(
            codec.encode_line(source), codec.encode_line(target), corpus.target_lang, vocab, max_length
        )
        if example is not None:
            examples.append(example)
    dropped = len(corpus) - len(examples)
    if dropped:
        logger.info("Filtered %d of %d pair(s) for %s", dropped, len(corpus), corpus.target_lang)
    return examples
