import hashlib
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

from src.model.errors import CorpusError, VocabularyError

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
RESERVED: tuple[str, ...] = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(len(RESERVED))


def language_token(lang: str) -> str:
    return f"<2{lang}>"


class Vocabulary:
    """Biyección token <-> id del vocabulario conjunto.

    Ids reservados: <pad>=0, <s>=1, </s>=2, <unk>=3, después un token
    `<2xx>` por idioma destino y a continuación las subpalabras.

    Attributes:
        __tokens (list[str]): Token de cada id
        __ids (dict[str, int]): Id de cada token
    """

    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise VocabularyError(f"vocabulary must start with the reserved tokens {RESERVED}")
        if len(set(tokens)) != len(tokens):
            raise VocabularyError("vocabulary tokens must be unique")
        self.__tokens: list[str] = list(tokens)
        self.__ids: dict[str, int] = {token: index for index, token in enumerate(self.__tokens)}

    @classmethod
    def build(
        cls,
        subword_lines: Iterable[Sequence[str]],
        targets: Sequence[str],
        alphabet: Iterable[str] = (),
        marker: str = "@@",
    ) -> "Vocabulary":
        """Construye el vocabulario a partir del corpus combinado ya segmentado.

        Las subpalabras se ordenan por frecuencia descendente y luego
        lexicográficamente. Cada carácter de `alphabet` se incluye en forma
        final y con marcador, para que palabras nuevas sobre caracteres vistos
        nunca produzcan <unk>.

        Args:
            subword_lines (Iterable[Sequence[str]]): Frases segmentadas de todos los pares
            targets (Sequence[str]): Idiomas destino, en orden
            alphabet (Iterable[str]): Caracteres vistos al aprender el BPE
            marker (str): Marcador de continuación

        Returns:
            Vocabulary: Vocabulario determinista para el mismo corpus
        """
        counts: Counter[str] = Counter()
        for tokens in subword_lines:
            counts.update(tokens)
        for char in alphabet:
            counts.update({char: 0, char + marker: 0})
        specials = set(RESERVED) | {language_token(t) for t in targets}
        clashes = specials & set(counts)
        if clashes:
            raise CorpusError(f"corpus contains reserved tokens {sorted(clashes)}")
        subwords = sorted(counts, key=lambda token: (-counts[token], token))
        return cls(list(RESERVED) + [language_token(t) for t in targets] + subwords)

    @property
    def tokens(self) -> list[str]:
        return self.__tokens

    @property
    def size(self) -> int:
        return len(self.__tokens)

    def __len__(self) -> int:
        return len(self.__tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.__ids

    def id_of(self, token: str) -> int:
        return self.__ids.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.__tokens):
            raise VocabularyError(VocabularyError.OUT_OF_RANGE_MSG.format(token_id=token_id, size=self.size))
        return self.__tokens[token_id]

    def language_id(self, lang: str) -> int:
        """Id de `<2lang>`.

        Raises:
            VocabularyError: Si el idioma no tiene token reservado
        """
        try:
            return self.__ids[language_token(lang)]
        except KeyError as e:
            raise VocabularyError(VocabularyError.UNKNOWN_LANGUAGE_MSG.format(lang=lang)) from e

    @property
    def languages(self) -> list[str]:
        return [t[2:-1] for t in self.__tokens[len(RESERVED) :] if t.startswith("<2") and t.endswith(">")]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id_of(token) for token in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        """Tokens de una hipótesis: corta en </s> y omite <s>, <pad> y tokens de idioma."""
        tokens: list[str] = list()
        languages = {language_token(lang) for lang in self.languages}
        for token_id in ids:
            if token_id == EOS_ID:
                break
            token = self.token_of(int(token_id))
            if token_id in (PAD_ID, BOS_ID) or token in languages:
                continue
            tokens.append(token)
        return tokens

    @property
    def fingerprint(self) -> str:
        """sha256 de la lista de tokens; identifica el vocabulario en los checkpoints."""
        return hashlib.sha256("\n".join(self.__tokens).encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> "Vocabulary":
        Path(path).write_text("\n".join(self.__tokens) + "\n", encoding="utf-8")
        logger.info("Saved vocabulary of %d tokens to %s", self.size, path)
        return self

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())
