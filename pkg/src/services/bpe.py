import logging
from collections import Counter, defaultdict
from collections.abc import Iterable
from pathlib import Path
from typing import ClassVar

from sortedcontainers import SortedList

from src.model.bpe_model import END_OF_WORD, BpeModel
from src.model.errors import CorpusError

logger = logging.getLogger(__name__)

Pair = tuple[str, str]


def word_counts(lines: Iterable[str]) -> Counter[str]:
    """Tabla de frecuencias de palabras de un texto ya tokenizado por espacios."""
    counts: Counter[str] = Counter()
    for line in lines:
        counts.update(line.split())
    return counts


def initial_symbols(word: str) -> tuple[str, ...]:
    """Caracteres de la palabra; el último lleva la marca de fin de palabra."""
    return tuple(word[:-1]) + (word[-1] + END_OF_WORD,)


class BpeLearner:
    """Aprendizaje incremental de fusiones BPE.

    Mantiene el recuento de cada par adyacente, el índice par -> palabras que
    lo contienen y una cola de prioridad ordenada por (-recuento, par), de
    modo que cada fusión solo recalcula las palabras afectadas. Los empates
    de frecuencia se resuelven por orden lexicográfico del par.

    Attributes:
        __words (list[list[str]]): Símbolos actuales de cada palabra distinta
        __freqs (list[int]): Frecuencia de cada palabra
        __pairs (Counter[Pair]): Recuento ponderado de pares adyacentes
        __index (defaultdict[Pair, set[int]]): Palabras que contienen cada par
        __queue (SortedList): Entradas (-recuento, par)

    Example:
        >>> learner = BpeLearner({"newest": 6, "widest": 3})
        >>> learner.learn(1).merges
        (('e', 's'),)
    """

    EMPTY_MERGES_MSG: ClassVar[str] = "No adjacent pairs left after {count} merge(s); stopping early"

    def __init__(self, counts: dict[str, int], marker: str = "@@"):
        counts = {word: freq for word, freq in counts.items() if word and freq > 0}
        if not counts:
            raise CorpusError(CorpusError.EMPTY_CORPUS_MSG)
        self.__marker: str = marker
        ordered = sorted(counts)
        self.__words: list[list[str]] = [list(initial_symbols(word)) for word in ordered]
        self.__freqs: list[int] = [counts[word] for word in ordered]
        self.__pairs: Counter[Pair] = Counter()
        self.__index: defaultdict[Pair, set[int]] = defaultdict(set)
        self.__queue: SortedList = SortedList()

        for position, symbols in enumerate(self.__words):
            self.__add_word(position, symbols)
        for pair, count in self.__pairs.items():
            self.__queue.add((-count, pair))

    @staticmethod
    def __adjacent(symbols: list[str]) -> Counter[Pair]:
        return Counter(zip(symbols, symbols[1:]))

    def __add_word(self, position: int, symbols: list[str]) -> None:
        for pair, times in self.__adjacent(symbols).items():
            self.__pairs[pair] += times * self.__freqs[position]
            self.__index[pair].add(position)

    def __update(self, pair: Pair, delta: int) -> None:
        old = self.__pairs[pair]
        if old > 0:
            self.__queue.discard((-old, pair))
        new = old + delta
        self.__pairs[pair] = new
        if new > 0:
            self.__queue.add((-new, pair))
        else:
            del self.__pairs[pair]

    def __merge_word(self, position: int, best: Pair) -> None:
        symbols = self.__words[position]
        freq = self.__freqs[position]
        before = self.__adjacent(symbols)

        merged: list[str] = list()
        i = 0
        while i < len(symbols):
            if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                merged.append(symbols[i] + symbols[i + 1])
                i += 2
            else:
                merged.append(symbols[i])
                i += 1
        after = self.__adjacent(merged)
        self.__words[position] = merged

        for pair in set(before) | set(after):
            delta = (after[pair] - before[pair]) * freq
            if delta:
                self.__update(pair, delta)
            if pair in after:
                self.__index[pair].add(position)
            else:
                self.__index[pair].discard(position)

    def learn(self, n_merges: int) -> BpeModel:
        """Aplica hasta `n_merges` fusiones del par más frecuente.

        Args:
            n_merges (int): Número de fusiones; 0 produce un modelo de caracteres

        Returns:
            BpeModel: Fusiones en orden de aprendizaje
        """
        assert n_merges >= 0, "n_merges must be non-negative"
        merges: list[Pair] = list()
        while len(merges) < n_merges:
            if not self.__queue:
                logger.warning(self.EMPTY_MERGES_MSG.format(count=len(merges)))
                break
            _, best = self.__queue[0]
            for position in sorted(self.__index[best]):
                self.__merge_word(position, best)
            self.__index.pop(best, None)
            merges.append(best)
            if len(merges) % 1000 == 0:
                logger.info("Learned %d/%d merges", len(merges), n_merges)
        return BpeModel(merges=tuple(merges), marker=self.__marker)

    @property
    def alphabet(self) -> set[str]:
        """Caracteres vistos en el corpus de aprendizaje."""
        return {char for symbols in self.__words for symbol in symbols for char in symbol.removesuffix(END_OF_WORD)}


def learn_bpe(lines: Iterable[str], n_merges: int, marker: str = "@@") -> BpeModel:
    return BpeLearner(word_counts(lines), marker=marker).learn(n_merges)


class BpeCodec:
    """Aplica un BpeModel a palabras y líneas, y deshace la segmentación.

    Las fusiones se aplican por rango (la de menor rango primero), lo que
    reproduce el orden de aprendizaje. Cualquier palabra es representable:
    en el peor caso queda como secuencia de caracteres.
    """

    def __init__(self, model: BpeModel):
        self.__model: BpeModel = model
        self.__ranks: dict[Pair, int] = model.ranks
        self.__cache: dict[str, tuple[str, ...]] = dict()

    @property
    def model(self) -> BpeModel:
        return self.__model

    @property
    def marker(self) -> str:
        return self.__model.marker

    def encode_word(self, word: str) -> tuple[str, ...]:
        if word in self.__cache:
            return self.__cache[word]
        symbols = list(initial_symbols(word))
        while len(symbols) > 1:
            ranked = [
                (self.__ranks[pair], i)
                for i, pair in enumerate(zip(symbols, symbols[1:]))
                if pair in self.__ranks
            ]
            if not ranked:
                break
            rank = min(ranked)[0]
            best = self.__model.merges[rank]
            merged: list[str] = list()
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged

        subwords = tuple(symbol + self.marker for symbol in symbols[:-1]) + (symbols[-1].removesuffix(END_OF_WORD),)
        self.__cache[word] = subwords
        return subwords

    def encode_line(self, line: str) -> list[str]:
        return [subword for word in line.split() for subword in self.encode_word(word)]

    def decode_tokens(self, tokens: Iterable[str]) -> str:
        """Une subpalabras: las que terminan en el marcador se pegan a la siguiente."""
        text = " ".join(tokens)
        return text.replace(self.marker + " ", "").removesuffix(self.marker)


def save_bpe(model: BpeModel, path: str | Path) -> None:
    lines = [f"{model.marker} {len(model.merges)}"] + [f"{left} {right}" for left, right in model.merges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Saved %d merges to %s", len(model.merges), path)


def load_bpe(path: str | Path) -> BpeModel:
    """Lee la cabecera `<marcador> <número de fusiones>` y un par por línea.

    Raises:
        CorpusError: Si el fichero está mal formado o el número de fusiones no coincide
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        marker, count = lines[0].split()
        merges = tuple(tuple(line.split()) for line in lines[1:] if line.strip())
        if len(merges) != int(count) or any(len(pair) != 2 for pair in merges):
            raise ValueError(f"expected {count} merge pairs")
        return BpeModel(merges=merges, marker=marker)
    except (IndexError, ValueError) as e:
        raise CorpusError(f"malformed BPE file {path}: {e}") from e
