import logging
import queue
import threading
from collections.abc import Iterable, Iterator
from typing import Literal

import numpy as np
from sortedcontainers import SortedDict

from src.model.batch import Batch
from src.model.example import Example
from src.services.vocabulary import PAD_ID

logger = logging.getLogger(__name__)

BatchMode = Literal["bilingual", "balanced"]


class LengthBuckets:
    """Agrupa ejemplos por longitud para formar lotes de frases parecidas.

    La clave de cada cubeta es la mayor de las dos longitudes del par, y
    SortedDict mantiene las cubetas ordenadas; dentro de una cubeta se
    conserva el orden de inserción (ya barajado por semilla).
    """

    def __init__(self):
        self.__buckets: SortedDict = SortedDict()

    def add(self, example: Example) -> "LengthBuckets":
        key = max(example.source_length, example.target_length)
        if key not in self.__buckets:
            self.__buckets[key] = list()
        self.__buckets[key].append(example)
        return self

    def ordered(self) -> list[Example]:
        examples: list[Example] = list()
        for key in self.__buckets:
            examples.extend(self.__buckets[key])
        return examples


class BatchBuilder:
    """Acumula ejemplos mientras ningún lado supere el presupuesto de tokens.

    El coste de un lado es n_frases · longitud máxima del lado (con relleno),
    contando subpalabras sin especiales. Un lote vacío admite siempre la
    siguiente frase, de modo que presupuesto 1 da lotes de una frase.
    """

    def __init__(self, token_budget: int):
        assert token_budget >= 1, "token budget must be positive"
        self.__budget: int = token_budget
        self.__examples: list[Example] = list()
        self.__source_max: int = 0
        self.__target_max: int = 0

    def fits(self, example: Example) -> bool:
        if not self.__examples:
            return True
        count = len(self.__examples) + 1
        source = count * max(self.__source_max, example.source_length)
        target = count * max(self.__target_max, example.target_length)
        return source <= self.__budget and target <= self.__budget

    def add(self, example: Example) -> "BatchBuilder":
        self.__examples.append(example)
        self.__source_max = max(self.__source_max, example.source_length)
        self.__target_max = max(self.__target_max, example.target_length)
        return self

    def __len__(self) -> int:
        return len(self.__examples)

    def flush(self) -> list[Example]:
        examples, self.__examples = self.__examples, list()
        self.__source_max = self.__target_max = 0
        return examples


def _length_sorted(examples: list[Example], rng: np.random.Generator) -> list[Example]:
    buckets = LengthBuckets()
    for index in rng.permutation(len(examples)):
        buckets.add(examples[int(index)])
    return buckets.ordered()


def _chunk(stream: Iterable[Example], token_budget: int) -> list[list[Example]]:
    builder = BatchBuilder(token_budget)
    chunks: list[list[Example]] = list()
    for example in stream:
        if not builder.fits(example):
            chunks.append(builder.flush())
        builder.add(example)
    if len(builder):
        chunks.append(builder.flush())
    return chunks


def _round_robin(examples: list[Example], rng: np.random.Generator) -> list[Example]:
    """Intercala los flujos ordenados por longitud de cada idioma, uno de cada a la vez."""
    streams: dict[str, list[Example]] = dict()
    for example in examples:
        streams.setdefault(example.target_lang, list()).append(example)
    ordered = [_length_sorted(streams[lang], rng) for lang in sorted(streams)]
    interleaved: list[Example] = list()
    for position in range(max(len(stream) for stream in ordered)):
        interleaved.extend(stream[position] for stream in ordered if position < len(stream))
    return interleaved


def make_batches(
    examples: list[Example],
    token_budget: int = 3000,
    mode: BatchMode = "bilingual",
    rng: np.random.Generator | None = None,
    pad_id: int = PAD_ID,
) -> list[Batch]:
    """Una época de lotes agrupados por longitud, en orden barajado por semilla.

    En modo "balanced" las frases se toman por turnos de cada idioma, así
    que dentro de un lote los recuentos por idioma difieren como mucho en 1
    mientras todos los idiomas tengan frases pendientes.

    Args:
        examples (list[Example]): Ejemplos ya filtrados
        token_budget (int): Tope blando de tokens por lado
        mode (BatchMode): "bilingual" o "balanced"
        rng (np.random.Generator | None): Generador del barajado (semilla 0 si falta)
        pad_id (int): Id de relleno

    Returns:
        list[Batch]: Lotes de la época, incluido el último parcial
    """
    if not examples:
        return list()
    rng = rng if rng is not None else np.random.default_rng(0)
    stream = _round_robin(examples, rng) if mode == "balanced" else _length_sorted(examples, rng)
    chunks = _chunk(stream, token_budget)
    batches = [Batch.from_examples(chunks[int(i)], pad_id) for i in rng.permutation(len(chunks))]
    logger.debug("Assembled %d batch(es) from %d example(s) in %s mode", len(batches), len(examples), mode)
    return batches


def epochs(
    examples: list[Example],
    token_budget: int,
    mode: BatchMode,
    rng: np.random.Generator,
    pad_id: int = PAD_ID,
) -> Iterator[Batch]:
    """Flujo infinito de lotes, una época tras otra."""
    while True:
        yield from make_batches(examples, token_budget, mode, rng, pad_id)


class Prefetcher:
    """Prepara lotes en un hilo de fondo a través de una cola acotada.

    El contenido emitido es el del iterador original, en el mismo orden; el
    hilo solo adelanta trabajo. Una excepción del productor se relanza en el
    consumidor.

    Example:
        with Prefetcher(epochs(examples, 3000, "balanced", rng), depth=4) as stream:
            batch = next(stream)
    """

    __DONE = object()

    def __init__(self, source: Iterator[Batch], depth: int = 4):
        self.__source: Iterator[Batch] = source
        self.__queue: queue.Queue = queue.Queue(maxsize=depth)
        self.__stop: threading.Event = threading.Event()
        self.__thread: threading.Thread = threading.Thread(target=self.__produce, daemon=True)

    def __produce(self) -> None:
        try:
            for item in self.__source:
                while not self.__stop.is_set():
                    try:
                        self.__queue.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if self.__stop.is_set():
                    return
            self.__queue.put(self.__DONE)
        except Exception as e:
            self.__queue.put(e)

    def __enter__(self) -> "Prefetcher":
        self.__thread.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.__stop.set()
        while self.__thread.is_alive():
            try:
                self.__queue.get_nowait()
            except queue.Empty:
                self.__thread.join(timeout=0.1)

    def __iter__(self) -> "Prefetcher":
        return self

    def __next__(self) -> Batch:
        item = self.__queue.get()
        if item is self.__DONE:
            raise StopIteration
        if isinstance(item, Exception):
            raise item
        return item
