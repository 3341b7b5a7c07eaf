import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.model.beam_config import BeamConfig
from src.model.errors import PlanError
from src.services.beam_search import BeamSearch
from src.services.bpe import BpeCodec
from src.services.transformer import Transformer
from src.services.vocabulary import BOS_ID, EOS_ID, Vocabulary

logger = logging.getLogger(__name__)


class Translator:
    """Traduce texto ya tokenizado con un modelo en modo inferencia.

    Segmenta con BPE, antepone el token `<2xx>`, decodifica con beam search
    y une de nuevo las subpalabras. El modelo solo se lee, así que varias
    frases pueden decodificarse en paralelo.

    Attributes:
        __model (Transformer): Modelo con la tabla de parámetros
        __vocab (Vocabulary): Vocabulario conjunto
        __codec (BpeCodec): Segmentación BPE
        __search (BeamSearch): Beam search configurado
    """

    def __init__(self, model: Transformer, vocab: Vocabulary, codec: BpeCodec, beam: BeamConfig):
        self.__model: Transformer = model
        self.__vocab: Vocabulary = vocab
        self.__codec: BpeCodec = codec
        self.__search: BeamSearch = BeamSearch(beam)

    @property
    def beam(self) -> BeamConfig:
        return self.__search.config

    def source_ids(self, line: str, lang: str) -> list[int]:
        return [self.__vocab.language_id(lang), *self.__vocab.encode(self.__codec.encode_line(line))]

    def translate_ids(self, source_ids: Sequence[int], target: str) -> list[int]:
        """Mejor hipótesis para una fuente ya convertida en ids (incluye </s> si terminó)."""
        enc_out, src_mask = self.__model.encode(np.array([source_ids]), target)

        def step(prefixes: np.ndarray) -> np.ndarray:
            return self.__model.next_token_log_probs(enc_out, src_mask, target, prefixes)

        max_length = min(len(source_ids) + self.beam.extra_length, self.__model.config.max_position - 1)
        return list(self.__search.best(step, BOS_ID, EOS_ID, max_length).tokens)

    def translate(self, line: str, lang: str, target: str | None = None) -> str:
        """Traduce una línea al idioma `lang`, usando el decodificador `target` (por defecto el mismo)."""
        if not line.strip():
            return ""
        hypothesis = self.translate_ids(self.source_ids(line, lang), target or lang)
        return self.__codec.decode_tokens(self.__vocab.decode(hypothesis))

    def translate_lines(
        self, lines: Sequence[str], lang: str, workers: int = 1, target: str | None = None
    ) -> list[str]:
        """Traduce en orden; con workers > 1 reparte las frases en un pool de hilos.

        Raises:
            PlanError: Si el decodificador no pertenece al plan del modelo
        """
        target = target or lang
        if target not in self.__model.targets:
            raise PlanError(PlanError.UNKNOWN_TARGET_MSG.format(target=target, targets=self.__model.targets))
        self.__vocab.language_id(lang)
        self.__model.params(target)
        if workers <= 1:
            return [self.translate(line, lang, target) for line in lines]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda line: self.translate(line, lang, target), lines))
