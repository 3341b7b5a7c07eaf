import logging
from collections.abc import Callable
from typing import Literal

import numpy as np

from src.model.beam_config import BeamConfig
from src.model.hypothesis import Hypothesis

logger = logging.getLogger(__name__)

# prefijos (n, t) que empiezan por el token de inicio -> log-probabilidades (n, V)
StepFunction = Callable[[np.ndarray], np.ndarray]


def length_penalty(length: int, alpha: float, mode: Literal["gnmt", "average"] = "gnmt") -> float:
    """((5 + length) / 6)^α en modo "gnmt"; length^α en modo "average"."""
    assert length >= 1, "length penalty is defined for lengths >= 1"
    if mode == "average":
        return float(length) ** alpha
    return ((5.0 + length) / 6.0) ** alpha


class BeamSearch:
    """Beam search independiente del modelo.

    En cada paso expande todas las hipótesis vivas con todos los tokens y
    conserva las mejores por log-probabilidad acumulada; las que terminan en
    </s> se retiran y reducen el haz. El orden de los candidatos es estable
    (a igual puntuación gana la hipótesis anterior y el id menor), así que
    con anchura 1 coincide con la decodificación voraz por argmax.

    Example:
        search = BeamSearch(BeamConfig(width=5, alpha=1.0))
        best = search.best(step_fn, bos_id=1, eos_id=2, max_length=60)
    """

    def __init__(self, config: BeamConfig):
        self.__config: BeamConfig = config

    @property
    def config(self) -> BeamConfig:
        return self.__config

    def normalized(self, hypothesis: Hypothesis) -> float:
        penalty = length_penalty(max(hypothesis.length, 1), self.__config.alpha, self.__config.normalization)
        return hypothesis.log_prob / penalty

    def search(self, step_fn: StepFunction, bos_id: int, eos_id: int, max_length: int) -> list[Hypothesis]:
        """Ejecuta la búsqueda y devuelve las hipótesis ordenadas de mejor a peor.

        Termina cuando hay `width` hipótesis finalizadas o al alcanzar
        `max_length` tokens generados. Si ninguna ha terminado se ordenan las
        vivas.

        Args:
            step_fn (StepFunction): Log-probabilidades del siguiente token por prefijo
            bos_id (int): Token de inicio (no forma parte de las hipótesis)
            eos_id (int): Token de fin
            max_length (int): Máximo de tokens generados

        Returns:
            list[Hypothesis]: Con `score` = log_prob / length_penalty
        """
        width = self.__config.width
        live: list[Hypothesis] = [Hypothesis()]
        finished: list[Hypothesis] = list()

        for _ in range(max_length):
            prefixes = np.array([(bos_id, *h.tokens) for h in live], dtype=np.int64)
            log_probs = np.asarray(step_fn(prefixes), dtype=np.float64)
            vocab_size = log_probs.shape[-1]
            totals = np.array([h.log_prob for h in live])[:, None] + log_probs
            keep = width - len(finished)
            order = np.argsort(-totals.reshape(-1), kind="stable")[:keep]

            expanded: list[Hypothesis] = list()
            for flat in order:
                parent, token = divmod(int(flat), vocab_size)
                hypothesis = Hypothesis(
                    tokens=(*live[parent].tokens, token),
                    log_prob=float(totals[parent, token]),
                    finished=token == eos_id,
                )
                (finished if hypothesis.finished else expanded).append(hypothesis)
            live = expanded
            if len(finished) >= width or not live:
                break

        pool = finished if finished else live
        ranked = [h.model_copy(update={"score": self.normalized(h)}) for h in pool]
        return sorted(ranked, key=lambda h: -h.score)

    def best(self, step_fn: StepFunction, bos_id: int, eos_id: int, max_length: int) -> Hypothesis:
        return self.search(step_fn, bos_id, eos_id, max_length)[0]
