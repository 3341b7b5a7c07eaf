import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

# Cada "idioma" destino es una transformación determinista de la frase fuente.
TOY_TASKS: dict[str, Callable[[list[str]], list[str]]] = {
    "cp": lambda words: list(words),
    "rv": lambda words: list(reversed(words)),
    "st": lambda words: sorted(words),
}

LETTERS: str = "abcdefghijklmnopqrstuvwxyz"


def toy_lexicon(size: int, rng: np.random.Generator, min_length: int = 4, max_length: int = 7) -> list[str]:
    """Palabras pseudoaleatorias distintas, de 4 a 7 letras por defecto."""
    words: set[str] = set()
    while len(words) < size:
        length = int(rng.integers(min_length, max_length + 1))
        words.add("".join(rng.choice(list(LETTERS), size=length)))
    return sorted(words)


def generate_toy_corpus(
    n_sentences: int,
    tasks: tuple[str, ...] = ("cp", "rv", "st"),
    seed: int = 0,
    lexicon_size: int = 60,
    min_words: int = 3,
    max_words: int = 8,
) -> tuple[list[str], dict[str, list[str]]]:
    """Frases fuente aleatorias y su traducción a cada tarea de juguete.

    Returns:
        tuple[list[str], dict[str, list[str]]]: Fuente y destino por tarea, alineados por línea
    """
    unknown = set(tasks) - set(TOY_TASKS)
    assert not unknown, f"unknown toy tasks {sorted(unknown)}"
    rng = np.random.default_rng(seed)
    lexicon = toy_lexicon(lexicon_size, rng)
    sources: list[list[str]] = [
        [lexicon[int(i)] for i in rng.integers(0, len(lexicon), size=int(rng.integers(min_words, max_words + 1)))]
        for _ in range(n_sentences)
    ]
    targets = {task: [" ".join(TOY_TASKS[task](words)) for words in sources] for task in tasks}
    return [" ".join(words) for words in sources], targets


def write_toy_corpus(
    directory: str | Path, source: list[str], targets: dict[str, list[str]], prefix: str = "train"
) -> None:
    """Escribe `<prefix>.en` y `<prefix>.<tarea>` en `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{prefix}.en").write_text("\n".join(source) + "\n", encoding="utf-8")
    for task, lines in targets.items():
        (directory / f"{prefix}.{task}").write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote toy corpus (%d lines, tasks %s) to %s", len(source), ",".join(targets), directory)
