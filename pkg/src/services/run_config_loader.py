import configparser
import logging
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from src.model.errors import ConfigurationError
from src.model.run_config import RunConfig

logger = logging.getLogger(__name__)

PAIR_PREFIX: str = "pair."
SECTIONS: tuple[str, ...] = ("data", "model", "sharing", "training", "decode", "output")


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    return parser


def apply_overrides(parser: configparser.ConfigParser, overrides: Sequence[str]) -> None:
    """Aplica `seccion.clave=valor`; la sección puede ser `pair.de`."""
    for override in overrides:
        key, sep, value = override.partition("=")
        section, dot, option = key.strip().rpartition(".")
        if not sep or not dot or not section or not option:
            raise ConfigurationError(f"override '{override}' must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())


def parse_run_config(parser: configparser.ConfigParser, base_dir: Path | None = None) -> RunConfig:
    """Valida las secciones leídas; las rutas relativas se resuelven respecto a `base_dir`.

    Raises:
        ConfigurationError: Secciones o claves desconocidas, o valores inválidos
    """
    document: dict = {"pairs": {}}
    for section in parser.sections():
        values = {key: value for key, value in parser.items(section) if value != ""}
        if section.startswith(PAIR_PREFIX):
            lang = section.removeprefix(PAIR_PREFIX)
            if base_dir is not None:
                values = {key: str(base_dir / value) for key, value in values.items()}
            document["pairs"][lang] = values
        elif section in SECTIONS:
            if base_dir is not None:
                for key in ("bpe", "vocab", "plan_file", "directory"):
                    if key in values:
                        values[key] = str(base_dir / values[key])
            document[section] = values
        else:
            raise ConfigurationError(f"unknown config section [{section}]")
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"invalid config value at {location}: {first['msg']}") from e


def load_run_config(path: str | Path | None, overrides: Sequence[str] = ()) -> RunConfig:
    parser = _parser()
    base_dir = None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file {path} does not exist")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigurationError(f"cannot parse {path}: {e}") from e
        base_dir = path.resolve().parent
    apply_overrides(parser, overrides)
    return parse_run_config(parser, base_dir)


def format_run_config(config: RunConfig) -> str:
    """Configuración resuelta en el mismo formato de secciones."""
    parser = _parser()
    dumped = config.model_dump(mode="json", exclude={"pairs"})
    for section in SECTIONS:
        parser[section] = {key: "" if value is None else str(value) for key, value in dumped[section].items()}
    for lang, pair in config.pairs.items():
        parser[PAIR_PREFIX + lang] = {
            key: "" if value is None else str(value) for key, value in pair.model_dump(mode="json").items()
        }
    lines: list[str] = list()
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {value}".rstrip() for key, value in parser.items(section))
        lines.append("")
    return "\n".join(lines)


def write_run_config(config: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_run_config(config), encoding="utf-8")
    logger.info("Wrote resolved config to %s", path)
    return path
