import logging
from collections import Counter
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from src.model.errors import PlanError
from src.model.model_config import ModelConfig
from src.model.parameter_count import ParameterCount
from src.model.plan_report import PlanReport
from src.model.sharing_plan import BUILT_IN_STRATEGIES, SharingPlan, Strategy
from src.model.slot_id import SlotId
from src.services.initializer import init_parameters
from src.services.parameter_table import ParameterTable
from src.services.slot_layout import slot_shape, slot_universe

logger = logging.getLogger(__name__)

# Subcapas del decodificador compartidas por cada estrategia; None = subcapa completa
# (matrices, sesgos y normas), una tupla = solo esas matrices.
DECODER_SHARING: dict[Strategy, dict[str, tuple[str, ...] | None]] = {
    Strategy.EMBED_ENC: {},
    Strategy.FFN: {"ffn": None},
    Strategy.SELF_ATTN: {"self_attn": None},
    Strategy.ENCDEC_ATTN: {"encdec_attn": None},
    Strategy.KV_BOTH: {"self_attn": ("K", "V"), "encdec_attn": ("K", "V")},
    Strategy.KQ_BOTH: {"self_attn": ("K", "Q"), "encdec_attn": ("K", "Q")},
    Strategy.ATTN_BOTH: {"self_attn": None, "encdec_attn": None},
    Strategy.FULL: {"self_attn": None, "encdec_attn": None, "ffn": None, "norm_final": None},
}


def parse_strategy(name: str | Strategy) -> Strategy:
    try:
        return Strategy(str(name).upper())
    except ValueError as e:
        raise PlanError(PlanError.UNKNOWN_STRATEGY_MSG.format(name=name)) from e


def is_shared(strategy: Strategy, path: SlotId) -> bool:
    """Decide si la ruta `path` (sin idioma) se comparte entre todos los destinos."""
    if strategy is Strategy.NONE:
        return False
    if path.component == "embedding":
        return True
    if strategy is Strategy.EMBED:
        return False
    if path.component == "encoder":
        return True
    roles = DECODER_SHARING[strategy]
    if path.sublayer not in roles:
        return False
    only = roles[path.sublayer]
    return only is None or path.role in only


def _plan_from_keys(strategy: Strategy, targets: tuple[str, ...], num_layers: int, key) -> SharingPlan:
    groups: dict[str, list[SlotId]] = dict()
    for slot in slot_universe(num_layers, targets):
        groups.setdefault(key(slot), list()).append(slot)
    return SharingPlan(
        strategy=strategy,
        targets=targets,
        num_layers=num_layers,
        groups=tuple(tuple(group) for group in groups.values()),
    )


def plan_from_strategy(strategy: str | Strategy, targets: Iterable[str], num_layers: int) -> SharingPlan:
    """Construye la partición de slots de una estrategia incorporada.

    Las estrategias distintas de NONE y EMBED comparten siempre el embedding
    y el codificador; las de decodificador se aplican en todas las capas.

    Args:
        strategy (str | Strategy): Nombre de la estrategia (p. ej. "KQ_BOTH")
        targets (Iterable[str]): Idiomas destino, en orden
        num_layers (int): Capas de cada pila

    Returns:
        SharingPlan: Grupos en orden estructural de primera aparición

    Raises:
        PlanError: Si la estrategia no existe o es EXPLICIT

    Example:
        >>> plan = plan_from_strategy("FULL", ["de", "nl"], num_layers=6)
        >>> len(plan.groups) == len(plan_from_strategy("FULL", ["de"], 6).groups)
        True
    """
    strategy = parse_strategy(strategy)
    if strategy not in BUILT_IN_STRATEGIES:
        raise PlanError("EXPLICIT plans are built from group lists, not from a strategy name")
    targets = tuple(targets)
    try:
        return _plan_from_keys(
            strategy,
            targets,
            num_layers,
            lambda slot: slot.path if is_shared(strategy, slot.with_target(None)) else str(slot),
        )
    except ValueError as e:
        raise PlanError(str(e)) from e


def explicit_plan(groups: Iterable[Iterable[str]], targets: Iterable[str], num_layers: int) -> SharingPlan:
    """Construye un plan EXPLICIT a partir de listas de slots en forma textual.

    Un slot sin `@lang` representa esa ruta en todos los idiomas destino.
    Los slots no listados quedan en grupos unitarios. La validación de formas
    se deja a `verify_plan` y `resolve`.

    Raises:
        PlanError: Slot mal formado, fuera del universo o listado dos veces
    """
    targets = tuple(targets)
    universe = set(slot_universe(num_layers, targets))
    owner: dict[SlotId, int] = dict()
    for index, group in enumerate(groups):
        for text in group:
            parsed = SlotId.parse(text)
            expanded = [parsed.with_target(t) for t in targets] if parsed.target is None else [parsed]
            for slot in expanded:
                if slot not in universe:
                    raise PlanError(f"slot {slot} does not exist for {num_layers} layer(s) and targets {targets}")
                if slot in owner:
                    raise PlanError(f"slot {slot} is listed in more than one group")
                owner[slot] = index
    try:
        return _plan_from_keys(
            Strategy.EXPLICIT,
            targets,
            num_layers,
            lambda slot: f"group:{owner[slot]}" if slot in owner else str(slot),
        )
    except ValueError as e:
        raise PlanError(str(e)) from e


def parse_plan_text(text: str) -> list[list[str]]:
    """Una línea por grupo, slots separados por espacios; `#` inicia un comentario."""
    groups: list[list[str]] = list()
    for line in text.splitlines():
        content = line.split("#", 1)[0].split()
        if content:
            groups.append(content)
    return groups


def load_plan_file(path: str | Path, targets: Iterable[str], num_layers: int) -> SharingPlan:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise PlanError(f"cannot read plan file {path}: {e}") from e
    return explicit_plan(parse_plan_text(text), targets, num_layers)


def format_plan(plan: SharingPlan) -> str:
    """Serializa los grupos compartidos en el formato de fichero de plan."""
    lines = [f"# {plan.strategy.value} plan over targets {' '.join(plan.targets)}"]
    lines.extend(" ".join(str(slot) for slot in group) for group in plan.shared_groups)
    return "\n".join(lines) + "\n"


def plan_from_description(description: dict) -> SharingPlan:
    """Reconstruye un plan a partir de `SharingPlan.describe()`."""
    strategy = parse_strategy(description["strategy"])
    targets, num_layers = description["targets"], description["num_layers"]
    if strategy is Strategy.EXPLICIT:
        return explicit_plan(description.get("groups", []), targets, num_layers)
    return plan_from_strategy(strategy, targets, num_layers)


def resolve(
    config: ModelConfig,
    plan: SharingPlan,
    rng: np.random.Generator | None = None,
    dtype: type = np.float32,
) -> ParameterTable:
    """Reserva una celda por grupo y la inicializa.

    Args:
        config (ModelConfig): Arquitectura
        plan (SharingPlan): Plan válido para `config`
        rng (np.random.Generator | None): Generador de inicialización; sin él
            las celdas quedan a cero
        dtype (type): Precisión de las celdas

    Returns:
        ParameterTable: Tabla con aliasing por almacenamiento

    Raises:
        PlanError: Si un grupo mezcla formas distintas
    """
    if config.num_layers != plan.num_layers:
        raise PlanError(f"plan has {plan.num_layers} layer(s) but the model has {config.num_layers}")
    table = ParameterTable(config, plan, dtype=dtype)
    if rng is not None:
        init_parameters(table, config, rng)
    logger.info(
        "Resolved %s plan over %s: %d slot(s) in %d cell(s), %d parameter(s)",
        plan.strategy.value,
        ",".join(plan.targets),
        sum(len(group) for group in plan.groups),
        len(table.cells),
        table.size(),
    )
    return table


def count_parameters(config: ModelConfig, plan: SharingPlan) -> ParameterCount:
    """Cuenta parámetros sin reservar memoria: cada grupo contribuye una vez.

    Las formas mezcladas (solo posibles en planes EXPLICIT) cuentan por la
    forma del primer slot del grupo.
    """
    total = weights = 0
    per_component: Counter[str] = Counter()
    per_group: dict[str, int] = dict()
    for group in plan.groups:
        size = int(np.prod(slot_shape(group[0], config)))
        per_group[str(group[0])] = size
        per_component[group[0].component] += size
        total += size
        if group[0].is_matrix:
            weights += size
    return ParameterCount(
        strategy=plan.strategy.value,
        targets=plan.targets,
        total=total,
        weights_only=weights,
        per_component=dict(per_component),
        per_group=per_group,
    )


def verify_plan(config: ModelConfig, plan: SharingPlan, table: ParameterTable | None = None) -> PlanReport:
    """Comprueba partición, formas y (si se da la tabla) aliasing e igualdad bit a bit.

    Returns:
        PlanReport: Lista de violaciones; vacía si el plan es correcto
    """
    violations: list[str] = list()
    universe = list(slot_universe(plan.num_layers, plan.targets))
    listed = Counter(slot for group in plan.groups for slot in group)

    for slot, times in listed.items():
        if times > 1:
            violations.append(f"partition: {slot} appears in {times} groups")
    known = set(universe)
    violations.extend(f"partition: unknown slot {slot}" for slot in listed if slot not in known)
    violations.extend(f"partition: slot {slot} is not covered" for slot in universe if slot not in listed)
    if any(not group for group in plan.groups):
        violations.append("partition: empty group")

    for group in plan.groups:
        shapes = sorted({slot_shape(slot, config) for slot in group})
        if len(shapes) > 1:
            violations.append("shape: " + PlanError.SHAPE_CONFLICT_MSG.format(group=str(group[0]), shapes=shapes))

    if table is not None:
        if table.plan != plan:
            violations.append("table: resolved against a different plan")
        else:
            for group in plan.groups:
                cells = [table.slot(slot) for slot in group]
                if any(cell is not cells[0] for cell in cells[1:]):
                    violations.append(f"aliasing: group {group[0]} is backed by more than one cell")
                elif any(not np.array_equal(cell.data, cells[0].data) for cell in cells[1:]):
                    violations.append(f"equality: group {group[0]} holds diverging values")

    return PlanReport(violations=tuple(violations))
