from collections.abc import Iterator

from src.model.model_config import ModelConfig
from src.model.slot_id import ATTENTION_ROLES, FFN_ROLES, NORM_ROLES, SlotId

ENCODER_SUBLAYERS: tuple[str, ...] = ("self_attn", "ffn")
DECODER_SUBLAYERS: tuple[str, ...] = ("self_attn", "encdec_attn", "ffn")


def _sublayer_roles(sublayer: str) -> tuple[str, ...]:
    return (FFN_ROLES if sublayer == "ffn" else ATTENTION_ROLES) + NORM_ROLES


def slot_paths(num_layers: int) -> Iterator[SlotId]:
    """Recorre, sin idioma destino, todos los slots de un modelo bilingüe.

    El orden es estructural (embedding, codificador capa a capa, norma final,
    decodificador capa a capa, norma final) y define el orden de las celdas.
    """
    yield SlotId(component="embedding", role="E")
    for component, sublayers in (("encoder", ENCODER_SUBLAYERS), ("decoder", DECODER_SUBLAYERS)):
        for layer in range(1, num_layers + 1):
            for sublayer in sublayers:
                for role in _sublayer_roles(sublayer):
                    yield SlotId(component=component, layer=layer, sublayer=sublayer, role=role)
        for role in NORM_ROLES:
            yield SlotId(component=component, sublayer="norm_final", role=role)


def slot_universe(num_layers: int, targets: tuple[str, ...]) -> Iterator[SlotId]:
    """Todos los slots: un modelo bilingüe nocional completo por idioma destino."""
    for target in targets:
        for path in slot_paths(num_layers):
            yield path.with_target(target)


def slot_shape(slot: SlotId, config: ModelConfig) -> tuple[int, ...]:
    width, hidden = config.d_model, config.d_ff
    match slot.role:
        case "E":
            return (config.vocab_size, width)
        case "K" | "Q" | "V" | "F":
            return (width, width)
        case "L1":
            return (width, hidden)
        case "L2":
            return (hidden, width)
        case "b1":
            return (hidden,)
        case _:
            return (width,)
