from dataclasses import dataclass

from src.engine.tensor import Tensor


@dataclass(frozen=True)
class LayerNormParams:
    gain: Tensor
    bias: Tensor


@dataclass(frozen=True)
class AttentionParams:
    """Proyecciones de una subcapa de atención (sin sesgos) y su norma."""

    W_K: Tensor
    W_Q: Tensor
    W_V: Tensor
    W_F: Tensor
    norm: LayerNormParams


@dataclass(frozen=True)
class FfnParams:
    W_L1: Tensor
    b1: Tensor
    W_L2: Tensor
    b2: Tensor
    norm: LayerNormParams


@dataclass(frozen=True)
class EncoderLayerParams:
    self_attn: AttentionParams
    ffn: FfnParams


@dataclass(frozen=True)
class DecoderLayerParams:
    self_attn: AttentionParams
    encdec_attn: AttentionParams
    ffn: FfnParams


@dataclass(frozen=True)
class TargetParams:
    """Vista de la tabla de parámetros para un idioma destino.

    Los tensores son las propias celdas de la tabla, así que dos destinos
    que comparten un grupo reciben el mismo objeto.
    """

    W_E: Tensor
    encoder: tuple[EncoderLayerParams, ...]
    encoder_norm: LayerNormParams
    decoder: tuple[DecoderLayerParams, ...]
    decoder_norm: LayerNormParams
