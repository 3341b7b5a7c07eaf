import logging
import math
from collections.abc import Callable

import numpy as np

from src.engine import ops
from src.engine.tensor import Tensor
from src.model.errors import LengthError
from src.model.layer_params import (
    AttentionParams,
    DecoderLayerParams,
    EncoderLayerParams,
    FfnParams,
    LayerNormParams,
    TargetParams,
)
from src.model.model_config import ModelConfig
from src.model.slot_id import SlotId
from src.services.parameter_table import ParameterTable

logger = logging.getLogger(__name__)

MASKED: float = -np.inf


def sinusoidal_positions(length: int, width: int, max_position: int = 1024) -> np.ndarray:
    """Codificación posicional: sin en canales pares y cos en impares.

    El par de canales i de la posición pos usa pos / 10000^(2i/width).

    Raises:
        LengthError: Si length > max_position
    """
    if length > max_position:
        raise LengthError(LengthError.TOO_LONG_MSG.format(length=length, limit=max_position))
    positions = np.arange(length, dtype=np.float64)[:, None]
    frequencies = 1.0 / np.power(10000.0, np.arange(0, width, 2, dtype=np.float64) / width)
    angles = positions * frequencies
    table = np.zeros((length, width))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : width // 2])
    return table


def causal_mask(length: int) -> Tensor:
    """(T, T) con 0 en j <= i y -inf en el triángulo superior estricto."""
    return Tensor(np.triu(np.full((length, length), MASKED), k=1))


def padding_mask(ids: np.ndarray, pad_id: int) -> Tensor:
    """(B, 1, 1, S): -inf en las posiciones de relleno de la fuente."""
    return Tensor(np.where(np.asarray(ids) == pad_id, MASKED, 0.0)[:, None, None, :])


class Transformer:
    """Transformer codificador-decodificador leído íntegramente de una ParameterTable.

    No posee pesos: cada idioma destino obtiene una vista (`TargetParams`)
    cuyos tensores son las celdas de la tabla, por lo que el aliasing del
    plan se respeta sin copias. Las operaciones aceptan lotes (B, T, d) o
    secuencias sueltas (T, d).

    Attributes:
        __table (ParameterTable): Celdas de parámetros
        __config (ModelConfig): Arquitectura
        __rng (np.random.Generator | None): Generador de las máscaras de dropout
        __pad_id (int): Id de relleno para las máscaras de la fuente

    Example:
        model = Transformer(resolve(config, plan, rng), rng=rng)
        logits = model.forward(src_ids, tgt_in, target="de", training=True)
    """

    def __init__(self, table: ParameterTable, rng: np.random.Generator | None = None, pad_id: int = 0):
        self.__table: ParameterTable = table
        self.__config: ModelConfig = table.config
        self.__rng: np.random.Generator | None = rng
        self.__pad_id: int = pad_id
        self.__bundles: dict[str, TargetParams] = dict()
        self.__positions: np.ndarray = sinusoidal_positions(
            self.__config.max_position, self.__config.d_model, self.__config.max_position
        ).astype(table.dtype)

    @property
    def config(self) -> ModelConfig:
        return self.__config

    @property
    def table(self) -> ParameterTable:
        return self.__table

    @property
    def targets(self) -> tuple[str, ...]:
        return self.__table.plan.targets

    @property
    def rng(self) -> np.random.Generator | None:
        return self.__rng

    @property
    def pad_id(self) -> int:
        return self.__pad_id

    def params(self, target: str) -> TargetParams:
        """Vista de parámetros de `target`, construida una vez y cacheada.

        Raises:
            PlanError: Si `target` no pertenece al plan
        """
        if target not in self.__bundles:
            self.__bundles[target] = self.__build_params(target)
        return self.__bundles[target]

    def __build_params(self, target: str) -> TargetParams:
        def cell(path: str) -> Tensor:
            return self.__table.slot(SlotId.parse(f"{path}@{target}"))

        def norm(prefix: str) -> LayerNormParams:
            return LayerNormParams(gain=cell(f"{prefix}.gain"), bias=cell(f"{prefix}.bias"))

        def attention(prefix: str) -> AttentionParams:
            return AttentionParams(
                W_K=cell(f"{prefix}.K"),
                W_Q=cell(f"{prefix}.Q"),
                W_V=cell(f"{prefix}.V"),
                W_F=cell(f"{prefix}.F"),
                norm=norm(prefix),
            )

        def ffn(prefix: str) -> FfnParams:
            return FfnParams(
                W_L1=cell(f"{prefix}.L1"),
                b1=cell(f"{prefix}.b1"),
                W_L2=cell(f"{prefix}.L2"),
                b2=cell(f"{prefix}.b2"),
                norm=norm(prefix),
            )

        layers = range(1, self.__config.num_layers + 1)
        return TargetParams(
            W_E=cell("embedding.E"),
            encoder=tuple(
                EncoderLayerParams(self_attn=attention(f"encoder.L{n}.self_attn"), ffn=ffn(f"encoder.L{n}.ffn"))
                for n in layers
            ),
            encoder_norm=norm("encoder.norm_final"),
            decoder=tuple(
                DecoderLayerParams(
                    self_attn=attention(f"decoder.L{n}.self_attn"),
                    encdec_attn=attention(f"decoder.L{n}.encdec_attn"),
                    ffn=ffn(f"decoder.L{n}.ffn"),
                )
                for n in layers
            ),
            decoder_norm=norm("decoder.norm_final"),
        )

    def __dropout(self, x: Tensor, training: bool) -> Tensor:
        return ops.dropout(x, self.__config.p_drop, training, self.__rng)

    def __norm(self, x: Tensor, params: LayerNormParams) -> Tensor:
        return ops.layer_norm(x, params.gain, params.bias, self.__config.ln_eps)

    def __sublayer(
        self, x: Tensor, norm: LayerNormParams, body: Callable[[Tensor], Tensor], training: bool
    ) -> Tensor:
        if self.__config.norm_placement == "pre":
            return ops.add(x, self.__dropout(body(self.__norm(x, norm)), training))
        return self.__norm(ops.add(x, self.__dropout(body(x), training)), norm)

    def embed(self, ids: np.ndarray, W_E: Tensor, training: bool = False) -> Tensor:
        """Filas de W_E escaladas por sqrt(d_model) más la codificación posicional.

        Raises:
            VocabularyError: Si algún id queda fuera del vocabulario
            LengthError: Si la secuencia supera max_position
        """
        ids = np.asarray(ids)
        length = ids.shape[-1]
        if length > self.__config.max_position:
            raise LengthError(LengthError.TOO_LONG_MSG.format(length=length, limit=self.__config.max_position))
        scaled = ops.scale(ops.gather_rows(W_E, ids), math.sqrt(self.__config.d_model))
        return self.__dropout(ops.add(scaled, Tensor(self.__positions[:length])), training)

    def multi_head_attention(
        self,
        q_in: Tensor,
        kv_in: Tensor,
        params: AttentionParams,
        mask: Tensor | None = None,
        training: bool = False,
    ) -> Tensor:
        """Atención multi-cabeza con producto escalado y proyección final W_F.

        Raises:
            DegenerateRowError: Si alguna fila de consulta queda completamente enmascarada
        """
        heads = self.__config.heads
        width = self.__config.d_head if self.__config.score_scale == "head" else self.__config.d_model
        q = ops.split_heads(ops.matmul(q_in, params.W_Q), heads)
        k = ops.split_heads(ops.matmul(kv_in, params.W_K), heads)
        v = ops.split_heads(ops.matmul(kv_in, params.W_V), heads)
        scores = ops.scale(ops.matmul(q, k, transpose_b=True), 1.0 / math.sqrt(width))
        if mask is not None:
            scores = ops.add_mask(scores, mask)
        alpha = self.__dropout(ops.softmax_rows(scores), training)
        return ops.matmul(ops.merge_heads(ops.matmul(alpha, v)), params.W_F)

    def feed_forward(self, z: Tensor, params: FfnParams, training: bool = False) -> Tensor:
        hidden = ops.relu(ops.add(ops.matmul(z, params.W_L1), params.b1))
        return ops.add(ops.matmul(self.__dropout(hidden, training), params.W_L2), params.b2)

    def encode(self, src_ids: np.ndarray, target: str, training: bool = False) -> tuple[Tensor, Tensor]:
        """Codifica un lote (B, S) de ids; devuelve la salida (B, S, d) y la máscara de relleno."""
        params = self.params(target)
        src_ids = np.atleast_2d(src_ids)
        mask = padding_mask(src_ids, self.__pad_id)
        x = self.embed(src_ids, params.W_E, training)
        for layer in params.encoder:
            x = self.__sublayer(
                x,
                layer.self_attn.norm,
                lambda h, p=layer.self_attn: self.multi_head_attention(h, h, p, mask, training),
                training,
            )
            x = self.__sublayer(x, layer.ffn.norm, lambda h, p=layer.ffn: self.feed_forward(h, p, training), training)
        return self.__norm(x, params.encoder_norm), mask

    def decode(
        self,
        tgt_ids: np.ndarray,
        enc_out: Tensor,
        src_mask: Tensor,
        target: str,
        training: bool = False,
    ) -> Tensor:
        """Decodifica con teacher forcing un lote (B, T) contra la salida del codificador."""
        params = self.params(target)
        tgt_ids = np.atleast_2d(tgt_ids)
        self_mask = causal_mask(tgt_ids.shape[-1])
        x = self.embed(tgt_ids, params.W_E, training)
        for layer in params.decoder:
            x = self.__sublayer(
                x,
                layer.self_attn.norm,
                lambda h, p=layer.self_attn: self.multi_head_attention(h, h, p, self_mask, training),
                training,
            )
            x = self.__sublayer(
                x,
                layer.encdec_attn.norm,
                lambda h, p=layer.encdec_attn: self.multi_head_attention(h, enc_out, p, src_mask, training),
                training,
            )
            x = self.__sublayer(x, layer.ffn.norm, lambda h, p=layer.ffn: self.feed_forward(h, p, training), training)
        return self.__norm(x, params.decoder_norm)

    def output_logits(self, dec_out: Tensor, target: str) -> Tensor:
        """Proyección atada dec_out · W_Eᵀ, sin sesgo."""
        return ops.matmul(dec_out, self.params(target).W_E, transpose_b=True)

    def forward(self, src_ids: np.ndarray, tgt_in: np.ndarray, target: str, training: bool = False) -> Tensor:
        enc_out, src_mask = self.encode(src_ids, target, training)
        return self.output_logits(self.decode(tgt_in, enc_out, src_mask, target, training), target)

    def next_token_log_probs(
        self, enc_out: Tensor, src_mask: Tensor, target: str, prefixes: np.ndarray
    ) -> np.ndarray:
        """Log-probabilidades del siguiente token para n prefijos de igual longitud de una misma fuente.

        Args:
            enc_out (Tensor): Salida del codificador (1, S, d)
            src_mask (Tensor): Máscara de relleno (1, 1, 1, S)
            target (str): Idioma destino
            prefixes (np.ndarray): Prefijos (n, t) que empiezan por el token de inicio

        Returns:
            np.ndarray: Matriz (n, V)
        """
        prefixes = np.atleast_2d(prefixes)
        count = prefixes.shape[0]
        expanded = Tensor(np.repeat(enc_out.data, count, axis=0))
        mask = Tensor(np.repeat(src_mask.data, count, axis=0))
        logits = self.output_logits(self.decode(prefixes, expanded, mask, target), target).data[:, -1, :]
        shifted = logits - logits.max(axis=-1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def greedy_decode(self, src_ids: np.ndarray, target: str, bos_id: int, eos_id: int, max_length: int) -> list[int]:
        """Decodificación voraz de una frase; el resultado excluye el token de inicio e incluye el de fin."""
        max_length = min(max_length, self.__config.max_position - 1)
        enc_out, src_mask = self.encode(np.atleast_2d(src_ids), target)
        prefix = [bos_id]
        while len(prefix) - 1 < max_length:
            log_probs = self.next_token_log_probs(enc_out, src_mask, target, np.array([prefix]))
            token = int(np.argmax(log_probs[0]))
            prefix.append(token)
            if token == eos_id:
                break
        return prefix[1:]
