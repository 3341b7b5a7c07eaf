from typing import ClassVar, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.model.errors import PlanError

Component = Literal["embedding", "encoder", "decoder"]
Sublayer = Literal["self_attn", "encdec_attn", "ffn", "norm_final"]
Role = Literal["K", "Q", "V", "F", "L1", "L2", "b1", "b2", "gain", "bias", "E"]

ATTENTION_ROLES: tuple[str, ...] = ("K", "Q", "V", "F")
FFN_ROLES: tuple[str, ...] = ("L1", "b1", "L2", "b2")
NORM_ROLES: tuple[str, ...] = ("gain", "bias")
MATRIX_ROLES: frozenset[str] = frozenset({"E", "K", "Q", "V", "F", "L1", "L2"})


class SlotId(BaseModel):
    """Dirección de una matriz (o vector) de pesos de la arquitectura.

    Su forma textual es `decoder.L3.self_attn.K@de`; la capa es 1-indexada.
    Sin el sufijo `@lang` la ruta designa la misma posición en todos los
    idiomas destino (solo admitido en ficheros de plan explícito).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    PARSE_ERROR_MSG: ClassVar[str] = "malformed slot id '{text}'"

    component: Component
    layer: int | None = Field(default=None, ge=1)
    sublayer: Sublayer | None = None
    role: Role
    target: str | None = None

    @model_validator(mode="after")
    def check_coordinates(self) -> "SlotId":
        if self.component == "embedding":
            valid = self.layer is None and self.sublayer is None and self.role == "E"
        elif self.sublayer == "norm_final":
            valid = self.layer is None and self.role in NORM_ROLES
        elif self.sublayer == "ffn":
            valid = self.layer is not None and self.role in FFN_ROLES + NORM_ROLES
        elif self.sublayer == "encdec_attn" and self.component == "encoder":
            valid = False
        else:
            valid = (
                self.layer is not None
                and self.sublayer is not None
                and self.role in ATTENTION_ROLES + NORM_ROLES
            )
        if not valid:
            raise ValueError(f"inconsistent slot coordinates {self.path}")
        return self

    @property
    def path(self) -> str:
        parts: list[str] = [self.component]
        if self.layer is not None:
            parts.append(f"L{self.layer}")
        if self.sublayer is not None:
            parts.append(self.sublayer)
        parts.append(self.role)
        return ".".join(parts)

    @property
    def is_matrix(self) -> bool:
        return self.role in MATRIX_ROLES

    def with_target(self, target: str | None) -> "SlotId":
        return self.model_copy(update={"target": target})

    def __str__(self) -> str:
        return self.path if self.target is None else f"{self.path}@{self.target}"

    @classmethod
    def parse(cls, text: str) -> "SlotId":
        """Interpreta la forma textual `component[.L<n>][.sublayer].role[@target]`.

        Raises:
            PlanError: Si el texto no describe un slot válido
        """
        path, _, target = text.strip().partition("@")
        parts = path.split(".")
        try:
            fields: dict = {"component": parts[0], "role": parts[-1], "target": target or None}
            middle = parts[1:-1]
            if middle and middle[0].startswith("L") and middle[0][1:].isdigit():
                fields["layer"] = int(middle[0][1:])
                middle = middle[1:]
            if len(middle) > 1:
                raise ValueError(text)
            if middle:
                fields["sublayer"] = middle[0]
            return cls(**fields)
        except (ValueError, IndexError) as e:
            raise PlanError(cls.PARSE_ERROR_MSG.format(text=text)) from e
