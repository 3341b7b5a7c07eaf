from pydantic import BaseModel, ConfigDict


class PlanReport(BaseModel):
    """Resultado de verificar un plan o una tabla ya resuelta; vacío si todo es correcto."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "plan OK"
        return "\n".join(f"- {violation}" for violation in self.violations)
