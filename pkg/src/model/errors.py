from typing import ClassVar


class ShareMTError(Exception):
    """Raíz de todos los errores del proyecto.

    La CLI captura esta clase para emitir un diagnóstico de una sola línea
    y un código de salida distinto de cero.
    """

    EXIT_CODE: ClassVar[int] = 1


class DimensionError(ShareMTError, ValueError):
    SHAPE_MISMATCH_MSG: ClassVar[str] = "{op}: incompatible shapes {left} and {right}"


class DegenerateRowError(ShareMTError, ValueError):
    FULLY_MASKED_MSG: ClassVar[str] = "softmax_rows: {count} row(s) are entirely masked"


class NumericalError(ShareMTError, ArithmeticError):
    NON_FINITE_MSG: ClassVar[str] = "{op}: produced non-finite values"
    NAN_GRADIENT_MSG: ClassVar[str] = "non-finite gradient in cell '{name}' (max |g| = {magnitude})"


class ConfigurationError(ShareMTError, ValueError):
    EXIT_CODE: ClassVar[int] = 2


class LengthError(ShareMTError, ValueError):
    TOO_LONG_MSG: ClassVar[str] = "sequence length {length} exceeds max_position {limit}"


class VocabularyError(ShareMTError, KeyError):
    OUT_OF_RANGE_MSG: ClassVar[str] = "token id {token_id} outside vocabulary of size {size}"
    UNKNOWN_LANGUAGE_MSG: ClassVar[str] = "no language token for '{lang}' in vocabulary"

    def __str__(self) -> str:
        # KeyError pone comillas alrededor del mensaje
        return str(self.args[0]) if self.args else ""


class PlanError(ShareMTError, ValueError):
    UNKNOWN_TARGET_MSG: ClassVar[str] = "target '{target}' is not part of the sharing plan {targets}"
    UNKNOWN_STRATEGY_MSG: ClassVar[str] = "unknown sharing strategy '{name}'"
    SHAPE_CONFLICT_MSG: ClassVar[str] = "group {group} mixes shapes {shapes}"


class CorpusError(ShareMTError, ValueError):
    EMPTY_CORPUS_MSG: ClassVar[str] = "cannot learn from an empty corpus"
    MISALIGNED_MSG: ClassVar[str] = "parallel files {source} and {target} have {n_source} and {n_target} lines"


class IntegrityError(ShareMTError, IOError):
    pass


class AlignmentError(ShareMTError, ValueError):
    LINE_COUNT_MSG: ClassVar[str] = "hypothesis has {n_hyp} lines but reference has {n_ref}"


class NonDeterministicGraphError(ShareMTError, RuntimeError):
    ACTIVE_DROPOUT_MSG: ClassVar[str] = "grad_check requires a deterministic graph (active dropout found)"


class TrainingError(ShareMTError, RuntimeError):
    STEP_FAILURE_MSG: ClassVar[str] = "training aborted at step {step}: {error}"
