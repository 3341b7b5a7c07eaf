import logging
import struct
import zlib
from pathlib import Path
from typing import ClassVar

import numpy as np
from pydantic import ValidationError

from src.model.checkpoint import Checkpoint, CheckpointHeader
from src.model.errors import IntegrityError, PlanError, VocabularyError

logger = logging.getLogger(__name__)

MAGIC: bytes = b"SHAREMT\x00"
FORMAT_VERSION: int = 1

DTYPE_CODES: dict[str, int] = {"float32": 1, "float64": 2, "int64": 3}
CODE_DTYPES: dict[int, np.dtype] = {code: np.dtype(name).newbyteorder("<") for name, code in DTYPE_CODES.items()}

PARAMETER, FIRST, SECOND = "param/", "adam.m/", "adam.v/"


class _Reader:
    """Cursor sobre los bytes del fichero; cualquier lectura corta es un error de integridad."""

    TRUNCATED_MSG: ClassVar[str] = "checkpoint truncated at byte {offset} (wanted {wanted} more)"

    def __init__(self, payload: bytes):
        self.__payload: bytes = payload
        self.__offset: int = 0

    @property
    def offset(self) -> int:
        return self.__offset

    def take(self, size: int) -> bytes:
        if self.__offset + size > len(self.__payload):
            raise IntegrityError(self.TRUNCATED_MSG.format(offset=self.__offset, wanted=size))
        chunk = self.__payload[self.__offset : self.__offset + size]
        self.__offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def since(self, start: int) -> bytes:
        return self.__payload[start : self.__offset]

    @property
    def exhausted(self) -> bool:
        return self.__offset == len(self.__payload)


def _record(name: str, values: np.ndarray) -> bytes:
    dtype = values.dtype.name
    if dtype not in DTYPE_CODES:
        raise IntegrityError(f"unsupported dtype {dtype} for tensor {name}")
    encoded = name.encode("utf-8")
    body = (
        struct.pack("<H", len(encoded))
        + encoded
        + struct.pack("<BB", DTYPE_CODES[dtype], values.ndim)
        + struct.pack(f"<{values.ndim}Q", *values.shape)
        + np.ascontiguousarray(values, dtype=CODE_DTYPES[DTYPE_CODES[dtype]]).tobytes()
    )
    return body + struct.pack("<I", zlib.crc32(body))


def _read_record(reader: _Reader) -> tuple[str, np.ndarray]:
    start = reader.offset
    (name_length,) = reader.unpack("<H")
    name = reader.take(name_length).decode("utf-8")
    code, rank = reader.unpack("<BB")
    if code not in CODE_DTYPES:
        raise IntegrityError(f"unknown dtype code {code} in record {name}")
    shape = reader.unpack(f"<{rank}Q")
    dtype = CODE_DTYPES[code]
    payload = reader.take(int(np.prod(shape, dtype=np.int64)) * dtype.itemsize)
    body = reader.since(start)
    (checksum,) = reader.unpack("<I")
    if zlib.crc32(body) != checksum:
        raise IntegrityError(f"checksum mismatch in record {name}")
    values = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    return name, values


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    """Escribe magia, versión, cabecera JSON y un registro con checksum por tensor.

    El fichero se escribe primero con sufijo `.tmp` y luego se renombra.
    """
    header = checkpoint.header.model_dump_json().encode("utf-8")
    records = [_record(PARAMETER + name, values) for name, values in checkpoint.parameters.items()]
    records += [_record(FIRST + name, values) for name, values in checkpoint.first_moments.items()]
    records += [_record(SECOND + name, values) for name, values in checkpoint.second_moments.items()]

    blob = (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + struct.pack("<I", len(header))
        + header
        + struct.pack("<I", zlib.crc32(header))
        + struct.pack("<I", len(records))
        + b"".join(records)
    )
    path = Path(path)
    temporary = path.with_suffix(path.suffix + ".tmp")
    temporary.write_bytes(blob)
    temporary.replace(path)
    logger.info("Saved checkpoint at step %d to %s", checkpoint.header.step, path)
    return path


def load_checkpoint(
    path: str | Path,
    vocab_hash: str | None = None,
    plan: dict | None = None,
) -> Checkpoint:
    """Lee y valida un checkpoint.

    Args:
        path (str | Path): Fichero a leer
        vocab_hash (str | None): Huella esperada del vocabulario
        plan (dict | None): `SharingPlan.describe()` esperado

    Returns:
        Checkpoint: Cabecera y tensores con sus nombres de celda

    Raises:
        IntegrityError: Magia, versión o checksum incorrectos, o fichero truncado
        VocabularyError: Si la huella del vocabulario no coincide
        PlanError: Si el plan no coincide
    """
    try:
        reader = _Reader(Path(path).read_bytes())
    except OSError as e:
        raise IntegrityError(f"cannot read checkpoint {path}: {e}") from e

    if reader.take(len(MAGIC)) != MAGIC:
        raise IntegrityError(f"{path} is not a checkpoint file")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise IntegrityError(f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})")
    (header_length,) = reader.unpack("<I")
    raw_header = reader.take(header_length)
    (header_crc,) = reader.unpack("<I")
    if zlib.crc32(raw_header) != header_crc:
        raise IntegrityError("checksum mismatch in checkpoint header")
    try:
        header = CheckpointHeader.model_validate_json(raw_header)
    except ValidationError as e:
        raise IntegrityError(f"invalid checkpoint header: {e}") from e

    (count,) = reader.unpack("<I")
    groups: dict[str, dict[str, np.ndarray]] = {PARAMETER: {}, FIRST: {}, SECOND: {}}
    for _ in range(count):
        name, values = _read_record(reader)
        prefix = next((p for p in groups if name.startswith(p)), None)
        if prefix is None:
            raise IntegrityError(f"unexpected record {name}")
        groups[prefix][name.removeprefix(prefix)] = values
    if not reader.exhausted:
        raise IntegrityError("trailing bytes after the last checkpoint record")

    if vocab_hash is not None and header.vocab_hash != vocab_hash:
        raise VocabularyError("checkpoint was trained with a different vocabulary")
    if plan is not None and header.plan != plan:
        raise PlanError(f"checkpoint plan {header.plan} does not match {plan}")

    return Checkpoint(
        header=header,
        parameters=groups[PARAMETER],
        first_moments=groups[FIRST],
        second_moments=groups[SECOND],
    )
