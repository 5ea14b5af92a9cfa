# trainer/checkpoint.py
"""
Binary checkpoint layout (little endian throughout):

    b"UGNN"  u32 version  u32 meta_len  meta (UTF-8 JSON)
    u32 n_records, then per record:
        u16 name_len  name (UTF-8)  u8 ndim  u32 dim * ndim  f8 payload (row-major)
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from errors import DataError

logger = logging.getLogger(__name__)

MAGIC = b"UGNN"
SCHEMA_VERSION = 1


@dataclass
class Checkpoint:
    meta: dict = field(default_factory=dict)
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def group(self, prefix: str) -> dict[str, np.ndarray]:
        """Arrays under ``prefix.`` with the prefix stripped."""
        cut = len(prefix) + 1
        return {k[cut:]: a for k, a in self.arrays.items() if k.startswith(prefix + ".")}

    def put_group(self, prefix: str, arrays: dict[str, np.ndarray]) -> None:
        for name, a in arrays.items():
            self.arrays[f"{prefix}.{name}"] = np.asarray(a, dtype=np.float64)


def to_bytes(ckpt: Checkpoint) -> bytes:
    meta = json.dumps({"schema_version": SCHEMA_VERSION, **ckpt.meta}, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", SCHEMA_VERSION, len(meta)), meta, struct.pack("<I", len(ckpt.arrays))]
    for name in sorted(ckpt.arrays):
        a = np.ascontiguousarray(ckpt.arrays[name], dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack(f"<B{a.ndim}I", a.ndim, *a.shape))
        parts.append(a.tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataError("checkpoint is truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def from_bytes(buf: bytes) -> Checkpoint:
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise DataError("not a U-GNN checkpoint (bad magic)")
    version, meta_len = r.unpack("<II")
    if version != SCHEMA_VERSION:
        raise DataError(f"checkpoint schema {version} is not supported (expected {SCHEMA_VERSION})")
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    (n_records,) = r.unpack("<I")
    arrays = {}
    for _ in range(n_records):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
    if r.pos != len(buf):
        raise DataError("trailing bytes after the last checkpoint record")
    return Checkpoint(meta, arrays)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(to_bytes(ckpt))
    tmp.replace(path)
    logger.debug("checkpoint written to %s (%d arrays)", path, len(ckpt.arrays))


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint {path} does not exist")
    return from_bytes(path.read_bytes())
