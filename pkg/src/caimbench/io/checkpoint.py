"""Binary checkpoint container.

Layout (all integers little-endian)::

    b"CAIMCKPT"                       magic
    u32                               format version
    u32                               entry count
    per entry, in name order:
        u16 + bytes                   UTF-8 name
        u8                            dtype tag (1 = float64, 2 = int64)
        u8 + u64 * rank               extents
        payload                       row-major little-endian values
    u32                               CRC32 of every preceding byte
"""

from __future__ import annotations

import re
import struct
import zlib
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger

from caimbench.errors import CheckpointError

MAGIC = b"CAIMCKPT"
FORMAT_VERSION = 1

DTYPE_TAGS: dict[int, np.dtype] = {1: np.dtype("<f8"), 2: np.dtype("<i8")}

CheckpointKind = Literal["model", "state", "any"]

_MODEL_NAME = re.compile(r"^(backbone/[A-Za-z0-9_]+/[A-Za-z0-9_]+|caim/\d+/[A-Za-z0-9_]+)$")
_STATE_NAME = re.compile(r"^(optim|history)/.+$")


def _tag_for(array: np.ndarray) -> tuple[int, np.ndarray]:
    if np.issubdtype(array.dtype, np.floating):
        return 1, np.ascontiguousarray(array, dtype="<f8")
    if np.issubdtype(array.dtype, np.integer) or array.dtype == np.bool_:
        return 2, np.ascontiguousarray(array, dtype="<i8")
    raise CheckpointError(f"unsupported dtype {array.dtype}")


def validate_names(names: list[str], kind: CheckpointKind) -> None:
    """
    Check entry names against the namespace of a checkpoint kind.

    Raises:
        CheckpointError: On a name outside the allowed namespace
    """
    if kind == "any":
        return
    pattern = _MODEL_NAME if kind == "model" else _STATE_NAME
    bad = [n for n in names if not pattern.match(n)]
    if bad:
        raise CheckpointError(f"{kind} checkpoint has unexpected entries: {bad[:5]}")


@dataclass
class Checkpoint:
    """Named float64/int64 arrays with a CRC-protected binary form."""

    entries: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<II", self.version, len(self.entries))]
        for name in sorted(self.entries):
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise CheckpointError(f"entry name too long: {name[:40]}...")
            tag, array = _tag_for(np.asarray(self.entries[name]))
            if array.ndim > 0xFF:
                raise CheckpointError(f"{name}: rank {array.ndim} too large")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack("<BB", tag, array.ndim))
            parts.append(struct.pack(f"<{array.ndim}Q", *array.shape))
            parts.append(array.tobytes())
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> Checkpoint:
        """
        Parse and verify a checkpoint.

        Raises:
            CheckpointError: On bad magic, unsupported version, CRC mismatch or truncation
        """
        if len(data) < len(MAGIC) + 12:
            raise CheckpointError("checkpoint is truncated")
        if data[: len(MAGIC)] != MAGIC:
            raise CheckpointError("not a checkpoint: bad magic bytes")
        body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
        if zlib.crc32(body) != crc:
            raise CheckpointError("checkpoint CRC mismatch: file is corrupted")

        offset = len(MAGIC)
        version, count = struct.unpack_from("<II", body, offset)
        offset += 8
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")

        entries: dict[str, np.ndarray] = {}
        try:
            for _ in range(count):
                (name_len,) = struct.unpack_from("<H", body, offset)
                offset += 2
                name = body[offset : offset + name_len].decode("utf-8")
                offset += name_len
                tag, rank = struct.unpack_from("<BB", body, offset)
                offset += 2
                shape = struct.unpack_from(f"<{rank}Q", body, offset)
                offset += 8 * rank
                if tag not in DTYPE_TAGS:
                    raise CheckpointError(f"{name}: unknown dtype tag {tag}")
                dtype = DTYPE_TAGS[tag]
                size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
                if offset + size > len(body):
                    raise CheckpointError(f"{name}: payload runs past the end of the file")
                array = np.frombuffer(body, dtype=dtype, count=size // dtype.itemsize, offset=offset)
                entries[name] = array.reshape(shape).astype(dtype.newbyteorder("="))
                offset += size
        except (struct.error, UnicodeDecodeError) as e:
            raise CheckpointError(f"malformed checkpoint: {e}") from e
        if offset != len(body):
            raise CheckpointError(f"{len(body) - offset} trailing bytes after the last entry")
        return cls(entries=entries, version=version)

    def save(self, path: str | Path, kind: CheckpointKind = "any") -> Path:
        validate_names(list(self.entries), kind)
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(self.to_bytes())
        logger.debug(f"Wrote {len(self.entries)} entries to {out}")
        return out

    @classmethod
    def load(cls, path: str | Path, kind: CheckpointKind = "any") -> Checkpoint:
        """
        Read and verify a checkpoint file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            CheckpointError: If the file is corrupted or holds names outside ``kind``
        """
        source = Path(path)
        if not source.exists():
            raise FileNotFoundError(f"Checkpoint not found: {source}")
        checkpoint = cls.from_bytes(source.read_bytes())
        validate_names(list(checkpoint.entries), kind)
        return checkpoint

    def section(self, prefix: str) -> dict[str, np.ndarray]:
        """Entries whose name starts with ``prefix/``."""
        return {k: v for k, v in self.entries.items() if k.startswith(prefix.rstrip("/") + "/")}

    def section_bytes(self, prefix: str) -> bytes:
        """Canonical bytes of one section, for byte-level comparisons."""
        return Checkpoint(entries=self.section(prefix)).to_bytes()


def save_checkpoint(path: str | Path, entries: Mapping[str, np.ndarray], kind: CheckpointKind = "model") -> Path:
    return Checkpoint(entries=dict(entries)).save(path, kind)


def load_checkpoint(path: str | Path, kind: CheckpointKind = "model") -> dict[str, np.ndarray]:
    return Checkpoint.load(path, kind).entries
