"""Binary checkpoint container: a JSON header plus named float32 tensors.

Layout, little-endian::

    magic        8 bytes  b"DISENCK1"
    header_len   u32      then header_len bytes of UTF-8 JSON (config echo etc.)
    count        u32
    per tensor:  u32 name_len, name bytes, u32 rank, rank x u32 dims,
                 prod(dims) float32 values, row-major
"""

from __future__ import annotations

import json
import struct
from collections import OrderedDict
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import Tensor

from disentlab.errors import CheckpointFormatError

MAGIC = b"DISENCK1"
_U32 = struct.Struct("<I")


def encode_checkpoint(
    header: Mapping[str, Any], tensors: Mapping[str, Tensor]
) -> bytes:
    chunks = [MAGIC]
    meta = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks += [_U32.pack(len(meta)), meta, _U32.pack(len(tensors))]
    for name, tensor in tensors.items():
        raw_name = name.encode("utf-8")
        array = tensor.detach().to(torch.float32).contiguous().numpy()
        chunks.append(_U32.pack(len(raw_name)) + raw_name)
        chunks.append(_U32.pack(array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.astype("<f4", copy=False).tobytes(order="C"))
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes, source: str) -> None:
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointFormatError(
                f"{self.source}: file ends inside {what} at byte {self.pos} "
                f"(needs {n} more bytes, {len(self.data) - self.pos} left)."
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return int(_U32.unpack(self.take(4, what))[0])


def decode_checkpoint(
    data: bytes, source: str = "checkpoint"
) -> tuple[dict[str, Any], OrderedDict[str, Tensor]]:
    """Parse bytes written by :func:`encode_checkpoint`.

    Raises
    ------
    CheckpointFormatError
        On wrong magic bytes, invalid JSON, truncation or trailing bytes.
    """
    reader = _Reader(data, source)
    if reader.take(len(MAGIC), "the magic bytes") != MAGIC:
        raise CheckpointFormatError(
            f"{source}: not a disentlab checkpoint (magic bytes differ from {MAGIC!r})."
        )
    meta_len = reader.u32("the header length")
    try:
        header = json.loads(reader.take(meta_len, "the JSON header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(
            f"{source}: header is not valid JSON: {exc}"
        ) from exc
    tensors: OrderedDict[str, Tensor] = OrderedDict()
    for _ in range(reader.u32("the tensor count")):
        name = reader.take(reader.u32("a tensor name length"), "a tensor name").decode(
            "utf-8"
        )
        rank = reader.u32(f"the rank of '{name}'")
        raw_dims = reader.take(4 * rank, f"the dims of '{name}'")
        dims = struct.unpack(f"<{rank}I", raw_dims)
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = reader.take(4 * count, f"the values of '{name}'")
        array = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
        if name in tensors:
            raise CheckpointFormatError(f"{source}: tensor '{name}' appears twice.")
        tensors[name] = torch.from_numpy(array)
    if reader.pos != len(data):
        raise CheckpointFormatError(
            f"{source}: {len(data) - reader.pos} trailing bytes after the last tensor."
        )
    return header, tensors


def write_checkpoint(
    path: str | Path, header: Mapping[str, Any], tensors: Mapping[str, Tensor]
) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_checkpoint(header, tensors))


def read_checkpoint(
    path: str | Path,
) -> tuple[dict[str, Any], OrderedDict[str, Tensor]]:
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {source}")
    return decode_checkpoint(source.read_bytes(), str(source))
