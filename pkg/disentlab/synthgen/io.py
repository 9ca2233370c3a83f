"""Dataset file pair: ``images.bin`` (raw float32 tensor) and ``meta.csv``.

``images.bin`` layout, little-endian::

    magic   8 bytes   b"SYNFUND1"
    count   u32
    C, H, W u32 x 3
    pixels  count * C * H * W float32, row-major, rows aligned with meta.csv
"""

from __future__ import annotations

import hashlib
import io
import logging
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from disentlab._types import MISSING, SA_NAMES
from disentlab.errors import (
    CountMismatchError,
    DatasetFormatError,
    MalformedHeaderError,
    TruncatedTensorError,
)
from disentlab.synthgen.dataset import META_COLUMNS, Dataset

logger = logging.getLogger(__name__)

IMAGES_FILE = "images.bin"
META_FILE = "meta.csv"
MAGIC = b"SYNFUND1"
_HEADER = struct.Struct("<4I")


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------


def encode_images(images: np.ndarray) -> bytes:
    count, c, h, w = images.shape
    payload = np.ascontiguousarray(images, dtype="<f4").tobytes(order="C")
    return MAGIC + _HEADER.pack(count, c, h, w) + payload


def encode_meta(meta: pd.DataFrame) -> bytes:
    columns = list(META_COLUMNS) + (["split"] if "split" in meta.columns else [])
    frame = meta[columns].copy()
    for name in SA_NAMES:
        frame[name] = frame[name].astype("Int64").mask(frame[name] == MISSING)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n", na_rep="")
    return buffer.getvalue().encode("utf-8")


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write ``images.bin`` and ``meta.csv`` into directory *path*."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / IMAGES_FILE).write_bytes(encode_images(dataset.images))
    (root / META_FILE).write_bytes(encode_meta(dataset.meta))
    logger.info("Wrote %d samples to %s", len(dataset), root)


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------


def decode_images(data: bytes, source: str = IMAGES_FILE) -> np.ndarray:
    """Parse an ``images.bin`` payload.

    Raises
    ------
    MalformedHeaderError
        Wrong magic bytes, short header or a zero dimension.
    TruncatedTensorError
        Fewer pixel bytes than the header declares.
    DatasetFormatError
        Bytes left over after the declared tensor.
    """
    header_size = len(MAGIC) + _HEADER.size
    if len(data) < header_size:
        raise MalformedHeaderError(
            f"{source}: file is {len(data)} bytes, shorter than the "
            f"{header_size}-byte header."
        )
    if data[: len(MAGIC)] != MAGIC:
        raise MalformedHeaderError(
            f"{source}: magic bytes {data[:len(MAGIC)]!r} do not match {MAGIC!r}. "
            f"Is this a dataset written by 'disentlab synth'?"
        )
    count, c, h, w = _HEADER.unpack_from(data, len(MAGIC))
    if min(c, h, w) == 0:
        raise MalformedHeaderError(
            f"{source}: header declares a zero image dimension ({c}x{h}x{w})."
        )
    expected = count * c * h * w * 4
    available = len(data) - header_size
    if available < expected:
        raise TruncatedTensorError(
            f"{source}: tensor block holds {available} bytes but the header "
            f"declares {count} images of {c}x{h}x{w} ({expected} bytes)."
        )
    if available > expected:
        raise DatasetFormatError(
            f"{source}: {available - expected} unexpected trailing bytes after "
            f"the tensor block."
        )
    pixels = np.frombuffer(
        data, dtype="<f4", count=count * c * h * w, offset=header_size
    )
    return pixels.reshape(count, c, h, w).astype(np.float32)


def decode_meta(text: str, source: str = META_FILE) -> pd.DataFrame:
    frame = pd.read_csv(
        io.StringIO(text),
        dtype={"image_id": str, "patient_id": str, "split": str},
        keep_default_na=False,
    )
    columns = list(frame.columns)
    expected = list(META_COLUMNS)
    if columns not in (expected, expected + ["split"]):
        raise DatasetFormatError(
            f"{source}: header {','.join(columns)} does not match "
            f"{','.join(expected)}[,split]."
        )
    frame["dr"] = pd.to_numeric(frame["dr"], errors="raise").astype(np.int64)
    for name in SA_NAMES:
        values = pd.to_numeric(frame[name].replace("", np.nan), errors="raise")
        frame[name] = values.fillna(MISSING).astype(np.int64)
    return frame


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset directory written by :func:`save_dataset`.

    Raises
    ------
    FileNotFoundError
        If either file is missing.
    CountMismatchError
        If ``meta.csv`` rows and stored images differ in number.
    """
    root = Path(path)
    images_path, meta_path = root / IMAGES_FILE, root / META_FILE
    for required in (images_path, meta_path):
        if not required.is_file():
            raise FileNotFoundError(f"Dataset file not found: {required}")
    images = decode_images(images_path.read_bytes(), str(images_path))
    try:
        meta = decode_meta(meta_path.read_text(encoding="utf-8"), str(meta_path))
    except (ValueError, pd.errors.ParserError) as exc:
        if isinstance(exc, DatasetFormatError):
            raise
        raise DatasetFormatError(f"{meta_path}: {exc}") from exc
    if len(meta) != images.shape[0]:
        raise CountMismatchError(
            f"{meta_path} has {len(meta)} rows but {images_path} stores "
            f"{images.shape[0]} images."
        )
    return Dataset(images, meta)


def dataset_hash(path: str | Path) -> str:
    """SHA-256 over ``images.bin`` followed by ``meta.csv``."""
    root = Path(path)
    digest = hashlib.sha256()
    for name in (IMAGES_FILE, META_FILE):
        digest.update((root / name).read_bytes())
    return digest.hexdigest()
