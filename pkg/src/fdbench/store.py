"""Binary feature-matrix store (FDBF1) and CSV ingestion.

An FDBF1 file is one self-contained artifact: an n x d float32 feature
matrix plus the metadata needed to interpret it. Layout, in order:

    magic             5 bytes, b"FDBF1"
    n                 uint64, little-endian
    d                 uint64, little-endian
    dtype_code        1 byte, 0 = float32 (only defined value)
    payload_checksum  8 bytes, first 8 bytes of SHA-256 over the payload
    metadata_len      uint32, little-endian
    metadata          UTF-8 JSON: extractor_id, preprocessing_tag, role,
                      source_id
    payload           n*d*4 bytes, row-major float32, little-endian

The format is fixed little-endian/row-major so feature extractors written
in other languages can be checked for bit-exactness against this reader.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptionError, FormatError, ParseError, ValidationError

MAGIC = b"FDBF1"
DTYPE_FLOAT32 = 0
CHECKSUM_BYTES = 8

ROLE_GENERATED = "generated"
ROLE_REAL_TEST = "real_test"
ROLE_REAL_TRAIN = "real_train"
VALID_ROLES = (ROLE_GENERATED, ROLE_REAL_TEST, ROLE_REAL_TRAIN)

VALID_PREPROCESSING = ("legacy-resize", "clean-resize", "none")

_HEADER_FIXED = struct.Struct("<5sQQB8sI")


def _payload_checksum(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()[:CHECKSUM_BYTES]


@dataclass(frozen=True)
class FeatureSet:
    """An n x d float32 feature matrix with provenance metadata.

    Instances are immutable after construction and safe to share across
    threads; the underlying array is marked read-only.
    """

    data: np.ndarray
    extractor_id: str
    preprocessing_tag: str = "none"
    role: str = ROLE_GENERATED
    source_id: str = ""

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(
                f"feature matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(
                f"feature matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("feature matrix contains NaN or Inf entries")
        if self.role not in VALID_ROLES:
            raise ValidationError(
                f"role must be one of {VALID_ROLES}, got {self.role!r}")
        if self.preprocessing_tag not in VALID_PREPROCESSING:
            raise ValidationError(
                f"preprocessing_tag must be one of {VALID_PREPROCESSING}, "
                f"got {self.preprocessing_tag!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def metadata(self) -> dict:
        return {
            "extractor_id": self.extractor_id,
            "preprocessing_tag": self.preprocessing_tag,
            "role": self.role,
            "source_id": self.source_id,
        }

    def with_role(self, role: str) -> "FeatureSet":
        """Copy of this feature set under a different data role."""
        return FeatureSet(self.data, self.extractor_id,
                          self.preprocessing_tag, role, self.source_id)


def write_feature_set(fs: FeatureSet, path: str | Path) -> None:
    """Write ``fs`` to ``path`` in FDBF1 layout.

    Validation happens on the in-memory object before any byte is
    written, so a failed call never leaves a partial file behind.
    """
    if not isinstance(fs, FeatureSet):
        raise ValidationError(f"expected FeatureSet, got {type(fs).__name__}")
    payload = np.ascontiguousarray(fs.data, dtype="<f4").tobytes(order="C")
    meta = json.dumps(fs.metadata(), sort_keys=True).encode("utf-8")
    header = _HEADER_FIXED.pack(MAGIC, fs.n, fs.d, DTYPE_FLOAT32,
                                _payload_checksum(payload), len(meta))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(meta)
        fh.write(payload)


def read_feature_set(path: str | Path) -> FeatureSet:
    """Read an FDBF1 file, verifying the checksum before returning."""
    with open(path, "rb") as fh:
        raw = fh.read()
    fixed = raw[:_HEADER_FIXED.size]
    if len(fixed) < _HEADER_FIXED.size:
        raise FormatError(f"{path}: truncated header")
    magic, n, d, dtype_code, checksum, meta_len = _HEADER_FIXED.unpack(fixed)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if dtype_code != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unknown dtype code {dtype_code}")
    offset = _HEADER_FIXED.size
    meta_raw = raw[offset:offset + meta_len]
    if len(meta_raw) < meta_len:
        raise CorruptionError(f"{path}: truncated metadata block")
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptionError(f"{path}: unreadable metadata block") from exc
    payload = raw[offset + meta_len:]
    expected = n * d * 4
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, header declares "
            f"{expected}")
    if _payload_checksum(payload) != checksum:
        raise CorruptionError(f"{path}: payload checksum mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    try:
        return FeatureSet(
            data=data,
            extractor_id=str(meta.get("extractor_id", "")),
            preprocessing_tag=str(meta.get("preprocessing_tag", "none")),
            role=str(meta.get("role", "")),
            source_id=str(meta.get("source_id", "")),
        )
    except ValidationError as exc:
        raise CorruptionError(f"{path}: stored feature set is invalid: {exc}") from exc


def import_csv(path: str | Path, *, extractor_id: str,
               preprocessing_tag: str = "none",
               role: str = ROLE_GENERATED,
               source_id: str = "") -> FeatureSet:
    """Parse a headerless numeric CSV into a FeatureSet.

    Every row must have the same number of columns; cells are parsed as
    float32. The whole matrix is materialized in memory.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(
                    f"{path}: ragged row at line {lineno}: expected {width} "
                    f"columns, got {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ParseError(
                    f"{path}: non-numeric cell at line {lineno}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float32)
    return FeatureSet(data=data, extractor_id=extractor_id,
                      preprocessing_tag=preprocessing_tag, role=role,
                      source_id=source_id)
