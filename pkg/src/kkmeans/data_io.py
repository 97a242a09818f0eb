"""Dataset ingestion: CSV, libsvm, and big-endian idx image/label files."""

from __future__ import annotations

import csv
import gzip
import os
import struct

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .kernels import Dataset

FORMATS = ("csv", "libsvm", "idx")

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def _open(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read one idx file (big-endian magic, dims, then raw values)."""
    try:
        with _open(path) as fh:
            header = fh.read(4)
            if len(header) < 4:
                raise FormatError(f"{path}: truncated idx header")
            zero1, zero2, type_code, ndim = struct.unpack(">BBBB", header)
            if zero1 != 0 or zero2 != 0:
                raise FormatError(f"{path}: bad idx magic {header!r}")
            dtype = _IDX_DTYPES.get(type_code)
            if dtype is None:
                raise FormatError(f"{path}: unknown idx type code 0x{type_code:02x}")
            dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
            count = int(np.prod(dims)) if dims else 0
            raw = fh.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise FormatError(f"{path}: idx payload shorter than header promises")
            return np.frombuffer(raw, dtype=dtype).reshape(dims).astype(np.float64)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read idx file ({exc})") from exc


def _companion_label_path(path) -> str | None:
    """Conventional label file next to an MNIST-style image file."""
    name = str(path)
    candidate = name.replace("images", "labels").replace("idx3", "idx1")
    if candidate != name and os.path.exists(candidate):
        return candidate
    return None


def _parse_csv(path, label_column):
    rows = []
    labels = []
    label_idx = None
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if lineno == 1:
                    header = _looks_like_header(row)
                    if isinstance(label_column, str):
                        if not header:
                            raise FormatError(
                                f"{path}:1: label column {label_column!r} needs a header row"
                            )
                        if label_column not in row:
                            raise FormatError(
                                f"{path}:1: no column named {label_column!r}"
                            )
                        label_idx = row.index(label_column)
                    elif label_column is not None:
                        label_idx = int(label_column)
                    if header:
                        continue
                parsed = []
                for col, cell in enumerate(row):
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        raise FormatError(
                            f"{path}:{lineno}: column {col}: non-numeric cell {cell!r}"
                        ) from None
                if label_idx is not None:
                    if label_idx >= len(parsed):
                        raise FormatError(
                            f"{path}:{lineno}: label column {label_idx} out of range"
                        )
                    labels.append(int(parsed[label_idx]))
                    del parsed[label_idx]
                rows.append(parsed)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"{path}: ragged rows (widths {sorted(widths)})")
    points = np.asarray(rows, dtype=np.float64)
    return points, (np.asarray(labels, dtype=np.int64) if labels else None)


def _looks_like_header(row) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def _parse_libsvm(path):
    entries = []
    labels = []
    width = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                tokens = line.split()
                try:
                    labels.append(int(float(tokens[0])))
                except ValueError:
                    raise FormatError(
                        f"{path}:{lineno}: bad label token {tokens[0]!r}"
                    ) from None
                pairs = []
                for tok in tokens[1:]:
                    if ":" not in tok:
                        raise FormatError(
                            f"{path}:{lineno}: expected index:value, got {tok!r}"
                        )
                    idx_str, val_str = tok.split(":", 1)
                    try:
                        idx = int(idx_str)
                        val = float(val_str)
                    except ValueError:
                        raise FormatError(
                            f"{path}:{lineno}: bad pair {tok!r}"
                        ) from None
                    if idx < 1:
                        raise FormatError(
                            f"{path}:{lineno}: libsvm indices are 1-based, got {idx}"
                        )
                    pairs.append((idx, val))
                    width = max(width, idx)
                entries.append(pairs)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file ({exc})") from exc
    if not entries:
        raise FormatError(f"{path}: no data rows")
    points = np.zeros((len(entries), max(width, 1)))
    for i, pairs in enumerate(entries):
        for idx, val in pairs:
            points[i, idx - 1] = val
    return points, np.asarray(labels, dtype=np.int64)


def ingest(path, data_format: str = "csv", scale_255: bool = False, label_column=None) -> Dataset:
    """Load a dataset from disk.

    ``idx`` expects an MNIST-style image file (labels are picked up from the
    conventional companion file when present); ``csv`` is numeric with an
    optional header and optional label column (index or name); ``libsvm``
    lines are ``label index:value ...`` with 1-based indices, densified.
    Features are divided by 255 when ``scale_255`` is set.
    """
    if data_format not in FORMATS:
        raise InvalidArgumentError(f"unknown data format {data_format!r}")
    if data_format == "csv":
        points, labels = _parse_csv(path, label_column)
    elif data_format == "libsvm":
        points, labels = _parse_libsvm(path)
    else:
        arr = read_idx(path)
        if arr.ndim == 1:
            raise FormatError(f"{path}: idx file holds labels, not images")
        points = arr.reshape(arr.shape[0], -1)
        labels = None
        companion = _companion_label_path(path)
        if companion is not None:
            lab = read_idx(companion)
            if lab.ndim == 1 and lab.shape[0] == points.shape[0]:
                labels = lab.astype(np.int64)
    if scale_255:
        points = points / 255.0
    return Dataset(points=points, labels=labels)
