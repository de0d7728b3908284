"""File formats: feature files, label files, CSV features, images, models.

All binary formats are little-endian regardless of platform.

Feature file (``TFV1``)::

    magic   4s   b"TFV1"
    count   u32
    dim     u32
    payload count * dim float32, row-major

Image container (``TIMG``)::

    magic   4s   b"TIMG"
    count   u32
    height  u32
    width   u32
    chans   u32
    layout  u8   0 = interleaved (HxWxC), 1 = planar (CxHxW)
    payload count * height * width * chans uint8

Model file (``TILDA01``)::

    magic   7s   b"TILDA" + 2-digit format version
    P, k, d u32 x3
    seed    u64
    C       u32
    C x { kind u8 (0 str, 1 int), length u32, utf-8 bytes }
    rng     PCG64 state u64 lo/hi, increment u64 lo/hi, has_uint32 u8, uinteger u32
    anchors C*P*k*(d/P) float64
    counts  C*P*k uint64
    crc32   u32 over every preceding byte
"""

from __future__ import annotations

import csv
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    CorruptPayloadError,
    DimensionMismatchError,
    LabelFileError,
    NonFiniteValueError,
    NonNumericCellError,
    RaggedRowError,
    TruncatedFileError,
    VersionMismatchError,
)
from .model import AnchorStore, ModelConfig

DATA_DIR_ENV = "TILDA_DATA_DIR"

FEATURE_MAGIC = b"TFV1"
FEATURE_HEADER = struct.Struct("<4sII")

IMAGE_MAGIC = b"TIMG"
IMAGE_HEADER = struct.Struct("<4sIIIIB")

MODEL_MAGIC = b"TILDA"
MODEL_VERSION = b"01"
MODEL_CONFIG = struct.Struct("<IIIQ")
RNG_STATE = struct.Struct("<QQQQBI")

_MASK64 = (1 << 64) - 1


def resolve_path(path) -> Path:
    """Prefix relative paths with ``$TILDA_DATA_DIR`` when it is set."""
    path = Path(path)
    base = os.environ.get(DATA_DIR_ENV)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


# -- feature files ---------------------------------------------------------

def write_features(path, vectors) -> None:
    arr = _as_matrix(vectors)
    with open(path, "wb") as f:
        f.write(FEATURE_HEADER.pack(FEATURE_MAGIC, arr.shape[0], arr.shape[1]))
        f.write(arr.astype("<f4").tobytes())


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        arr = vectors
    else:
        vectors = list(vectors)
        lengths = {len(v) for v in vectors}
        if len(lengths) > 1:
            raise DimensionMismatchError(f"vectors have mixed lengths {sorted(lengths)}")
        arr = np.asarray(vectors, dtype=np.float64).reshape(len(vectors), -1)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-d array of vectors, got shape {arr.shape}")
    return arr


def read_features(path) -> np.ndarray:
    """Read a ``TFV1`` file into a ``(count, dim)`` float32 array."""
    data = Path(path).read_bytes()
    if len(data) < FEATURE_HEADER.size:
        raise TruncatedFileError(
            f"{path}: header needs {FEATURE_HEADER.size} bytes, file has {len(data)}"
        )
    magic, count, dim = FEATURE_HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: expected magic {FEATURE_MAGIC!r}, found {magic!r}")
    expected = FEATURE_HEADER.size + count * dim * 4
    if len(data) < expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} bytes for {count}x{dim} floats, found {len(data)}"
        )
    if len(data) > expected:
        raise CorruptPayloadError(
            f"{path}: expected {expected} bytes for {count}x{dim} floats, found {len(data)}"
        )
    arr = np.frombuffer(data, dtype="<f4", count=count * dim, offset=FEATURE_HEADER.size)
    arr = arr.reshape(count, dim).astype(np.float32)
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise NonFiniteValueError(row, col, float(arr[row, col]))
    return arr


# -- label files -----------------------------------------------------------

def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for label in labels:
            text = str(label)
            if not text or "\n" in text or text != text.strip():
                raise LabelFileError(f"label {label!r} cannot be written as a line token")
            f.write(text + "\n")


def read_labels(path, expected_count: int | None = None) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    labels = []
    for lineno, line in enumerate(lines, start=1):
        token = line.rstrip("\r").strip()
        if not token:
            raise LabelFileError(f"{path}: empty label on line {lineno}")
        labels.append(token)
    if expected_count is not None and len(labels) != expected_count:
        raise LabelFileError(
            f"{path}: {len(labels)} labels for {expected_count} feature vectors"
        )
    return labels


# -- CSV features ----------------------------------------------------------

def read_csv_features(path, header: bool = False) -> list[tuple[np.ndarray, str]]:
    """Rows of numeric columns followed by a label column."""
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise RaggedRowError(lineno, "at least 2", width)
            elif len(row) != width:
                raise RaggedRowError(lineno, width, len(row))
            values = []
            for col, cell in enumerate(row[:-1], start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise NonNumericCellError(lineno, col, cell) from None
            vec = np.asarray(values, dtype=np.float64)
            if not np.all(np.isfinite(vec)):
                col = int(np.argmin(np.isfinite(vec)))
                raise NonFiniteValueError(len(rows), col, vec[col])
            rows.append((vec, row[-1].strip()))
    return rows


def write_csv_features(path, vectors, labels, header: bool = False) -> None:
    arr = _as_matrix(vectors)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header:
            writer.writerow([f"f{i}" for i in range(arr.shape[1])] + ["label"])
        for vec, label in zip(arr, labels):
            writer.writerow([repr(float(v)) for v in vec] + [label])


# -- image container -------------------------------------------------------

def write_images(path, images) -> None:
    images = [np.asarray(im, dtype=np.uint8) for im in images]
    images = [im[:, :, None] if im.ndim == 2 else im for im in images]
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise DimensionMismatchError(f"images have mixed shapes {sorted(shapes)}")
    h, w, ch = shapes.pop() if shapes else (0, 0, 0)
    with open(path, "wb") as f:
        f.write(IMAGE_HEADER.pack(IMAGE_MAGIC, len(images), h, w, ch, 0))
        for im in images:
            f.write(np.ascontiguousarray(im).tobytes())


def read_images(path) -> np.ndarray:
    """Read a ``TIMG`` container into a ``(count, H, W, C)`` uint8 array."""
    data = Path(path).read_bytes()
    if len(data) < IMAGE_HEADER.size:
        raise TruncatedFileError(
            f"{path}: header needs {IMAGE_HEADER.size} bytes, file has {len(data)}"
        )
    magic, count, h, w, ch, layout = IMAGE_HEADER.unpack_from(data)
    if magic != IMAGE_MAGIC:
        raise BadMagicError(f"{path}: expected magic {IMAGE_MAGIC!r}, found {magic!r}")
    if layout not in (0, 1):
        raise CorruptPayloadError(f"{path}: unknown layout code {layout}")
    expected = IMAGE_HEADER.size + count * h * w * ch
    if len(data) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, found {len(data)}")
    if len(data) > expected:
        raise CorruptPayloadError(f"{path}: expected {expected} bytes, found {len(data)}")
    arr = np.frombuffer(data, dtype=np.uint8, offset=IMAGE_HEADER.size)
    if layout == 0:
        return arr.reshape(count, h, w, ch).copy()
    return arr.reshape(count, ch, h, w).transpose(0, 2, 3, 1).copy()


# -- model files -----------------------------------------------------------

def _encode_label(label) -> bytes:
    if isinstance(label, str):
        raw = label.encode("utf-8")
        return struct.pack("<BI", 0, len(raw)) + raw
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        raw = str(int(label)).encode("ascii")
        return struct.pack("<BI", 1, len(raw)) + raw
    raise TypeError(f"only str and int labels can be saved, got {type(label).__name__}")


def dumps_model(store: AnchorStore) -> bytes:
    c = store.config
    parts = [MODEL_MAGIC + MODEL_VERSION, MODEL_CONFIG.pack(c.P, c.k, c.d, int(c.seed))]
    parts.append(struct.pack("<I", store.num_classes))
    parts.extend(_encode_label(lab) for lab in store.classes)
    st = store.rng.bit_generator.state
    if st["bit_generator"] != "PCG64":
        raise TypeError(f"cannot serialise RNG {st['bit_generator']}")
    s, inc = st["state"]["state"], st["state"]["inc"]
    parts.append(RNG_STATE.pack(
        s & _MASK64, s >> 64, inc & _MASK64, inc >> 64,
        int(st["has_uint32"]), int(st["uinteger"]),
    ))
    parts.append(store.anchors.astype("<f8").tobytes())
    parts.append(store.counts.astype("<u8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def loads_model(data: bytes) -> AnchorStore:
    magic = data[:len(MODEL_MAGIC)]
    if magic != MODEL_MAGIC:
        raise BadMagicError(f"not a model file: magic {data[:7]!r}")
    version = data[len(MODEL_MAGIC):len(MODEL_MAGIC) + 2]
    if version != MODEL_VERSION:
        raise VersionMismatchError(
            f"model format version {version!r}, this build reads {MODEL_VERSION!r}"
        )
    if len(data) < 11 or zlib.crc32(data[:-4]) != struct.unpack("<I", data[-4:])[0]:
        raise CorruptPayloadError("model file checksum mismatch")
    body = memoryview(data)[:-4]
    try:
        return _parse_model(body)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise CorruptPayloadError(f"model file payload is malformed: {exc}") from exc


def _parse_model(body: memoryview) -> AnchorStore:
    off = len(MODEL_MAGIC) + len(MODEL_VERSION)
    P, k, d, seed = MODEL_CONFIG.unpack_from(body, off)
    off += MODEL_CONFIG.size
    store = AnchorStore(ModelConfig(P=P, k=k, d=d, seed=seed))
    (num_classes,) = struct.unpack_from("<I", body, off)
    off += 4
    for _ in range(num_classes):
        kind, length = struct.unpack_from("<BI", body, off)
        off += 5
        raw = bytes(body[off:off + length])
        if len(raw) != length:
            raise ValueError("class table truncated")
        off += length
        if kind == 0:
            store._register(raw.decode("utf-8"))
        elif kind == 1:
            store._register(int(raw.decode("ascii")))
        else:
            raise ValueError(f"unknown label kind {kind}")
    s_lo, s_hi, i_lo, i_hi, has32, uint32 = RNG_STATE.unpack_from(body, off)
    off += RNG_STATE.size
    store.rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": s_lo | (s_hi << 64), "inc": i_lo | (i_hi << 64)},
        "has_uint32": has32,
        "uinteger": uint32,
    }
    shape = store.anchors.shape
    n_anchor = int(np.prod(shape))
    n_count = int(np.prod(store.counts.shape))
    need = off + n_anchor * 8 + n_count * 8
    if len(body) != need:
        raise ValueError(f"expected {need} payload bytes, found {len(body)}")
    store.anchors = np.frombuffer(body, dtype="<f8", count=n_anchor, offset=off).reshape(shape).astype(np.float64)
    off += n_anchor * 8
    store.counts = np.frombuffer(body, dtype="<u8", count=n_count, offset=off).reshape(store.counts.shape).astype(np.uint64)
    return store


def save_model(path, store: AnchorStore) -> None:
    Path(path).write_bytes(dumps_model(store))


def load_model(path) -> AnchorStore:
    return loads_model(Path(path).read_bytes())
