"""Embedding dataset storage: validation, indexing, and FSEB v1 file I/O.

A dataset is an immutable collection of labeled embedding records, each
either a pooled feature vector (H = W = 1) or a spatial feature grid
flattened in channel-major order (flat index = (h*W + w)*C + c).

Binary format "FSEB v1", little-endian:

    magic   4 bytes  ``FSEB``
    u16     version, must be 1
    u8      shape kind: 0 pooled, 1 grid
    u32     C, H, W
    u32     class count, then per class: u32 byte length + UTF-8 name
    u64     record count
    record  u64 id, u32 label, C*H*W float32 values (channel-major)

CSV is a convenience ingest path for pooled embeddings only.  Header row
is ``id,label,f0,...,f{D-1}``.  Class names may be declared with an
optional leading comment line ``# classes: name0,name1,...``; without it
the class table is synthesized as ``class_0..class_{max label}``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"FSEB"
FORMAT_VERSION = 1

KIND_POOLED = "pooled"
KIND_GRID = "grid"
_KIND_CODES = {KIND_POOLED: 0, KIND_GRID: 1}
_KIND_NAMES = {0: KIND_POOLED, 1: KIND_GRID}


class DatasetFormatError(ValueError):
    """Raised when a dataset file or payload violates the format contract."""


@dataclass(frozen=True)
class EmbeddingShape:
    """Shape of every embedding in a dataset.

    Pooled embeddings are represented as 1x1 grids so that grid-based
    heads can consume any dataset.
    """

    kind: str
    dim: int
    height: int = 1
    width: int = 1

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise DatasetFormatError(f"unknown shape kind {self.kind!r}")
        if self.dim < 1 or self.height < 1 or self.width < 1:
            raise DatasetFormatError("shape dimensions must be >= 1")
        if self.kind == KIND_POOLED and (self.height != 1 or self.width != 1):
            raise DatasetFormatError("pooled shape requires height = width = 1")

    @property
    def size(self) -> int:
        """Total number of float values per record."""
        return self.dim * self.height * self.width

    @property
    def positions(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class EmbeddingRecord:
    id: int
    label: int
    embedding: np.ndarray


class EmbeddingDataset:
    """Validated, immutable set of embedding records.

    Internally stores columnar arrays (ids, labels, one embedding row per
    record); ``records()`` yields :class:`EmbeddingRecord` views.  Safe to
    share read-only across workers.
    """

    def __init__(self, name, class_names, shape: EmbeddingShape, ids, labels, embeddings):
        self.name = str(name)
        self.class_names = list(class_names)
        self.shape = shape
        self.ids = np.ascontiguousarray(ids, dtype=np.uint64)
        self.labels = np.ascontiguousarray(labels, dtype=np.uint32)
        self.embeddings = np.ascontiguousarray(embeddings, dtype=np.float32)
        if self.embeddings.ndim != 2:
            if len(self.ids) == 0:
                self.embeddings = self.embeddings.reshape(0, shape.size)
            else:
                self.embeddings = self.embeddings.reshape(len(self.ids), -1)
        self._validate()
        self._row_of_id = {int(i): r for r, i in enumerate(self.ids)}

    def _validate(self):
        n = len(self.ids)
        if len(self.labels) != n or self.embeddings.shape[0] != n:
            raise DatasetFormatError("ids, labels and embeddings disagree on record count")
        if n and self.embeddings.shape[1] != self.shape.size:
            raise DatasetFormatError(
                f"dimension mismatch: embeddings have {self.embeddings.shape[1]} values, "
                f"shape declares {self.shape.size}")
        if not self.class_names:
            raise DatasetFormatError("dataset declares no classes")
        bad = np.nonzero(self.labels >= len(self.class_names))[0]
        if bad.size:
            raise DatasetFormatError(f"label out of range at record {bad[0]}")
        finite = np.isfinite(self.embeddings).all(axis=1) if n else np.ones(0, bool)
        if n and not finite.all():
            raise DatasetFormatError(f"non-finite value at record {int(np.nonzero(~finite)[0][0])}")
        seen = {}
        for r, i in enumerate(self.ids):
            i = int(i)
            if i in seen:
                raise DatasetFormatError(f"duplicate id {i} at record {r}")
            seen[i] = r

    def __len__(self):
        return len(self.ids)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def records(self):
        for r in range(len(self.ids)):
            yield EmbeddingRecord(int(self.ids[r]), int(self.labels[r]), self.embeddings[r])

    def row_of_id(self, record_id: int) -> int:
        return self._row_of_id[int(record_id)]


@dataclass
class ClassIndex:
    """Per-class lists of record ids, in class-table order."""

    by_class: list = field(default_factory=list)

    def class_size(self, label: int) -> int:
        return len(self.by_class[label])


def build_class_index(dataset: EmbeddingDataset) -> ClassIndex:
    by_class = [[] for _ in dataset.class_names]
    for r in range(len(dataset)):
        by_class[int(dataset.labels[r])].append(int(dataset.ids[r]))
    return ClassIndex(by_class)


def save_dataset(dataset: EmbeddingDataset, path):
    """Write FSEB v1.  Round-trips bit-exactly at float32 precision."""
    path = Path(path)
    shape = dataset.shape
    head = [MAGIC,
            struct.pack("<HB", FORMAT_VERSION, _KIND_CODES[shape.kind]),
            struct.pack("<III", shape.dim, shape.height, shape.width),
            struct.pack("<I", len(dataset.class_names))]
    for name in dataset.class_names:
        raw = name.encode("utf-8")
        head.append(struct.pack("<I", len(raw)))
        head.append(raw)
    head.append(struct.pack("<Q", len(dataset)))
    rec_dtype = np.dtype([("id", "<u8"), ("label", "<u4"), ("v", "<f4", (shape.size,))])
    recs = np.empty(len(dataset), dtype=rec_dtype)
    recs["id"] = dataset.ids
    recs["label"] = dataset.labels
    if len(dataset):
        recs["v"] = dataset.embeddings
    with open(path, "wb") as fh:
        fh.write(b"".join(head))
        fh.write(recs.tobytes())


def load_dataset(path, format: str = "binary", class_names=None, name=None) -> EmbeddingDataset:
    """Load and validate a dataset from FSEB binary or CSV."""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"no such file: {path}")
    if format == "binary":
        return _load_binary(path, name)
    if format == "csv":
        return _load_csv(path, class_names, name)
    raise DatasetFormatError(f"unknown format {format!r}")


def _load_binary(path: Path, name) -> EmbeddingDataset:
    blob = path.read_bytes()
    if len(blob) < 22 or blob[:4] != MAGIC:
        raise DatasetFormatError("malformed header: bad magic")
    off = 4
    version, kind_code = struct.unpack_from("<HB", blob, off)
    off += 3
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unknown format version {version}")
    if kind_code not in _KIND_NAMES:
        raise DatasetFormatError(f"malformed header: bad shape kind {kind_code}")
    dim, height, width = struct.unpack_from("<III", blob, off)
    off += 12
    try:
        shape = EmbeddingShape(_KIND_NAMES[kind_code], dim, height, width)
    except DatasetFormatError as exc:
        raise DatasetFormatError(f"malformed header: {exc}") from None
    (n_classes,) = struct.unpack_from("<I", blob, off)
    off += 4
    class_names = []
    for _ in range(n_classes):
        if off + 4 > len(blob):
            raise DatasetFormatError("malformed header: class table truncated")
        (ln,) = struct.unpack_from("<I", blob, off)
        off += 4
        if off + ln > len(blob):
            raise DatasetFormatError("malformed header: class table truncated")
        class_names.append(blob[off:off + ln].decode("utf-8"))
        off += ln
    if off + 8 > len(blob):
        raise DatasetFormatError("malformed header: record count missing")
    (count,) = struct.unpack_from("<Q", blob, off)
    off += 8
    rec_dtype = np.dtype([("id", "<u8"), ("label", "<u4"), ("v", "<f4", (shape.size,))])
    expected = count * rec_dtype.itemsize
    if len(blob) - off != expected:
        raise DatasetFormatError(
            f"truncated payload: expected {expected} bytes for {count} records, "
            f"found {len(blob) - off}")
    recs = np.frombuffer(blob, dtype=rec_dtype, count=count, offset=off)
    return EmbeddingDataset(name or path.stem, class_names, shape,
                            recs["id"], recs["label"],
                            recs["v"].reshape(count, shape.size))


def _load_csv(path: Path, class_names, name) -> EmbeddingDataset:
    declared = list(class_names) if class_names is not None else None
    with open(path, newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    row = 0
    if lines and lines[row].startswith("#"):
        comment = lines[row][1:].strip()
        if comment.lower().startswith("classes:"):
            parsed = [c.strip() for c in comment.split(":", 1)[1].split(",") if c.strip()]
            if declared is None:
                declared = parsed
        row += 1
    if row >= len(lines) or not lines[row]:
        raise DatasetFormatError("malformed header: empty CSV")
    header = lines[row].split(",")
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise DatasetFormatError("malformed header: expected id,label,f0,...")
    dim = len(header) - 2
    for d in range(dim):
        if header[2 + d] != f"f{d}":
            raise DatasetFormatError(f"malformed header: column {2 + d} should be f{d}")
    row += 1
    ids, labels, vectors = [], [], []
    rec = 0
    for ln in lines[row:]:
        if not ln.strip():
            continue
        cells = ln.split(",")
        if len(cells) != dim + 2:
            raise DatasetFormatError(f"dimension mismatch at record {rec}: "
                                     f"{len(cells) - 2} values, expected {dim}")
        try:
            rid = int(cells[0])
            label = int(cells[1])
            vec = np.array([float(c) for c in cells[2:]], dtype=np.float32)
        except ValueError:
            raise DatasetFormatError(f"unparseable value at record {rec}") from None
        if rid < 0:
            raise DatasetFormatError(f"negative id at record {rec}")
        if label < 0:
            raise DatasetFormatError(f"label out of range at record {rec}")
        if not np.isfinite(vec).all():
            raise DatasetFormatError(f"non-finite value at record {rec}")
        ids.append(rid)
        labels.append(label)
        vectors.append(vec)
        rec += 1
    if declared is None:
        declared = [f"class_{c}" for c in range(max(labels, default=-1) + 1)] or ["class_0"]
    for i, label in enumerate(labels):
        if label >= len(declared):
            raise DatasetFormatError(f"label out of range at record {i}")
    shape = EmbeddingShape(KIND_POOLED, dim)
    emb = np.vstack(vectors) if vectors else np.zeros((0, dim), np.float32)
    return EmbeddingDataset(name or path.stem, declared, shape,
                            np.array(ids, np.uint64), np.array(labels, np.uint32), emb)
