"""Standalone FSEB v1 writer.

Mirrors the embedding-kit file interface, little-endian:
magic ``FSEB``, u16 version=1, u8 shape kind (0 pooled, 1 grid),
u32 C/H/W, u32 class count with u32-length-prefixed UTF-8 names,
u64 record count, then per record u64 id, u32 label and C*H*W float32
values in channel-major order ((h*W + w)*C + c).
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FSEB"
VERSION = 1
KIND_POOLED = 0
KIND_GRID = 1


def write_fseb(path, class_names, kind, channels, height, width, ids, labels, values):
    """values: (n_records, channels*height*width) float32, channel-major."""
    values = np.ascontiguousarray(values, dtype=np.float32)
    n = values.shape[0]
    if values.ndim != 2 or values.shape[1] != channels * height * width:
        raise ValueError("values must be (records, C*H*W)")
    if not np.isfinite(values).all():
        raise ValueError("non-finite embedding values")
    parts = [MAGIC,
             struct.pack("<HB", VERSION, kind),
             struct.pack("<III", channels, height, width),
             struct.pack("<I", len(class_names))]
    for name in class_names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    parts.append(struct.pack("<Q", n))
    rec = np.dtype([("id", "<u8"), ("label", "<u4"),
                    ("v", "<f4", (channels * height * width,))])
    payload = np.empty(n, dtype=rec)
    payload["id"] = np.asarray(ids, dtype=np.uint64)
    payload["label"] = np.asarray(labels, dtype=np.uint32)
    if n:
        payload["v"] = values
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))
        fh.write(payload.tobytes())
