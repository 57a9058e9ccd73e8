"""Writer for the binary vector-store format consumed by the analysis side.

Layout (little-endian): magic "ENV1", u8 version = 1, u32 dim, u64 count,
then per record a u16 UTF-8 key length, the key bytes, and dim float32
values.  Keys are written in lexicographic order so output is
byte-deterministic.
"""

from __future__ import annotations

import struct
from typing import Mapping

import numpy as np

MAGIC = b"ENV1"
VERSION = 1
_HEADER = struct.Struct("<4sBIQ")
_KEYLEN = struct.Struct("<H")


def write_store(vectors: Mapping[str, np.ndarray], dim: int, path) -> None:
    for key, vec in vectors.items():
        if vec.shape != (dim,):
            raise ValueError(f"vector for {key!r} has shape {vec.shape}, expected ({dim},)")
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, dim, len(vectors)))
        for key in sorted(vectors):
            encoded = key.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"key too long to serialize: {key[:40]!r}...")
            handle.write(_KEYLEN.pack(len(encoded)))
            handle.write(encoded)
            handle.write(np.asarray(vectors[key], dtype="<f4").tobytes())
