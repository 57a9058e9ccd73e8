"""Entity vector store: binary file format, JSONL fallback, remote fetch.

Binary layout (little-endian): magic "ENV1", u8 version = 1, u32 dim,
u64 count, then per record a u16 UTF-8 key length, the key bytes, and
dim float32 values.  Vectors are kept as raw float32; downstream distance
arithmetic runs in float64.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, VectorStoreError

MAGIC = b"ENV1"
VERSION = 1
_HEADER = struct.Struct("<4sBIQ")
_KEYLEN = struct.Struct("<H")


@dataclass(frozen=True)
class EmbeddingVector:
    key: str
    values: np.ndarray  # float32, shape (dim,)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


class VectorStore:
    """Immutable map from canonical entity string to its embedding vector."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray], source: str = "file"):
        if dim < 1:
            raise VectorStoreError(f"dimension must be positive, got {dim}")
        for key, vec in entries.items():
            if vec.shape != (dim,):
                raise VectorStoreError(f"vector for {key!r} has dim {vec.shape[0]}, store dim is {dim}")
            if not np.all(np.isfinite(vec)):
                raise VectorStoreError(f"vector for {key!r} has non-finite components")
        self._dim = dim
        self._entries = {k: np.asarray(v, dtype=np.float32) for k, v in entries.items()}
        self.source = source

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def keys(self):
        return self._entries.keys()

    def get_vector(self, key: str) -> Optional[EmbeddingVector]:
        """Exact-key lookup; canonicalization happens upstream."""
        vec = self._entries.get(key)
        if vec is None:
            return None
        return EmbeddingVector(key=key, values=vec)

    def matrix(self, keys: Sequence[str]) -> np.ndarray:
        """Stack the vectors for ``keys`` into a float64 (n, dim) matrix."""
        out = np.empty((len(keys), self._dim), dtype=np.float64)
        for i, key in enumerate(keys):
            vec = self._entries.get(key)
            if vec is None:
                raise DataError(f"no vector for key {key!r}")
            out[i] = vec
        return out


def write_vector_store(store: VectorStore, path) -> None:
    """Serialize with keys in lexicographic order; output is byte-deterministic."""
    keys = sorted(store.keys())
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, store.dim, len(keys)))
        for key in keys:
            encoded = key.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise VectorStoreError(f"key too long to serialize: {key[:40]!r}...")
            handle.write(_KEYLEN.pack(len(encoded)))
            handle.write(encoded)
            handle.write(store.get_vector(key).values.astype("<f4").tobytes())


def _read_exact(handle, n: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise VectorStoreError(f"truncated store file while reading {what}")
    return data


def _load_binary(handle) -> VectorStore:
    magic, version, dim, count = _HEADER.unpack(_read_exact(handle, _HEADER.size, "header"))
    if magic != MAGIC:
        raise VectorStoreError(f"bad magic bytes {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VectorStoreError(f"unsupported store version {version}")
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (key_len,) = _KEYLEN.unpack(_read_exact(handle, _KEYLEN.size, "key length"))
        key = _read_exact(handle, key_len, "key").decode("utf-8")
        raw = _read_exact(handle, 4 * dim, f"vector for {key!r}")
        if key in entries:
            raise VectorStoreError(f"duplicate key {key!r}")
        entries[key] = np.frombuffer(raw, dtype="<f4").astype(np.float32)
    trailing = handle.read(1)
    if trailing:
        raise VectorStoreError("trailing bytes after the declared record count")
    return VectorStore(dim=dim, entries=entries, source="file")


def _load_jsonl(path) -> VectorStore:
    entries: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VectorStoreError(f"line {line_number}: invalid JSON: {exc.msg}") from exc
            key = record.get("entity")
            vector = record.get("vector")
            if not isinstance(key, str) or not isinstance(vector, list):
                raise VectorStoreError(f"line {line_number}: expected {{\"entity\": str, \"vector\": [...]}}")
            if key in entries:
                raise VectorStoreError(f"line {line_number}: duplicate key {key!r}")
            vec = np.asarray(vector, dtype=np.float32)
            if dim is None:
                dim = int(vec.shape[0])
            elif vec.shape[0] != dim:
                raise VectorStoreError(f"line {line_number}: dimension {vec.shape[0]} != {dim}")
            entries[key] = vec
    if dim is None:
        raise VectorStoreError("JSONL store contains no vectors")
    return VectorStore(dim=dim, entries=entries, source="file")


def load_vector_store(path) -> VectorStore:
    """Load the binary format, falling back to JSONL when the file starts
    with a JSON object."""
    with open(path, "rb") as handle:
        head = handle.read(4)
        if head == MAGIC:
            handle.seek(0)
            return _load_binary(handle)
    if head.lstrip()[:1] == b"{":
        return _load_jsonl(path)
    raise VectorStoreError(f"bad magic bytes {head!r}, expected {MAGIC!r} (or a JSONL store)")


def fetch_remote(endpoint: str, keys: Sequence[str], batch_size: int = 1000,
                 expected_dim: Optional[int] = None, max_retries: int = 3,
                 backoff_base: float = 0.5, session=None) -> list[EmbeddingVector]:
    """Fetch vectors from the /embed service, order-preserving.

    Requests go out in batches of ``batch_size``; transient network errors
    are retried with bounded exponential backoff.  A dimension different
    from ``expected_dim`` (when given) is an error.
    """
    import requests

    if not keys:
        raise DataError("fetch_remote requires at least one key")
    if batch_size < 1:
        raise DataError("batch_size must be >= 1")
    http = session or requests.Session()
    url = endpoint.rstrip("/") + "/embed"

    vectors: list[EmbeddingVector] = []
    dim = expected_dim
    for start in range(0, len(keys), batch_size):
        batch = list(keys[start:start + batch_size])
        payload = None
        for attempt in range(max_retries + 1):
            try:
                response = http.post(url, json={"texts": batch}, timeout=60)
            except requests.RequestException as exc:
                if attempt == max_retries:
                    raise DataError(f"embedding service unreachable after {max_retries + 1} attempts: {exc}") from exc
                time.sleep(min(backoff_base * 2 ** attempt, 8.0))
                continue
            if response.status_code != 200:
                raise DataError(f"embedding service returned status {response.status_code}: {response.text[:200]}")
            payload = response.json()
            break
        batch_dim = int(payload["dim"])
        if dim is None:
            dim = batch_dim
        elif batch_dim != dim:
            raise DataError(f"embedding service returned dim {batch_dim}, expected {dim}")
        rows = payload["vectors"]
        if len(rows) != len(batch):
            raise DataError(f"embedding service returned {len(rows)} vectors for {len(batch)} texts")
        for key, row in zip(batch, rows):
            vec = np.asarray(row, dtype=np.float32)
            if vec.shape != (dim,):
                raise DataError(f"vector for {key!r} has dim {vec.shape[0]}, expected {dim}")
            vectors.append(EmbeddingVector(key=key, values=vec))
    return vectors


def store_from_vectors(vectors: Iterable[EmbeddingVector], source: str = "remote") -> VectorStore:
    entries: dict[str, np.ndarray] = {}
    dim = None
    for vec in vectors:
        if vec.key in entries:
            raise VectorStoreError(f"duplicate key {vec.key!r}")
        if dim is None:
            dim = vec.dim
        elif vec.dim != dim:
            raise VectorStoreError(f"vector for {vec.key!r} has dim {vec.dim}, store dim is {dim}")
        entries[vec.key] = vec.values
    if dim is None:
        raise VectorStoreError("cannot build a store from zero vectors")
    return VectorStore(dim=dim, entries=entries, source=source)
