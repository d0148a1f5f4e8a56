"""Embedded vector index: exact cosine top-k search with payload filtering.

Brute-force scan instead of an ANN service: at desk scale (<= 1e5 chunks)
exact search is fast enough, fully deterministic, and needs no external
process. Vectors are held as 32-bit floats; similarity accumulates in
64-bit. Ties break by ascending point id.

Index file layout (little-endian): magic "VIDX" | u32 version | u32 dim |
u64 count | u64 next_id | 32-byte sha256 of body | body = ids (count x u64)
+ vectors (count x dim x f32) + u64 payload length + payload JSON.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CorruptIndex, DimensionMismatch, VersionMismatch, ZeroVector

MAGIC = b"VIDX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQQ")  # magic, version, dim, count, next_id

FIELD_KINDS = ("description", "vulnerable_code", "patched_code", "commit_message")


@dataclass(frozen=True)
class Payload:
    """Retrieval metadata attached to every stored chunk vector."""

    cve_id: str
    cwe_id: str
    project: str
    language: str
    field_kind: str
    chunk_index: int
    parent_doc_id: str

    def __post_init__(self):
        if self.field_kind not in FIELD_KINDS:
            raise ValueError(f"field_kind must be one of {FIELD_KINDS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "Payload":
        return cls(**raw)


@dataclass(frozen=True)
class SearchHit:
    point_id: int
    score: float
    payload: Payload


def exclude_filter(cve_id: str) -> Callable[[Payload], bool]:
    """Leakage guard: rejects every point belonging to the given CVE."""
    def predicate(payload: Payload) -> bool:
        return payload.cve_id != cve_id
    return predicate


class VectorStore:
    """In-memory store with exact search and binary persistence.

    Reads snapshot the internal arrays; writes take the store lock. There is
    no cross-process locking.
    """

    def __init__(self, dimension: int):
        if dimension <= 0:
            raise ValueError("dimension must be > 0")
        self.dimension = dimension
        self._lock = threading.Lock()
        self._ids: list[int] = []
        self._vectors: list[np.ndarray] = []
        self._payloads: list[Payload] = []
        self._row_of: dict[int, int] = {}
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._ids)

    def _check_dimension(self, vector: np.ndarray) -> np.ndarray:
        arr = np.asarray(vector, dtype=np.float32).ravel()
        if arr.shape != (self.dimension,):
            raise DimensionMismatch(
                f"vector dimension {arr.shape[0]} != store dimension {self.dimension}")
        return arr

    def upsert(self, vector, payload: Payload, point_id: int | None = None) -> int:
        """Insert a point (auto id) or replace an existing id's vector/payload."""
        arr = self._check_dimension(vector)
        with self._lock:
            if point_id is None:
                point_id = self._next_id
            if point_id in self._row_of:
                row = self._row_of[point_id]
                self._vectors[row] = arr
                self._payloads[row] = payload
            else:
                self._row_of[point_id] = len(self._ids)
                self._ids.append(point_id)
                self._vectors.append(arr)
                self._payloads.append(payload)
            self._next_id = max(self._next_id, point_id + 1)
            return point_id

    def get(self, point_id: int) -> tuple[np.ndarray, Payload]:
        row = self._row_of[point_id]
        return self._vectors[row], self._payloads[row]

    def search(self, query, k: int = 1,
               where: Callable[[Payload], bool] | None = None) -> list[SearchHit]:
        """Exact top-k by cosine among points passing the filter.

        Empty store or nothing passing the filter returns an empty list.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64).ravel()
        if q.shape != (self.dimension,):
            raise DimensionMismatch(
                f"query dimension {q.shape[0]} != store dimension {self.dimension}")
        q_norm = float(np.linalg.norm(q))
        if q_norm == 0.0:
            raise ZeroVector("cannot search with a zero query vector")
        with self._lock:
            ids = list(self._ids)
            vectors = list(self._vectors)
            payloads = list(self._payloads)
        if where is not None:
            keep = [i for i, p in enumerate(payloads) if where(p)]
            if not keep:
                return []
            ids = [ids[i] for i in keep]
            vectors = [vectors[i] for i in keep]
            payloads = [payloads[i] for i in keep]
        if not ids:
            return []
        matrix = np.stack(vectors).astype(np.float64)
        norms = np.linalg.norm(matrix, axis=1)
        norms[norms == 0.0] = 1.0  # zero-norm stored vectors score 0, never NaN
        scores = (matrix @ q) / (norms * q_norm)
        order = np.lexsort((np.asarray(ids), -scores))[:k]
        return [SearchHit(point_id=ids[i], score=float(scores[i]), payload=payloads[i])
                for i in order]

    def persist(self, path: str | Path) -> None:
        """Write the index; load() reproduces ids, vectors (bit-exact), payloads."""
        path = Path(path)
        with self._lock:
            count = len(self._ids)
            ids_blob = np.asarray(self._ids, dtype="<u8").tobytes()
            if count:
                vec_blob = np.stack(self._vectors).astype("<f4").tobytes()
            else:
                vec_blob = b""
            payload_json = json.dumps(
                [p.to_dict() for p in self._payloads], ensure_ascii=False
            ).encode("utf-8")
            body = ids_blob + vec_blob + struct.pack("<Q", len(payload_json)) + payload_json
            header = _HEADER.pack(MAGIC, FORMAT_VERSION, self.dimension,
                                  count, self._next_id)
            checksum = hashlib.sha256(body).digest()
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(checksum)
            fh.write(body)

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        path = Path(path)
        blob = path.read_bytes()
        if len(blob) < _HEADER.size + 32:
            raise CorruptIndex(f"{path}: file shorter than index header")
        magic, version, dim, count, next_id = _HEADER.unpack_from(blob, 0)
        if magic != MAGIC:
            raise CorruptIndex(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise VersionMismatch(
                f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
        checksum = blob[_HEADER.size:_HEADER.size + 32]
        body = blob[_HEADER.size + 32:]
        if hashlib.sha256(body).digest() != checksum:
            raise CorruptIndex(f"{path}: checksum mismatch")
        ids_end = count * 8
        vec_end = ids_end + count * dim * 4
        if len(body) < vec_end + 8:
            raise CorruptIndex(f"{path}: body shorter than declared point count")
        ids = np.frombuffer(body, dtype="<u8", count=count).tolist()
        vectors = np.frombuffer(body[ids_end:vec_end], dtype="<f4").reshape(count, dim)
        (payload_len,) = struct.unpack_from("<Q", body, vec_end)
        payload_blob = body[vec_end + 8:vec_end + 8 + payload_len]
        if len(payload_blob) != payload_len:
            raise CorruptIndex(f"{path}: truncated payload table")
        try:
            payload_dicts = json.loads(payload_blob.decode("utf-8"))
            payloads = [Payload.from_dict(d) for d in payload_dicts]
        except (ValueError, TypeError, KeyError) as exc:
            raise CorruptIndex(f"{path}: invalid payload table: {exc}") from exc
        if len(payloads) != count:
            raise CorruptIndex(f"{path}: payload count != point count")
        store = cls(dim)
        store._ids = [int(i) for i in ids]
        store._vectors = [vectors[r].copy() for r in range(count)]
        store._payloads = payloads
        store._row_of = {pid: row for row, pid in enumerate(store._ids)}
        store._next_id = next_id
        return store

    def payload_counts(self, key: str = "field_kind") -> dict[str, int]:
        """Histogram of a payload attribute; used by index-info and ingest."""
        counts: dict[str, int] = {}
        for p in self._payloads:
            value = getattr(p, key)
            counts[value] = counts.get(value, 0) + 1
        return counts
