"""Embedding matrix file I/O (EMB1 format), cosine distance, and a
deterministic hash-based embedding provider for tests and demos."""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"EMB1"
HEADER_SIZE = 12  # magic + uint32 n + uint32 d


class EmbeddingError(ValueError):
    pass


def write_embeddings(m: np.ndarray, path: str | Path) -> None:
    """Write an n x d float32 matrix: 4 magic bytes "EMB1", little-endian
    uint32 n and d, then n*d little-endian float32 values row-major."""
    m = np.asarray(m, dtype="<f4")
    if m.ndim != 2:
        raise EmbeddingError(f"expected 2-D matrix, got shape {m.shape}")
    if m.size and not np.isfinite(m).all():
        raise EmbeddingError("refusing to write non-finite values")
    n, d = m.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, d))
        fh.write(np.ascontiguousarray(m).tobytes())


def read_embeddings(path: str | Path) -> np.ndarray:
    """Read an EMB1 file; validates magic, declared size, and finiteness."""
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE or data[:4] != MAGIC:
        raise EmbeddingError(f"{path}: not an EMB1 file (bad magic)")
    n, d = struct.unpack("<II", data[4:HEADER_SIZE])
    expected = HEADER_SIZE + 4 * n * d
    if len(data) != expected:
        raise EmbeddingError(
            f"{path}: truncated or oversized: header declares {n}x{d} "
            f"({expected} bytes), file has {len(data)}"
        )
    m = np.frombuffer(data[HEADER_SIZE:], dtype="<f4").reshape(n, d)
    if m.size and not np.isfinite(m).all():
        raise EmbeddingError(f"{path}: non-finite values in payload")
    return m


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v). Zero vs zero is 0; zero vs nonzero is 1."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 and nv == 0.0:
        return 0.0
    if nu == 0.0 or nv == 0.0:
        return 1.0
    return float(1.0 - np.dot(u, v) / (nu * nv))


def pairwise_cosine_distances(m: np.ndarray) -> np.ndarray:
    """Dense all-pairs cosine distance matrix; zero rows treated per
    cosine_distance conventions."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = m / safe[:, None]
    sim = unit @ unit.T
    dist = 1.0 - sim
    zero = norms == 0.0
    if zero.any():
        dist[zero, :] = 1.0
        dist[:, zero] = 1.0
        dist[np.ix_(zero, zero)] = 0.0
    np.fill_diagonal(dist, 0.0)
    return np.clip(dist, 0.0, 2.0)


def _hash_token(token: str, seed: int) -> tuple[int, int]:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, salt=str(seed).encode()[:16]
    ).digest()
    value = int.from_bytes(digest, "little")
    return value >> 1, value & 1


def hash_embedding_provider(texts: Sequence[str], d: int, seed: int = 0) -> np.ndarray:
    """Feature-hash each text's whitespace tokens into d signed buckets and
    scale rows to unit norm. Fully determined by (texts, d, seed); empty or
    fully-cancelling texts fall back to the basis vector e_0."""
    if d < 2:
        raise EmbeddingError("dimension must be >= 2")
    out = np.zeros((len(texts), d), dtype=np.float32)
    for i, text in enumerate(texts):
        for token in text.split():
            bucket, sign_bit = _hash_token(token, seed)
            out[i, bucket % d] += 1.0 if sign_bit else -1.0
        norm = np.linalg.norm(out[i])
        if norm == 0.0:
            out[i, 0] = 1.0
        else:
            out[i] /= norm
    return out
