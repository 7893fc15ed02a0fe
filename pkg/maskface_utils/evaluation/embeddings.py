"""Embedding sets, their binary file format (MFRE) and feature concatenation."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from maskface_utils import fileformat
from maskface_utils.exceptions import DimensionError, FileFormatError, ParameterError, SetError

PathLike = Union[str, Path]

NORM_EPS = 1e-12


@dataclass
class EmbeddingSet:
    """
    Unique keys with one float32 vector each.

    ``errors`` maps keys that could not be embedded to the reason; it is not persisted.
    """

    dim: int
    keys: List[str] = field(default_factory=list)
    vectors: np.ndarray = None
    errors: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"embedding dim must be positive, got {self.dim}")
        if self.vectors is None:
            self.vectors = np.zeros((len(self.keys), self.dim), dtype=np.float32)
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.shape != (len(self.keys), self.dim):
            raise DimensionError(
                f"{len(self.keys)} keys need vectors of shape ({len(self.keys)}, {self.dim}), "
                f"got {self.vectors.shape}"
            )
        if len(set(self.keys)) != len(self.keys):
            raise SetError("duplicate keys in embedding set")
        self._index = {k: i for i, k in enumerate(self.keys)}

    @property
    def count(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def lookup(self, keys: Iterable[str]) -> np.ndarray:
        """Vectors for ``keys`` in order; every key must be present."""
        keys = list(keys)
        missing = {k for k in keys if k not in self._index}
        if missing:
            raise SetError("keys missing from embedding set", missing=missing)
        return self.vectors[[self._index[k] for k in keys]]


def l2_normalize_rows(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return vectors / np.maximum(norms, NORM_EPS)


def save_embeddings(path: PathLike, embeddings: EmbeddingSet) -> None:
    """
    Layout, little-endian: magic "MFRE" | version u32 | dim u32 | count u32, then per record
    key_len u32 | key utf-8 | dim float32.
    """
    with open(path, "wb") as f:
        fileformat.write_header(f, fileformat.EMBEDDINGS_MAGIC, fileformat.EMBEDDINGS_VERSION)
        fileformat.write_u32(f, embeddings.dim)
        fileformat.write_u32(f, embeddings.count)
        for key, vector in zip(embeddings.keys, embeddings.vectors):
            fileformat.write_name(f, key)
            f.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())


def load_embeddings(path: PathLike) -> EmbeddingSet:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"Embedding file not found: {path}")
    keys: List[str] = []
    rows: List[np.ndarray] = []
    with open(path, "rb") as f:
        fileformat.check_header(f, fileformat.EMBEDDINGS_MAGIC, fileformat.EMBEDDINGS_VERSION)
        dim = fileformat.read_u32(f, "dim")
        count = fileformat.read_u32(f, "record count")
        for _ in range(count):
            keys.append(fileformat.read_name(f, "key"))
            raw = fileformat.read_exact(f, dim * fileformat.FLOAT32_SIZE, f"vector of {keys[-1]}")
            rows.append(np.frombuffer(raw, dtype="<f4"))
        if f.read(1):
            raise FileFormatError(f"trailing bytes after {count} records in {path}")
    vectors = np.stack(rows).astype(np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    return EmbeddingSet(dim=dim, keys=keys, vectors=vectors)


def concat_features(a: EmbeddingSet, b: EmbeddingSet, normalize_parts: bool = True) -> EmbeddingSet:
    """
    Join two sets key by key into [a | b] vectors of dim a.dim + b.dim.

    With ``normalize_parts`` each part is L2-normalized first, so the cosine of two joined
    vectors is the mean of the per-set cosines.

    Raises:
        SetError: If the key sets differ, listing the keys found in only one of them
    """
    if set(a.keys) != set(b.keys):
        raise SetError("embedding sets cover different keys", missing=set(a.keys) ^ set(b.keys))
    va = a.vectors
    vb = b.lookup(a.keys)
    if normalize_parts:
        va, vb = l2_normalize_rows(va), l2_normalize_rows(vb)
    joined = np.concatenate([va, vb], axis=1).astype(np.float32)
    return EmbeddingSet(dim=a.dim + b.dim, keys=list(a.keys), vectors=joined)


def verification_scores(embeddings: EmbeddingSet, pairs: Sequence) -> np.ndarray:
    """
    Cosine similarity of every (path_a, path_b) pair.

    Raises:
        SetError: If a pair refers to a key that is not in the set
    """
    missing = {k for p in pairs for k in (p.path_a, p.path_b) if k not in embeddings}
    if missing:
        raise SetError("pair list refers to keys missing from the embedding set", missing=missing)
    if not pairs:
        return np.zeros(0)
    left = embeddings.lookup(p.path_a for p in pairs)
    right = embeddings.lookup(p.path_b for p in pairs)
    scores = (l2_normalize_rows(left) * l2_normalize_rows(right)).sum(axis=1)
    return np.clip(scores, -1.0, 1.0)
