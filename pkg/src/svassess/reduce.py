"""Latent semantic projection via randomized truncated SVD, plus
token-embedding tables with mean pooling for document vectors."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .features import SparseVector, vectors_to_csr

POWER_ITERATIONS = 10
OVERSAMPLE = 8


@dataclass
class LsaModel:
    components: np.ndarray  # width x k, orthonormal columns
    singular_values: np.ndarray  # length k, non-increasing
    k: int

    @property
    def width(self) -> int:
        return self.components.shape[0]


def _as_matrix(data) -> sparse.csr_matrix:
    if isinstance(data, list):
        return vectors_to_csr(data)
    if sparse.issparse(data):
        return data.tocsr()
    return sparse.csr_matrix(np.asarray(data, dtype=float))


def lsa_fit(data, k: int, seed: int = 0) -> LsaModel:
    """Randomized range-finder SVD keeping the top-k right singular basis.

    Subspace iteration with QR re-orthonormalization keeps the power
    steps numerically stable; the small projected matrix is then solved
    densely.  Deterministic for a fixed seed.
    """
    mat = _as_matrix(data)
    n_rows, width = mat.shape
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > min(n_rows, width):
        raise ValueError(
            f"k={k} exceeds min(rows, width)={min(n_rows, width)}"
        )
    rng = np.random.default_rng(seed)
    p = min(k + OVERSAMPLE, min(n_rows, width))
    omega = rng.standard_normal((width, p))
    y = mat @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(POWER_ITERATIONS):
        z = mat.T @ q
        qz, _ = np.linalg.qr(z)
        y = mat @ qz
        q, _ = np.linalg.qr(y)
    b = q.T @ mat
    b = np.asarray(b.todense()) if sparse.issparse(b) else np.asarray(b)
    _, s, vt = np.linalg.svd(b, full_matrices=False)
    return LsaModel(
        components=np.ascontiguousarray(vt[:k].T),
        singular_values=np.ascontiguousarray(s[:k]),
        k=k,
    )


def lsa_transform(model: LsaModel, vector: SparseVector) -> np.ndarray:
    """Project one sparse document vector onto the latent basis."""
    if vector.width != model.width:
        raise ValueError(
            f"vector width {vector.width} does not match model width {model.width}"
        )
    out = np.zeros(model.k)
    for i, v in zip(vector.indices, vector.values):
        out += v * model.components[i]
    return out


def lsa_transform_many(model: LsaModel, vectors: list[SparseVector]) -> np.ndarray:
    mat = vectors_to_csr(vectors)
    if mat.shape[1] != model.width:
        raise ValueError(
            f"matrix width {mat.shape[1]} does not match model width {model.width}"
        )
    return np.asarray(mat @ model.components)


@dataclass
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    dim: int

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embedding_table(path) -> EmbeddingTable:
    """Read 'token v1 ... vL' lines; all rows must share one dimension."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected a token followed by values")
        token = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric embedding value") from exc
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ValueError(
                f"line {lineno}: dimension {vec.shape[0]} differs from {dim}"
            )
        vectors[token] = vec
    if dim is None:
        raise ValueError("embedding file holds no vectors")
    return EmbeddingTable(vectors=vectors, dim=dim)


def save_embedding_table(table: EmbeddingTable, path) -> None:
    lines = []
    for token in sorted(table.vectors):
        values = " ".join(repr(float(v)) for v in table.vectors[token])
        lines.append(f"{token} {values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def average_embedding(table: EmbeddingTable, tokens: list[str]) -> np.ndarray:
    """Mean of the tokens' embedding vectors; unknown tokens are skipped.

    A document with no known tokens maps to the zero vector.
    """
    hits = [table.vectors[t] for t in tokens if t in table.vectors]
    if not hits:
        return np.zeros(table.dim)
    return np.mean(hits, axis=0)
