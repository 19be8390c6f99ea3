"""Event embeddings: storage, import, and angular similarity.

Embeddings arrive precomputed as line-delimited JSON (``{"id": ..,
"vector": [..]}``) or from a pluggable provider.  Vectors are stored
L2-normalized, so cosine geometry is a plain dot product downstream.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Protocol, Sequence

import numpy as np

from .corpus import Corpus
from .errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    """Unit vectors keyed by submission id, all with one dimensionality."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, sub_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1:
            raise ValidationError(f"inconsistent dimension: vector for {sub_id!r} is not 1-d")
        if vec.shape[0] != self.dim:
            raise ValidationError(
                f"inconsistent dimension: {sub_id!r} has {vec.shape[0]}, table has {self.dim}"
            )
        norm = float(np.linalg.norm(vec))
        if not math.isfinite(norm) or norm <= 0.0:
            raise ValidationError(f"degenerate embedding: {sub_id!r} has zero or non-finite norm")
        # Skip the division for vectors that are already unit length so an
        # export/import cycle reproduces identical bytes.
        self.vectors[sub_id] = vec if abs(norm - 1.0) <= 1e-12 else vec / norm

    def require(self, sub_id: str) -> np.ndarray:
        vec = self.vectors.get(sub_id)
        if vec is None:
            raise ValidationError(f"unembedded event: {sub_id!r}")
        return vec

    def missing(self, ids: Iterable[str]) -> list[str]:
        return [i for i in ids if i not in self.vectors]

    def matrix(self, ids: Sequence[str]) -> np.ndarray:
        """Stacked unit vectors for ``ids``, in the given order."""
        return np.stack([self.require(i) for i in ids])

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for sub_id in sorted(self.vectors):
            digest.update(sub_id.encode())
            digest.update(self.vectors[sub_id].tobytes())
        return digest.hexdigest()[:16]

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(source: IO[str] | IO[bytes] | Iterable[str] | Iterable[bytes]) -> EmbeddingTable:
    """Read an ``{"id", "vector"}`` line-delimited stream into a table.

    Vectors are normalized on entry.  Ids without a corpus match are kept;
    corpus coverage is checked later at pipeline assembly.  A repeated id
    replaces the earlier vector.

    Raises:
        ValidationError: zero/non-finite vector, mixed dimensions, or an
            empty or undecodable stream.
    """
    table: EmbeddingTable | None = None
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"corrupt source: embedding line {lineno} is not JSON ({exc})")
        if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
            raise ValidationError(f"corrupt source: embedding line {lineno} lacks id/vector")
        vec = np.asarray(obj["vector"], dtype=np.float64)
        if table is None:
            if vec.ndim != 1 or vec.shape[0] == 0:
                raise ValidationError(f"inconsistent dimension: line {lineno} has no usable vector")
            table = EmbeddingTable(dim=int(vec.shape[0]))
        table.add(str(obj["id"]), vec)
    if table is None or len(table) == 0:
        raise ValidationError("empty corpus: embedding stream contains no vectors")
    return table


def angular_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Similarity ``1 - arccos(u.v)/pi`` for unit vectors ``u`` and ``v``.

    Ranges over [0, 1]: 1 for identical directions, 0 for antipodal ones.
    The dot product is clamped to [-1, 1] before the arccos so float noise
    near parallel vectors cannot leak outside the domain.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"inconsistent dimension: {u.shape} vs {v.shape}")
    dot = float(np.clip(np.dot(u, v), -1.0, 1.0))
    return 1.0 - math.acos(dot) / math.pi


def angular_similarity_row(u: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Vectorized :func:`angular_similarity` of ``u`` against stacked rows."""
    dots = np.clip(others @ np.asarray(u, dtype=np.float64), -1.0, 1.0)
    return 1.0 - np.arccos(dots) / np.pi


class EmbeddingProvider(Protocol):
    """Anything that turns an ordered list of texts into vectors.

    Implementations must return one vector per input text, in order, all of
    the same dimensionality.  Transport (local model, remote service) is an
    adapter concern and stays out of this package's core.
    """

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashedNgramProvider:
    """Deterministic offline provider: hashed character n-grams.

    Not a semantic model; it exists so ingestion and extraction can run
    end to end without network access, and as the reference implementation
    of the provider contract.  Similar texts share n-grams and thus land
    in similar directions.
    """

    def __init__(self, dim: int = 256, ngram: int = 3):
        if dim < 2 or ngram < 1:
            raise ValidationError(f"invalid provider config: dim={dim} ngram={ngram}")
        self.dim = dim
        self.ngram = ngram

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            vec = np.zeros(self.dim, dtype=np.float64)
            padded = f"\x02{text.casefold()}\x03"
            for i in range(max(1, len(padded) - self.ngram + 1)):
                gram = padded[i : i + self.ngram]
                h = hashlib.blake2b(gram.encode(), digest_size=8).digest()
                idx = int.from_bytes(h[:4], "little") % self.dim
                sign = 1.0 if h[4] & 1 else -1.0
                vec[idx] += sign
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                vec[0] = 1.0
                norm = 1.0
            out.append(vec / norm)
        return out


def embed_corpus(
    corpus: Corpus,
    provider: EmbeddingProvider,
    include_body: bool = True,
) -> EmbeddingTable:
    """Embed every submission of ``corpus`` through ``provider``.

    ``include_body`` controls whether the embedded text is title plus body
    (default) or title only.
    """
    texts = [s.text() if include_body else s.title for s in corpus.submissions]
    vectors = provider.embed(texts)
    if len(vectors) != len(texts):
        raise ValidationError(
            f"corrupt source: provider returned {len(vectors)} vectors for {len(texts)} texts"
        )
    dims = {np.asarray(v).shape for v in vectors}
    if len(dims) != 1:
        raise ValidationError(f"inconsistent dimension: provider mixed shapes {sorted(dims)}")
    table = EmbeddingTable(dim=int(np.asarray(vectors[0]).shape[0]))
    for sub, vec in zip(corpus.submissions, vectors):
        table.add(sub.id, vec)
    return table


def write_embeddings_jsonl(table: EmbeddingTable) -> str:
    """Serialize a table back to the line-delimited import format."""
    lines = []
    for sub_id in sorted(table.vectors):
        vec = [float(x) for x in table.vectors[sub_id]]
        lines.append(json.dumps({"id": sub_id, "vector": vec}))
    return "\n".join(lines) + "\n"
