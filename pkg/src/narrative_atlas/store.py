"""Content-addressed on-disk store for corpora, embeddings, and maps.

A corpus id is a hash of its canonicalized records (sorted, key-ordered
JSON), so re-ingesting the same content -- in any line order -- yields
the same id.  Embeddings attach to a corpus id; extracted maps are cached
by a hash of corpus id plus configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import IO, Iterable

from .corpus import Corpus, load_submissions
from .embedding import EmbeddingTable, load_embeddings
from .errors import NotFoundError, ValidationError

ENV_STORE = "NARRATIVE_ATLAS_STORE"
DEFAULT_STORE = ".narrative-atlas-store"


def resolve_store_path(explicit: str | os.PathLike | None = None) -> Path:
    """Store root: explicit argument, else $NARRATIVE_ATLAS_STORE, else cwd."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_STORE)
    if env:
        return Path(env)
    return Path(DEFAULT_STORE)


def _canonical_corpus_lines(corpora: dict[str, Corpus]) -> list[str]:
    records = []
    for community in sorted(corpora):
        for sub in corpora[community].submissions:
            records.append(
                {
                    "id": sub.id,
                    "subreddit": sub.community,
                    "title": sub.title,
                    "selftext": sub.body,
                    "created_utc": sub.created_at,
                    "score": sub.score,
                    "upvote_ratio": sub.upvote_ratio,
                }
            )
    records.sort(key=lambda r: (r["subreddit"], r["id"]))
    return [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]


class CorpusStore:
    """Filesystem layout: ``corpora/``, ``embeddings/``, ``maps/``."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        for sub in ("corpora", "embeddings", "maps"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- corpora ------------------------------------------------------------

    def ingest(self, source: IO[str] | IO[bytes] | Iterable[str]) -> tuple[str, dict[str, int]]:
        """Validate, canonicalize, and store a submission dump.

        Returns the content-derived corpus id and per-community counts.
        Ingesting identical content again returns the same id.
        """
        corpora = load_submissions(source)
        lines = _canonical_corpus_lines(corpora)
        blob = ("\n".join(lines) + "\n").encode()
        corpus_id = hashlib.sha256(blob).hexdigest()[:16]
        (self.root / "corpora" / f"{corpus_id}.jsonl").write_bytes(blob)
        counts = {community: len(c) for community, c in corpora.items()}
        meta = {"id": corpus_id, "communities": counts}
        (self.root / "corpora" / f"{corpus_id}.meta.json").write_text(
            json.dumps(meta, sort_keys=True) + "\n"
        )
        return corpus_id, counts

    def list_corpora(self) -> list[dict]:
        out = []
        for meta_path in sorted((self.root / "corpora").glob("*.meta.json")):
            meta = json.loads(meta_path.read_text())
            communities = [
                {"community": name, "count": count}
                for name, count in sorted(
                    meta["communities"].items(), key=lambda kv: (-kv[1], kv[0])
                )
            ]
            out.append(
                {
                    "id": meta["id"],
                    "communities": communities,
                    "has_embeddings": (self.root / "embeddings" / f"{meta['id']}.jsonl").exists(),
                }
            )
        return out

    def load_corpora(self, corpus_id: str) -> dict[str, Corpus]:
        path = self.root / "corpora" / f"{corpus_id}.jsonl"
        if not path.exists():
            raise NotFoundError(f"unknown corpus: {corpus_id!r}")
        with path.open() as fh:
            return load_submissions(fh)

    # -- embeddings ---------------------------------------------------------

    def attach_embeddings(self, corpus_id: str, source: IO[str] | IO[bytes] | Iterable[str]) -> str:
        """Validate and store an embedding stream for ``corpus_id``."""
        if not (self.root / "corpora" / f"{corpus_id}.jsonl").exists():
            raise NotFoundError(f"unknown corpus: {corpus_id!r}")
        table = load_embeddings(source)
        from .embedding import write_embeddings_jsonl

        blob = write_embeddings_jsonl(table).encode()
        (self.root / "embeddings" / f"{corpus_id}.jsonl").write_bytes(blob)
        return table.content_hash()

    def load_embeddings_for(self, corpus_id: str) -> EmbeddingTable:
        path = self.root / "embeddings" / f"{corpus_id}.jsonl"
        if not path.exists():
            raise NotFoundError(
                f"unknown corpus: no embeddings imported for {corpus_id!r}"
            )
        with path.open() as fh:
            return load_embeddings(fh)

    # -- maps ---------------------------------------------------------------

    def map_id_for(self, corpus_id: str, config_fingerprint: str) -> str:
        return hashlib.sha256(f"{corpus_id}:{config_fingerprint}".encode()).hexdigest()[:16]

    def save_map(self, map_id: str, payload: dict) -> None:
        path = self.root / "maps" / f"{map_id}.json"
        path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")

    def load_map(self, map_id: str) -> dict:
        path = self.root / "maps" / f"{map_id}.json"
        if not path.exists():
            raise NotFoundError(f"unknown map: {map_id!r}")
        return json.loads(path.read_text())

    def require_corpus_file(self, corpus_id: str) -> Path:
        path = self.root / "corpora" / f"{corpus_id}.jsonl"
        if not path.exists():
            raise NotFoundError(f"unknown corpus: {corpus_id!r}")
        return path
