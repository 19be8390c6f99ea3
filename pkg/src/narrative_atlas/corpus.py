"""Corpus loading, filtering, and community score percentiles.

Input is the line-delimited JSON dump format used by the common Reddit
archive exports: one submission object per line with ``id``, ``subreddit``,
``title``, ``selftext``, ``created_utc``, ``score``, and ``upvote_ratio``
fields.  Records are grouped per community; every derived corpus keeps its
submissions in deterministic ``(created_at, id)`` order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable

from scipy.stats import rankdata

from .errors import ValidationError

logger = logging.getLogger(__name__)

# Fraction of undecodable lines above which the source is rejected outright.
MAX_MALFORMED_FRACTION = 0.5


@dataclass(frozen=True)
class Submission:
    """One community post with its score signals."""

    id: str
    community: str
    title: str
    body: str
    created_at: int
    score: int
    upvote_ratio: float

    def text(self) -> str:
        """Title and body joined for keyword matching and embedding."""
        if self.body:
            return f"{self.title}\n{self.body}"
        return self.title


@dataclass
class Corpus:
    """Submissions of one community plus their score percentiles.

    ``total_order[id]`` is the submission's index in ``submissions``, which
    is sorted by ``(created_at, id)``.  ``score_percentile[id]`` is the
    Hazen percentile of the submission's score within this corpus.
    """

    community: str
    submissions: tuple[Submission, ...]
    score_percentile: dict[str, float] = field(default_factory=dict)
    total_order: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_submissions(cls, community: str, subs: Iterable[Submission]) -> "Corpus":
        ordered = sorted(subs, key=lambda s: (s.created_at, s.id))
        seen: set[str] = set()
        for s in ordered:
            if s.id in seen:
                raise ValidationError(f"duplicate id: {s.id!r} in community {community!r}")
            seen.add(s.id)
        if not ordered:
            raise ValidationError(f"empty corpus: community {community!r} has no submissions")
        percentiles = score_percentiles([s.score for s in ordered])
        return cls(
            community=community,
            submissions=tuple(ordered),
            score_percentile={s.id: p for s, p in zip(ordered, percentiles)},
            total_order={s.id: i for i, s in enumerate(ordered)},
        )

    def __len__(self) -> int:
        return len(self.submissions)

    def ids(self) -> list[str]:
        return [s.id for s in self.submissions]

    def get(self, sub_id: str) -> Submission:
        idx = self.total_order.get(sub_id)
        if idx is None:
            raise ValidationError(f"unknown submission id: {sub_id!r}")
        return self.submissions[idx]


def score_percentiles(scores: list[int] | list[float]) -> list[float]:
    """Hazen percentiles of ``scores``, ties resolved by mean rank.

    Each value maps to ``(mean_rank - 0.5) / n``, so results lie strictly
    inside (0, 1) and a single score maps to 0.5.

    Args:
        scores: raw community scores; may be negative.

    Returns:
        Percentile per input position, same length and order as ``scores``.
    """
    if len(scores) == 0:
        raise ValidationError("empty corpus: cannot rank zero scores")
    ranks = rankdata(scores, method="average")
    n = len(scores)
    return [float((r - 0.5) / n) for r in ranks]


# Archive dump field names -> Submission fields.
_EXTERNAL_FIELDS = {
    "id": "id",
    "subreddit": "community",
    "title": "title",
    "selftext": "body",
    "created_utc": "created_at",
    "score": "score",
    "upvote_ratio": "upvote_ratio",
}


def _parse_record(obj: dict) -> Submission:
    """Convert one decoded dump record into a Submission.

    Raises ValueError on any shape problem; the caller counts those as
    malformed lines rather than failing the whole load.
    """
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    missing = [k for k in _EXTERNAL_FIELDS if k not in obj]
    if missing:
        raise ValueError(f"missing fields: {missing}")
    sub_id = obj["id"]
    community = obj["subreddit"]
    title = obj["title"]
    body = obj["selftext"]
    if not isinstance(sub_id, str) or not sub_id:
        raise ValueError("id must be a non-empty string")
    if not isinstance(community, str) or not community:
        raise ValueError("subreddit must be a non-empty string")
    if not isinstance(title, str) or not title.strip():
        raise ValueError("title must be a non-empty string")
    if body is None:
        body = ""
    if not isinstance(body, str):
        raise ValueError("selftext must be a string")
    created = obj["created_utc"]
    if isinstance(created, bool) or not isinstance(created, (int, float)) or created != int(created):
        raise ValueError("created_utc must be an integer timestamp")
    score = obj["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)) or score != int(score):
        raise ValueError("score must be an integer")
    ratio = obj["upvote_ratio"]
    if isinstance(ratio, bool) or not isinstance(ratio, (int, float)) or not 0.0 <= ratio <= 1.0:
        raise ValueError("upvote_ratio must lie in [0, 1]")
    return Submission(
        id=sub_id,
        community=community,
        title=title,
        body=body,
        created_at=int(created),
        score=int(score),
        upvote_ratio=float(ratio),
    )


def load_submissions(source: IO[str] | IO[bytes] | Iterable[str] | Iterable[bytes]) -> dict[str, Corpus]:
    """Load a line-delimited submission dump grouped per community.

    Unknown fields are ignored.  Malformed lines are skipped with a logged
    warning; if they exceed half of all non-blank lines the whole source is
    rejected as corrupt.

    Args:
        source: file object or iterable yielding one JSON record per line.

    Returns:
        Mapping community name -> Corpus, percentiles computed per community.

    Raises:
        ValidationError: on an empty or corrupt source, or a duplicate
            submission id within one community.
    """
    by_community: dict[str, list[Submission]] = {}
    total = 0
    malformed = 0
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        line = raw.strip()
        if not line:
            continue
        total += 1
        try:
            record = _parse_record(json.loads(line))
        except (ValueError, json.JSONDecodeError) as exc:
            malformed += 1
            logger.warning("skipping malformed line %d: %s", lineno, exc)
            continue
        by_community.setdefault(record.community, []).append(record)

    if total > 0 and malformed / total > MAX_MALFORMED_FRACTION:
        raise ValidationError(
            f"corrupt source: {malformed} of {total} lines malformed"
        )
    if not by_community:
        raise ValidationError("empty corpus: source contains no valid submissions")
    return {
        community: Corpus.from_submissions(community, subs)
        for community, subs in sorted(by_community.items())
    }


def filter_corpus(
    corpus: Corpus,
    keyword: str | None = None,
    window: tuple[int, int] | None = None,
) -> Corpus:
    """Restrict a corpus to a keyword and an inclusive time window.

    The keyword is matched case-insensitively as a substring of title plus
    body; an empty or absent keyword keeps every submission.  Percentiles
    are recomputed on the filtered slice, so they reflect standing within
    the extraction corpus rather than the full dump.

    Raises:
        ValidationError: when nothing survives the filter.
    """
    needle = (keyword or "").casefold()
    kept = []
    for sub in corpus.submissions:
        if needle and needle not in sub.text().casefold():
            continue
        if window is not None and not (window[0] <= sub.created_at <= window[1]):
            continue
        kept.append(sub)
    if not kept:
        raise ValidationError(
            f"empty filtered corpus: keyword={keyword!r} window={window!r} "
            f"matched no submissions in {corpus.community!r}"
        )
    return Corpus.from_submissions(corpus.community, kept)
