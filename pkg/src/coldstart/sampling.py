"""Contrastive listing-pair extraction from search sessions.

Easy pairs come straight from booked sessions (booked listing vs. a less
engaged one from the same search). Medium pairs restrict the negative to
the positive's category; hard pairs additionally pass an embedding
distance filter.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .corpus import FeatureLimits, Listing, SearchContext, SearchSession, render_feature_block
from .errors import InputError
from .evalharness import Embedder, cosine

DIFFICULTIES = ("easy", "medium", "hard")
_RANK = {d: i for i, d in enumerate(DIFFICULTIES)}


@dataclass(frozen=True)
class ContrastivePair:
    context: SearchContext
    positive: Listing
    negative: Listing
    difficulty: str = "easy"
    embedding_similarity: float | None = None

    def __post_init__(self):
        if self.positive.id == self.negative.id:
            raise InputError("positive and negative must be distinct listings")
        if self.difficulty not in DIFFICULTIES:
            raise InputError(f"unknown difficulty {self.difficulty!r}")
        if self.embedding_similarity is not None and not (
            -1.0 - 1e-9 <= self.embedding_similarity <= 1.0 + 1e-9
        ):
            raise InputError("embedding_similarity outside [-1, 1]")

    @property
    def ref(self) -> str:
        return f"{self.positive.id}:{self.negative.id}"

    def to_dict(self) -> dict:
        return {
            "context": self.context.to_dict(),
            "positive_id": self.positive.id,
            "negative_id": self.negative.id,
            "difficulty": self.difficulty,
            "embedding_similarity": self.embedding_similarity,
        }


def sample_pair(
    session: SearchSession,
    catalog: Mapping[str, Listing],
    rng: random.Random,
) -> ContrastivePair | None:
    """Draw one (booked, less-engaged) pair from a session.

    Returns None (skip) when the session has no booking or no non-booked
    impression with strictly lower engagement than the booked listing.
    """
    booked = session.booked_impression
    if booked is None:
        return None
    eligible = [
        i
        for i in session.impressions
        if not i.booked
        and i.engagement_score < booked.engagement_score
        and i.listing_id in catalog
        and i.listing_id != booked.listing_id
    ]
    if not eligible or booked.listing_id not in catalog:
        return None
    negative = rng.choice(eligible)
    return ContrastivePair(
        context=session.context,
        positive=catalog[booked.listing_id],
        negative=catalog[negative.listing_id],
        difficulty="easy",
    )


def same_category_pairs(pairs: Sequence[ContrastivePair]) -> list[ContrastivePair]:
    """Keep pairs whose listings share a category; mark them medium.

    Difficulty is never downgraded: already-hard pairs stay hard.
    """
    out = []
    for p in pairs:
        if p.positive.category != p.negative.category:
            continue
        if _RANK[p.difficulty] < _RANK["medium"]:
            p = replace(p, difficulty="medium")
        out.append(p)
    return out


def hierarchical_sample(
    pairs: Sequence[ContrastivePair],
    embedder: Embedder,
    tau: float,
    same_category: bool = True,
    limits: FeatureLimits = FeatureLimits(),
) -> list[ContrastivePair]:
    """Embedding-distance filter for hard pairs.

    Retains pairs whose feature-block embeddings are within cosine distance
    ``tau`` (distance = 1 - cosine similarity on unit vectors), optionally
    requiring a shared category. Retained pairs are marked hard and carry
    their measured similarity.
    """
    if not 0.0 < tau <= 2.0:
        raise InputError("tau must be in (0, 2]")
    out = []
    for p in pairs:
        if same_category and p.positive.category != p.negative.category:
            continue
        pos_block = render_feature_block(p.positive, p.context, limits)
        neg_block = render_feature_block(p.negative, p.context, limits)
        sim = cosine(embedder(pos_block.rendered_text), embedder(neg_block.rendered_text))
        if 1.0 - sim <= tau:
            out.append(replace(p, difficulty="hard", embedding_similarity=sim))
    return out
