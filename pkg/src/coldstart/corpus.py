"""Catalog, session, and seed-query ingestion plus the deterministic fixture.

Everything here is plain data plumbing: line-delimited JSON in, validated
dataclasses out. The fixture generator stands in for proprietary search
logs so the whole pipeline can run (and be tested byte-for-byte) offline.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from . import lexicon
from .errors import InputError, LineParseError, RecordValidationError

log = logging.getLogger(__name__)

SEED_SOURCES = ("survey", "real_traffic", "related_product")


@dataclass(frozen=True)
class Listing:
    """One catalog entity; the factual grounding for generated queries."""

    id: str
    title: str
    description: str
    amenities: tuple[str, ...]
    review_summary: str
    rating: float
    review_count: int
    bedrooms: int
    bathrooms: float
    property_type: str
    location_attributes: tuple[str, ...]
    price_per_night: float
    category: str

    def __post_init__(self):
        if not self.id:
            raise RecordValidationError("listing id must be non-empty")
        if not 0 <= self.rating <= 5:
            raise RecordValidationError(
                f"listing {self.id}: rating {self.rating} outside [0, 5]"
            )
        if self.review_count < 0 or self.bedrooms < 0 or self.bathrooms < 0:
            raise RecordValidationError(f"listing {self.id}: negative count field")
        if self.price_per_night <= 0:
            raise RecordValidationError(f"listing {self.id}: non-positive price")
        normalized = _dedupe([a.lower().strip() for a in self.amenities])
        object.__setattr__(self, "amenities", tuple(normalized))
        object.__setattr__(
            self, "location_attributes", tuple(self.location_attributes)
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "amenities": list(self.amenities),
            "review_summary": self.review_summary,
            "rating": self.rating,
            "review_count": self.review_count,
            "bedrooms": self.bedrooms,
            "bathrooms": self.bathrooms,
            "property_type": self.property_type,
            "location_attributes": list(self.location_attributes),
            "price_per_night": self.price_per_night,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Listing":
        try:
            return cls(
                id=d["id"],
                title=d["title"],
                description=d["description"],
                amenities=tuple(d["amenities"]),
                review_summary=d["review_summary"],
                rating=float(d["rating"]),
                review_count=int(d["review_count"]),
                bedrooms=int(d["bedrooms"]),
                bathrooms=float(d["bathrooms"]),
                property_type=d["property_type"],
                location_attributes=tuple(d["location_attributes"]),
                price_per_night=float(d["price_per_night"]),
                category=d["category"],
            )
        except KeyError as e:
            raise RecordValidationError(f"listing record missing field {e}") from e


@dataclass(frozen=True)
class SearchContext:
    """City-level search context shared by every impression in a session."""

    location: str
    checkin: dt.date
    checkout: dt.date
    adults: int
    children: int
    pets: int

    def __post_init__(self):
        if self.checkout <= self.checkin:
            raise RecordValidationError(
                f"checkout {self.checkout} not after checkin {self.checkin}"
            )
        if self.adults < 1:
            raise RecordValidationError("adults must be >= 1")
        if self.children < 0 or self.pets < 0:
            raise RecordValidationError("children/pets must be >= 0")

    def to_dict(self) -> dict:
        return {
            "location": self.location,
            "checkin": self.checkin.isoformat(),
            "checkout": self.checkout.isoformat(),
            "adults": self.adults,
            "children": self.children,
            "pets": self.pets,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchContext":
        return cls(
            location=d["location"],
            checkin=dt.date.fromisoformat(d["checkin"]),
            checkout=dt.date.fromisoformat(d["checkout"]),
            adults=int(d["adults"]),
            children=int(d["children"]),
            pets=int(d["pets"]),
        )


@dataclass(frozen=True)
class Impression:
    listing_id: str
    engagement_score: float
    booked: bool

    def to_dict(self) -> dict:
        return {
            "listing_id": self.listing_id,
            "engagement_score": self.engagement_score,
            "booked": self.booked,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Impression":
        return cls(d["listing_id"], float(d["engagement_score"]), bool(d["booked"]))


@dataclass(frozen=True)
class SearchSession:
    """One search with its ordered impressions and at most one booking."""

    session_id: str
    context: SearchContext
    impressions: tuple[Impression, ...]

    def __post_init__(self):
        booked = [i for i in self.impressions if i.booked]
        if len(booked) > 1:
            raise RecordValidationError(
                f"session {self.session_id}: more than one booked impression"
            )
        if any(i.engagement_score < 0 for i in self.impressions):
            raise RecordValidationError(
                f"session {self.session_id}: negative engagement score"
            )
        # Fixture guarantee, not a hard invariant of real logs: warn, don't fail.
        if booked:
            top = booked[0].engagement_score
            if any(not i.booked and i.engagement_score > top for i in self.impressions):
                log.warning(
                    "session %s: booked listing is not the most engaged",
                    self.session_id,
                )

    @property
    def booked_impression(self) -> Impression | None:
        for i in self.impressions:
            if i.booked:
                return i
        return None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "context": self.context.to_dict(),
            "impressions": [i.to_dict() for i in self.impressions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSession":
        return cls(
            session_id=d["session_id"],
            context=SearchContext.from_dict(d["context"]),
            impressions=tuple(Impression.from_dict(i) for i in d["impressions"]),
        )


@dataclass(frozen=True)
class SeedQuery:
    """An authentic example query used as a linguistic template."""

    text: str
    source: str = "survey"
    attributes_hint: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise RecordValidationError("seed query text must be non-empty")
        if self.source not in SEED_SOURCES:
            raise RecordValidationError(f"unknown seed source: {self.source!r}")

    def to_dict(self) -> dict:
        d: dict = {"text": self.text, "source": self.source}
        if self.attributes_hint is not None:
            d["attributes_hint"] = list(self.attributes_hint)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SeedQuery":
        hint = d.get("attributes_hint")
        return cls(
            text=d["text"],
            source=d.get("source", "survey"),
            attributes_hint=tuple(hint) if hint is not None else None,
        )


@dataclass(frozen=True)
class FeatureBlock:
    """Prompt-ready rendering of one listing under one search context."""

    listing_id: str
    rendered_text: str
    truncation_applied: bool


@dataclass(frozen=True)
class FeatureLimits:
    """Caps applied when rendering feature blocks (token-cost control)."""

    description_chars: int = 600
    amenity_top_k: int = 5


# ---------------------------------------------------------------------------
# JSONL I/O


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, record) pairs; blank lines are skipped."""
    p = Path(path)
    with p.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise LineParseError(str(p), line_no, str(e)) from e
            if not isinstance(obj, dict):
                raise LineParseError(str(p), line_no, "expected a JSON object")
            yield line_no, obj


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            f.write("\n")


def load_catalog(path: str | Path) -> list[Listing]:
    """Load listings.jsonl; rejects duplicate ids and malformed lines."""
    listings: list[Listing] = []
    seen: set[str] = set()
    for line_no, rec in read_jsonl(path):
        listing = Listing.from_dict(rec)
        if listing.id in seen:
            raise RecordValidationError(
                f"{path}:{line_no}: duplicate listing id {listing.id!r}"
            )
        seen.add(listing.id)
        listings.append(listing)
    return listings


def load_sessions(path: str | Path) -> list[SearchSession]:
    return [SearchSession.from_dict(rec) for _, rec in read_jsonl(path)]


def load_seed_queries(path: str | Path) -> list[SeedQuery]:
    return [SeedQuery.from_dict(rec) for _, rec in read_jsonl(path)]


def load_real_queries(path: str | Path) -> list[str]:
    return [rec["text"] for _, rec in read_jsonl(path)]


def save_catalog(path: str | Path, listings: Iterable[Listing]) -> None:
    write_jsonl(path, (l.to_dict() for l in listings))


def save_sessions(path: str | Path, sessions: Iterable[SearchSession]) -> None:
    write_jsonl(path, (s.to_dict() for s in sessions))


def save_seed_queries(path: str | Path, seeds: Iterable[SeedQuery]) -> None:
    write_jsonl(path, (s.to_dict() for s in seeds))


def save_real_queries(path: str | Path, queries: Iterable[str]) -> None:
    write_jsonl(path, ({"text": q} for q in queries))


# ---------------------------------------------------------------------------
# Fixture generation

N_FIXTURE_SEED_QUERIES = 100


def generate_fixture(
    seed: int, n_listings: int, n_sessions: int
) -> tuple[list[Listing], list[SearchSession], list[SeedQuery]]:
    """Deterministic synthetic corpus: catalog, sessions, and seed queries.

    Pure function of (seed, n_listings, n_sessions). Sessions only
    reference generated listings, at least 80% contain a booking, and all
    surface vocabulary comes from the built-in lexicon.
    """
    if n_listings < 2:
        raise InputError("n_listings must be >= 2")
    if n_sessions < 1:
        raise InputError("n_sessions must be >= 1")

    rng = random.Random(f"coldstart-fixture:{seed}")
    listings = [_make_listing(i, rng) for i in range(n_listings)]
    sessions = [_make_session(i, listings, rng) for i in range(n_sessions)]
    seeds = [_make_seed_query(rng) for _ in range(N_FIXTURE_SEED_QUERIES)]
    return listings, sessions, seeds


def generate_real_queries(seed: int, n: int = 200) -> list[str]:
    """Terse real-traffic stand-in: short, right-skewed query lengths."""
    rng = random.Random(f"coldstart-real:{seed}")
    out = []
    for _ in range(n):
        tmpl = rng.choice(lexicon.REAL_QUERY_TEMPLATES)
        out.append(_fill_template(tmpl, rng))
    return out


def _dedupe(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for it in items:
        if it and it not in seen:
            seen.add(it)
            out.append(it)
    return out


def _fill_template(tmpl: str, rng: random.Random) -> str:
    amns = rng.sample(lexicon.AMENITIES, 3)
    return tmpl.format(
        v=rng.choice(lexicon.VIBES),
        p=rng.choice(lexicon.PROPERTY_TYPES),
        a1=amns[0],
        a2=amns[1],
        a3=amns[2],
        loc=rng.choice(lexicon.LOCATION_PHRASES),
        occ=rng.choice(lexicon.OCCASIONS),
    )


def _make_listing(index: int, rng: random.Random) -> Listing:
    ptype = rng.choice(lexicon.PROPERTY_TYPES)
    vibe = rng.choice(lexicon.VIBES)
    n_amenities = rng.randint(5, 12)
    amenities = rng.sample(lexicon.AMENITIES, n_amenities)
    locations = rng.sample(lexicon.LOCATION_PHRASES, rng.randint(1, 3))
    occ = rng.choice(lexicon.OCCASIONS)

    desc_tmpl = rng.choice(lexicon.DESCRIPTION_TEMPLATES)
    description = desc_tmpl.format(
        v=vibe,
        p=ptype,
        a1=amenities[0],
        a2=amenities[1],
        a3=amenities[2],
        loc=locations[0],
        occ=occ,
    )
    review_tmpl = rng.choice(lexicon.REVIEW_SNIPPETS)
    review = review_tmpl.format(
        a=amenities[0], a2=amenities[1], v=rng.choice(lexicon.VIBES)
    )
    title = f"{vibe.capitalize()} {ptype} {locations[0]}"

    return Listing(
        id=f"L{index:05d}",
        title=title,
        description=description,
        amenities=tuple(amenities),
        review_summary=review,
        rating=round(rng.uniform(3.2, 5.0), 1),
        review_count=rng.randint(0, 480),
        bedrooms=rng.randint(0, 6),
        bathrooms=rng.choice((1.0, 1.0, 1.5, 2.0, 2.5, 3.0)),
        property_type=ptype,
        location_attributes=tuple(locations),
        price_per_night=float(rng.randint(40, 900)),
        category=ptype,
    )


def _make_session(
    index: int, listings: list[Listing], rng: random.Random
) -> SearchSession:
    checkin = dt.date(2026, 1, 5) + dt.timedelta(days=rng.randint(0, 300))
    checkout = checkin + dt.timedelta(days=rng.randint(2, 10))
    context = SearchContext(
        location=rng.choice(lexicon.CITIES),
        checkin=checkin,
        checkout=checkout,
        adults=rng.randint(1, 6),
        children=rng.randint(0, 3) if rng.random() < 0.4 else 0,
        pets=rng.randint(1, 2) if rng.random() < 0.25 else 0,
    )

    # Real result pages cluster similar inventory: bias impressions toward a
    # session category so same-category (medium/hard) pairs exist downstream.
    session_category = rng.choice(lexicon.PROPERTY_TYPES)
    same_cat = [l for l in listings if l.category == session_category]
    k = min(rng.randint(5, 15), len(listings))
    chosen: list[Listing] = []
    seen_ids: set[str] = set()
    for _ in range(k):
        pool = same_cat if (same_cat and rng.random() < 0.6) else listings
        cand = rng.choice(pool)
        if cand.id not in seen_ids:
            seen_ids.add(cand.id)
            chosen.append(cand)

    impressions = [
        Impression(l.id, round(rng.uniform(0.0, 10.0), 3), False) for l in chosen
    ]
    if impressions and rng.random() < 0.9:
        booked_idx = rng.randrange(len(impressions))
        top = max(i.engagement_score for i in impressions)
        impressions[booked_idx] = Impression(
            impressions[booked_idx].listing_id,
            round(top + rng.uniform(0.5, 2.0), 3),
            True,
        )
    return SearchSession(
        session_id=f"S{index:06d}", context=context, impressions=tuple(impressions)
    )


def _make_seed_query(rng: random.Random) -> SeedQuery:
    tmpl = rng.choice(lexicon.SEED_QUERY_TEMPLATES)
    text = _fill_template(tmpl, rng)
    return SeedQuery(text=text, source="survey")


# ---------------------------------------------------------------------------
# Feature-block rendering


def render_feature_block(
    listing: Listing, context: SearchContext, limits: FeatureLimits = FeatureLimits()
) -> FeatureBlock:
    """Render a listing into the fixed prompt layout.

    Field order is fixed (context, title, description, amenities, reviews,
    property characteristics, location, price) so prompts are snapshot
    stable. Values are emitted verbatim; only the field labels are added.
    """
    truncated = False

    description = listing.description or "n/a"
    if len(description) > limits.description_chars:
        description = description[: limits.description_chars]
        truncated = True

    amenities = list(listing.amenities)
    if len(amenities) > limits.amenity_top_k:
        amenities = amenities[: limits.amenity_top_k]
        truncated = True
    amenities_text = ", ".join(amenities) if amenities else "n/a"

    locations_text = (
        ", ".join(listing.location_attributes)
        if listing.location_attributes
        else "n/a"
    )
    review = listing.review_summary or "n/a"

    lines = [
        (
            f"Search context: {context.location} | "
            f"{context.checkin.isoformat()} to {context.checkout.isoformat()} | "
            f"adults={context.adults} children={context.children} pets={context.pets}"
        ),
        f"Title: {listing.title or 'n/a'}",
        f"Description: {description}",
        f"Amenities: {amenities_text}",
        f"Reviews: {review} | rating {listing.rating} ({listing.review_count} reviews)",
        (
            f"Property: {listing.property_type or 'n/a'} | "
            f"bedrooms {listing.bedrooms} | bathrooms {listing.bathrooms}"
        ),
        f"Location: {locations_text}",
        f"Price per night: {listing.price_per_night}",
    ]
    return FeatureBlock(
        listing_id=listing.id,
        rendered_text="\n".join(lines),
        truncation_applied=truncated,
    )
