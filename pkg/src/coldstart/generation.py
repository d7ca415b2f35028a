"""Triplet generation: prompt -> backend -> parse -> validate -> accept.

Validation is a gate, not advisory: a triplet is only returned once its
query passes every consistency check. Failed generations are retried with
a repair suffix naming the violated rule, then rejected as a value.
"""

from __future__ import annotations

import dataclasses
import hashlib
import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import lexicon
from .analysis import normalize_tokens, word_count
from .corpus import FeatureLimits, Listing, SearchContext, render_feature_block
from .errors import InputError, OutputParseError
from .llmio import CompletionRequest, GenerationOutput, complete, parse_generation
from .promptkit import PLATFORM_TERMS, PromptVariant, render_prompt
from .sampling import ContrastivePair

VIOLATION_CODES = (
    "BLOCKLIST_TERM",
    "LOCATION_ECHO",
    "GUEST_COUNT_ECHO",
    "DATE_ECHO",
    "PET_INCONSISTENT",
    "FAMILY_INCONSISTENT",
    "LENGTH_OUT_OF_BOUNDS",
    "DUPLICATE",
)

DEFAULT_RETRY_BUDGET = 2
DEFAULT_MAX_TOKENS = 512

_MONTHS = (
    "january|february|march|april|may|june|july|august|september|october|"
    "november|december"
)
_ISO_DATE_RE = re.compile(r"\b\d{4}-\d{2}-\d{2}\b")
_MONTH_DAY_RE = re.compile(rf"\b(?:{_MONTHS})\s+\d{{1,2}}(?:st|nd|rd|th)?\b", re.I)
_DAY_MONTH_RE = re.compile(rf"\b\d{{1,2}}(?:st|nd|rd|th)?\s+(?:{_MONTHS})\b", re.I)
_GUEST_COUNT_RE = re.compile(
    r"\bfor\s+\d+\s+(?:people|person|persons|guest|guests|adult|adults)\b", re.I
)
_PET_PHRASES = ("pet-friendly", "pet friendly")
_FAMILY_PHRASES = ("family-friendly", "family friendly", "kid friendly", "kid-friendly")


def normalize_query(query: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace (dedup key)."""
    return " ".join(re.sub(r"[^\w\s]", "", query.lower()).split())


@dataclass(frozen=True)
class ValidationReport:
    query: str
    violations: tuple[str, ...]

    @property
    def accepted(self) -> bool:
        return not self.violations


def validate_query(
    query: str,
    context: SearchContext,
    bounds: tuple[int, int],
    seen: set[str] | None = None,
) -> ValidationReport:
    """Run every consistency check; the report lists all violated codes.

    ``seen`` is an optional set of already-accepted normalized queries;
    when given, exact normalized duplicates are flagged DUPLICATE.
    """
    violations: list[str] = []
    lowered = query.lower()

    if any(term in lowered for term in PLATFORM_TERMS):
        violations.append("BLOCKLIST_TERM")

    q_tokens = set(normalize_tokens(query))
    if q_tokens & set(normalize_tokens(context.location)):
        violations.append("LOCATION_ECHO")

    if _GUEST_COUNT_RE.search(query):
        violations.append("GUEST_COUNT_ECHO")

    if (
        _ISO_DATE_RE.search(query)
        or _MONTH_DAY_RE.search(query)
        or _DAY_MONTH_RE.search(query)
    ):
        violations.append("DATE_ECHO")

    if context.pets == 0 and any(p in lowered for p in _PET_PHRASES):
        violations.append("PET_INCONSISTENT")

    if context.children == 0 and any(p in lowered for p in _FAMILY_PHRASES):
        violations.append("FAMILY_INCONSISTENT")

    wc = word_count(query)
    if wc < bounds[0] or wc > bounds[1]:
        violations.append("LENGTH_OUT_OF_BOUNDS")

    if seen is not None and normalize_query(query) in seen:
        violations.append("DUPLICATE")

    return ValidationReport(query=query, violations=tuple(violations))


# ---------------------------------------------------------------------------
# Triplets


@dataclass(frozen=True)
class Provenance:
    backend_id: str
    seed_query: str | None
    component_hashes: dict[str, str]
    timestamp: str
    counterfactual: bool = False

    def to_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "seed_query": self.seed_query,
            "component_hashes": dict(self.component_hashes),
            "timestamp": self.timestamp,
            "counterfactual": self.counterfactual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        return cls(
            backend_id=d["backend_id"],
            seed_query=d.get("seed_query"),
            component_hashes=dict(d.get("component_hashes", {})),
            timestamp=d.get("timestamp", ""),
            counterfactual=bool(d.get("counterfactual", False)),
        )


@dataclass(frozen=True)
class SyntheticTriplet:
    query: str
    positive_id: str
    negative_id: str
    context: SearchContext
    variant: str
    difficulty: str
    generation: GenerationOutput
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "positive_id": self.positive_id,
            "negative_id": self.negative_id,
            "context": self.context.to_dict(),
            "variant": self.variant,
            "difficulty": self.difficulty,
            "generation": self.generation.to_dict(),
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticTriplet":
        return cls(
            query=d["query"],
            positive_id=d["positive_id"],
            negative_id=d["negative_id"],
            context=SearchContext.from_dict(d["context"]),
            variant=d["variant"],
            difficulty=d["difficulty"],
            generation=GenerationOutput.from_dict(d["generation"]),
            provenance=Provenance.from_dict(d["provenance"]),
        )


@dataclass(frozen=True)
class GenerationRejection:
    positive_id: str
    negative_id: str
    variant: str
    difficulty: str
    attempts: int
    reason: str  # "validation" | "parse"
    violations: tuple[str, ...]
    last_query: str | None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "positive_id": self.positive_id,
            "negative_id": self.negative_id,
            "variant": self.variant,
            "difficulty": self.difficulty,
            "attempts": self.attempts,
            "reason": self.reason,
            "violations": list(self.violations),
            "last_query": self.last_query,
            "detail": self.detail,
        }


def generate_triplet(
    pair: ContrastivePair,
    seed,
    variant: PromptVariant,
    backend_id: str,
    limits: FeatureLimits = FeatureLimits(),
    bounds: tuple[int, int] | None = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    timestamp: str = "",
) -> SyntheticTriplet | GenerationRejection:
    """Run one pair through prompt rendering, the backend, and validation.

    Returns the accepted triplet, or a GenerationRejection after the retry
    budget is spent. Backend errors propagate; rejection is a value.
    """
    pos_block = render_feature_block(pair.positive, pair.context, limits)
    neg_block = render_feature_block(pair.negative, pair.context, limits)
    prompt = render_prompt(variant, pair, (pos_block, neg_block), seed=seed)
    check_bounds = bounds if bounds is not None else variant.length_bounds

    suffix = ""
    last_report: ValidationReport | None = None
    last_parse_error = ""
    attempts = 0
    for attempt in range(retry_budget + 1):
        attempts = attempt + 1
        raw = complete(
            CompletionRequest(
                prompt=prompt.text + suffix,
                temperature=variant.temperature,
                max_tokens=DEFAULT_MAX_TOKENS,
                backend_id=backend_id,
            )
        )
        try:
            output = parse_generation(raw)
        except OutputParseError as e:
            last_parse_error = str(e)
            last_report = None
            suffix = (
                "\n\nYour previous answer was not valid JSON "
                f"({e}). Return ONLY the JSON object."
            )
            continue
        report = validate_query(output.query, pair.context, check_bounds)
        if report.accepted:
            return SyntheticTriplet(
                query=output.query,
                positive_id=pair.positive.id,
                negative_id=pair.negative.id,
                context=pair.context,
                variant=variant.name,
                difficulty=pair.difficulty,
                generation=output,
                provenance=Provenance(
                    backend_id=backend_id,
                    seed_query=seed.text if seed is not None else None,
                    component_hashes=prompt.component_hashes,
                    timestamp=timestamp,
                ),
            )
        last_report = report
        suffix = (
            "\n\nYour previous query violated rule(s) "
            f"{', '.join(report.violations)}: {output.query!r}. "
            "Generate a different query that satisfies every rule."
        )

    if last_report is not None:
        return GenerationRejection(
            positive_id=pair.positive.id,
            negative_id=pair.negative.id,
            variant=variant.name,
            difficulty=pair.difficulty,
            attempts=attempts,
            reason="validation",
            violations=last_report.violations,
            last_query=last_report.query,
        )
    return GenerationRejection(
        positive_id=pair.positive.id,
        negative_id=pair.negative.id,
        variant=variant.name,
        difficulty=pair.difficulty,
        attempts=attempts,
        reason="parse",
        violations=(),
        last_query=None,
        detail=last_parse_error,
    )


def deduplicate(batch: Sequence[SyntheticTriplet]) -> list[SyntheticTriplet]:
    """Drop exact normalized-query duplicates, keeping first occurrence."""
    seen: set[str] = set()
    out = []
    for t in batch:
        key = normalize_query(t.query)
        if key in seen:
            continue
        seen.add(key)
        out.append(t)
    return out


# ---------------------------------------------------------------------------
# Counterfactual editing


@dataclass(frozen=True)
class CounterfactualResult:
    triplet: SyntheticTriplet
    edited_listing: Listing


def counterfactual_edit(
    triplet: SyntheticTriplet,
    catalog: Mapping[str, Listing],
    rng: random.Random,
) -> CounterfactualResult | None:
    """Build a harder negative by minimally editing the positive listing.

    Takes the first key attribute that maps onto an editable field of the
    positive (amenity, location attribute, or property type), removes or
    substitutes it, and returns a new triplet against the edited copy. The
    edited listing differs from the positive in exactly that one field.
    Returns None when no key attribute is editable.
    """
    if not triplet.generation.key_attributes:
        return None
    positive = catalog.get(triplet.positive_id)
    if positive is None:
        raise InputError(f"positive listing {triplet.positive_id!r} not in catalog")

    edited: Listing | None = None
    edited_attr: str | None = None
    for attr in triplet.generation.key_attributes:
        low = attr.lower().strip()
        if low in positive.amenities:
            edited = dataclasses.replace(
                positive,
                amenities=tuple(a for a in positive.amenities if a != low),
            )
        elif low in tuple(x.lower() for x in positive.location_attributes):
            edited = dataclasses.replace(
                positive,
                location_attributes=tuple(
                    x for x in positive.location_attributes if x.lower() != low
                ),
            )
        elif low == positive.property_type.lower():
            alternatives = [t for t in lexicon.PROPERTY_TYPES if t != positive.property_type]
            edited = dataclasses.replace(positive, property_type=rng.choice(alternatives))
        if edited is not None:
            edited_attr = low
            break
    if edited is None:
        return None

    suffix = hashlib.sha256(
        f"{triplet.query}|{edited_attr}".encode("utf-8")
    ).hexdigest()[:8]
    edited = dataclasses.replace(edited, id=f"{positive.id}~cf~{suffix}")

    new_triplet = dataclasses.replace(
        triplet,
        negative_id=edited.id,
        provenance=dataclasses.replace(triplet.provenance, counterfactual=True),
    )
    return CounterfactualResult(triplet=new_triplet, edited_listing=edited)


def save_triplets(path, triplets: Iterable[SyntheticTriplet]) -> None:
    from .corpus import write_jsonl

    write_jsonl(path, (t.to_dict() for t in triplets))


def load_triplets(path) -> list[SyntheticTriplet]:
    from .corpus import read_jsonl

    return [SyntheticTriplet.from_dict(rec) for _, rec in read_jsonl(path)]
