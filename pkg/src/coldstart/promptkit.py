"""Composition of the three generation prompt variants from text components.

Every component lives as a plain-text file under ``prompts/`` so wording can
be edited without touching code; the rendered prompt records each included
component's name and content hash for provenance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .corpus import FeatureBlock, SeedQuery
from .errors import InputError
from .sampling import ContrastivePair

PLATFORM_TERMS = (
    "entire home",
    "private room",
    "superhost",
    "guest favorite",
    "badge",
    "airbnb",
    "listing",
    "instant book",
)

CORE_COMPONENTS = (
    "core_assumption",
    "platform_blocklist",
    "context_dedup",
    "consistency",
    "output_format",
)

VARIANT_NAMES = ("seed_controlled", "seed_freeform", "variety")


@dataclass(frozen=True)
class PromptVariant:
    name: str
    temperature: float
    length_bounds: tuple[int, int]

    def __post_init__(self):
        if self.name not in VARIANT_NAMES:
            raise InputError(f"unknown variant {self.name!r}")
        if self.length_bounds[0] < 1 or self.length_bounds[0] > self.length_bounds[1]:
            raise InputError("length_bounds must satisfy 1 <= min <= max")
        if self.temperature < 0:
            raise InputError("temperature must be >= 0")

    @property
    def needs_seed(self) -> bool:
        return self.name != "variety"


# Default temperatures: the variety variant runs hotter than the seed-bound
# ones; the exact magnitudes are a tuning choice. Seed variants target the
# 3-8 word band; variety may range wider.
SEED_CONTROLLED = PromptVariant("seed_controlled", temperature=0.3, length_bounds=(3, 8))
SEED_FREEFORM = PromptVariant("seed_freeform", temperature=0.7, length_bounds=(3, 8))
VARIETY = PromptVariant("variety", temperature=1.0, length_bounds=(1, 15))

VARIANTS: dict[str, PromptVariant] = {
    v.name: v for v in (SEED_CONTROLLED, SEED_FREEFORM, VARIETY)
}


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    variant: str
    component_ids: tuple[str, ...]
    component_hashes: dict[str, str]
    pair_ref: str
    seed_ref: str | None


@lru_cache(maxsize=None)
def _component(name: str) -> tuple[str, str]:
    """Return (text, content hash) of a prompt component file."""
    ref = resources.files("coldstart").joinpath(f"prompts/{name}.txt")
    raw = ref.read_bytes()
    return raw.decode("utf-8").rstrip("\n"), hashlib.sha256(raw).hexdigest()[:12]


def component_text(name: str) -> str:
    return _component(name)[0]


def component_hash(name: str) -> str:
    return _component(name)[1]


def render_prompt(
    variant: PromptVariant,
    pair: ContrastivePair,
    feature_blocks: tuple[FeatureBlock, FeatureBlock],
    seed: SeedQuery | None = None,
    difficulty: str | None = None,
) -> RenderedPrompt:
    """Compose the full generation prompt for one contrastive pair.

    The positive listing's block is always presented as Listing 1 (the
    label direction is fixed by construction). Component order is fixed:
    assumption, listings, variant instruction, rules, output format.
    """
    if variant.needs_seed and seed is None:
        raise InputError(f"variant {variant.name} requires a seed query")
    if not variant.needs_seed and seed is not None:
        raise InputError("variety variant takes no seed query")
    pos_block, neg_block = feature_blocks
    if pos_block.listing_id != pair.positive.id:
        raise InputError("first feature block must belong to the positive listing")
    if neg_block.listing_id != pair.negative.id:
        raise InputError("second feature block must belong to the negative listing")
    difficulty = difficulty or pair.difficulty

    variant_component = f"variant_{variant.name}"
    included = list(CORE_COMPONENTS) + [variant_component]
    if difficulty == "hard":
        included.append("hard_addendum")

    variant_text = component_text(variant_component)
    if variant.needs_seed:
        variant_text = variant_text.format(seed_text=seed.text)

    output_format = component_text("output_format").format(
        min_words=variant.length_bounds[0], max_words=variant.length_bounds[1]
    )

    parts = [
        component_text("core_assumption"),
        "",
        "Listing 1:",
        pos_block.rendered_text,
        "",
        "Listing 2:",
        neg_block.rendered_text,
        "",
        variant_text,
        "",
        "Rules:",
        component_text("platform_blocklist"),
        "",
        "Context deduplication:",
        component_text("context_dedup"),
        "",
        "Consistency:",
        component_text("consistency"),
    ]
    if difficulty == "hard":
        parts += ["", component_text("hard_addendum")]
    parts += ["", output_format]

    return RenderedPrompt(
        text="\n".join(parts),
        variant=variant.name,
        component_ids=tuple(included),
        component_hashes={name: component_hash(name) for name in included},
        pair_ref=pair.ref,
        seed_ref=seed.text if seed is not None else None,
    )
