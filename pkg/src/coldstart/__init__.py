"""Cold-start synthetic query/label factory for natural-language search.

Generates topicality-labeled (query, positive, negative) triplets from
contrastive listing pairs and seed queries through a pluggable LLM backend,
relabels with a Virtual Judge, and audits generation quality with KL
divergence and pairwise-accuracy analytics.
"""

from .analysis import compare, kl_divergence, tag_attributes, word_count
from .corpus import (
    FeatureBlock,
    FeatureLimits,
    Listing,
    SearchContext,
    SearchSession,
    SeedQuery,
    generate_fixture,
    load_catalog,
    render_feature_block,
)
from .evalharness import HashingEmbedder, cosine, hash_embed, pairwise_accuracy
from .generation import (
    SyntheticTriplet,
    counterfactual_edit,
    deduplicate,
    generate_triplet,
    validate_query,
)
from .judging import calibrate, judge, relabel, self_preference
from .llmio import GenerationOutput, MockBackend, parse_generation, register_backend
from .pipeline import PipelineConfig, RunManifest, run_daily
from .promptkit import PLATFORM_TERMS, VARIANTS, render_prompt
from .sampling import ContrastivePair, hierarchical_sample, sample_pair

__version__ = "0.1.0"

__all__ = [
    "ContrastivePair",
    "FeatureBlock",
    "FeatureLimits",
    "GenerationOutput",
    "HashingEmbedder",
    "Listing",
    "MockBackend",
    "PLATFORM_TERMS",
    "PipelineConfig",
    "RunManifest",
    "SearchContext",
    "SearchSession",
    "SeedQuery",
    "SyntheticTriplet",
    "VARIANTS",
    "calibrate",
    "compare",
    "cosine",
    "counterfactual_edit",
    "deduplicate",
    "generate_fixture",
    "generate_triplet",
    "hash_embed",
    "hierarchical_sample",
    "judge",
    "kl_divergence",
    "load_catalog",
    "pairwise_accuracy",
    "parse_generation",
    "register_backend",
    "relabel",
    "render_feature_block",
    "render_prompt",
    "run_daily",
    "sample_pair",
    "self_preference",
    "tag_attributes",
    "validate_query",
    "word_count",
]
