"""Daily-refresh pipeline: ingest, sample, generate, relabel, analyze, eval.

Every stage hands off through immutable files inside one run directory.
With mock backends and a fixed master seed the whole run is reproducible
byte for byte; per-item random sources are derived from (seed, index) so
results never depend on processing order.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import random
import shutil
from dataclasses import dataclass, field
from math import sqrt
from pathlib import Path
from typing import Callable, Sequence

from . import analysis, corpus, generation, judging, sampling
from .corpus import FeatureLimits, Listing, SearchContext
from .errors import ConfigError, InputError, StageError
from .evalharness import Embedder, HashingEmbedder, eval_result_json, pairwise_accuracy
from .generation import GenerationRejection, SyntheticTriplet, normalize_query
from .llmio import ensure_default_backends, get_backend
from .promptkit import VARIANTS, VARIETY

log = logging.getLogger(__name__)

DEFAULT_VARIANT_MIX = {"seed_controlled": 0.4, "seed_freeform": 0.4, "variety": 0.2}
DEFAULT_DIFFICULTY_MIX = {"easy": 0.6, "medium": 0.2, "hard": 0.2}


@dataclass
class PipelineConfig:
    catalog_path: str
    sessions_path: str
    seeds_path: str
    out_dir: str
    real_queries_path: str | None = None
    variant_mix: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_VARIANT_MIX)
    )
    target_count: int = 10_000
    difficulty_mix: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_DIFFICULTY_MIX)
    )
    generator_backend: str = "mock"
    judge_backend: str = "mock"
    embedder: str = "hashing"
    embedder_dim: int = 256
    feature_limits: FeatureLimits = field(default_factory=FeatureLimits)
    validation_bounds: tuple[int, int] | None = None
    master_seed: int = 0
    baseline_mode: bool = False
    vj_fraction: float = 0.1
    tau: float = 0.5
    pairs_per_session: int = 5
    run_date: str = ""
    min_cell_n: int = 50

    def __post_init__(self):
        if self.target_count < 1:
            raise ConfigError("target_count must be >= 1")
        if abs(sum(self.variant_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("variant_mix weights must sum to 1.0")
        if abs(sum(self.difficulty_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("difficulty_mix weights must sum to 1.0")
        for name in self.variant_mix:
            if name not in VARIANTS:
                raise ConfigError(f"unknown variant in mix: {name!r}")
        for name in self.difficulty_mix:
            if name not in sampling.DIFFICULTIES:
                raise ConfigError(f"unknown difficulty in mix: {name!r}")
        if not 0.0 <= self.vj_fraction <= 1.0:
            raise ConfigError("vj_fraction must be in [0, 1]")
        if not self.run_date:
            self.run_date = dt.date.today().isoformat()

    def to_dict(self) -> dict:
        return {
            "paths": {
                "catalog": self.catalog_path,
                "sessions": self.sessions_path,
                "seeds": self.seeds_path,
                "real_queries": self.real_queries_path,
                "out_dir": self.out_dir,
            },
            "variant_mix": dict(sorted(self.variant_mix.items())),
            "target_count": self.target_count,
            "difficulty_mix": dict(sorted(self.difficulty_mix.items())),
            "backends": {
                "generator": self.generator_backend,
                "judge": self.judge_backend,
                "embedder": self.embedder,
            },
            "embedder_dim": self.embedder_dim,
            "feature_limits": {
                "description_chars": self.feature_limits.description_chars,
                "amenity_top_k": self.feature_limits.amenity_top_k,
            },
            "validation_bounds": (
                list(self.validation_bounds) if self.validation_bounds else None
            ),
            "master_seed": self.master_seed,
            "baseline_mode": self.baseline_mode,
            "vj_fraction": self.vj_fraction,
            "tau": self.tau,
            "pairs_per_session": self.pairs_per_session,
            "run_date": self.run_date,
            "min_cell_n": self.min_cell_n,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        paths = d.get("paths", {})
        backends = d.get("backends", {})
        limits = d.get("feature_limits", {})
        bounds = d.get("validation_bounds")
        return cls(
            catalog_path=paths["catalog"],
            sessions_path=paths["sessions"],
            seeds_path=paths["seeds"],
            real_queries_path=paths.get("real_queries"),
            out_dir=paths.get("out_dir", "runs"),
            variant_mix=dict(d.get("variant_mix", DEFAULT_VARIANT_MIX)),
            target_count=int(d.get("target_count", 10_000)),
            difficulty_mix=dict(d.get("difficulty_mix", DEFAULT_DIFFICULTY_MIX)),
            generator_backend=backends.get("generator", "mock"),
            judge_backend=backends.get("judge", "mock"),
            embedder=backends.get("embedder", "hashing"),
            embedder_dim=int(d.get("embedder_dim", 256)),
            feature_limits=FeatureLimits(
                description_chars=int(limits.get("description_chars", 600)),
                amenity_top_k=int(limits.get("amenity_top_k", 5)),
            ),
            validation_bounds=tuple(bounds) if bounds else None,
            master_seed=int(d.get("master_seed", 0)),
            baseline_mode=bool(d.get("baseline_mode", False)),
            vj_fraction=float(d.get("vj_fraction", 0.1)),
            tau=float(d.get("tau", 0.5)),
            pairs_per_session=int(d.get("pairs_per_session", 5)),
            run_date=str(d.get("run_date", "")),
            min_cell_n=int(d.get("min_cell_n", 50)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with Path(path).open("r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# Contrastive labels train models; Virtual Judge labels evaluate them.
# The purpose tag keeps the two label families from being mixed up.
DATASET_PURPOSES = {
    "triplets.jsonl": "training",
    "vj_labels.jsonl": "evaluation",
    "pairs.jsonl": "intermediate",
    "rejections.jsonl": "diagnostics",
}


@dataclass
class RunManifest:
    run_id: str
    timestamp: str
    config_hash: str
    files: dict[str, str]  # filename -> sha256
    counts: dict[str, int]
    quality: dict

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "config_hash": self.config_hash,
            "files": self.files,
            "dataset_purposes": {
                name: DATASET_PURPOSES[name]
                for name in self.files
                if name in DATASET_PURPOSES
            },
            "counts": self.counts,
            "quality": self.quality,
        }


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _weighted_choice(rng: random.Random, mix: dict[str, float]) -> str:
    names = sorted(mix)
    return rng.choices(names, weights=[mix[n] for n in names], k=1)[0]


def make_embedder(config: PipelineConfig) -> HashingEmbedder:
    if config.embedder == "hashing":
        return HashingEmbedder(dim=config.embedder_dim)
    raise ConfigError(
        f"embedder {config.embedder!r} is not built in; pass an Embedder to "
        "run_daily(embedder=...) for network embedders"
    )


def run_daily(
    config: PipelineConfig, embedder: Embedder | None = None
) -> RunManifest:
    """Execute the full refresh and return the manifest.

    Any stage failure removes the partial run directory and re-raises as a
    StageError naming the stage.
    """
    ensure_default_backends()
    get_backend(config.generator_backend)
    get_backend(config.judge_backend)
    if embedder is None:
        embedder = make_embedder(config)

    run_id = f"run-{config.run_date}-{config.config_hash[:8]}"
    run_dir = Path(config.out_dir) / run_id
    if run_dir.exists():
        shutil.rmtree(run_dir)
    run_dir.mkdir(parents=True)

    stage = "ingest"
    try:
        catalog_list = corpus.load_catalog(config.catalog_path)
        catalog = {l.id: l for l in catalog_list}
        sessions = corpus.load_sessions(config.sessions_path)
        seeds = corpus.load_seed_queries(config.seeds_path)
        real_queries = (
            corpus.load_real_queries(config.real_queries_path)
            if config.real_queries_path
            else None
        )
        if not seeds and not config.baseline_mode:
            raise InputError("no seed queries loaded")

        stage = "pair_sampling"
        pools = _sample_pools(config, sessions, catalog, embedder)
        corpus.write_jsonl(
            run_dir / "pairs.jsonl", (p.to_dict() for p in pools["easy"])
        )

        stage = "generation"
        accepted, rejections, counts = _generate_batch(config, pools, seeds)
        generation.save_triplets(run_dir / "triplets.jsonl", accepted)
        corpus.write_jsonl(
            run_dir / "rejections.jsonl", (r.to_dict() for r in rejections)
        )

        stage = "vj_relabel"
        vj_result = _vj_relabel(config, accepted, catalog_list)
        corpus.write_jsonl(
            run_dir / "vj_labels.jsonl", (r.to_dict() for r in vj_result.records)
        )

        stage = "analysis"
        report = _analyze(config, accepted, seeds, real_queries)
        (run_dir / "report.md").write_text(report.to_markdown(), encoding="utf-8")
        (run_dir / "report.json").write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True),
            encoding="utf-8",
        )

        stage = "eval"
        eval_json = _evaluate(config, accepted, catalog, embedder)
        (run_dir / "eval_result.json").write_text(eval_json, encoding="utf-8")

        stage = "manifest"
        quality = {
            "kl_length": report.kl_length,
            "kl_attr_type": report.kl_attr_type,
            "kl_attr_count": report.kl_attr_count,
            "pairwise_accuracy": json.loads(eval_json)["result"],
            "vj_parse_errors": vj_result.parse_errors,
            "judge_order_flip_rate": vj_result.order_flip_disagreement_rate,
        }
        files = {
            p.name: _sha256_file(p) for p in sorted(run_dir.iterdir()) if p.is_file()
        }
        manifest = RunManifest(
            run_id=run_id,
            timestamp=dt.datetime.now().isoformat(timespec="seconds"),
            config_hash=config.config_hash,
            files=files,
            counts=counts,
            quality=quality,
        )
        (run_dir / "manifest.json").write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True),
            encoding="utf-8",
        )
        return manifest
    except Exception as e:
        shutil.rmtree(run_dir, ignore_errors=True)
        if isinstance(e, StageError):
            raise
        raise StageError(stage, e) from e


def _sample_pools(
    config: PipelineConfig,
    sessions: Sequence[corpus.SearchSession],
    catalog: dict[str, Listing],
    embedder: Embedder,
) -> dict[str, list[sampling.ContrastivePair]]:
    base: list[sampling.ContrastivePair] = []
    for i, session in enumerate(sessions):
        session_seen: set[tuple[str, str]] = set()
        for j in range(config.pairs_per_session):
            rng = random.Random(f"{config.master_seed}:pair:{i}:{j}")
            pair = sampling.sample_pair(session, catalog, rng)
            if pair is None:
                break
            key = (pair.positive.id, pair.negative.id)
            if key in session_seen:
                continue
            session_seen.add(key)
            base.append(pair)
    if not base:
        raise InputError("no eligible contrastive pairs in the sessions")
    medium = sampling.same_category_pairs(base)
    hard = sampling.hierarchical_sample(
        base,
        embedder,
        tau=config.tau,
        same_category=True,
        limits=config.feature_limits,
    )
    pools = {"easy": base, "medium": medium, "hard": hard}
    log.info(
        "pair pools: easy=%d medium=%d hard=%d", len(base), len(medium), len(hard)
    )
    return pools


def _generate_batch(
    config: PipelineConfig,
    pools: dict[str, list[sampling.ContrastivePair]],
    seeds: Sequence[corpus.SeedQuery],
) -> tuple[list[SyntheticTriplet], list[GenerationRejection], dict[str, int]]:
    """Generate until ``target_count`` accepted triplets (or attempts cap).

    Deduplication runs as an ordered pass over the generation stream; the
    per-item random sources are index-derived, so a parallel execution
    would produce the same stream.
    """
    fallback = {"hard": ("hard", "medium", "easy"), "medium": ("medium", "easy"),
                "easy": ("easy",)}
    accepted: list[SyntheticTriplet] = []
    rejections: list[GenerationRejection] = []
    seen: set[str] = set()
    n_generated = 0
    n_dup = 0
    attempts = 0
    max_attempts = config.target_count * 10

    while len(accepted) < config.target_count and attempts < max_attempts:
        rng = random.Random(f"{config.master_seed}:gen:{attempts}")
        attempts += 1

        want = _weighted_choice(rng, config.difficulty_mix)
        pool: list[sampling.ContrastivePair] = []
        for tier in fallback[want]:
            if pools[tier]:
                pool = pools[tier]
                break
        if not pool:
            raise InputError("all difficulty pools are empty")
        pair = pool[rng.randrange(len(pool))]

        if config.baseline_mode:
            variant = VARIETY
            seed = None
        else:
            variant = VARIANTS[_weighted_choice(rng, config.variant_mix)]
            seed = seeds[rng.randrange(len(seeds))] if variant.needs_seed else None

        result = generation.generate_triplet(
            pair,
            seed,
            variant,
            config.generator_backend,
            limits=config.feature_limits,
            bounds=config.validation_bounds,
            timestamp=config.run_date,
        )
        if isinstance(result, GenerationRejection):
            rejections.append(result)
            continue
        n_generated += 1
        key = normalize_query(result.query)
        if key in seen:
            n_dup += 1
            rejections.append(
                GenerationRejection(
                    positive_id=result.positive_id,
                    negative_id=result.negative_id,
                    variant=result.variant,
                    difficulty=result.difficulty,
                    attempts=1,
                    reason="duplicate",
                    violations=("DUPLICATE",),
                    last_query=result.query,
                )
            )
            continue
        seen.add(key)
        accepted.append(result)

    if len(accepted) < config.target_count:
        log.warning(
            "generation stopped at %d/%d accepted after %d attempts",
            len(accepted),
            config.target_count,
            attempts,
        )
    counts = {
        "requested": config.target_count,
        "attempts": attempts,
        "generated": n_generated,
        "rejected": len(rejections) - n_dup,
        "deduped": n_dup,
        "accepted": len(accepted),
    }
    return accepted, rejections, counts


def _vj_relabel(
    config: PipelineConfig,
    accepted: Sequence[SyntheticTriplet],
    catalog_list: Sequence[Listing],
) -> judging.RelabelResult:
    if not accepted or config.vj_fraction == 0.0:
        return judging.RelabelResult(records=[], parse_errors=0)
    slice_rng = random.Random(f"{config.master_seed}:vjslice")
    k = max(1, round(config.vj_fraction * len(accepted)))
    indices = sorted(slice_rng.sample(range(len(accepted)), min(k, len(accepted))))
    eval_slice = [accepted[i] for i in indices]
    return judging.relabel(
        eval_slice,
        catalog_list,
        config.judge_backend,
        rng=random.Random(f"{config.master_seed}:vj"),
        limits=config.feature_limits,
    )


def _analyze(
    config: PipelineConfig,
    accepted: Sequence[SyntheticTriplet],
    seeds: Sequence[corpus.SeedQuery],
    real_queries: Sequence[str] | None,
) -> analysis.ComparisonReport:
    datasets: dict[str, list[str]] = {
        "synthetic": [t.query for t in accepted],
        "seed": [s.text for s in seeds],
    }
    references = ["seed"]
    if real_queries:
        datasets["real"] = list(real_queries)
        references = ["real", "seed"]
    variant_slices: dict[str, list[str]] = {}
    for t in accepted:
        variant_slices.setdefault(t.variant, []).append(t.query)
    return analysis.compare(
        datasets,
        reference_names=references,
        variant_slices=dict(sorted(variant_slices.items())),
    )


def contextual_block_resolver(
    catalog: dict[str, Listing], limits: FeatureLimits
) -> Callable[[SyntheticTriplet, str], str]:
    """Listing-text resolver that renders blocks under each triplet's context."""
    cache: dict[tuple[str, SearchContext], str] = {}

    def resolve(t: SyntheticTriplet, lid: str) -> str:
        key = (lid, t.context)
        if key not in cache:
            listing = catalog.get(lid)
            if listing is None:
                raise InputError(f"listing {lid!r} not in catalog")
            cache[key] = corpus.render_feature_block(
                listing, t.context, limits
            ).rendered_text
        return cache[key]

    return resolve


def evaluate_triplets(
    accepted: Sequence[SyntheticTriplet],
    catalog: dict[str, Listing],
    limits: FeatureLimits,
    embedder: Embedder,
    dataset: str = "synthetic",
) -> str:
    resolve = contextual_block_resolver(catalog, limits)
    result = pairwise_accuracy(accepted, embedder, resolve)
    name = getattr(embedder, "name", "custom")
    dim = getattr(embedder, "dim", 0)
    return eval_result_json(result, name, dim, dataset=dataset)


def _evaluate(
    config: PipelineConfig,
    accepted: Sequence[SyntheticTriplet],
    catalog: dict[str, Listing],
    embedder: Embedder,
) -> str:
    return evaluate_triplets(
        accepted, catalog, config.feature_limits, embedder, dataset="synthetic"
    )


def run_generation_only(
    config: PipelineConfig, embedder: Embedder | None = None
) -> tuple[list[SyntheticTriplet], list[GenerationRejection], dict[str, int]]:
    """Ingest, sample pairs, and generate triplets without the later stages."""
    ensure_default_backends()
    get_backend(config.generator_backend)
    if embedder is None:
        embedder = make_embedder(config)
    catalog_list = corpus.load_catalog(config.catalog_path)
    catalog = {l.id: l for l in catalog_list}
    sessions = corpus.load_sessions(config.sessions_path)
    seeds = corpus.load_seed_queries(config.seeds_path)
    if not seeds and not config.baseline_mode:
        raise InputError("no seed queries loaded")
    pools = _sample_pools(config, sessions, catalog, embedder)
    return _generate_batch(config, pools, seeds)


def seed_guided_fraction(triplets: Sequence[SyntheticTriplet]) -> float:
    """Fraction of triplets generated with seed conditioning."""
    if not triplets:
        return 0.0
    guided = sum(1 for t in triplets if t.provenance.seed_query is not None)
    return guided / len(triplets)


def mix_tolerance(weight: float, n: int) -> float:
    """Three-sigma binomial band for a weighted-draw fraction."""
    return 3.0 * sqrt(weight * (1.0 - weight) / n)
