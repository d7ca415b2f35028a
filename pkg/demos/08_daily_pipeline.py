"""The full daily refresh, end to end, twice: outputs are byte-identical.

ingest -> pair sampling -> variant assignment -> generation + validation +
dedup -> Virtual Judge relabel of an evaluation slice -> distribution
report -> pairwise-accuracy eval -> manifest.
"""

import json
import tempfile
from pathlib import Path

from coldstart import corpus, pipeline

tmp = Path(tempfile.mkdtemp(prefix="coldstart-demo-"))
listings, sessions, seeds = corpus.generate_fixture(seed=42, n_listings=300, n_sessions=500)
corpus.save_catalog(tmp / "listings.jsonl", listings)
corpus.save_sessions(tmp / "sessions.jsonl", sessions)
corpus.save_seed_queries(tmp / "seed_queries.jsonl", seeds)
corpus.save_real_queries(tmp / "real_queries.jsonl", corpus.generate_real_queries(42))


def make_config(out_dir):
    return pipeline.PipelineConfig(
        catalog_path=str(tmp / "listings.jsonl"),
        sessions_path=str(tmp / "sessions.jsonl"),
        seeds_path=str(tmp / "seed_queries.jsonl"),
        real_queries_path=str(tmp / "real_queries.jsonl"),
        out_dir=str(tmp / out_dir),
        target_count=500,
        master_seed=42,
        run_date="2026-08-11",
    )


manifest = pipeline.run_daily(make_config("runA"))
again = pipeline.run_daily(make_config("runB"))

print(f"run id: {manifest.run_id}")
print(f"counts: {json.dumps(manifest.counts)}")
print(f"seed-guided mix check: variant weights {pipeline.DEFAULT_VARIANT_MIX}")
print(f"pairwise accuracy: {manifest.quality['pairwise_accuracy']['accuracy']:.3f}")
print(f"length KL vs seed: {manifest.quality['kl_length']['synthetic']['seed']:.3f}")
print(f"length KL vs real: {manifest.quality['kl_length']['synthetic']['real']:.3f}")

identical = all(
    (tmp / "runA" / manifest.run_id / name).read_bytes()
    == (tmp / "runB" / again.run_id / name).read_bytes()
    for name in ("triplets.jsonl", "report.md", "report.json", "eval_result.json")
)
print(f"\nsecond run byte-identical: {identical}")
print(f"outputs under: {tmp / 'runA' / manifest.run_id}")
