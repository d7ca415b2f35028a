"""Command-line entry points for the synthetic data pipeline."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import corpus, generation, judging, pipeline
from .analysis import compare
from .errors import ColdstartError, StageError
from .evalharness import HashingEmbedder
from .llmio import ensure_default_backends


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ensure_default_backends()
    try:
        return args.func(args, parser)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ColdstartError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldstart",
        description="Synthetic query/label generation for natural-language search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="generate the deterministic offline corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--listings", type=int, default=500)
    p.add_argument("--sessions", type=int, default=1000)
    p.add_argument("--out-dir", default="data")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("generate", help="generate validated triplets")
    _add_config_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("judge", help="Virtual Judge relabeling of a triplet file")
    p.add_argument("--triplets", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--backend", default="mock")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="vj_labels.jsonl")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("analyze", help="distribution comparison report")
    p.add_argument(
        "--datasets",
        required=True,
        help="comma-separated JSONL files of queries ('query' or 'text' field)",
    )
    p.add_argument(
        "--reference",
        required=True,
        help="comma-separated dataset names (file stems) used as references",
    )
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument(
        "--lexicon",
        default=None,
        help="attribute lexicon JSONL (phrase -> type); default: built-in",
    )
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval", help="pairwise accuracy of an embedder on triplets")
    p.add_argument("--triplets", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--out", default="eval_result.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run-daily", help="full daily refresh pipeline")
    _add_config_args(p)
    p.set_defaults(func=cmd_run_daily)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON pipeline config path")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--target", type=int, default=None, help="override target count")
    p.add_argument("--backend", default=None, help="override generator backend id")
    p.add_argument("--baseline", action="store_true", help="disable seed conditioning")
    p.add_argument("--out-dir", default=None, help="override output directory")


def _load_config(args, parser: argparse.ArgumentParser) -> pipeline.PipelineConfig:
    path = Path(args.config)
    if not path.is_file():
        parser.error(f"config file not found: {path}")
    try:
        config = pipeline.PipelineConfig.from_file(path)
    except (json.JSONDecodeError, KeyError) as e:
        parser.error(f"invalid config {path}: {e}")
    if args.seed is not None:
        config.master_seed = args.seed
    if args.target is not None:
        config.target_count = args.target
    if args.backend is not None:
        config.generator_backend = args.backend
    if args.baseline:
        config.baseline_mode = True
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    return config


def cmd_fixture(args, parser) -> int:
    listings, sessions, seeds = corpus.generate_fixture(
        args.seed, args.listings, args.sessions
    )
    real = corpus.generate_real_queries(args.seed)
    out = Path(args.out_dir)
    corpus.save_catalog(out / "listings.jsonl", listings)
    corpus.save_sessions(out / "sessions.jsonl", sessions)
    corpus.save_seed_queries(out / "seed_queries.jsonl", seeds)
    corpus.save_real_queries(out / "real_queries.jsonl", real)
    print(
        f"wrote {len(listings)} listings, {len(sessions)} sessions, "
        f"{len(seeds)} seed queries, {len(real)} real-query stand-ins to {out}"
    )
    return 0


def cmd_generate(args, parser) -> int:
    config = _load_config(args, parser)
    accepted, rejections, counts = pipeline.run_generation_only(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    generation.save_triplets(out / "triplets.jsonl", accepted)
    corpus.write_jsonl(out / "rejections.jsonl", (r.to_dict() for r in rejections))
    print(json.dumps(counts, sort_keys=True))
    print(f"wrote {len(accepted)} triplets to {out / 'triplets.jsonl'}")
    return 0


def cmd_judge(args, parser) -> int:
    triplets = generation.load_triplets(args.triplets)
    catalog = corpus.load_catalog(args.catalog)
    result = judging.relabel(
        triplets, catalog, args.backend, rng=random.Random(f"{args.seed}:vj")
    )
    corpus.write_jsonl(args.out, (r.to_dict() for r in result.records))
    print(
        f"wrote {len(result.records)} VJ labels to {args.out} "
        f"({result.parse_errors} parse errors)"
    )
    return 0


def cmd_analyze(args, parser) -> int:
    datasets: dict[str, list[str]] = {}
    for entry in args.datasets.split(","):
        path = Path(entry.strip())
        if not path.is_file():
            parser.error(f"dataset file not found: {path}")
        datasets[path.stem] = _load_queries(path)
    references = [r.strip() for r in args.reference.split(",")]
    for ref in references:
        if ref not in datasets:
            parser.error(f"reference {ref!r} is not among dataset names")
    lexicon = None
    if args.lexicon:
        from coldstart.analysis import load_attribute_lexicon

        lexicon = load_attribute_lexicon(args.lexicon)
    report = compare(
        datasets, reference_names=references, alpha=args.alpha, lexicon=lexicon
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(report.to_markdown(), encoding="utf-8")
    (out / "report.json").write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote {out / 'report.md'} and {out / 'report.json'}")
    return 0


def _load_queries(path: Path) -> list[str]:
    queries = []
    for _, rec in corpus.read_jsonl(path):
        if "query" in rec:
            queries.append(rec["query"])
        elif "text" in rec:
            queries.append(rec["text"])
    return queries


def cmd_eval(args, parser) -> int:
    triplets = generation.load_triplets(args.triplets)
    catalog = {l.id: l for l in corpus.load_catalog(args.catalog)}
    result_json = pipeline.evaluate_triplets(
        triplets,
        catalog,
        corpus.FeatureLimits(),
        HashingEmbedder(dim=args.dim),
        dataset=Path(args.triplets).stem,
    )
    Path(args.out).write_text(result_json, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def cmd_run_daily(args, parser) -> int:
    config = _load_config(args, parser)
    manifest = pipeline.run_daily(config)
    print(json.dumps(manifest.counts, sort_keys=True))
    print(f"run {manifest.run_id} complete under {config.out_dir}")
    return 0


def cmd_report(args, parser) -> int:
    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        parser.error(f"no manifest.json under {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    print(f"run: {manifest['run_id']}  ({manifest['timestamp']})")
    print(f"config hash: {manifest['config_hash']}")
    print("counts: " + json.dumps(manifest["counts"], sort_keys=True))
    accuracy = manifest["quality"].get("pairwise_accuracy", {}).get("accuracy")
    if accuracy is not None:
        print(f"pairwise accuracy: {accuracy:.3f}")
    kl = manifest["quality"].get("kl_length", {}).get("synthetic", {})
    for ref, value in sorted(kl.items()):
        print(f"length KL vs {ref}: {value:.4f}")
    print("files:")
    for name, digest in sorted(manifest["files"].items()):
        print(f"  {name}  {digest[:12]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
