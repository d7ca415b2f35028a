"""Distribution validation for generated query sets.

Computes word-count and attribute-type/count distributions, smoothed KL
divergence against reference datasets, and renders the comparison report
(markdown + JSON). All KL numbers are in nats; smoothing is additive per
bin and stated in every report header.
"""

from __future__ import annotations

import json
import math
import statistics
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import InputError

ATTRIBUTE_TYPES = (
    "amenity",
    "location",
    "property_type",
    "rooms",
    "vibe",
    "occasion",
    "other",
)

LENGTH_BIN_LABELS = tuple(str(i) for i in range(1, 15)) + ("15+",)
ATTR_COUNT_BIN_LABELS = tuple(str(i) for i in range(0, 8)) + ("8+",)

DEFAULT_ALPHA = 0.5
LOW_N_THRESHOLD = 30

_PUNCT = string.punctuation


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, strip surrounding punctuation per token, drop empties."""
    out = []
    for tok in text.lower().split():
        tok = tok.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


def word_count(query: str) -> int:
    return len(normalize_tokens(query))


def kl_divergence(
    p_ref: Sequence[float], q_cand: Sequence[float], alpha: float = DEFAULT_ALPHA
) -> float:
    """D(reference || candidate) over aligned bins, in nats.

    Both inputs are raw histograms (counts or probabilities); ``alpha`` is
    added to every bin of both before renormalizing. With alpha=0 the
    candidate must have mass wherever the reference does.
    """
    if len(p_ref) != len(q_cand):
        raise InputError(
            f"mismatched bin spaces: {len(p_ref)} vs {len(q_cand)} bins"
        )
    if len(p_ref) == 0:
        raise InputError("empty bin space")
    if alpha < 0:
        raise InputError("alpha must be >= 0")
    p = [float(v) + alpha for v in p_ref]
    q = [float(v) + alpha for v in q_cand]
    if any(v < 0 for v in p) or any(v < 0 for v in q):
        raise InputError("histogram values must be non-negative")
    p_total, q_total = sum(p), sum(q)
    if p_total <= 0 or q_total <= 0:
        raise InputError("histogram must have positive total mass")

    d = 0.0
    for pi, qi in zip(p, q):
        if pi == 0.0:
            continue  # 0 * ln(0/q) = 0
        if qi == 0.0:
            raise InputError(
                "candidate bin empty where reference has mass; use alpha > 0"
            )
        d += (pi / p_total) * math.log((pi / p_total) / (qi / q_total))
    return max(d, 0.0)


# ---------------------------------------------------------------------------
# Length distributions


@dataclass(frozen=True)
class LengthDistribution:
    counts: tuple[int, ...]  # aligned with LENGTH_BIN_LABELS
    n: int
    mean: float
    median: float
    stddev: float
    pct_short: float  # 1-2 words
    pct_mid: float  # 3-8 words
    pct_long: float  # 9+ words
    n_empty_excluded: int = 0

    @classmethod
    def from_queries(cls, queries: Iterable[str]) -> "LengthDistribution":
        lengths = []
        n_empty = 0
        for q in queries:
            wc = word_count(q)
            if wc == 0:
                n_empty += 1
                continue
            lengths.append(wc)
        if not lengths:
            return cls(
                counts=tuple([0] * len(LENGTH_BIN_LABELS)),
                n=0,
                mean=0.0,
                median=0.0,
                stddev=0.0,
                pct_short=0.0,
                pct_mid=0.0,
                pct_long=0.0,
                n_empty_excluded=n_empty,
            )
        bins = [0] * len(LENGTH_BIN_LABELS)
        for wc in lengths:
            bins[min(wc, 15) - 1] += 1
        n = len(lengths)
        short = sum(1 for wc in lengths if wc <= 2)
        mid = sum(1 for wc in lengths if 3 <= wc <= 8)
        long_ = sum(1 for wc in lengths if wc >= 9)
        return cls(
            counts=tuple(bins),
            n=n,
            mean=statistics.fmean(lengths),
            median=float(statistics.median(lengths)),
            stddev=statistics.pstdev(lengths),
            pct_short=100.0 * short / n,
            pct_mid=100.0 * mid / n,
            pct_long=100.0 * long_ / n,
            n_empty_excluded=n_empty,
        )

    def to_dict(self) -> dict:
        return {
            "bins": dict(zip(LENGTH_BIN_LABELS, self.counts)),
            "n": self.n,
            "mean": self.mean,
            "median": self.median,
            "stddev": self.stddev,
            "pct_short": self.pct_short,
            "pct_mid": self.pct_mid,
            "pct_long": self.pct_long,
            "n_empty_excluded": self.n_empty_excluded,
        }


# ---------------------------------------------------------------------------
# Attribute tagging


class AttributeTag(NamedTuple):
    type: str
    surface: str


def load_attribute_lexicon(path: str | Path) -> dict[str, str]:
    """Load a phrase -> attribute-type lexicon from JSONL."""
    out: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            phrase = " ".join(normalize_tokens(rec["phrase"]))
            ttype = rec["type"]
            if ttype not in ATTRIBUTE_TYPES:
                raise InputError(f"unknown attribute type {ttype!r} in lexicon")
            out[phrase] = ttype
    return out


def default_attribute_lexicon() -> dict[str, str]:
    ref = resources.files("coldstart").joinpath("data/attribute_lexicon.jsonl")
    with resources.as_file(ref) as p:
        return load_attribute_lexicon(p)


def tag_attributes(query: str, lexicon: Mapping[str, str]) -> list[AttributeTag]:
    """Greedy longest-match scan of the normalized query against the lexicon.

    Overlaps resolve to the longest phrase, then the earliest position;
    matched tokens are consumed.
    """
    tokens = normalize_tokens(query)
    if not tokens:
        return []
    max_len = max((p.count(" ") + 1 for p in lexicon), default=1)
    tags: list[AttributeTag] = []
    i = 0
    while i < len(tokens):
        matched = False
        for length in range(min(max_len, len(tokens) - i), 0, -1):
            phrase = " ".join(tokens[i : i + length])
            ttype = lexicon.get(phrase)
            if ttype is not None:
                tags.append(AttributeTag(ttype, phrase))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return tags


@dataclass(frozen=True)
class AttributeDistribution:
    type_counts: tuple[int, ...]  # aligned with ATTRIBUTE_TYPES
    count_hist: tuple[int, ...]  # aligned with ATTR_COUNT_BIN_LABELS
    mean_attrs: float
    median_attrs: float
    pct_with_attr: float
    n: int

    @classmethod
    def from_queries(
        cls, queries: Sequence[str], lexicon: Mapping[str, str]
    ) -> "AttributeDistribution":
        type_counts = [0] * len(ATTRIBUTE_TYPES)
        count_hist = [0] * len(ATTR_COUNT_BIN_LABELS)
        per_query_counts = []
        with_attr = 0
        for q in queries:
            tags = tag_attributes(q, lexicon)
            unique = sorted(set(tags))  # dedupe by (type, surface)
            for t in unique:
                type_counts[ATTRIBUTE_TYPES.index(t.type)] += 1
            k = len(unique)
            per_query_counts.append(k)
            count_hist[min(k, 8)] += 1
            if k > 0:
                with_attr += 1
        n = len(per_query_counts)
        return cls(
            type_counts=tuple(type_counts),
            count_hist=tuple(count_hist),
            mean_attrs=statistics.fmean(per_query_counts) if n else 0.0,
            median_attrs=float(statistics.median(per_query_counts)) if n else 0.0,
            pct_with_attr=100.0 * with_attr / n if n else 0.0,
            n=n,
        )

    def top_types(self, k: int = 3) -> list[str]:
        ranked = sorted(
            zip(ATTRIBUTE_TYPES, self.type_counts), key=lambda t: (-t[1], t[0])
        )
        return [name for name, cnt in ranked[:k] if cnt > 0]

    def to_dict(self) -> dict:
        return {
            "type_counts": dict(zip(ATTRIBUTE_TYPES, self.type_counts)),
            "count_hist": dict(zip(ATTR_COUNT_BIN_LABELS, self.count_hist)),
            "mean_attrs": self.mean_attrs,
            "median_attrs": self.median_attrs,
            "pct_with_attr": self.pct_with_attr,
            "n": self.n,
        }


# ---------------------------------------------------------------------------
# Multi-dataset comparison


@dataclass
class ComparisonReport:
    dataset_names: list[str]
    reference_names: list[str]
    alpha: float
    lengths: dict[str, LengthDistribution]
    attributes: dict[str, AttributeDistribution]
    kl_length: dict[str, dict[str, float]]  # dataset -> reference -> KL
    kl_attr_type: dict[str, dict[str, float]]
    kl_attr_count: dict[str, dict[str, float]]
    top_types: dict[str, list[str]]
    low_n_warnings: list[str] = field(default_factory=list)
    variant_matrix: dict[str, dict[str, float]] | None = None

    def to_json_dict(self) -> dict:
        return {
            "kl_units": "nats",
            "smoothing_alpha": self.alpha,
            "datasets": self.dataset_names,
            "references": self.reference_names,
            "length": {k: v.to_dict() for k, v in self.lengths.items()},
            "attributes": {k: v.to_dict() for k, v in self.attributes.items()},
            "kl_length": self.kl_length,
            "kl_attr_type": self.kl_attr_type,
            "kl_attr_count": self.kl_attr_count,
            "top_types": self.top_types,
            "low_n_warnings": self.low_n_warnings,
            "variant_matrix": self.variant_matrix,
        }

    def to_markdown(self) -> str:
        names = self.dataset_names
        lines = [
            "# Dataset comparison report",
            "",
            f"KL divergence in nats (natural log), additive smoothing "
            f"alpha={self.alpha} per bin, direction D(reference || candidate).",
            f"References: {', '.join(self.reference_names)}.",
            "",
        ]
        if self.low_n_warnings:
            lines += [
                "> Low-sample warning (< "
                f"{LOW_N_THRESHOLD} queries): {', '.join(self.low_n_warnings)}",
                "",
            ]

        # Length stats with KL rows against each reference
        lines += ["## Query length", "", _md_header(["Metric"] + names)]
        rows: list[tuple[str, list[str]]] = [
            ("Count", [str(self.lengths[n].n) for n in names]),
            ("Length (mean)", [f"{self.lengths[n].mean:.1f}" for n in names]),
            ("Length (med.)", [f"{self.lengths[n].median:.1f}" for n in names]),
            ("Length (std)", [f"{self.lengths[n].stddev:.1f}" for n in names]),
            ("% 3-8 words", [f"{self.lengths[n].pct_mid:.1f}%" for n in names]),
            ("% Short (1-2)", [f"{self.lengths[n].pct_short:.1f}%" for n in names]),
            ("% Long (9+)", [f"{self.lengths[n].pct_long:.1f}%" for n in names]),
        ]
        for ref in self.reference_names:
            rows.append(
                (
                    f"KL vs. {ref}",
                    [_fmt_kl(self.kl_length[n].get(ref)) for n in names],
                )
            )
        lines += [_md_row([label] + vals) for label, vals in rows]
        lines.append("")

        # Attribute-type KL and top types
        lines += ["## Attribute types", "", _md_header(["Metric"] + names)]
        for ref in self.reference_names:
            lines.append(
                _md_row(
                    [f"KL vs. {ref}"]
                    + [_fmt_kl(self.kl_attr_type[n].get(ref)) for n in names]
                )
            )
        for rank in range(3):
            lines.append(
                _md_row(
                    [f"Top type {rank + 1}"]
                    + [
                        (self.top_types[n][rank] if rank < len(self.top_types[n]) else "-")
                        for n in names
                    ]
                )
            )
        lines.append("")

        # Attributes-per-query stats and KL
        lines += ["## Attribute counts per query", "", _md_header(["Metric"] + names)]
        lines.append(
            _md_row(["Mean Attr."] + [f"{self.attributes[n].mean_attrs:.2f}" for n in names])
        )
        lines.append(
            _md_row(
                ["Median Attr."] + [f"{self.attributes[n].median_attrs:.1f}" for n in names]
            )
        )
        lines.append(
            _md_row(
                ["% with Attr."]
                + [f"{self.attributes[n].pct_with_attr:.1f}%" for n in names]
            )
        )
        for ref in self.reference_names:
            lines.append(
                _md_row(
                    [f"KL vs. {ref}"]
                    + [_fmt_kl(self.kl_attr_count[n].get(ref)) for n in names]
                )
            )
        lines.append("")

        # Per-variant KL breakdown
        if self.variant_matrix is not None:
            cols = ["Variant"]
            for metric in ("Length", "Attr. Cnt", "Attr. Type"):
                for ref in self.reference_names:
                    cols.append(f"{metric} KL vs. {ref}")
            lines += ["## KL divergence by prompt variant", "", _md_header(cols)]
            for variant, cells in self.variant_matrix.items():
                row = [variant]
                for metric in ("length", "attr_count", "attr_type"):
                    for ref in self.reference_names:
                        row.append(_fmt_kl(cells.get(f"{metric}:{ref}")))
                lines.append(_md_row(row))
            lines.append("")

        return "\n".join(lines)


def _md_header(cols: list[str]) -> str:
    return _md_row(cols) + "\n" + "|" + "|".join("---" for _ in cols) + "|"


def _md_row(cells: list[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _fmt_kl(v: float | None) -> str:
    return "-" if v is None else f"{v:.4f}"


def compare(
    datasets: Mapping[str, Sequence[str]],
    reference_names: Sequence[str],
    alpha: float = DEFAULT_ALPHA,
    lexicon: Mapping[str, str] | None = None,
    variant_slices: Mapping[str, Sequence[str]] | None = None,
) -> ComparisonReport:
    """Compare named query sets against the given reference datasets."""
    if len(datasets) < 2:
        raise InputError("compare requires at least two datasets")
    for ref in reference_names:
        if ref not in datasets:
            raise InputError(f"reference {ref!r} is not among the datasets")
    if lexicon is None:
        lexicon = default_attribute_lexicon()

    names = list(datasets)
    lengths = {n: LengthDistribution.from_queries(datasets[n]) for n in names}
    attrs = {n: AttributeDistribution.from_queries(datasets[n], lexicon) for n in names}
    low_n = [n for n in names if lengths[n].n < LOW_N_THRESHOLD]

    kl_length: dict[str, dict[str, float]] = {}
    kl_attr_type: dict[str, dict[str, float]] = {}
    kl_attr_count: dict[str, dict[str, float]] = {}
    for n in names:
        kl_length[n] = {}
        kl_attr_type[n] = {}
        kl_attr_count[n] = {}
        for ref in reference_names:
            kl_length[n][ref] = kl_divergence(
                lengths[ref].counts, lengths[n].counts, alpha
            )
            kl_attr_type[n][ref] = kl_divergence(
                attrs[ref].type_counts, attrs[n].type_counts, alpha
            )
            kl_attr_count[n][ref] = kl_divergence(
                attrs[ref].count_hist, attrs[n].count_hist, alpha
            )

    variant_matrix = None
    if variant_slices:
        variant_matrix = {}
        for variant, queries in variant_slices.items():
            vl = LengthDistribution.from_queries(queries)
            va = AttributeDistribution.from_queries(queries, lexicon)
            cells: dict[str, float] = {}
            for ref in reference_names:
                cells[f"length:{ref}"] = kl_divergence(
                    lengths[ref].counts, vl.counts, alpha
                )
                cells[f"attr_count:{ref}"] = kl_divergence(
                    attrs[ref].count_hist, va.count_hist, alpha
                )
                cells[f"attr_type:{ref}"] = kl_divergence(
                    attrs[ref].type_counts, va.type_counts, alpha
                )
            variant_matrix[variant] = cells

    return ComparisonReport(
        dataset_names=names,
        reference_names=list(reference_names),
        alpha=alpha,
        lengths=lengths,
        attributes=attrs,
        kl_length=kl_length,
        kl_attr_type=kl_attr_type,
        kl_attr_count=kl_attr_count,
        top_types={n: attrs[n].top_types() for n in names},
        low_n_warnings=low_n,
        variant_matrix=variant_matrix,
    )
