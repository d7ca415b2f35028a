"""Virtual Judge relabeling, human calibration, and self-preference analysis.

The judge sees two grounded feature blocks and must end its answer with a
single token (A, B, or TIE). Presentation order is randomized per call and
recorded, with the verdict mapped back, so position bias shows up in
measurements instead of silently skewing labels.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import FeatureBlock, FeatureLimits, Listing, render_feature_block
from .errors import CalibrationError, InputError, JudgeParseError
from .generation import SyntheticTriplet
from .llmio import CompletionRequest, complete
from .promptkit import component_text

WINNERS = ("A", "B", "tie")


@dataclass(frozen=True)
class JudgeVerdict:
    winner: str  # "A" | "B" | "tie", relative to the caller's (a, b) order
    rationale: str
    backend_id: str
    swapped: bool = False  # True when (b, a) was the presented order

    def __post_init__(self):
        if self.winner not in WINNERS:
            raise InputError(f"invalid winner {self.winner!r}")
        if self.winner != "tie" and not self.rationale:
            raise InputError("rationale required for a non-tie verdict")


def _judge_prompt(query: str, first: FeatureBlock, second: FeatureBlock) -> str:
    return "\n".join(
        [
            component_text("judge_instructions"),
            "",
            f"Query: {query}",
            "",
            "Candidate A:",
            first.rendered_text,
            "",
            "Candidate B:",
            second.rendered_text,
            "",
        ]
    )


def _parse_final_token(raw: str) -> str:
    lines = [l.strip() for l in raw.splitlines() if l.strip()]
    if not lines:
        raise JudgeParseError("empty judge output")
    token = lines[-1].strip().strip(".").upper()
    if token not in ("A", "B", "TIE"):
        raise JudgeParseError(f"final line is not A/B/TIE: {lines[-1]!r}")
    return token


def judge(
    query: str,
    a: FeatureBlock,
    b: FeatureBlock,
    backend_id: str,
    rng: random.Random,
    temperature: float = 0.0,
) -> JudgeVerdict:
    """Ask the backend which block better matches the query.

    The (a, b) presentation order is flipped with probability 0.5; the
    returned winner always refers to the caller's original order.
    """
    swapped = rng.random() < 0.5
    first, second = (b, a) if swapped else (a, b)
    raw = complete(
        CompletionRequest(
            prompt=_judge_prompt(query, first, second),
            temperature=temperature,
            max_tokens=512,
            backend_id=backend_id,
        )
    )
    token = _parse_final_token(raw)
    if token == "TIE":
        winner = "tie"
    elif swapped:
        winner = "B" if token == "A" else "A"
    else:
        winner = token
    return JudgeVerdict(
        winner=winner, rationale=raw, backend_id=backend_id, swapped=swapped
    )


def order_flip_disagreement(
    query: str, a: FeatureBlock, b: FeatureBlock, backend_id: str
) -> bool:
    """Measure position bias: judge both orders, compare mapped verdicts."""
    forced_ab = judge(query, a, b, backend_id, rng=_ForcedRng(False))
    forced_ba = judge(query, a, b, backend_id, rng=_ForcedRng(True))
    return forced_ab.winner != forced_ba.winner


class _ForcedRng(random.Random):
    """Random source that forces the judge's swap decision."""

    def __init__(self, swap: bool):
        super().__init__(0)
        self._swap = swap

    def random(self) -> float:  # type: ignore[override]
        return 0.0 if self._swap else 1.0


# ---------------------------------------------------------------------------
# Relabeling


@dataclass(frozen=True)
class VJRecord:
    query: str
    listing_x: str
    listing_y: str
    winner: str  # "x" | "y" | "tie"
    backend_id: str

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "listing_x": self.listing_x,
            "listing_y": self.listing_y,
            "winner": self.winner,
            "backend_id": self.backend_id,
        }


@dataclass
class RelabelResult:
    records: list[VJRecord]
    parse_errors: int = 0
    # Position bias is measured on a probe sample, never assumed away.
    order_flip_probes: int = 0
    order_flip_disagreements: int = 0

    @property
    def order_flip_disagreement_rate(self) -> float:
        if not self.order_flip_probes:
            return 0.0
        return self.order_flip_disagreements / self.order_flip_probes


def relabel(
    triplets: Sequence[SyntheticTriplet],
    listings_pool: Sequence[Listing],
    backend_id: str,
    rng: random.Random,
    limits: FeatureLimits = FeatureLimits(),
    bias_probe_n: int = 20,
) -> RelabelResult:
    """Re-judge each query against its original listing and a pool draw.

    The construction label is deliberately not carried over; the judge's
    verdict is the only label emitted. Parse failures are counted, not
    fatal. The first ``bias_probe_n`` rows are additionally judged in both
    presentation orders to measure the backend's position bias.
    """
    if not listings_pool:
        raise InputError("relabel requires a non-empty listings pool")
    by_id = {l.id: l for l in listings_pool}
    records: list[VJRecord] = []
    parse_errors = 0
    probes = disagreements = 0
    for t in triplets:
        original = by_id.get(t.positive_id)
        if original is None:
            # Original listing absent from the pool: judge two pool draws.
            original = listings_pool[rng.randrange(len(listings_pool))]
        candidates = [l for l in listings_pool if l.id != original.id]
        other = candidates[rng.randrange(len(candidates))] if candidates else original
        block_x = render_feature_block(original, t.context, limits)
        block_y = render_feature_block(other, t.context, limits)
        try:
            verdict = judge(t.query, block_x, block_y, backend_id, rng)
        except JudgeParseError:
            parse_errors += 1
            continue
        if probes < bias_probe_n:
            probes += 1
            try:
                if order_flip_disagreement(t.query, block_x, block_y, backend_id):
                    disagreements += 1
            except JudgeParseError:
                parse_errors += 1
        winner = {"A": "x", "B": "y", "tie": "tie"}[verdict.winner]
        records.append(
            VJRecord(
                query=t.query,
                listing_x=original.id,
                listing_y=other.id,
                winner=winner,
                backend_id=backend_id,
            )
        )
    return RelabelResult(
        records=records,
        parse_errors=parse_errors,
        order_flip_probes=probes,
        order_flip_disagreements=disagreements,
    )


# ---------------------------------------------------------------------------
# Calibration against human labels


@dataclass
class CalibrationReport:
    n: int
    agreement_rate: float
    confusion: dict[str, dict[str, int]]
    unjoined_left: int
    unjoined_right: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "agreement_rate": self.agreement_rate,
            "confusion": self.confusion,
            "unjoined_left": self.unjoined_left,
            "unjoined_right": self.unjoined_right,
        }


def _row_key(row: Mapping) -> tuple[str, str, str]:
    return (row["query"], row["listing_x"], row["listing_y"])


def calibrate(
    vj_labels: Iterable[Mapping | VJRecord],
    human_labels: Iterable[Mapping | VJRecord],
) -> CalibrationReport:
    """Agreement rate between two label files joined on (query, x, y)."""
    left = {_row_key(_as_dict(r)): _as_dict(r)["winner"] for r in vj_labels}
    right = {_row_key(_as_dict(r)): _as_dict(r)["winner"] for r in human_labels}
    joined = sorted(set(left) & set(right))
    if not joined:
        raise CalibrationError("no joinable rows between the two label files")
    labels = ("x", "y", "tie")
    confusion = {a: {b: 0 for b in labels} for a in labels}
    agree = 0
    for key in joined:
        lw, rw = left[key], right[key]
        confusion.setdefault(lw, {b: 0 for b in labels})
        confusion[lw].setdefault(rw, 0)
        confusion[lw][rw] += 1
        if lw == rw:
            agree += 1
    return CalibrationReport(
        n=len(joined),
        agreement_rate=agree / len(joined),
        confusion=confusion,
        unjoined_left=len(left) - len(joined),
        unjoined_right=len(right) - len(joined),
    )


def _as_dict(row: Mapping | VJRecord) -> Mapping:
    return row.to_dict() if isinstance(row, VJRecord) else row


# ---------------------------------------------------------------------------
# Self-preference analysis

# A judge function receives the triplet plus the positive and negative
# blocks (in that order) and returns a verdict relative to that order.
JudgeFn = Callable[[SyntheticTriplet, FeatureBlock, FeatureBlock], JudgeVerdict]


def backend_judge(backend_id: str, rng: random.Random) -> JudgeFn:
    def fn(t: SyntheticTriplet, a: FeatureBlock, b: FeatureBlock) -> JudgeVerdict:
        return judge(t.query, a, b, backend_id, rng)

    return fn


def construction_oracle_judge() -> JudgeFn:
    """Judge that reads the construction label: always picks the positive."""

    def fn(t: SyntheticTriplet, a: FeatureBlock, b: FeatureBlock) -> JudgeVerdict:
        winner = "A" if a.listing_id == t.positive_id else "B"
        return JudgeVerdict(
            winner=winner, rationale="construction label", backend_id="oracle"
        )

    return fn


def coinflip_judge(rng: random.Random) -> JudgeFn:
    def fn(t: SyntheticTriplet, a: FeatureBlock, b: FeatureBlock) -> JudgeVerdict:
        winner = "A" if rng.random() < 0.5 else "B"
        return JudgeVerdict(winner=winner, rationale="coin flip", backend_id="coinflip")

    return fn


@dataclass
class MatrixCell:
    accuracy: float
    n: int
    sufficient: bool

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "n": self.n, "sufficient": self.sufficient}


@dataclass
class SelfPreferenceMatrix:
    generators: list[str]
    judges: list[str]
    cells: dict[str, dict[str, MatrixCell]]  # generator -> judge -> cell
    min_n: int
    gap_report: str | None = None

    def to_dict(self) -> dict:
        return {
            "generators": self.generators,
            "judges": self.judges,
            "min_n": self.min_n,
            "cells": {
                g: {j: c.to_dict() for j, c in row.items()}
                for g, row in self.cells.items()
            },
            "gap_report": self.gap_report,
        }

    def to_markdown(self) -> str:
        lines = [
            "| Generator \\ Judge | " + " | ".join(self.judges) + " |",
            "|" + "|".join("---" for _ in range(len(self.judges) + 1)) + "|",
        ]
        for g in self.generators:
            cells = []
            for j in self.judges:
                c = self.cells[g][j]
                cells.append(
                    f"{c.accuracy:.3f} (n={c.n})" if c.sufficient else f"insufficient (n={c.n})"
                )
            lines.append("| " + g + " | " + " | ".join(cells) + " |")
        if self.gap_report:
            lines += ["", self.gap_report]
        return "\n".join(lines)


def self_preference(
    triplets: Sequence[SyntheticTriplet],
    judges: Mapping[str, JudgeFn],
    blocks: Mapping[str, FeatureBlock],
    min_n: int = 50,
) -> SelfPreferenceMatrix:
    """Accuracy of each judge against construction labels, per generator.

    Triplets are grouped by their generator backend id (provenance); a
    judge's accuracy counts wins for the positive, with ties worth 0.5.
    Cells with fewer than ``min_n`` samples are flagged insufficient.
    """
    if not triplets:
        raise InputError("self_preference requires triplets")
    by_gen: dict[str, list[SyntheticTriplet]] = {}
    for t in triplets:
        by_gen.setdefault(t.provenance.backend_id, []).append(t)

    generators = sorted(by_gen)
    judge_ids = list(judges)
    cells: dict[str, dict[str, MatrixCell]] = {}
    for gen in generators:
        cells[gen] = {}
        for jid in judge_ids:
            fn = judges[jid]
            score = 0.0
            n = 0
            for t in by_gen[gen]:
                a = blocks.get(t.positive_id)
                b = blocks.get(t.negative_id)
                if a is None or b is None:
                    continue
                verdict = fn(t, a, b)
                if verdict.winner == "A":
                    score += 1.0
                elif verdict.winner == "tie":
                    score += 0.5
                n += 1
            accuracy = score / n if n else 0.0
            cells[gen][jid] = MatrixCell(accuracy=accuracy, n=n, sufficient=n >= min_n)

    gap_report = _gap_report(generators, judge_ids, cells)
    return SelfPreferenceMatrix(
        generators=generators,
        judges=judge_ids,
        cells=cells,
        min_n=min_n,
        gap_report=gap_report,
    )


def _gap_report(
    generators: list[str],
    judge_ids: list[str],
    cells: dict[str, dict[str, MatrixCell]],
) -> str | None:
    diag = [
        cells[g][g].accuracy for g in generators if g in judge_ids and cells[g][g].n
    ]
    off = [
        cells[g][j].accuracy
        for g in generators
        for j in judge_ids
        if j != g and cells[g][j].n
    ]
    if not diag or not off:
        return None
    diag_mean = statistics.fmean(diag)
    off_mean = statistics.fmean(off)
    if diag_mean > off_mean:
        return (
            f"Self-preference gap: same-model cells average {diag_mean:.3f} vs "
            f"{off_mean:.3f} for cross-model cells (+{diag_mean - off_mean:.3f})."
        )
    return None
