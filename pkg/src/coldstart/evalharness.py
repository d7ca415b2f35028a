"""Pairwise-accuracy evaluation of pluggable embedders over labeled triplets.

Ships a deterministic feature-hashing embedder as the offline stand-in for
production embedding models, plus an HTTP embedder sharing the same network
contract shape as the text backends.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Mapping, Sequence

import numpy as np

from .analysis import normalize_tokens
from .errors import BackendError, InputError
from .llmio import resolve_json_pointer

if TYPE_CHECKING:
    from .generation import SyntheticTriplet

TIE_EPSILON = 1e-12


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int

    def __post_init__(self):
        if self.values.shape != (self.dim,):
            raise InputError("vector shape does not match dim")


Embedder = Callable[[str], EmbeddingVector]


def hash_embed(text: str, dim: int = 256) -> EmbeddingVector:
    """Signed feature-hashing embedding, L2-normalized. Deterministic.

    Not semantically meaningful, but stable across runs and platforms,
    which is what offline tests and hard-pair filtering need.
    """
    if dim < 16:
        raise InputError("dim must be >= 16")
    tokens = normalize_tokens(text)
    if not tokens:
        raise InputError("cannot embed empty text")
    v = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        h = int.from_bytes(hashlib.md5(tok.encode("utf-8")).digest()[:8], "big")
        idx = h % dim
        sign = 1.0 if (h >> 1) & 1 else -1.0
        v[idx] += sign
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise InputError("text hashed to the zero vector")
    return EmbeddingVector(values=v / norm, dim=dim)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise InputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(a.values, b.values))


class HashingEmbedder:
    """Callable embedder wrapper carrying a descriptor for eval reports."""

    def __init__(self, dim: int = 256):
        self.name = "hashing"
        self.dim = dim

    def __call__(self, text: str) -> EmbeddingVector:
        return hash_embed(text, self.dim)


class HTTPEmbedder:
    """Network embedder: POST text, read the vector at a JSON pointer.

    Same contract shape as the llmio HTTP backend; the bearer token comes
    from COLDSTART_<NAME>_API_KEY.
    """

    def __init__(self, name: str, url: str, dim: int, vector_pointer: str = "/embedding",
                 timeout_s: float = 30.0):
        self.name = name
        self.url = url
        self.dim = dim
        self.vector_pointer = vector_pointer
        self.timeout_s = timeout_s

    def __call__(self, text: str) -> EmbeddingVector:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(f"COLDSTART_{self.name.upper().replace('-', '_')}_API_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(
                self.url, json={"input": text}, headers=headers, timeout=self.timeout_s
            )
            resp.raise_for_status()
            vec = resolve_json_pointer(resp.json(), self.vector_pointer)
        except Exception as e:  # pragma: no cover - exercised via stub server
            raise BackendError(self.name, e) from e
        values = np.asarray(vec, dtype=np.float64)
        norm = np.linalg.norm(values)
        if norm == 0.0:
            raise BackendError(self.name, "embedder returned a zero vector")
        return EmbeddingVector(values=values / norm, dim=values.shape[0])


@dataclass
class PairwiseAccuracyResult:
    n: int
    wins: int
    losses: int
    ties: int
    accuracy: float
    by_difficulty: dict[str, "PairwiseAccuracyResult"] = field(default_factory=dict)
    by_variant: dict[str, "PairwiseAccuracyResult"] = field(default_factory=dict)

    def to_dict(self, include_slices: bool = True) -> dict:
        d = {
            "n": self.n,
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "accuracy": self.accuracy,
        }
        if include_slices:
            d["by_difficulty"] = {
                k: v.to_dict(False) for k, v in self.by_difficulty.items()
            }
            d["by_variant"] = {
                k: v.to_dict(False) for k, v in self.by_variant.items()
            }
        return d


def _tally(outcomes: Sequence[int]) -> PairwiseAccuracyResult:
    wins = sum(1 for o in outcomes if o > 0)
    losses = sum(1 for o in outcomes if o < 0)
    ties = sum(1 for o in outcomes if o == 0)
    n = len(outcomes)
    return PairwiseAccuracyResult(
        n=n,
        wins=wins,
        losses=losses,
        ties=ties,
        accuracy=(wins + 0.5 * ties) / n,
    )


def pairwise_accuracy(
    triplets: Sequence["SyntheticTriplet"],
    embedder: Embedder,
    block_texts: Mapping[str, str] | Callable[["SyntheticTriplet", str], str],
) -> PairwiseAccuracyResult:
    """Fraction of triplets where the positive outscores the negative.

    A triplet is a win when cosine(q, positive text) > cosine(q, negative
    text); ties (within 1e-12) count 0.5. ``block_texts`` maps listing id
    to rendered feature-block text, or is a (triplet, listing_id) resolver
    when the text depends on the triplet's search context.
    """
    if not triplets:
        raise InputError("pairwise_accuracy requires a non-empty triplet set")

    if callable(block_texts):
        resolve = block_texts
    else:
        mapping = block_texts

        def resolve(t: "SyntheticTriplet", lid: str) -> str:
            try:
                return mapping[lid]
            except KeyError:
                raise InputError(f"no feature-block text for listing {lid!r}")

    vec_cache: dict[str, EmbeddingVector] = {}

    def embed_text(text: str) -> EmbeddingVector:
        if text not in vec_cache:
            vec_cache[text] = embedder(text)
        return vec_cache[text]

    outcomes: list[int] = []
    diff_outcomes: dict[str, list[int]] = {}
    var_outcomes: dict[str, list[int]] = {}
    for t in triplets:
        qv = embed_text(t.query)
        s_pos = cosine(qv, embed_text(resolve(t, t.positive_id)))
        s_neg = cosine(qv, embed_text(resolve(t, t.negative_id)))
        if abs(s_pos - s_neg) <= TIE_EPSILON:
            o = 0
        else:
            o = 1 if s_pos > s_neg else -1
        outcomes.append(o)
        diff_outcomes.setdefault(t.difficulty, []).append(o)
        var_outcomes.setdefault(t.variant, []).append(o)

    result = _tally(outcomes)
    result.by_difficulty = {k: _tally(v) for k, v in sorted(diff_outcomes.items())}
    result.by_variant = {k: _tally(v) for k, v in sorted(var_outcomes.items())}
    return result


def eval_result_json(
    result: PairwiseAccuracyResult, embedder_name: str, dim: int, dataset: str
) -> str:
    """Serialize an eval run; rows mirror the retrieval-comparison table."""
    rows = [
        {
            "model": embedder_name,
            "size": dim,
            "dataset": dataset,
            "accuracy": result.accuracy,
        }
    ]
    for slice_name, sliced in result.by_difficulty.items():
        rows.append(
            {
                "model": embedder_name,
                "size": dim,
                "dataset": f"{dataset}:{slice_name}",
                "accuracy": sliced.accuracy,
            }
        )
    return json.dumps(
        {
            "embedder": {"name": embedder_name, "dim": dim},
            "dataset": dataset,
            "result": result.to_dict(),
            "rows": rows,
        },
        indent=2,
        sort_keys=True,
    )
