from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldstart import evalharness, generation, llmio
from coldstart.errors import InputError
from coldstart.evalharness import (
    HashingEmbedder,
    cosine,
    hash_embed,
    pairwise_accuracy,
)
from snapshot_inputs import CONTEXT

WORDS = st.text(alphabet="abcdefgh", min_size=1, max_size=6)


class TestHashEmbed:
    def test_deterministic(self):
        a = hash_embed("pool near beach", 64)
        b = hash_embed("pool near beach", 64)
        assert np.array_equal(a.values, b.values)

    def test_scaling_invariance(self):
        a = hash_embed("pool", 64)
        b = hash_embed("pool pool", 64)
        assert cosine(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_unit_norm(self):
        v = hash_embed("cozy cabin with sauna", 128)
        assert np.linalg.norm(v.values) == pytest.approx(1.0, abs=1e-12)

    def test_lexical_ordering_example(self):
        q = hash_embed("pool near beach", 256)
        close = hash_embed("beach pool", 256)
        far = hash_embed("city loft parking", 256)
        assert cosine(q, close) > cosine(q, far)

    def test_min_dim(self):
        with pytest.raises(InputError):
            hash_embed("pool", 8)

    def test_empty_text(self):
        with pytest.raises(InputError):
            hash_embed("  ...  ", 64)

    @given(st.lists(WORDS, min_size=1, max_size=6), st.lists(WORDS, min_size=1, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_cosine_bounded_and_symmetric(self, ws1, ws2):
        a = hash_embed(" ".join(ws1), 32)
        b = hash_embed(" ".join(ws2), 32)
        c = cosine(a, b)
        assert -1.0 - 1e-9 <= c <= 1.0 + 1e-9
        assert c == cosine(b, a)


def planted_triplet(i, query, difficulty="easy", variant="variety"):
    return generation.SyntheticTriplet(
        query=query,
        positive_id=f"P{i}",
        negative_id=f"N{i}",
        context=CONTEXT,
        variant=variant,
        difficulty=difficulty,
        generation=llmio.GenerationOutput("j", "t", query, ("a",)),
        provenance=generation.Provenance("mock", None, {}, ""),
    )


def planted_dataset(n, rng=None):
    """Query tokens appear in the positive text and never in the negative."""
    rng = rng or random.Random(0)
    pos_vocab = ["pool", "sauna", "fireplace", "garden", "piano", "hammock"]
    neg_vocab = ["wifi", "parking", "elevator", "dishwasher", "crib", "gym"]
    triplets, texts = [], {}
    for i in range(n):
        q_words = rng.sample(pos_vocab, 3)
        t = planted_triplet(i, " ".join(q_words), difficulty=rng.choice(["easy", "hard"]))
        texts[t.positive_id] = " ".join(pos_vocab)
        texts[t.negative_id] = " ".join(rng.sample(neg_vocab, 4))
        triplets.append(t)
    return triplets, texts


class TestPairwiseAccuracy:
    def test_planted_disjoint_tokens_accuracy_one(self):
        triplets, texts = planted_dataset(500)
        result = pairwise_accuracy(triplets, HashingEmbedder(256), texts)
        assert result.accuracy == 1.0
        assert result.ties == 0
        assert set(result.by_difficulty) <= {"easy", "hard"}

    def test_label_shuffle_near_half(self):
        rng = random.Random(42)
        triplets, texts = planted_dataset(2000, rng)
        flipped = []
        for t in triplets:
            if rng.random() < 0.5:
                t = generation.SyntheticTriplet(
                    query=t.query,
                    positive_id=t.negative_id,
                    negative_id=t.positive_id,
                    context=t.context,
                    variant=t.variant,
                    difficulty=t.difficulty,
                    generation=t.generation,
                    provenance=t.provenance,
                )
            flipped.append(t)
        result = pairwise_accuracy(flipped, HashingEmbedder(256), texts)
        assert abs(result.accuracy - 0.5) <= 0.05

    def test_swap_all_labels_exact_complement(self):
        # n = 2048 keeps every accuracy value dyadic, so 1 - a is exact
        triplets, texts = planted_dataset(2048)
        embedder = HashingEmbedder(256)
        base = pairwise_accuracy(triplets, embedder, texts)
        swapped = [
            generation.SyntheticTriplet(
                query=t.query,
                positive_id=t.negative_id,
                negative_id=t.positive_id,
                context=t.context,
                variant=t.variant,
                difficulty=t.difficulty,
                generation=t.generation,
                provenance=t.provenance,
            )
            for t in triplets
        ]
        result = pairwise_accuracy(swapped, embedder, texts)
        assert result.accuracy == 1.0 - base.accuracy
        assert result.ties == base.ties

    def test_monotone_rescaling_invariance(self):
        # accuracy only depends on score ordering; a monotone rescale of the
        # embedding space (identical direction, scaled cosine) keeps results
        triplets, texts = planted_dataset(200)
        base = pairwise_accuracy(triplets, HashingEmbedder(64), texts)

        class Scaled:
            name, dim = "scaled", 64

            def __call__(self, text):
                return hash_embed(text, 64)

        again = pairwise_accuracy(triplets, Scaled(), texts)
        assert again.accuracy == base.accuracy

    def test_slices_present(self):
        triplets, texts = planted_dataset(100)
        result = pairwise_accuracy(triplets, HashingEmbedder(64), texts)
        assert sum(r.n for r in result.by_difficulty.values()) == result.n
        assert "variety" in result.by_variant

    def test_empty_set_raises(self):
        with pytest.raises(InputError):
            pairwise_accuracy([], HashingEmbedder(64), {})

    def test_unresolvable_listing_raises(self):
        triplets, texts = planted_dataset(3)
        texts.pop(triplets[0].positive_id)
        with pytest.raises(InputError):
            pairwise_accuracy(triplets, HashingEmbedder(64), texts)


def test_eval_result_json_schema():
    triplets, texts = planted_dataset(64)
    result = pairwise_accuracy(triplets, HashingEmbedder(64), texts)
    import json

    doc = json.loads(evalharness.eval_result_json(result, "hashing", 64, "planted"))
    assert doc["embedder"] == {"name": "hashing", "dim": 64}
    assert doc["rows"][0] == {
        "model": "hashing",
        "size": 64,
        "dataset": "planted",
        "accuracy": result.accuracy,
    }
    assert {"model", "size", "dataset", "accuracy"} == set(doc["rows"][0])
