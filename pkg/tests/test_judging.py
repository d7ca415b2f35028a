from __future__ import annotations

import random

import pytest

from coldstart import corpus, generation, judging, llmio, promptkit
from coldstart.corpus import FeatureBlock
from coldstart.errors import CalibrationError, InputError, JudgeParseError
from snapshot_inputs import CONTEXT


def block(listing_id, text):
    return FeatureBlock(listing_id=listing_id, rendered_text=text, truncation_applied=False)


class TestJudge:
    def test_overlap_rule_picks_a(self):
        a = block("A1", "pool near beach cabin")
        b = block("B1", "wifi downtown loft")
        verdict = judging.judge("pool near beach", a, b, "mock", random.Random(0))
        assert verdict.winner == "A"
        assert verdict.rationale

    def test_identical_blocks_tie(self):
        a = block("A1", "pool near beach")
        b = block("B1", "pool near beach")
        verdict = judging.judge("pool near beach", a, b, "mock", random.Random(0))
        assert verdict.winner == "tie"

    def test_invariant_under_order_swap(self):
        a = block("A1", "pool near beach cabin")
        b = block("B1", "wifi downtown")
        natural = judging.judge("pool cabin", a, b, "mock", judging._ForcedRng(False))
        swapped = judging.judge("pool cabin", a, b, "mock", judging._ForcedRng(True))
        assert natural.winner == swapped.winner == "A"
        assert not natural.swapped and swapped.swapped

    def test_order_flip_disagreement_rate_is_zero_for_mock(self):
        a = block("A1", "pool near beach cabin")
        b = block("B1", "wifi downtown")
        assert not judging.order_flip_disagreement("pool cabin", a, b, "mock")

    def test_unparsable_final_token(self, backend_registry):
        class BadJudge:
            backend_id = "bad-judge"

            def complete(self, request):
                return "I cannot decide between these two."

        backend_registry(BadJudge())
        with pytest.raises(JudgeParseError):
            judging.judge(
                "q", block("A1", "x"), block("B1", "y"), "bad-judge", random.Random(0)
            )

    def test_batch_accuracy_matches_overlap_oracle(self, fixture_pairs, fixture_corpus):
        # judge 1,000 construction-labeled triplets with the overlap mock;
        # recompute every decision with an independent overlap oracle
        _, _, seeds = fixture_corpus
        from coldstart.analysis import normalize_tokens

        hits = 0.0
        oracle_hits = 0.0
        n = 0
        i = 0
        while n < 1000:
            pair = fixture_pairs[i % len(fixture_pairs)]
            seed = seeds[i % len(seeds)]
            i += 1
            t = generation.generate_triplet(
                pair, seed, promptkit.SEED_FREEFORM, "mock"
            )
            if not isinstance(t, generation.SyntheticTriplet):
                continue
            pos = corpus.render_feature_block(pair.positive, pair.context)
            neg = corpus.render_feature_block(pair.negative, pair.context)
            verdict = judging.judge(t.query, pos, neg, "mock", random.Random(i))
            if verdict.winner == "A":
                hits += 1
            elif verdict.winner == "tie":
                hits += 0.5
            q = set(normalize_tokens(t.query))
            oa = len(q & set(normalize_tokens(pos.rendered_text)))
            ob = len(q & set(normalize_tokens(neg.rendered_text)))
            oracle_hits += 1.0 if oa > ob else (0.5 if oa == ob else 0.0)
            n += 1
        assert hits == oracle_hits
        assert hits / n > 0.9


class TestRelabel:
    def test_cardinality_100_queries_pool_500(self):
        listings, sessions, seeds = corpus.generate_fixture(3, 500, 150)
        catalog = {l.id: l for l in listings}
        from coldstart import sampling

        triplets = []
        i = 0
        while len(triplets) < 100:
            session = sessions[i % len(sessions)]
            pair = sampling.sample_pair(session, catalog, random.Random(i))
            i += 1
            if pair is None:
                continue
            t = generation.generate_triplet(
                pair, seeds[i % len(seeds)], promptkit.SEED_FREEFORM, "mock"
            )
            if isinstance(t, generation.SyntheticTriplet):
                triplets.append(t)
        result = judging.relabel(triplets, listings, "mock", random.Random(0))
        assert len(result.records) == 100
        assert result.parse_errors == 0
        for rec in result.records:
            assert rec.winner in ("x", "y", "tie")
            assert rec.listing_x != rec.listing_y

    def test_degenerate_pool_originals_only(self, fixture_pairs, fixture_corpus):
        _, _, seeds = fixture_corpus
        pair = fixture_pairs[0]
        t = generation.generate_triplet(
            pair, seeds[0], promptkit.SEED_FREEFORM, "mock"
        )
        pool = [pair.positive, pair.negative]
        result = judging.relabel([t], pool, "mock", random.Random(0))
        assert len(result.records) == 1

    def test_empty_pool_raises(self, fixture_pairs, fixture_corpus):
        _, _, seeds = fixture_corpus
        t = generation.generate_triplet(
            fixture_pairs[0], seeds[0], promptkit.SEED_FREEFORM, "mock"
        )
        with pytest.raises(InputError):
            judging.relabel([t], [], "mock", random.Random(0))

    def test_order_flip_rate_reported_and_zero_for_mock(self, fixture_pairs, fixture_corpus):
        _, _, seeds = fixture_corpus
        triplets = []
        for i, pair in enumerate(fixture_pairs[:10]):
            t = generation.generate_triplet(
                pair, seeds[i], promptkit.SEED_FREEFORM, "mock"
            )
            if isinstance(t, generation.SyntheticTriplet):
                triplets.append(t)
        pool = [p.positive for p in fixture_pairs[:30]] + [p.negative for p in fixture_pairs[:30]]
        pool = list({l.id: l for l in pool}.values())
        result = judging.relabel(triplets, pool, "mock", random.Random(0))
        assert result.order_flip_probes > 0
        assert result.order_flip_disagreement_rate == 0.0


class TestCalibrate:
    def rows(self, winners):
        return [
            {"query": f"q{i}", "listing_x": "x", "listing_y": "y", "winner": w}
            for i, w in enumerate(winners)
        ]

    def test_identical_files_agree_fully(self):
        rows = self.rows(["x", "y", "tie"] * 10)
        report = judging.calibrate(rows, rows)
        assert report.agreement_rate == 1.0
        assert report.n == 30

    def test_fully_inverted_zero(self):
        left = self.rows(["x"] * 20)
        right = self.rows(["y"] * 20)
        report = judging.calibrate(left, right)
        assert report.agreement_rate == 0.0

    def test_200_rows_174_agreements_exactly_087(self):
        left = self.rows(["x"] * 200)
        right = self.rows(["x"] * 174 + ["y"] * 26)
        report = judging.calibrate(left, right)
        assert report.n == 200
        assert report.agreement_rate == 0.87
        assert report.confusion["x"]["x"] == 174
        assert report.confusion["x"]["y"] == 26

    def test_symmetric_agreement(self):
        left = self.rows(["x", "y", "x", "tie", "y"] * 8)
        right = self.rows(["x", "x", "x", "tie", "y"] * 8)
        assert (
            judging.calibrate(left, right).agreement_rate
            == judging.calibrate(right, left).agreement_rate
        )

    def test_unjoined_counted(self):
        left = self.rows(["x"] * 10)
        right = self.rows(["x"] * 6)
        report = judging.calibrate(left, right)
        assert report.n == 6
        assert report.unjoined_left == 4
        assert report.unjoined_right == 0

    def test_empty_join_raises(self):
        left = self.rows(["x"])
        right = [
            {"query": "other", "listing_x": "x", "listing_y": "y", "winner": "x"}
        ]
        with pytest.raises(CalibrationError):
            judging.calibrate(left, right)


def make_triplets(generator_id, n, start=0):
    out = []
    for i in range(start, start + n):
        out.append(
            generation.SyntheticTriplet(
                query=f"query {i}",
                positive_id=f"P{i}",
                negative_id=f"N{i}",
                context=CONTEXT,
                variant="variety",
                difficulty="easy",
                generation=llmio.GenerationOutput("j", "t", f"query {i}", ("a",)),
                provenance=generation.Provenance(generator_id, None, {}, ""),
            )
        )
    return out


def make_blocks_for(triplets):
    blocks = {}
    for t in triplets:
        blocks[t.positive_id] = block(t.positive_id, f"pos text {t.positive_id}")
        blocks[t.negative_id] = block(t.negative_id, f"neg text {t.negative_id}")
    return blocks


class TestSelfPreference:
    def test_construction_oracle_all_cells_one(self):
        triplets = make_triplets("g1", 60) + make_triplets("g2", 60, start=100)
        blocks = make_blocks_for(triplets)
        matrix = judging.self_preference(
            triplets, {"oracle": judging.construction_oracle_judge()}, blocks, min_n=50
        )
        for gen in matrix.generators:
            cell = matrix.cells[gen]["oracle"]
            assert cell.accuracy == 1.0
            assert cell.sufficient

    def test_coinflip_near_half_over_2000(self):
        triplets = make_triplets("g1", 2000)
        blocks = make_blocks_for(triplets)
        matrix = judging.self_preference(
            triplets,
            {"coin": judging.coinflip_judge(random.Random(123))},
            blocks,
            min_n=50,
        )
        assert abs(matrix.cells["g1"]["coin"].accuracy - 0.5) <= 0.05

    def test_tie_counts_half(self):
        triplets = make_triplets("g1", 60)
        blocks = make_blocks_for(triplets)

        def tie_judge(t, a, b):
            return judging.JudgeVerdict(winner="tie", rationale="", backend_id="tie")

        matrix = judging.self_preference(triplets, {"tie": tie_judge}, blocks)
        assert matrix.cells["g1"]["tie"].accuracy == 0.5

    def test_insufficient_cell_flagged(self):
        triplets = make_triplets("g1", 10)
        blocks = make_blocks_for(triplets)
        matrix = judging.self_preference(
            triplets, {"oracle": judging.construction_oracle_judge()}, blocks, min_n=50
        )
        assert not matrix.cells["g1"]["oracle"].sufficient

    def test_markdown_schema(self):
        triplets = make_triplets("g1", 60) + make_triplets("g2", 60, start=100)
        blocks = make_blocks_for(triplets)
        matrix = judging.self_preference(
            triplets, {"oracle": judging.construction_oracle_judge()}, blocks
        )
        md = matrix.to_markdown()
        assert "Generator \\ Judge" in md
        assert "| g1 |" in md
        assert "1.000 (n=60)" in md

    def test_gap_report_when_diagonal_dominates(self):
        triplets = make_triplets("g1", 60) + make_triplets("g2", 60, start=100)
        blocks = make_blocks_for(triplets)
        oracle = judging.construction_oracle_judge()
        coin = judging.coinflip_judge(random.Random(7))

        def g1_self_preferring(t, a, b):
            if t.provenance.backend_id == "g1":
                return oracle(t, a, b)
            return coin(t, a, b)

        matrix = judging.self_preference(
            triplets, {"g1": g1_self_preferring, "g2": coin}, blocks
        )
        assert matrix.gap_report is not None
        assert "Self-preference gap" in matrix.gap_report
