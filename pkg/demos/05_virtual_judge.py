"""Virtual Judge relabeling, human calibration, and self-preference analysis.

The judge sees two grounded feature blocks per query and must end with a
single token (A/B/TIE); presentation order is randomized and mapped back.
"""

import random

from coldstart import corpus, generation, judging, promptkit, sampling

listings, sessions, seeds = corpus.generate_fixture(seed=7, n_listings=200, n_sessions=200)
catalog = {l.id: l for l in listings}

triplets = []
i = 0
while len(triplets) < 120:
    session = sessions[i % len(sessions)]
    pair = sampling.sample_pair(session, catalog, random.Random(f"vj:{i}"))
    i += 1
    if pair is None:
        continue
    t = generation.generate_triplet(
        pair, seeds[i % len(seeds)], promptkit.SEED_FREEFORM, "mock"
    )
    if isinstance(t, generation.SyntheticTriplet):
        triplets.append(t)

result = judging.relabel(triplets, listings, "mock", random.Random(0))
print(f"relabeled {len(result.records)} rows, {result.parse_errors} parse errors, "
      f"order-flip disagreement rate {result.order_flip_disagreement_rate:.2f}")
wins = {"x": 0, "y": 0, "tie": 0}
for rec in result.records:
    wins[rec.winner] += 1
print(f"verdicts: {wins}\n")

# calibration against a synthetic "human" file that disagrees on 13% of rows
vj_rows = [r.to_dict() for r in result.records]
rng = random.Random(1)
human_rows = [
    dict(r, winner=("y" if r["winner"] == "x" else "x")) if rng.random() < 0.13 else dict(r)
    for r in vj_rows
]
cal = judging.calibrate(vj_rows, human_rows)
print(f"calibration: n={cal.n}, agreement={cal.agreement_rate:.3f}")
print(f"confusion (vj -> human): {cal.confusion}\n")

# self-preference: construction-label oracle vs. a coin-flip judge
blocks = {}
for t in triplets:
    for lid in (t.positive_id, t.negative_id):
        blocks.setdefault(lid, corpus.render_feature_block(catalog[lid], t.context))
matrix = judging.self_preference(
    triplets,
    {"oracle": judging.construction_oracle_judge(),
     "coin": judging.coinflip_judge(random.Random(2))},
    blocks,
    min_n=50,
)
print(matrix.to_markdown())
