"""Mine contrastive pairs from sessions and build the difficulty tiers.

Easy: booked listing vs. any less-engaged impression from the same search.
Medium: negative restricted to the positive's category.
Hard: medium plus an embedding distance filter (textually close pairs).
"""

import random

from coldstart import corpus, sampling
from coldstart.evalharness import HashingEmbedder

listings, sessions, _ = corpus.generate_fixture(seed=7, n_listings=300, n_sessions=400)
catalog = {l.id: l for l in listings}

pairs = []
for i, session in enumerate(sessions):
    pair = sampling.sample_pair(session, catalog, random.Random(f"demo:{i}"))
    if pair is not None:
        pairs.append(pair)

medium = sampling.same_category_pairs(pairs)
hard = sampling.hierarchical_sample(pairs, HashingEmbedder(256), tau=0.5, same_category=True)

print(f"sessions: {len(sessions)}")
print(f"easy pairs:   {len(pairs)}")
print(f"medium pairs: {len(medium)}  (same category)")
print(f"hard pairs:   {len(hard)}  (same category, cosine distance <= 0.5)\n")

pair = hard[0]
print("One hard pair:")
print(f"  positive {pair.positive.id}: {pair.positive.title!r}")
print(f"  negative {pair.negative.id}: {pair.negative.title!r}")
print(f"  shared category: {pair.positive.category}")
print(f"  embedding similarity: {pair.embedding_similarity:.3f}")
