"""Generate triplets through the offline mock and show the validation gate.

Every accepted triplet passed the blocklist, context-deduplication,
consistency, and length checks; the demo also shows what a violating
generation looks like from the rule engine's side.
"""

import random

from coldstart import corpus, generation, promptkit, sampling

listings, sessions, seeds = corpus.generate_fixture(seed=7, n_listings=200, n_sessions=150)
catalog = {l.id: l for l in listings}

pairs = []
for i, session in enumerate(sessions):
    pair = sampling.sample_pair(session, catalog, random.Random(f"g:{i}"))
    if pair is not None:
        pairs.append(pair)

triplets = []
for i, pair in enumerate(pairs[:40]):
    variant = promptkit.VARIANTS[("seed_controlled", "seed_freeform", "variety")[i % 3]]
    seed = seeds[i % len(seeds)] if variant.needs_seed else None
    result = generation.generate_triplet(pair, seed, variant, "mock", timestamp="demo")
    if isinstance(result, generation.SyntheticTriplet):
        triplets.append(result)

print(f"accepted {len(triplets)} triplets; a few:")
for t in triplets[:6]:
    print(f"  [{t.variant:>15}] {t.query!r}  (l+={t.positive_id}, l-={t.negative_id})")

print("\nThe validation gate, on queries a sloppier generator might produce:")
ctx = triplets[0].context
for query in (
    "superhost cabin with instant book",
    f"nice stay in {ctx.location}",
    "cabin for 4 people",
    "pet friendly cabin" if ctx.pets == 0 else "cozy cabin",
    "cozy cabin near ski resort",
):
    report = generation.validate_query(query, ctx, (3, 8))
    verdict = "clean" if report.accepted else ", ".join(report.violations)
    print(f"  {query!r:45} -> {verdict}")

batch = triplets + triplets[:3]  # duplicates on purpose
survivors = generation.deduplicate(batch)
print(f"\ndedup: {len(batch)} in, {len(survivors)} out (exact normalized duplicates dropped)")
