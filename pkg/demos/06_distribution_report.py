"""Compare query-length and attribute distributions across datasets.

Renders the full markdown report: length stats with KL vs. each reference,
attribute-type and attribute-count KL, top types, and per-variant KL.
"""

import random

from coldstart import analysis, corpus, generation, promptkit, sampling

listings, sessions, seeds = corpus.generate_fixture(seed=7, n_listings=200, n_sessions=300)
catalog = {l.id: l for l in listings}
real = corpus.generate_real_queries(seed=7, n=300)

synthetic = []
by_variant = {}
i = 0
while len(synthetic) < 300:
    session = sessions[i % len(sessions)]
    pair = sampling.sample_pair(session, catalog, random.Random(f"a:{i}"))
    i += 1
    if pair is None:
        continue
    variant = promptkit.VARIANTS[("seed_controlled", "seed_freeform", "variety")[i % 3]]
    seed = seeds[i % len(seeds)] if variant.needs_seed else None
    t = generation.generate_triplet(pair, seed, variant, "mock")
    if isinstance(t, generation.SyntheticTriplet):
        synthetic.append(t.query)
        by_variant.setdefault(variant.name, []).append(t.query)

report = analysis.compare(
    {"synthetic": synthetic, "seed": [s.text for s in seeds], "real": real},
    reference_names=["real", "seed"],
    variant_slices=by_variant,
)
print(report.to_markdown())

print("single-query attribute tagging:")
lex = analysis.default_attribute_lexicon()
for q in ("pool near beach", "cozy cabin near ski resort", "pet friendly villa hot tub"):
    print(f"  {q!r} -> {analysis.tag_attributes(q, lex)}")
