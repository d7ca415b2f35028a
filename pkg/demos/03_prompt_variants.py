"""Render the three prompt variants for one pair and diff their instructions.

All variants share five core components (assumption, blocklist, context
dedup, consistency, output format); they differ only in how the seed query
is used: exact template, style example, or not at all.
"""

import random

from coldstart import corpus, promptkit, sampling

listings, sessions, seeds = corpus.generate_fixture(seed=7, n_listings=50, n_sessions=30)
catalog = {l.id: l for l in listings}
pair = next(
    p
    for i, s in enumerate(sessions)
    if (p := sampling.sample_pair(s, catalog, random.Random(i)))
)
blocks = (
    corpus.render_feature_block(pair.positive, pair.context),
    corpus.render_feature_block(pair.negative, pair.context),
)
seed = seeds[0]

for variant in promptkit.VARIANTS.values():
    rendered = promptkit.render_prompt(
        variant, pair, blocks, seed=seed if variant.needs_seed else None
    )
    print(f"=== {variant.name} (temperature={variant.temperature}, "
          f"bounds={variant.length_bounds}) ===")
    print(f"components: {', '.join(rendered.component_ids)}")
    # show just the variant-specific instruction between the listings and rules
    body = rendered.text.split("Rules:")[0]
    instruction = body.split("Price per night:")[-1].split("\n", 1)[-1].strip()
    print(instruction)
    print()

hard_prompt = promptkit.render_prompt(
    promptkit.SEED_CONTROLLED, pair, blocks, seed=seed, difficulty="hard"
)
print("=== hard-difficulty addendum ===")
print(promptkit.component_text("hard_addendum"))
