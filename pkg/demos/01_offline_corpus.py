"""Generate the deterministic offline corpus and render a feature block.

The fixture stands in for proprietary search logs: listings with structured
features, booked search sessions, and survey-style seed queries, all drawn
from a fixed lexicon so every downstream stage works offline.
"""

from coldstart import corpus

listings, sessions, seeds = corpus.generate_fixture(seed=7, n_listings=50, n_sessions=20)
real = corpus.generate_real_queries(seed=7, n=20)

print(f"{len(listings)} listings, {len(sessions)} sessions, {len(seeds)} seed queries\n")

listing = listings[0]
print("A listing:")
print(f"  {listing.id}: {listing.title!r}")
print(f"  amenities: {', '.join(listing.amenities[:6])}")
print(f"  {listing.bedrooms} bed / {listing.bathrooms} bath {listing.property_type}, "
      f"{listing.price_per_night:.0f}/night\n")

session = next(s for s in sessions if s.booked_impression)
print(f"A session ({session.session_id}) in {session.context.location}: "
      f"{len(session.impressions)} impressions, booked={session.booked_impression.listing_id}\n")

print("Seed queries are verbose, survey style:")
for seed in seeds[:3]:
    print(f"  - {seed.text}")
print("\nReal-traffic stand-ins are terse:")
for q in real[:3]:
    print(f"  - {q}")

print("\nPrompt-ready feature block (description capped, top-5 amenities):")
block = corpus.render_feature_block(listing, session.context)
print(block.rendered_text)
print(f"\ntruncation_applied={block.truncation_applied}")
