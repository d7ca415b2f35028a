"""Built-in vocabulary used by the fixture generator and the attribute tagger.

The fixture catalog, sessions and seed queries are all composed from these
fixed lists, which guarantees that the lexicon-based attribute tagger has
full coverage over fixture data. None of the phrases contain platform
blocklist terms, so cleanly generated queries never trip the blocklist
by accident.
"""

from __future__ import annotations

AMENITIES = (
    "pool",
    "hot tub",
    "wifi",
    "fast wifi",
    "kitchen",
    "full kitchen",
    "parking",
    "free parking",
    "washer",
    "dryer",
    "air conditioning",
    "heating",
    "fireplace",
    "wood stove",
    "balcony",
    "patio",
    "garden",
    "bbq grill",
    "fire pit",
    "gym",
    "sauna",
    "jacuzzi",
    "beach access",
    "lake access",
    "kayaks",
    "bikes",
    "ev charger",
    "crib",
    "high chair",
    "workspace",
    "dedicated workspace",
    "smart tv",
    "game room",
    "pool table",
    "ping pong table",
    "piano",
    "record player",
    "board games",
    "coffee maker",
    "espresso machine",
    "dishwasher",
    "bathtub",
    "outdoor shower",
    "hammock",
    "rooftop terrace",
    "terrace",
    "deck",
    "private dock",
    "boat slip",
    "ski storage",
    "wine cellar",
    "home theater",
    "arcade games",
    "sun loungers",
    "outdoor dining area",
    "pizza oven",
    "laundry",
    "elevator",
    "wheelchair accessible",
    "pet friendly",
    "breakfast included",
    "blackout curtains",
)

PROPERTY_TYPES = (
    "cabin",
    "apartment",
    "house",
    "studio",
    "villa",
    "loft",
    "cottage",
    "bungalow",
    "condo",
    "townhouse",
    "farmhouse",
    "chalet",
    "barn",
    "treehouse",
    "tiny house",
    "houseboat",
    "guesthouse",
    "ranch",
    "castle",
    "yurt",
)

LOCATION_PHRASES = (
    "near beach",
    "near the beach",
    "downtown",
    "near ski resort",
    "lakefront",
    "near hiking trails",
    "city center",
    "near the marina",
    "mountain views",
    "oceanfront",
    "near vineyards",
    "quiet neighborhood",
    "near old town",
    "riverside",
    "near national park",
    "walkable area",
    "near nightlife",
    "countryside",
    "near botanical garden",
    "harbor views",
    "near art district",
    "close to metro",
    "forest edge",
    "near surf spots",
    "desert views",
    "near hot springs",
    "clifftop",
    "near fishing pier",
    "village center",
    "near golf course",
    "tropical garden",
    "near waterfalls",
    "historic quarter",
    "near farmers market",
    "steps from the boardwalk",
    "near city park",
    "near lighthouse",
    "hillside",
    "near thermal baths",
    "secluded woods",
)

# City-level context locations. Kept disjoint (token-wise) from the phrase
# lists above so fixture queries never echo a context city by accident.
CITIES = (
    "Paris",
    "Lisbon",
    "Kyoto",
    "Austin",
    "Denver",
    "Marrakesh",
    "Florence",
    "Tulum",
    "Savannah",
    "Oslo",
    "Porto",
    "Sedona",
    "Asheville",
    "Taos",
    "Nashville",
    "Barcelona",
    "Dublin",
    "Prague",
    "Queenstown",
    "Valparaiso",
)

VIBES = (
    "cozy",
    "romantic",
    "modern",
    "rustic",
    "charming",
    "spacious",
    "quiet",
    "luxurious",
    "minimalist",
    "sunny",
    "secluded",
    "airy",
    "stylish",
    "peaceful",
    "bohemian",
    "elegant",
    "bright",
    "serene",
    "eclectic",
    "vintage",
)

OCCASIONS = (
    "honeymoon",
    "anniversary",
    "birthday weekend",
    "christmas stay",
    "summer retreat",
    "winter escape",
    "spring break",
    "bachelorette weekend",
    "family reunion",
    "workcation",
    "ski trip",
    "road trip stop",
    "girls trip",
    "romantic getaway",
    "weekend getaway",
)

ROOM_PHRASES = (
    "one bedroom",
    "two bedroom",
    "three bedroom",
    "bedroom",
    "bedrooms",
    "two bathroom",
    "bathrooms",
    "bunk beds",
    "king bed",
    "queen bed",
    "twin beds",
)

OTHER_PHRASES = (
    "budget",
    "affordable",
    "cheap",
    "luxury",
    "last minute",
    "long stay",
    "monthly stay",
)

REVIEW_SNIPPETS = (
    "guests praise the {a} and the {v} atmosphere",
    "reviewers loved the {a}, several mention the {v} feel",
    "frequently complimented for its {a} and {a2}",
    "past guests highlight the {v} vibe and reliable {a}",
    "most reviews mention the {a}; a few note street noise",
)

DESCRIPTION_TEMPLATES = (
    "A {v} {p} featuring {a1}, {a2} and {a3}. Located {loc}. "
    "Great base for a {occ}.",
    "Escape to this {v} {p} with {a1} and {a2}. You'll find it {loc}, "
    "with {a3} available on request.",
    "This {v} {p} offers {a1}, {a2}, {a3} and more. Set {loc}, it works "
    "well for a {occ} or a longer stay.",
    "Our {v} {p} comes with {a1} and {a2}. The spot is {loc}; guests "
    "often book it for a {occ}.",
)

SEED_QUERY_TEMPLATES = (
    "I'm looking for a {v} {p} with {a1} {loc}",
    "need a place with {a1} and {a2} for a {occ}",
    "{v} {p} {loc} with {a1}",
    "somewhere {v} with {a1} for our {occ}",
    "looking for {p} with {a1}, {a2} and {a3}",
    "a {p} that has {a1} and is {loc}",
    "{a1} and {a2} {loc}",
    "{v} spot for a {occ} with {a1}",
    "can you find a {p} {loc} with {a1} and {a2}",
    "{v} {p} for a {occ}",
)

REAL_QUERY_TEMPLATES = (
    "{a1}",
    "{p}",
    "{a1} {loc}",
    "{v} {p}",
    "{p} {loc}",
    "{a1} {a2}",
    "{v} {p} {loc}",
    "{p} with {a1}",
    "{a1} {p} {loc}",
)
