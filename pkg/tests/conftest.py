from __future__ import annotations

import random

import pytest

from coldstart import corpus, sampling
from coldstart.llmio import ensure_default_backends, unregister_backend


@pytest.fixture(scope="session")
def fixture_corpus():
    """Shared small corpus: 120 listings, 200 sessions, 100 seed queries."""
    listings, sessions, seeds = corpus.generate_fixture(7, 120, 200)
    return listings, sessions, seeds


@pytest.fixture(scope="session")
def catalog(fixture_corpus):
    listings, _, _ = fixture_corpus
    return {l.id: l for l in listings}


@pytest.fixture(scope="session")
def fixture_pairs(fixture_corpus, catalog):
    _, sessions, _ = fixture_corpus
    pairs = []
    for i, session in enumerate(sessions):
        pair = sampling.sample_pair(session, catalog, random.Random(f"t:{i}"))
        if pair is not None:
            pairs.append(pair)
    assert pairs
    return pairs


@pytest.fixture()
def corpus_files(tmp_path, fixture_corpus):
    listings, sessions, seeds = fixture_corpus
    corpus.save_catalog(tmp_path / "listings.jsonl", listings)
    corpus.save_sessions(tmp_path / "sessions.jsonl", sessions)
    corpus.save_seed_queries(tmp_path / "seed_queries.jsonl", seeds)
    corpus.save_real_queries(
        tmp_path / "real_queries.jsonl", corpus.generate_real_queries(7)
    )
    return tmp_path


@pytest.fixture()
def backend_registry():
    """Make sure the mock backend exists; clean up test registrations."""
    ensure_default_backends()
    registered: list[str] = []

    def register(backend):
        from coldstart.llmio import register_backend

        register_backend(backend, replace=True)
        registered.append(backend.backend_id)
        return backend

    yield register
    for backend_id in registered:
        if backend_id != "mock":
            unregister_backend(backend_id)
    ensure_default_backends()
