"""Shared fixtures: the advisory example and the trained mixed-class corpus.

Training the mixed corpus takes a few seconds, so anything derived from it
is session-scoped and treated as read-only by tests.
"""

from __future__ import annotations

import pytest

from vkg import datasets, embedding, linking
from vkg.datasets import MIXED_TRAINING
from vkg.ingest import build_corpus


@pytest.fixture()
def schema():
    return datasets.security_schema()


@pytest.fixture()
def advisory_graph():
    return datasets.advisory_graph()


@pytest.fixture(scope="session")
def mixed_fixture():
    return datasets.mixed_class_corpus(seed=11)


@pytest.fixture(scope="session")
def mixed_built(mixed_fixture):
    graph, sentences = mixed_fixture.build()
    return graph, sentences


@pytest.fixture(scope="session")
def mixed_model(mixed_built):
    _, sentences = mixed_built
    return embedding.train(sentences, MIXED_TRAINING)


@pytest.fixture(scope="session")
def mixed_linked(mixed_built, mixed_model):
    graph, _ = mixed_built
    table = linking.link_all(graph, mixed_model)
    return graph, mixed_model, table


@pytest.fixture(scope="session")
def bundled_workspace():
    """Parsed pieces of the handcrafted CLI fixture corpus."""
    from pathlib import Path

    from vkg import evaluation, ingest
    from vkg.kg import Schema

    root = Path(__file__).resolve().parent.parent / "fixtures"
    schema = Schema.load(root / "schema.txt")
    gazetteer = ingest.Gazetteer.load_tsv(root / "gazetteer.tsv", schema)
    templates = ingest.load_templates(root / "templates.tsv", schema)
    stopwords = ingest.load_stopwords(root / "stopwords.txt")
    docs = ingest.read_documents_jsonl(root / "corpus.jsonl")
    groups = evaluation.load_groups(root / "groups.json")
    graph, sentences = build_corpus(docs, gazetteer, templates, schema, stopwords)
    return {
        "root": root,
        "schema": schema,
        "gazetteer": gazetteer,
        "templates": templates,
        "stopwords": stopwords,
        "docs": docs,
        "groups": groups,
        "graph": graph,
        "sentences": sentences,
    }
