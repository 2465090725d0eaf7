"""The hybrid store end to end: ingest, train, link, class-filtered search.

Runs the whole pipeline in memory on the bundled threat-report corpus and
contrasts plain cosine search with knowledge-graph-aided (class filtered)
search for the same query.
"""

from pathlib import Path

from vkg import train, vkg_search
from vkg.embedding import TrainingConfig
from vkg.ingest import (
    Gazetteer,
    build_corpus,
    load_stopwords,
    load_templates,
    read_documents_jsonl,
)
from vkg.kg import Schema
from vkg.linking import audit_report, link_all

root = Path(__file__).resolve().parent.parent / "fixtures"

schema = Schema.load(root / "schema.txt")
gazetteer = Gazetteer.load_tsv(root / "gazetteer.tsv", schema)
templates = load_templates(root / "templates.tsv", schema)
stopwords = load_stopwords(root / "stopwords.txt")
docs = read_documents_jsonl(root / "corpus.jsonl")

# Ingest: gazetteer entities become single underscore-joined tokens, and
# template co-occurrence produces the relation triples.
graph, sentences = build_corpus(docs, gazetteer, templates, schema, stopwords)
print("ingested", len(docs), "documents ->", len(graph), "triples,",
      len(graph.entities()), "entities")

# Train on the same token stream the entities came from; with min_count=1
# the shared vocabulary makes linking total.
cfg = TrainingConfig(dimension=24, window=4, min_count=1, epochs=30,
                     learning_rate=0.05, seed=7)
model = train(sentences, cfg)
table = link_all(graph, model)
print("vocabulary", len(model), "tokens; link coverage", table.coverage)
print("\naudit head:")
for line in audit_report(table).splitlines()[:4]:
    print("   ", line)

# Plain neighborhood search happily mixes classes: context words and the
# products that co-occur with a vulnerability show up next to it.
query = "denial_of_service"
print(f"\nplain top-5 around '{query}':")
for token, score in model.top_k(query, 5):
    print(f"    {token:28s} {score:.3f}")

# VKG search keeps the vector ranking but drops every candidate the graph
# does not type as a vulnerability.
print(f"\nclass-filtered top-5 around '{query}' (vulnerabilities only):")
for entity, score in vkg_search(query, "vulnerability", 5, graph, model, table):
    print(f"    {entity:28s} {score:.3f}")
