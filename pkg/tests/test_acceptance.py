"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
happen; without -s pytest shows them for failing tests.
"""

from __future__ import annotations

import time

import numpy as np
import pytest
from helpers import random_ast

from vkg import datasets, embedding, linking
from vkg.datasets import MIXED_TRAINING
from vkg.embedding import (
    EmbeddingModel,
    TrainingConfig,
    pair_gradients,
    pair_loss,
    train,
)
from vkg.evaluation import average_precision, evaluate_all, timing_comparison
from vkg.kg import Graph, Schema
from vkg.linking import link_all
from vkg.query import decompose, execute, parse, unparse, vkg_search
from vkg.rules import builtin_rules


def report(number: int, slug: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance {number}] {slug}: {status}{suffix}")
    return ok


# --- 1. kNN oracle equivalence -------------------------------------------------

def _knn_schema() -> Schema:
    schema = Schema()
    for c in ("c0", "c1", "c2"):
        schema.declare_class(c)
    return schema


def _oracle_top_k(model: EmbeddingModel, query: str, k: int):
    qvec = model.vector(query)
    qnorm = np.linalg.norm(qvec)
    scored = []
    for token in model.tokens:
        if token == query:
            continue
        vec = model.vector(token)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            continue
        score = min(1.0, max(-1.0, float(np.dot(vec, qvec) / (norm * qnorm))))
        scored.append((token, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def test_acceptance_1_knn_oracle_equivalence():
    rng = np.random.default_rng(101)
    schema = _knn_schema()
    started = time.perf_counter()
    checked_searches = 0
    for fixture_index in range(100):
        if fixture_index < 3:
            size = 2000
        else:
            size = int(rng.integers(5, 2001))
        dim = int(rng.integers(0, 3))
        dim = (4, 8, 16)[dim]
        tokens = [f"t{i:04d}" for i in range(size)]
        model = EmbeddingModel(tokens, rng.normal(size=(size, dim)))
        query = tokens[int(rng.integers(0, size))]
        k = int(rng.integers(1, 26))

        mine = model.top_k(query, k)
        oracle = _oracle_top_k(model, query, k)
        assert [t for t, _ in mine] == [t for t, _ in oracle]
        assert all(abs(s1 - s2) <= 1e-9
                   for (_, s1), (_, s2) in zip(mine, oracle))

        if fixture_index % 2 == 0:
            # class-filtered search against an independent filtered scan
            n_entities = int(rng.integers(2, min(size, 60)))
            entity_ids = rng.choice(size, size=n_entities, replace=False)
            classes = {tokens[int(e)]: f"c{int(e) % 3}" for e in entity_ids}
            graph = Graph(schema)
            for entity, cls in classes.items():
                graph.assert_triple(entity, "type", cls)
            table = link_all(graph, model)
            class_filter = None if rng.random() < 0.3 else f"c{rng.integers(0, 3)}"
            got = vkg_search(query, class_filter, k, graph, model, table)
            expected = []
            for token, score in _oracle_top_k(model, query, size):
                if token not in classes:
                    continue
                if class_filter is not None and classes[token] != class_filter:
                    continue
                expected.append((token, score))
            expected = expected[:k]
            assert [e for e, _ in got] == [e for e, _ in expected]
            assert all(abs(s1 - s2) <= 1e-9
                       for (_, s1), (_, s2) in zip(got, expected))
            checked_searches += 1
    elapsed = time.perf_counter() - started
    ok = elapsed < 30.0
    assert report(1, "knn-oracle-equivalence", ok,
                  f"100 fixtures, {checked_searches} filtered, {elapsed:.1f}s")


# --- 2. backend ordering on the engineered fixture ------------------------------

def test_acceptance_2_backend_map_ordering():
    started = time.perf_counter()
    fixture = datasets.mixed_class_corpus(seed=11)
    n_classes = len({g.kind for g in fixture.groups})
    assert n_classes >= 3
    assert len(fixture.groups) >= 12
    graph, sentences = fixture.build()
    model = embedding.train(sentences, MIXED_TRAINING)
    table = link_all(graph, model)
    result = evaluate_all(fixture.groups, graph, model, table, k=10)
    elapsed = time.perf_counter() - started
    map_graph = result.backends["graph"].map_score
    map_vector = result.backends["vector"].map_score
    map_vkg = result.backends["vkg"].map_score
    ok = (map_graph + 0.02 <= map_vector
          and map_vector + 0.02 <= map_vkg
          and elapsed < 120.0)
    assert report(
        2, "table-ordering-graph<vector<vkg", ok,
        f"graph={map_graph:.3f} vector={map_vector:.3f} vkg={map_vkg:.3f} "
        f"{elapsed:.0f}s")


# --- 3. Query 1 end to end -------------------------------------------------------

QUERY_YES = ("SEARCH 'denial_of_service' CLASS vulnerability AS V; "
             "LIST vulnerability OF 'mysql' AS K; "
             "INFER alert FROM V, K ON 'mysql' AS A")
QUERY_NO = ("SEARCH 'denial_of_service' CLASS vulnerability AS V; "
            "LIST vulnerability OF 'nginx_server' AS K; "
            "INFER alert FROM V, K ON 'nginx_server' AS A")


def test_acceptance_3_query1_end_to_end(bundled_workspace):
    graph = bundled_workspace["graph"].snapshot()
    cfg = TrainingConfig(dimension=24, window=4, min_count=1, epochs=30,
                         learning_rate=0.05, seed=7)
    model = embedding.train(bundled_workspace["sentences"], cfg)
    table = link_all(graph, model)
    rules = builtin_rules()

    ast = parse(QUERY_YES, schema=graph.schema, rules=rules)
    plan = decompose(ast)
    plan_ok = (len(plan.nodes) == 3
               and plan.edges == frozenset({(0, 2), (1, 2)})
               and plan.is_parallel(0, 1))

    bindings = execute(plan, graph, model, table, rules)
    v = bindings.entities("V")
    k = bindings.entities("K")
    by_hand = v & k
    yes_ok = (bindings.values["A"] == (("alert_yes", None),)
              and by_hand
              and bindings.alerts["A"].evidence == frozenset(by_hand))

    empty = execute(decompose(parse(QUERY_NO)), graph, model, table, rules)
    disjoint = empty.entities("V") & empty.entities("K")
    no_ok = (empty.values["A"] == (("alert_no", None),) and not disjoint)

    ok = plan_ok and yes_ok and no_ok
    assert report(3, "query1-decompose-and-alert", ok,
                  f"evidence={sorted(by_hand)}")


# --- 4. parallel/sequential determinism -------------------------------------------

def test_acceptance_4_parallel_sequential_determinism(mixed_linked):
    graph, model, table = mixed_linked
    rules = builtin_rules()
    entities = sorted(table.links)
    rng = np.random.default_rng(404)
    all_equal = True
    for _ in range(50):
        ast = random_ast(
            rng,
            terms=entities,
            classes=["vulnerability", "attack", "product"],
            relations=["vulnerability", "attack"],
            entities=entities,
            rule_names=["alert"],
        )
        plan = decompose(ast)
        sequential = execute(plan, graph, model, table, rules, parallel=False)
        concurrent = execute(plan, graph, model, table, rules, parallel=True)
        if (sequential.values != concurrent.values
                or sequential.alerts != concurrent.alerts
                or sequential.derived != concurrent.derived):
            all_equal = False
            break
    assert report(4, "parallel-sequential-determinism", all_equal,
                  "50 randomized composite queries")


# --- 5. link coverage invariant ----------------------------------------------------

def test_acceptance_5_link_coverage(bundled_workspace, mixed_linked):
    graph_one = bundled_workspace["graph"].snapshot()
    sentences = bundled_workspace["sentences"]
    cfg_one = TrainingConfig(dimension=8, window=3, min_count=1, epochs=1, seed=0)
    table_one = link_all(graph_one, embedding.train(sentences, cfg_one))
    _, _, mixed_table = mixed_linked
    full = table_one.coverage == 1.0 and mixed_table.coverage == 1.0

    counts: dict[str, int] = {}
    for sentence in sentences:
        for token in sentence:
            counts[token] = counts.get(token, 0) + 1
    graph_two = bundled_workspace["graph"].snapshot()
    singletons = {e for e in graph_two.entities() if counts.get(e, 0) < 2}
    cfg_two = TrainingConfig(dimension=8, window=3, min_count=2, epochs=1, seed=0)
    table_two = link_all(graph_two, embedding.train(sentences, cfg_two))
    partial = (singletons
               and table_two.coverage < 1.0
               and table_two.unlinked == singletons)

    ok = bool(full and partial)
    assert report(5, "link-coverage-invariant", ok,
                  f"min_count=1 coverage={table_one.coverage:.2f}, "
                  f"min_count=2 unlinked={len(table_two.unlinked)}")


# --- 6. timing direction -------------------------------------------------------------

def test_acceptance_6_vector_faster_than_graph(mixed_fixture, mixed_linked):
    graph, model, table = mixed_linked
    timing = timing_comparison(mixed_fixture.groups, graph, model, table)
    ok = (not timing.below_floor) and timing.ratio > 1.0
    assert report(6, "vector-side-faster", ok,
                  f"graph/vector ratio={timing.ratio:.2f}")


# --- 7. AP oracle ---------------------------------------------------------------------

def _independent_ap(ranking, relevant):
    total = 0.0
    for r in range(1, len(ranking) + 1):
        if ranking[r - 1] in relevant:
            total += sum(1 for item in ranking[:r] if item in relevant) / r
    return total / len(relevant)


def test_acceptance_7_average_precision_oracle():
    rng = np.random.default_rng(707)
    items = [f"i{k}" for k in range(20)]
    worst = 0.0
    for _ in range(1000):
        size = int(rng.integers(1, 21))
        ranking = [items[int(j)] for j in rng.permutation(20)[:size]]
        relevant = {items[int(j)]
                    for j in rng.integers(0, 20, size=rng.integers(1, 9))}
        got = average_precision(ranking, relevant)
        expected = _independent_ap(ranking, relevant)
        worst = max(worst, abs(got - expected))
    ok = worst <= 1e-12
    assert report(7, "ap-brute-force-oracle", ok,
                  f"1000 pairs, max |delta|={worst:.1e}")


# --- 8. training sanity -----------------------------------------------------------------

def test_acceptance_8_gradient_and_twins():
    rng = np.random.default_rng(808)
    grad_ok = True
    for dim in (2, 4, 8):
        center = rng.normal(size=dim)
        context = rng.normal(size=dim)
        negatives = rng.normal(size=(3, dim))
        g_center, g_context, g_negs = pair_gradients(center, context, negatives)
        eps = 1e-6

        def fd(f, x):
            grad = np.zeros_like(x)
            for i in range(x.size):
                bump = np.zeros_like(x)
                bump.flat[i] = eps
                grad.flat[i] = (f(x + bump) - f(x - bump)) / (2 * eps)
            return grad

        if not np.allclose(g_center, fd(
                lambda v: pair_loss(v, context, negatives), center), atol=1e-4):
            grad_ok = False
        if not np.allclose(g_context, fd(
                lambda v: pair_loss(center, v, negatives), context), atol=1e-4):
            grad_ok = False
        for n in range(negatives.shape[0]):
            def wrt_negative(v, n=n):
                bumped = negatives.copy()
                bumped[n] = v
                return pair_loss(center, context, bumped)
            if not np.allclose(g_negs[n], fd(wrt_negative, negatives[n]),
                               atol=1e-4):
                grad_ok = False

    mutual = 0
    runs = 20
    for seed in range(runs):
        sentences, a, b = datasets.twin_sentences(seed=100 + seed)
        cfg = TrainingConfig(dimension=16, window=2, min_count=1, epochs=10,
                             learning_rate=0.05, seed=seed)
        model = train(sentences, cfg)
        if model.top_k(a, 1)[0][0] == b and model.top_k(b, 1)[0][0] == a:
            mutual += 1
    twins_ok = mutual >= int(np.ceil(0.95 * runs))

    ok = grad_ok and twins_ok
    assert report(8, "gradient-check-and-twin-neighbors", ok,
                  f"finite-diff ok={grad_ok}, mutual top-1 {mutual}/{runs}")


# --- 9. round trips -------------------------------------------------------------------------

def test_acceptance_9_round_trips(bundled_workspace, tmp_path):
    graph = bundled_workspace["graph"].snapshot()
    cfg = TrainingConfig(dimension=12, window=3, min_count=1, epochs=2, seed=1)
    model = embedding.train(bundled_workspace["sentences"], cfg)
    link_all(graph, model)  # adds hasVector literals to the stored graph
    graph.merge_same_as("mysql", "my_sql")  # exercise sameAs in the file format

    g1, g2 = tmp_path / "g1.nt", tmp_path / "g2.nt"
    graph.save(g1)
    Graph.load(g1, graph.schema).save(g2)
    graph_ok = g1.read_bytes() == g2.read_bytes()

    m1, m2 = tmp_path / "m1.vec", tmp_path / "m2.vec"
    model.save_text(m1)
    EmbeddingModel.load_text(m1).save_text(m2)
    model_ok = m1.read_bytes() == m2.read_bytes()

    rng = np.random.default_rng(909)
    dsl_ok = True
    for _ in range(200):
        ast = random_ast(
            rng,
            terms=["denial_of_service", "mysql", "chrome_browser"],
            classes=["vulnerability", "product", "attack"],
            relations=["vulnerability", "attack", "means"],
            entities=["mysql", "nginx_server", "firefox_browser"],
            rule_names=["alert", "overlap_check"],
        )
        if parse(unparse(ast)) != ast:
            dsl_ok = False
            break

    ok = graph_ok and model_ok and dsl_ok
    assert report(9, "file-and-dsl-round-trips", ok,
                  f"graph={graph_ok} model={model_ok} dsl200={dsl_ok}")
