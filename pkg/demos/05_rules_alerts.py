"""The rule engine: declarative conditions, alerts, derived facts.

Rules live in a small text format; conditions combine set operations
(intersect, subset, nonempty, size comparison) and graph pattern checks.
Derived facts go to an overlay and touch the graph only when committed.
"""

from vkg import datasets
from vkg.rules import builtin_rules, evaluate, parse_rules

graph = datasets.advisory_graph()

# The builtin 'alert' rule fires when two bound sets overlap.
alert_rule = builtin_rules()["alert"]
similar = {"buffer_overflow", "memory_corruption"}
listed = {"memory_corruption", "sql_injection"}
alert, _ = evaluate(alert_rule, [similar, listed], graph, context="mysql")
print("overlap rule:", alert.token, "| evidence:", sorted(alert.evidence))

alert, _ = evaluate(alert_rule, [similar, {"sql_injection"}], graph,
                    context="mysql")
print("disjoint sets:", alert.token)

# User-defined rules parse from text.  This one checks a set condition AND
# a graph pattern, then derives a fact about the context entity.
rules = parse_rules("""
# flag products that already list a vulnerability when new findings arrive
RULE flag(found) ON ctx
WHEN nonempty(found) AND exists(ctx, hasVulnerability, ?)
THEN ALERT, ASSERT ctx hasVulnerability 'heap_spray'
""")
flag = rules["flag"]

alert, derived = evaluate(flag, [{"heap_spray"}], graph,
                          context="microsoft_internet_explorer")
print("\nflag rule:", alert.token)
print("evidence (pattern witnesses included):", sorted(alert.evidence))
print("derived overlay:", [(t.subject, t.predicate, t.object) for t in derived])

# The base graph is untouched until the caller commits the overlay.
print("graph size before commit:", len(graph))
for t in derived:
    graph.assert_triple(t.subject, t.predicate, t.object)
print("graph size after commit: ", len(graph))

# size-compare conditions: alert only once enough findings accumulate.
swarm = parse_rules("RULE swarm(f) WHEN size(f) >= 3 THEN ALERT")["swarm"]
for findings in ({"a"}, {"a", "b", "c"}):
    alert, _ = evaluate(swarm, [findings], graph)
    print(f"swarm with {len(findings)} findings:", alert.token)
