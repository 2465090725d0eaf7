"""Triple store basics: assertions, pattern matching, sameAs, similarity.

Builds the two canonical toy graphs (a pet ownership fact and a browser
security advisory), then walks through the query surface of the store.
"""

from vkg import Graph, Schema, datasets

# A schema declares the classes, the subclass hierarchy, and the relations
# a graph may use.  Everything else is rejected at assert time.
schema = Schema()
schema.declare_class("cat")
schema.declare_class("mammal")
schema.declare_class("person")
schema.declare_subclass("cat", "mammal")
schema.declare_relation("hasPet", "person", "mammal")

pets = Graph(schema)
pets.assert_triple("Tom", "hasPet", "Milo")      # tokens normalize to lowercase
pets.assert_triple("Milo", "type", "cat")

print("pet graph:")
for t in pets:
    print("   ", t.subject, t.predicate, t.object)

# instances_of walks the subclass hierarchy: Milo is a cat, cats are mammals.
print("mammals:", pets.instances_of("mammal"))

# The advisory example: one sentence about a browser yields a product node
# linked to two vulnerabilities, a means, and an attacker.
advisory = datasets.advisory_graph()
print("\nadvisory graph has", len(advisory), "triples")
print("vulnerabilities of the browser:")
for t in advisory.match_pattern("microsoft_internet_explorer",
                                "hasVulnerability", None):
    print("   ", t.object)

# sameAs merges entities from different sources.  After the merge, facts
# asserted about either name are visible through both.
advisory.assert_triple("dbp_internet_explorer", "hasAttacker", "script_kiddies")
advisory.merge_same_as("microsoft_internet_explorer", "dbp_internet_explorer")
print("\nattackers after the sameAs merge:")
for t in advisory.match_pattern("microsoft_internet_explorer",
                                "hasAttacker", None):
    print("   ", t.object)

# Graph-side similarity is the Jaccard overlap of (relation, neighbor) pairs.
# The two vulnerabilities share their class and their host product.
a, b = "denial_of_service", "execute_arbitrary_code"
print(f"\ngraph similarity({a}, {b}) =",
      round(advisory.graph_similarity(a, b), 3))
print(f"graph similarity({a}, crafted_web_site) =",
      round(advisory.graph_similarity(a, "crafted_web_site"), 3))
