"""Skip-gram embeddings: training, cosine similarity, exact top-k search.

Trains on a tiny synthetic corpus where two tokens see identical contexts,
then shows that the trained space recovers that structure.
"""

import tempfile
from pathlib import Path

from vkg import TrainingConfig, train
from vkg.datasets import twin_sentences
from vkg.embedding import EmbeddingModel

# twin_sentences emits pairs of sentences in which alpha_node and beta_node
# occur in the *same* contexts, so they are distributionally identical.
sentences, a, b = twin_sentences(seed=4)
print("corpus:", len(sentences), "sentences; sample:", " ".join(sentences[0]))

cfg = TrainingConfig(dimension=16, window=2, min_count=1, epochs=10,
                     learning_rate=0.05, seed=4)
model = train(sentences, cfg)
print("vocabulary:", len(model), "tokens, dimension", model.dimension)

# The twins end up mutual nearest neighbors.
print(f"\ncosine({a}, {b}) =", round(model.cosine(a, b), 3))
print(f"top-3 neighbors of {a}:")
for token, score in model.top_k(a, 3):
    print(f"    {token:12s} {score:.3f}")

# top_k is an exact brute-force scan: descending cosine over the whole
# vocabulary, ties broken lexicographically, never the query itself.
neighbors = model.top_k(a, len(model))
assert neighbors[0][0] == b
assert a not in [tok for tok, _ in neighbors]

# The text format round-trips: header line "<vocab> <dim>", one row per token.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.vec"
    model.save_text(path)
    print("\nfirst two lines of the saved model:")
    for line in path.read_text().splitlines()[:2]:
        print("   ", line[:72], "...")
    reloaded = EmbeddingModel.load_text(path)
    print("reloaded:", len(reloaded), "tokens,",
          "same order:", reloaded.tokens == model.tokens)
