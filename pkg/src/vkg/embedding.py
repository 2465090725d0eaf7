"""Word embeddings: toy-scale skip-gram training and exact neighborhood search.

The trainer is a deterministic skip-gram with negative sampling.  Gradients
are applied per-sentence (minibatch SGD) with a linear learning-rate decay;
there is no frequent-word subsampling and the context window does not
shrink.  Multi-word entities are expected to arrive pre-joined with
underscores, so every entity is a single vocabulary token.

Nearest-neighbor search is exact: ``top_k`` is a brute-force cosine scan
over the whole vocabulary, scores descending, ties broken lexicographically.
A trained model is immutable and safe to share across reader threads.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateTokenError,
    EmptyVocabularyError,
    MalformedHeaderError,
    OutOfVocabularyError,
    ZeroVectorError,
)


@dataclass(frozen=True)
class TrainingConfig:
    """Skip-gram hyperparameters.

    ``window`` counts tokens on each side of the center word;
    ``min_count`` drops tokens whose corpus frequency is below it.
    """

    dimension: int = 100
    window: int = 7
    min_count: int = 1
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 1

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class EmbeddingModel:
    """Ordered vocabulary plus one dense vector per token."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray,
                 frequencies: dict[str, int] | None = None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError("vectors must be a (vocab, dimension) matrix")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors must be finite")
        if len(set(tokens)) != len(tokens):
            raise DuplicateTokenError("vocabulary tokens must be unique")
        self.tokens: list[str] = list(tokens)
        self.vectors: np.ndarray = vectors
        self.frequencies: dict[str, int] = dict(frequencies or {})
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        self._norms = np.linalg.norm(vectors, axis=1)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.vectors[self._index[token]]
        except KeyError:
            raise OutOfVocabularyError(f"token '{token}' not in vocabulary") from None

    def cosine(self, a: str, b: str) -> float:
        """Cosine of the angle between two token vectors, in [-1, 1]."""
        va, vb = self.vector(a), self.vector(b)
        na, nb = self._norms[self._index[a]], self._norms[self._index[b]]
        if na == 0.0 or nb == 0.0:
            raise ZeroVectorError(f"cosine undefined for zero vector ('{a}' or '{b}')")
        return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))

    def top_k(self, query: str, k: int) -> list[tuple[str, float]]:
        """The k most cosine-similar tokens to the query, excluding itself.

        Exact brute-force scan over the vocabulary; descending score with
        lexicographic tie-break.  Zero-norm tokens cannot be scored and are
        skipped.  A zero-norm query raises ZeroVectorError.
        """
        qi = self._index.get(query)
        if qi is None:
            raise OutOfVocabularyError(f"token '{query}' not in vocabulary")
        if k <= 0:
            return []
        qnorm = self._norms[qi]
        if qnorm == 0.0:
            raise ZeroVectorError(f"token '{query}' has a zero vector")
        scorable = self._norms > 0.0
        scores = np.zeros(len(self.tokens))
        scores[scorable] = (self.vectors[scorable] @ self.vectors[qi]) / (
            self._norms[scorable] * qnorm
        )
        np.clip(scores, -1.0, 1.0, out=scores)
        ranked = sorted(
            ((self.tokens[i], float(scores[i])) for i in range(len(self.tokens))
             if i != qi and scorable[i]),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:k]

    # --- persistence ----------------------------------------------------

    def save_text(self, path) -> None:
        """word2vec text format: header ``<vocab> <dim>``, then one row per token."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.tokens)} {self.dimension}\n")
            for i, token in enumerate(self.tokens):
                row = " ".join(f"{x:.6f}" for x in self.vectors[i])
                fh.write(f"{token} {row}\n")

    @classmethod
    def load_text(cls, path) -> "EmbeddingModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise MalformedHeaderError("expected header '<vocab_size> <dimension>'")
            try:
                vocab_size, dimension = int(header[0]), int(header[1])
            except ValueError:
                raise MalformedHeaderError(
                    f"non-integer header fields {header!r}") from None
            if vocab_size < 0 or dimension < 1:
                raise MalformedHeaderError(f"invalid header values {header!r}")
            tokens: list[str] = []
            seen: set[str] = set()
            vectors = np.empty((vocab_size, dimension))
            for i, line in enumerate(fh):
                if i >= vocab_size:
                    raise MalformedHeaderError(
                        f"more rows than the declared vocabulary size {vocab_size}")
                fields = line.split()
                if len(fields) != dimension + 1:
                    raise DimensionMismatchError(
                        f"row {i + 2}: expected {dimension} components, "
                        f"got {len(fields) - 1}")
                token = fields[0]
                if token in seen:
                    raise DuplicateTokenError(f"duplicate token '{token}'")
                seen.add(token)
                tokens.append(token)
                try:
                    vectors[i] = [float(x) for x in fields[1:]]
                except ValueError:
                    raise DimensionMismatchError(
                        f"row {i + 2}: non-numeric component") from None
            if len(tokens) != vocab_size:
                raise MalformedHeaderError(
                    f"header declares {vocab_size} rows, file has {len(tokens)}")
        return cls(tokens, vectors)


# --- skip-gram with negative sampling ----------------------------------------


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pair_loss(center: np.ndarray, context: np.ndarray,
              negatives: np.ndarray) -> float:
    """Negative-sampling loss for one (center, context) pair.

    -log sigma(u_ctx . v_c) - sum_n log sigma(-u_n . v_c)
    """
    pos = float(np.dot(context, center))
    neg = np.asarray(negatives, dtype=np.float64) @ center
    return float(
        -np.log(_sigmoid(np.array([pos])))[0]
        - np.sum(np.log(_sigmoid(-neg)))
    )


def pair_gradients(center: np.ndarray, context: np.ndarray,
                   negatives: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`pair_loss` wrt center, context, negatives."""
    negatives = np.asarray(negatives, dtype=np.float64)
    g_pos = _sigmoid(np.array([np.dot(context, center)]))[0] - 1.0
    g_negs = _sigmoid(negatives @ center)
    grad_center = g_pos * context + g_negs @ negatives
    grad_context = g_pos * center
    grad_negatives = np.outer(g_negs, center)
    return grad_center, grad_context, grad_negatives


def train(corpus: Iterable[Sequence[str]], cfg: TrainingConfig) -> EmbeddingModel:
    """Train skip-gram embeddings over sentences of pre-joined tokens.

    Deterministic for a fixed config: identical inputs produce identical
    models.  Sentences bound the context window (no pairs cross sentence
    boundaries).  Raises EmptyVocabularyError when nothing survives
    min_count.
    """
    sentences = [list(s) for s in corpus]
    counts = Counter(tok for sent in sentences for tok in sent)
    vocab = sorted(
        (tok for tok, c in counts.items() if c >= cfg.min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    if not vocab:
        raise EmptyVocabularyError(
            f"no token reaches min_count={cfg.min_count}")
    index = {tok: i for i, tok in enumerate(vocab)}
    vocab_size = len(vocab)

    encoded = [
        np.array([index[t] for t in sent if t in index], dtype=np.int64)
        for sent in sentences
    ]
    encoded = [sent for sent in encoded if len(sent) >= 1]

    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((vocab_size, cfg.dimension)) - 0.5) / cfg.dimension
    w_out = np.zeros((vocab_size, cfg.dimension))

    # unigram^0.75 negative-sampling distribution
    freq = np.array([counts[tok] for tok in vocab], dtype=np.float64) ** 0.75
    noise = freq / freq.sum()

    pairs_per_sentence = [_pair_count(len(sent), cfg.window) for sent in encoded]
    total_pairs = cfg.epochs * sum(pairs_per_sentence)
    if total_pairs == 0:
        return EmbeddingModel(vocab, w_in, {tok: counts[tok] for tok in vocab})

    min_alpha = cfg.learning_rate * 1e-4
    done = 0
    for _ in range(cfg.epochs):
        for sent in encoded:
            centers, contexts = _window_pairs(sent, cfg.window)
            if len(centers) == 0:
                continue
            alpha = max(min_alpha, cfg.learning_rate * (1.0 - done / total_pairs))
            negs = rng.choice(vocab_size, size=(len(centers), cfg.negatives), p=noise)
            _sentence_step(w_in, w_out, centers, contexts, negs, alpha)
            done += len(centers)

    return EmbeddingModel(vocab, w_in, {tok: counts[tok] for tok in vocab})


def _pair_count(n: int, window: int) -> int:
    return sum(min(n - 1, i + window) - max(0, i - window) for i in range(n))


def _window_pairs(sent: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers, contexts = [], []
    n = len(sent)
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        for j in range(lo, hi):
            if j != i:
                centers.append(sent[i])
                contexts.append(sent[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def _sentence_step(w_in: np.ndarray, w_out: np.ndarray, centers: np.ndarray,
                   contexts: np.ndarray, negs: np.ndarray, alpha: float) -> None:
    """One minibatch SGD step over all window pairs of a sentence."""
    v_c = w_in[centers]                                   # (P, D)
    u_o = w_out[contexts]                                 # (P, D)
    u_n = w_out[negs]                                     # (P, N, D)

    g_pos = _sigmoid(np.einsum("pd,pd->p", u_o, v_c)) - 1.0        # (P,)
    g_neg = _sigmoid(np.einsum("pnd,pd->pn", u_n, v_c))            # (P, N)

    grad_center = g_pos[:, None] * u_o + np.einsum("pn,pnd->pd", g_neg, u_n)
    grad_context = g_pos[:, None] * v_c
    grad_negs = g_neg[:, :, None] * v_c[:, None, :]

    np.add.at(w_in, centers, -alpha * grad_center)
    np.add.at(w_out, contexts, -alpha * grad_context)
    np.add.at(w_out, negs.ravel(), -alpha * grad_negs.reshape(-1, w_out.shape[1]))
