"""Embedding model: training semantics, cosine/top_k contracts, file format."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vkg import datasets
from vkg.embedding import (
    EmbeddingModel,
    TrainingConfig,
    pair_gradients,
    pair_loss,
    train,
)
from vkg.errors import (
    DimensionMismatchError,
    DuplicateTokenError,
    EmptyVocabularyError,
    MalformedHeaderError,
    OutOfVocabularyError,
    ZeroVectorError,
)


class TestTrainingConfig:
    @pytest.mark.parametrize("field,value", [
        ("dimension", 0), ("window", 0), ("min_count", 0),
        ("negatives", 0), ("epochs", 0), ("learning_rate", 0.0),
    ])
    def test_rejects_nonpositive(self, field, value):
        with pytest.raises(ValueError):
            TrainingConfig(**{field: value})


class TestTrain:
    def test_shapes_and_vocabulary(self):
        sentence = "the quick brown fox jumps".split()
        cfg = TrainingConfig(dimension=8, window=2, min_count=1, epochs=2, seed=0)
        model = train([sentence] * 10, cfg)
        assert sorted(model.tokens) == sorted(set(sentence))
        assert model.vectors.shape == (5, 8)
        assert all(model.frequencies[tok] == 10 for tok in model.tokens)

    def test_min_count_threshold(self):
        sentences = [["common", "common", "rare"]] * 3  # rare appears 3 times
        cfg = TrainingConfig(dimension=4, window=1, min_count=5, epochs=1, seed=0)
        model = train(sentences, cfg)
        assert "rare" not in model
        assert "common" in model  # 6 occurrences

    def test_empty_vocabulary(self):
        with pytest.raises(EmptyVocabularyError):
            train([["once"]], TrainingConfig(dimension=4, min_count=2, seed=0))

    def test_deterministic_under_seed(self):
        sentences, _, _ = datasets.twin_sentences(seed=0, docs=20)
        cfg = TrainingConfig(dimension=12, window=2, min_count=1, epochs=3, seed=5)
        first = train(sentences, cfg)
        second = train(sentences, cfg)
        assert first.tokens == second.tokens
        assert np.array_equal(first.vectors, second.vectors)

    def test_interchangeable_tokens_rank_above_unrelated(self):
        sentences, a, b = datasets.twin_sentences(seed=1)
        cfg = TrainingConfig(dimension=16, window=2, min_count=1, epochs=10,
                             learning_rate=0.05, seed=1)
        model = train(sentences, cfg)
        twin_score = model.cosine(a, b)
        for token in model.tokens:
            if token.startswith("noise"):
                assert twin_score > model.cosine(a, token)


class TestCosine:
    def make_model(self):
        return EmbeddingModel(
            ["ax", "ay", "diag", "zero"],
            np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]]),
        )

    def test_self_cosine_is_one(self):
        model = self.make_model()
        assert model.cosine("ax", "ax") == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal(self):
        assert self.make_model().cosine("ax", "ay") == pytest.approx(0.0)

    def test_hand_computed(self):
        assert self.make_model().cosine("diag", "ax") == pytest.approx(
            0.7071, abs=1e-4)

    def test_symmetric(self):
        model = self.make_model()
        assert model.cosine("diag", "ay") == model.cosine("ay", "diag")

    def test_out_of_vocabulary(self):
        with pytest.raises(OutOfVocabularyError):
            self.make_model().cosine("ax", "missing")

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            self.make_model().cosine("ax", "zero")


def brute_force_top_k(model: EmbeddingModel, query: str, k: int):
    """Independent oracle: per-token python-float cosine, then sort."""
    qvec = [float(x) for x in model.vector(query)]
    qnorm = math.sqrt(sum(x * x for x in qvec))
    scored = []
    for token in model.tokens:
        if token == query:
            continue
        vec = [float(x) for x in model.vector(token)]
        norm = math.sqrt(sum(x * x for x in vec))
        if norm == 0.0:
            continue
        dot = sum(x * y for x, y in zip(qvec, vec))
        scored.append((token, max(-1.0, min(1.0, dot / (norm * qnorm)))))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


class TestTopK:
    def random_model(self, rng, size=500, dim=16):
        tokens = [f"t{i:04d}" for i in range(size)]
        return EmbeddingModel(tokens, rng.normal(size=(size, dim)))

    def test_k_zero(self):
        rng = np.random.default_rng(0)
        assert self.random_model(rng, size=10).top_k("t0001", 0) == []

    def test_k_covers_whole_vocabulary(self):
        rng = np.random.default_rng(1)
        model = self.random_model(rng, size=12)
        result = model.top_k("t0003", 50)
        assert len(result) == 11
        assert "t0003" not in [tok for tok, _ in result]
        scores = [s for _, s in result]
        assert scores == sorted(scores, reverse=True)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(2)
        model = self.random_model(rng, size=500)
        for query in ("t0000", "t0250", "t0499"):
            mine = model.top_k(query, 10)
            oracle = brute_force_top_k(model, query, 10)
            assert [tok for tok, _ in mine] == [tok for tok, _ in oracle]
            for (_, s1), (_, s2) in zip(mine, oracle):
                assert abs(s1 - s2) < 1e-9

    def test_prefix_property(self):
        rng = np.random.default_rng(3)
        model = self.random_model(rng, size=60)
        for k in range(0, 12):
            assert model.top_k("t0010", k + 1)[:k] == model.top_k("t0010", k)

    def test_out_of_vocabulary(self):
        rng = np.random.default_rng(4)
        with pytest.raises(OutOfVocabularyError):
            self.random_model(rng, size=5).top_k("missing", 3)


class TestTextFormat:
    def test_small_file_loads(self, tmp_path):
        path = tmp_path / "model.vec"
        path.write_text("2 3\nfirst 0.100000 0.200000 0.300000\n"
                        "second -1.000000 0.000000 2.500000\n")
        model = EmbeddingModel.load_text(path)
        assert len(model) == 2
        assert model.dimension == 3
        assert model.vector("second")[0] == pytest.approx(-1.0)

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "model.vec"
        path.write_text("1 3\nalpha 0.5 0.5\n")
        with pytest.raises(DimensionMismatchError):
            EmbeddingModel.load_text(path)

    def test_duplicate_token(self, tmp_path):
        path = tmp_path / "model.vec"
        path.write_text("2 1\nalpha 0.5\nalpha 0.7\n")
        with pytest.raises(DuplicateTokenError):
            EmbeddingModel.load_text(path)

    @pytest.mark.parametrize("header", ["", "3", "a b", "2 3 4", "-1 3"])
    def test_malformed_header(self, tmp_path, header):
        path = tmp_path / "model.vec"
        path.write_text(f"{header}\n")
        with pytest.raises(MalformedHeaderError):
            EmbeddingModel.load_text(path)

    def test_row_count_mismatch(self, tmp_path):
        path = tmp_path / "model.vec"
        path.write_text("2 1\nalpha 0.5\n")
        with pytest.raises(MalformedHeaderError):
            EmbeddingModel.load_text(path)

    def test_train_save_load_round_trip(self, tmp_path):
        sentences, _, _ = datasets.twin_sentences(seed=2, docs=15)
        model = train(sentences, TrainingConfig(dimension=6, window=2,
                                                min_count=1, epochs=2, seed=9))
        path = tmp_path / "model.vec"
        model.save_text(path)
        loaded = EmbeddingModel.load_text(path)
        assert loaded.tokens == model.tokens
        np.testing.assert_allclose(loaded.vectors, model.vectors, atol=5e-7)

    def test_save_load_save_byte_identical(self, tmp_path):
        sentences, _, _ = datasets.twin_sentences(seed=3, docs=15)
        model = train(sentences, TrainingConfig(dimension=5, window=2,
                                                min_count=1, epochs=2, seed=4))
        first, second = tmp_path / "one.vec", tmp_path / "two.vec"
        model.save_text(first)
        EmbeddingModel.load_text(first).save_text(second)
        assert first.read_bytes() == second.read_bytes()


class TestGradients:
    def finite_difference(self, f, x, eps=1e-6):
        grad = np.zeros_like(x)
        for i in range(x.size):
            bump = np.zeros_like(x)
            bump.flat[i] = eps
            grad.flat[i] = (f(x + bump) - f(x - bump)) / (2 * eps)
        return grad

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(6)
        for dim in (2, 5, 8):
            center = rng.normal(size=dim)
            context = rng.normal(size=dim)
            negatives = rng.normal(size=(4, dim))
            g_center, g_context, g_negs = pair_gradients(center, context, negatives)

            fd_center = self.finite_difference(
                lambda v: pair_loss(v, context, negatives), center)
            fd_context = self.finite_difference(
                lambda v: pair_loss(center, v, negatives), context)
            np.testing.assert_allclose(g_center, fd_center, atol=1e-4)
            np.testing.assert_allclose(g_context, fd_context, atol=1e-4)
            for n in range(negatives.shape[0]):
                def loss_wrt_negative(v, n=n):
                    bumped = negatives.copy()
                    bumped[n] = v
                    return pair_loss(center, context, bumped)
                fd_neg = self.finite_difference(loss_wrt_negative, negatives[n])
                np.testing.assert_allclose(g_negs[n], fd_neg, atol=1e-4)

    def test_gradient_step_decreases_pair_loss(self):
        rng = np.random.default_rng(7)
        center = rng.normal(size=8)
        context = rng.normal(size=8)
        negatives = rng.normal(size=(5, 8))
        before = pair_loss(center, context, negatives)
        g_center, g_context, g_negs = pair_gradients(center, context, negatives)
        lr = 0.05
        after = pair_loss(center - lr * g_center, context - lr * g_context,
                          negatives - lr * g_negs)
        assert after < before
