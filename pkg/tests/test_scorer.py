"""Word-importance scoring head."""

import numpy as np
import pytest

from attentree import autodiff as ad
from attentree.data import compute_tfidf
from attentree.encoder import EncodedSentence
from attentree.scorer import (
    SCORE_HIDDEN,
    init_scorer,
    score_sentence,
    score_word,
    tfidf_as_scores,
)


def as_sentence(tape, rows):
    h = [tape.leaf(np.asarray(r, dtype=float)) for r in rows]
    return EncodedSentence(h, [tape.leaf(np.zeros_like(v.data)) for v in h])


def test_hidden_width_is_fixed():
    assert SCORE_HIDDEN == 128
    params = init_scorer(4, np.random.default_rng(0))
    assert params.w1.data.shape == (128, 4)
    assert params.b1.data.shape == (128,)
    assert params.w2.data.shape == (1, 128)
    assert params.b2.data.shape == (1,)
    assert params.input_dim == 4


def test_zero_parameters_score_zero():
    params = init_scorer(3, np.random.default_rng(0))
    for p in params.parameters():
        p.data[...] = 0.0
    tape = ad.Tape()
    out = score_word(tape.leaf([1.0, -2.0, 3.0]), params)
    assert out.data.shape == (1,)
    assert out.data[0] == 0.0


def test_single_active_unit_closed_form():
    params = init_scorer(2, np.random.default_rng(0))
    for p in params.parameters():
        p.data[...] = 0.0
    params.w1.data[0, 0] = 1.0
    params.w2.data[0, 0] = 2.0
    params.b2.data[0] = 0.5
    tape = ad.Tape()
    # score = 2 * relu(h[0]) + 0.5
    assert score_word(tape.leaf([3.0, -1.0]), params).data[0] == 6.5
    assert score_word(tape.leaf([-3.0, 1.0]), params).data[0] == 0.5


def test_score_word_shape_check():
    params = init_scorer(3, np.random.default_rng(0))
    with pytest.raises(ad.ShapeError):
        score_word(ad.Tape().leaf([1.0, 2.0]), params)


def test_score_sentence_order_and_length():
    params = init_scorer(2, np.random.default_rng(1))
    tape = ad.Tape()
    enc = as_sentence(tape, [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    scores = score_sentence(enc, params)
    assert scores.data.shape == (3,)
    for i, h in enumerate(enc.h):
        alone = score_word(h, params)
        assert scores.data[i] == alone.data[0]


def test_words_scored_independently():
    # same state in different sentence contexts gets the same score
    params = init_scorer(2, np.random.default_rng(2))
    tape = ad.Tape()
    first = score_sentence(as_sentence(tape, [[0.5, -0.5], [1.0, 2.0]]), params)
    second = score_sentence(as_sentence(tape, [[0.5, -0.5], [-9.0, 4.0]]), params)
    assert first.data[0] == second.data[0]


def test_gradients_match_finite_differences():
    params = init_scorer(3, np.random.default_rng(4))
    h = ad.Parameter("h", np.random.default_rng(5).uniform(-1, 1, size=3))

    def build(tape):
        return score_word(tape.watch(h), params)

    assert ad.finite_difference_check(build, params.parameters() + [h]) < 1e-4


def test_tfidf_scores_are_plain_constants():
    table = compute_tfidf([["a", "b"], ["a"]])
    scores = tfidf_as_scores(["b", "a", "zzz"], table)
    assert isinstance(scores, np.ndarray)
    assert scores[0] == table.weight("b")
    assert scores[1] == table.weight("a")
    assert scores[2] == 0.0


def test_tfidf_scores_empty_rejected():
    table = compute_tfidf([["a"]])
    with pytest.raises(ValueError):
        tfidf_as_scores([], table)
