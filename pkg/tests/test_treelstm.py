"""Composition tests: closed forms, a numpy recompute, and gradients."""

import numpy as np
import pytest

from attentree import autodiff as ad
from attentree import treelstm
from attentree.encoder import EncodedSentence, encode, init_direction
from attentree.tree import TreeNode, build_greedy
from attentree.treelstm import NodeState, compose, embed_tree, init_composition


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def zero_params(width):
    params = init_composition(width, np.random.default_rng(0))
    params.weights.data[:] = 0.0
    params.bias.data[:] = 0.0
    return params


def make_sentence(tape, rows_h, rows_c):
    return EncodedSentence(
        h=[tape.leaf(row) for row in rows_h],
        c=[tape.leaf(row) for row in rows_c],
    )


def test_init_shapes_and_bounds():
    params = init_composition(5, np.random.default_rng(7))
    assert params.weights.data.shape == (30, 15)
    assert params.bias.data.shape == (30,)
    assert params.width == 5
    bound = 1.0 / np.sqrt(15)
    assert np.all(np.abs(params.weights.data) <= bound)
    assert np.all(params.bias.data == 0.0)
    with pytest.raises(ValueError):
        init_composition(0, np.random.default_rng(0))


def test_zero_params_leaf_closed_form():
    # all gates sigmoid(0)=0.5 and candidate tanh(0)=0, children are zero:
    # c = 0.5*c_word, h = 0.5*tanh(0.5*c_word)
    c_word = np.array([1.0, -2.0, 0.25])
    tape = ad.Tape()
    word = NodeState(tape.leaf([0.3, 0.1, -0.4]), tape.leaf(c_word))
    out = compose(None, None, word, zero_params(3))
    np.testing.assert_allclose(out.c.data, 0.5 * c_word, atol=1e-15)
    np.testing.assert_allclose(out.h.data, 0.5 * np.tanh(0.5 * c_word), atol=1e-15)


def test_absent_child_equals_explicit_zero_state():
    rng = np.random.default_rng(11)
    params = init_composition(4, rng)
    h_w, c_w = rng.normal(size=4), rng.normal(size=4)
    h_l, c_l = rng.normal(size=4), rng.normal(size=4)

    tape1 = ad.Tape()
    left1 = NodeState(tape1.leaf(h_l), tape1.leaf(c_l))
    word1 = NodeState(tape1.leaf(h_w), tape1.leaf(c_w))
    out1 = compose(left1, None, word1, params)

    tape2 = ad.Tape()
    zero = tape2.leaf(np.zeros(4))
    left2 = NodeState(tape2.leaf(h_l), tape2.leaf(c_l))
    word2 = NodeState(tape2.leaf(h_w), tape2.leaf(c_w))
    out2 = compose(left2, NodeState(zero, zero), word2, params)

    assert np.array_equal(out1.h.data, out2.h.data)
    assert np.array_equal(out1.c.data, out2.c.data)


def reference_compose(hl, cl, hr, cr, hw, cw, weights, bias):
    w = hw.shape[0]
    z = weights @ np.concatenate([hl, hr, hw]) + bias
    gi = sigmoid(z[0:w])
    fl = sigmoid(z[w:2 * w])
    fr = sigmoid(z[2 * w:3 * w])
    fw = sigmoid(z[3 * w:4 * w])
    go = sigmoid(z[4 * w:5 * w])
    cand = np.tanh(z[5 * w:6 * w])
    c = fl * cl + fr * cr + fw * cw + gi * cand
    return go * np.tanh(c), c


def reference_embed(node, rows_h, rows_c, weights, bias):
    width = rows_h.shape[1]
    zero = np.zeros(width)
    hl = cl = hr = cr = zero
    if node.left is not None:
        hl, cl = reference_embed(node.left, rows_h, rows_c, weights, bias)
    if node.right is not None:
        hr, cr = reference_embed(node.right, rows_h, rows_c, weights, bias)
    return reference_compose(hl, cl, hr, cr, rows_h[node.index],
                             rows_c[node.index], weights, bias)


@pytest.mark.parametrize("seed", range(4))
def test_embed_matches_numpy_reference(seed):
    rng = np.random.default_rng(seed)
    n, width = int(rng.integers(1, 8)), 3
    params = init_composition(width, rng)
    rows_h = rng.normal(size=(n, width))
    rows_c = rng.normal(size=(n, width))
    root = build_greedy(rng.normal(size=n), 0, n - 1)

    tape = ad.Tape()
    out = embed_tree(root, make_sentence(tape, rows_h, rows_c), params)
    want_h, want_c = reference_embed(root, rows_h, rows_c,
                                     params.weights.data, params.bias.data)
    np.testing.assert_allclose(out.h.data, want_h, atol=1e-12)
    np.testing.assert_allclose(out.c.data, want_c, atol=1e-12)


def test_each_node_composed_once(monkeypatch):
    calls = []
    original = treelstm.compose

    def counting(left, right, word, params):
        calls.append(word)
        return original(left, right, word, params)

    monkeypatch.setattr(treelstm, "compose", counting)
    rng = np.random.default_rng(2)
    n = 7
    params = init_composition(2, rng)
    root = build_greedy(rng.normal(size=n), 0, n - 1)
    tape = ad.Tape()
    embed_tree(root, make_sentence(tape, rng.normal(size=(n, 2)),
                                   rng.normal(size=(n, 2))), params)
    assert len(calls) == n


def test_chain_tree_composes():
    # monotone scores force a depth-n chain; must not recurse to death
    rng = np.random.default_rng(3)
    n = 60
    root = build_greedy(np.arange(float(n)), 0, n - 1)
    params = init_composition(2, rng)
    tape = ad.Tape()
    out = embed_tree(root, make_sentence(tape, rng.normal(size=(n, 2)),
                                         rng.normal(size=(n, 2))), params)
    assert np.all(np.isfinite(out.h.data))


def test_index_outside_sentence_rejected():
    params = init_composition(2, np.random.default_rng(0))
    tape = ad.Tape()
    sent = make_sentence(tape, np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        embed_tree(TreeNode(2, None, None), sent, params)


def test_word_width_mismatch_rejected():
    params = init_composition(3, np.random.default_rng(0))
    tape = ad.Tape()
    word = NodeState(tape.leaf([1.0, 2.0]), tape.leaf([0.0, 0.0]))
    with pytest.raises(ad.ShapeError):
        compose(None, None, word, params)


def test_composition_gradients():
    rng = np.random.default_rng(9)
    n, width = 4, 3
    rows_h = rng.normal(size=(n, width)) * 0.5
    rows_c = rng.normal(size=(n, width)) * 0.5
    params = init_composition(width, rng)
    root = build_greedy(rng.normal(size=n), 0, n - 1)

    def build(tape):
        out = embed_tree(root, make_sentence(tape, rows_h, rows_c), params)
        return ad.sum_scalars([ad.total(out.h), ad.total(out.c)])

    assert ad.finite_difference_check(build, params.parameters()) < 1e-4


def test_full_pipeline_gradients():
    # embedding leaf -> BiLSTM -> fixed greedy tree -> root state
    rng = np.random.default_rng(4)
    n, word_dim, hidden = 4, 3, 2
    embed = ad.Parameter("x", rng.normal(size=(n, word_dim)) * 0.5)
    fwd = init_direction("f", word_dim, hidden, rng)
    bwd = init_direction("b", word_dim, hidden, rng)
    comp = init_composition(2 * hidden, rng)
    root = build_greedy(rng.normal(size=n), 0, n - 1)

    def build(tape):
        enc = encode(tape.watch(embed), fwd, bwd)
        out = embed_tree(root, enc, comp)
        return ad.sum_scalars([ad.total(out.h), ad.total(out.c)])

    everything = [embed, *fwd.parameters(), *bwd.parameters(), *comp.parameters()]
    assert ad.finite_difference_check(build, everything) < 1e-4
