"""Classifier head and combined-loss tests."""

import numpy as np
import pytest

from attentree import autodiff as ad
from attentree.heads import (
    classify,
    init_classifier,
    pair_features,
    task_loss,
    total_loss,
)


def zero_classifier(input_dim, hidden_dim, classes):
    params = init_classifier(input_dim, hidden_dim, classes, np.random.default_rng(0))
    for p in params.parameters():
        p.data[:] = 0.0
    return params


def test_init_shapes_and_validation():
    params = init_classifier(8, 5, 3, np.random.default_rng(1))
    assert params.w1.data.shape == (5, 8)
    assert params.b1.data.shape == (5,)
    assert params.w2.data.shape == (3, 5)
    assert params.b2.data.shape == (3,)
    assert params.input_dim == 8 and params.classes == 3
    assert np.all(np.abs(params.w1.data) <= 1.0 / np.sqrt(8))
    assert np.all(np.abs(params.w2.data) <= 1.0 / np.sqrt(5))
    with pytest.raises(ValueError):
        init_classifier(0, 5, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        init_classifier(8, 5, 1, np.random.default_rng(0))


def test_pair_features_hand_values():
    tape = ad.Tape()
    a = tape.leaf([1.0, -2.0])
    b = tape.leaf([3.0, 1.0])
    feats = pair_features(a, b)
    np.testing.assert_array_equal(
        feats.data, [1.0, -2.0, 3.0, 1.0, 2.0, 3.0, 3.0, -2.0]
    )


def test_pair_features_shape_mismatch():
    tape = ad.Tape()
    with pytest.raises(ad.ShapeError):
        pair_features(tape.leaf([1.0]), tape.leaf([1.0, 2.0]))


def test_zero_classifier_is_uniform():
    params = zero_classifier(4, 3, 5)
    tape = ad.Tape()
    out = classify(tape.leaf([1.0, 2.0, 3.0, 4.0]), params)
    np.testing.assert_allclose(out.data, np.log(1 / 5) * np.ones(5), atol=1e-12)


def test_classify_probabilities_sum_to_one():
    rng = np.random.default_rng(6)
    params = init_classifier(6, 4, 3, rng)
    tape = ad.Tape()
    out = classify(tape.leaf(rng.normal(size=6)), params)
    assert np.exp(out.data).sum() == pytest.approx(1.0, abs=1e-12)


def test_classify_shape_checked():
    params = zero_classifier(4, 3, 2)
    tape = ad.Tape()
    with pytest.raises(ad.ShapeError):
        classify(tape.leaf([1.0, 2.0]), params)


def test_dropout_masks_silence_coordinates():
    # a zeroed input coordinate must not influence the logits
    rng = np.random.default_rng(8)
    params = init_classifier(3, 4, 2, rng)
    keep = np.array([2.0, 0.0, 2.0])

    tape1 = ad.Tape()
    out1 = classify(tape1.leaf([0.5, 10.0, -0.25]), params, input_keep=keep)
    tape2 = ad.Tape()
    out2 = classify(tape2.leaf([0.5, -99.0, -0.25]), params, input_keep=keep)
    np.testing.assert_array_equal(out1.data, out2.data)

    # hidden mask: zeroing every unit leaves only the output bias path
    tape3 = ad.Tape()
    out3 = classify(tape3.leaf([0.5, 10.0, -0.25]), params,
                    hidden_keep=np.zeros(4))
    np.testing.assert_allclose(out3.data, np.log(0.5) * np.ones(2), atol=1e-12)


def test_task_loss_picks_label():
    tape = ad.Tape()
    log_probs = tape.leaf([np.log(0.7), np.log(0.3)])
    loss = task_loss(log_probs, 1)
    assert loss.data.shape == (1,)
    assert loss.data[0] == pytest.approx(-np.log(0.3), abs=1e-12)
    with pytest.raises(ValueError):
        task_loss(log_probs, 2)
    with pytest.raises(ValueError):
        task_loss(log_probs, -1)


def test_total_loss_matches_numpy_same_order():
    rng = np.random.default_rng(13)
    arrays = [rng.normal(size=(3, 2)), rng.normal(size=4)]
    task_v, tree_v = 1.25, -0.5
    alpha, penalty = 0.1, 1e-3

    tape = ad.Tape()
    leaves = [tape.leaf(a) for a in arrays]
    out = total_loss(tape.leaf([task_v]), tape.leaf([tree_v]), leaves, alpha, penalty)

    l2 = (arrays[0] * arrays[0]).sum() + (arrays[1] * arrays[1]).sum()
    assert out.l2.data[0] == l2
    assert out.total.data[0] == (task_v + alpha * tree_v) + penalty * l2


def test_total_loss_rejects_negative_weights():
    tape = ad.Tape()
    task = tape.leaf([1.0])
    tree = tape.leaf([0.0])
    with pytest.raises(ValueError):
        total_loss(task, tree, [], -0.1, 0.0)
    with pytest.raises(ValueError):
        total_loss(task, tree, [], 0.0, -1e-9)


def test_total_loss_empty_leaves_zero_l2():
    tape = ad.Tape()
    out = total_loss(tape.leaf([2.0]), tape.leaf([3.0]), [], 0.5, 10.0)
    assert out.l2.data[0] == 0.0
    assert out.total.data[0] == 2.0 + 0.5 * 3.0


def test_gradients_through_classify_and_task_loss():
    rng = np.random.default_rng(3)
    params = init_classifier(5, 4, 3, rng)
    features = ad.Parameter("feat", rng.normal(size=5) * 0.5)

    def build(tape):
        log_probs = classify(tape.watch(features), params)
        loss = task_loss(log_probs, 2)
        return total_loss(loss, tape.leaf([0.0]),
                          [tape.watch(p) for p in params.parameters()],
                          0.0, 1e-2).total

    assert ad.finite_difference_check(build, [features, *params.parameters()]) < 1e-4
