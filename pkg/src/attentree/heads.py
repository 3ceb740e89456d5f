"""Classification heads and the combined training loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad

__all__ = ["ClassifierParams", "init_classifier", "pair_features", "classify",
           "task_loss", "LossBreakdown", "total_loss"]


@dataclass
class ClassifierParams:
    """Two-layer softmax classifier: input -> hidden relu -> class log-probs."""

    w1: ad.Parameter  # (hidden, input_dim)
    b1: ad.Parameter  # (hidden,)
    w2: ad.Parameter  # (classes, hidden)
    b2: ad.Parameter  # (classes,)

    @property
    def input_dim(self) -> int:
        return self.w1.data.shape[1]

    @property
    def classes(self) -> int:
        return self.w2.data.shape[0]

    def parameters(self) -> list[ad.Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_classifier(input_dim: int, hidden_dim: int, classes: int,
                    rng: np.random.Generator) -> ClassifierParams:
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError(f"dimensions must be >= 1, got input {input_dim}, hidden {hidden_dim}")
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    b_in = 1.0 / math.sqrt(input_dim)
    b_hidden = 1.0 / math.sqrt(hidden_dim)
    return ClassifierParams(
        ad.Parameter("head.w1", rng.uniform(-b_in, b_in, size=(hidden_dim, input_dim))),
        ad.Parameter("head.b1", np.zeros(hidden_dim)),
        ad.Parameter("head.w2", rng.uniform(-b_hidden, b_hidden, size=(classes, hidden_dim))),
        ad.Parameter("head.b2", np.zeros(classes)),
    )


def pair_features(a: ad.DiffValue, b: ad.DiffValue) -> ad.DiffValue:
    """[a; b; |a - b|; a * b] for two sentence embeddings."""
    if a.data.shape != b.data.shape:
        raise ad.ShapeError(f"pair_features needs equal shapes, got {a.data.shape} and {b.data.shape}")
    return ad.concat([a, b, ad.absolute(ad.sub(a, b)), ad.mul(a, b)])


def classify(features: ad.DiffValue, params: ClassifierParams,
             input_keep=None, hidden_keep=None) -> ad.DiffValue:
    """Class log-probabilities. ``*_keep`` are optional constant dropout masks
    (already scaled by 1/keep-rate) on the features and the hidden layer."""
    if features.data.shape != (params.input_dim,):
        raise ad.ShapeError(
            f"classify expects shape ({params.input_dim},), got {features.data.shape}"
        )
    tape = features.tape
    w1 = tape.watch(params.w1)
    b1 = tape.watch(params.b1)
    w2 = tape.watch(params.w2)
    b2 = tape.watch(params.b2)
    if input_keep is not None:
        features = ad.const_mul(features, input_keep)
    hidden = ad.relu(ad.add(ad.matmul(w1, features), b1))
    if hidden_keep is not None:
        hidden = ad.const_mul(hidden, hidden_keep)
    logits = ad.add(ad.matmul(w2, hidden), b2)
    return ad.log(ad.softmax(logits))


def task_loss(log_probs: ad.DiffValue, label: int) -> ad.DiffValue:
    """Negative log-probability of the true class; shape (1,)."""
    n = log_probs.data.shape[0]
    if not 0 <= label < n:
        raise ValueError(f"label {label} outside classes 0..{n - 1}")
    return ad.scale(ad.vslice(log_probs, label, label + 1), -1.0)


@dataclass
class LossBreakdown:
    """The three recorded loss terms and their weighted total.

    ``total`` is assembled on the tape as (task + alpha*tree) + penalty*l2,
    so its value is bitwise reproducible from the parts.
    """

    task: ad.DiffValue
    tree: ad.DiffValue
    l2: ad.DiffValue
    total: ad.DiffValue


def total_loss(task: ad.DiffValue, tree: ad.DiffValue,
               param_leaves: Sequence[ad.DiffValue],
               alpha: float, l2_penalty: float) -> LossBreakdown:
    """Combine the task loss, the weighted tree loss, and the squared-norm
    penalty over ``param_leaves`` (pass only leaves that should decay)."""
    if alpha < 0 or l2_penalty < 0:
        raise ValueError(f"loss weights must be non-negative, got alpha={alpha}, l2={l2_penalty}")
    squares = [ad.total(ad.mul(leaf, leaf)) for leaf in param_leaves]
    l2 = ad.sum_scalars(squares) if squares else task.tape.leaf(np.zeros(1))
    combined = ad.add(ad.add(task, ad.scale(tree, alpha)), ad.scale(l2, l2_penalty))
    return LossBreakdown(task, tree, l2, combined)
