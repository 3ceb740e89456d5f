"""Word-importance scoring: a small MLP over encoder states, or fixed tf-idf."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .data import TfidfTable
from .encoder import EncodedSentence

__all__ = ["SCORE_HIDDEN", "ScorerParams", "init_scorer", "score_word",
           "score_sentence", "tfidf_as_scores"]

# fixed width of the scoring head's single hidden layer
SCORE_HIDDEN = 128


@dataclass
class ScorerParams:
    """Two-layer scalar head: input -> 128 relu units -> 1."""

    w1: ad.Parameter  # (128, input_dim)
    b1: ad.Parameter  # (128,)
    w2: ad.Parameter  # (1, 128)
    b2: ad.Parameter  # (1,)

    @property
    def input_dim(self) -> int:
        return self.w1.data.shape[1]

    def parameters(self) -> list[ad.Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_scorer(input_dim: int, rng: np.random.Generator) -> ScorerParams:
    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}")
    b_in = 1.0 / math.sqrt(input_dim)
    b_hidden = 1.0 / math.sqrt(SCORE_HIDDEN)
    return ScorerParams(
        ad.Parameter("scorer.w1", rng.uniform(-b_in, b_in, size=(SCORE_HIDDEN, input_dim))),
        ad.Parameter("scorer.b1", np.zeros(SCORE_HIDDEN)),
        ad.Parameter("scorer.w2", rng.uniform(-b_hidden, b_hidden, size=(1, SCORE_HIDDEN))),
        ad.Parameter("scorer.b2", np.zeros(1)),
    )


def score_word(h: ad.DiffValue, params: ScorerParams) -> ad.DiffValue:
    """Importance of one word given its encoder state; shape (1,)."""
    if h.data.shape != (params.input_dim,):
        raise ad.ShapeError(
            f"score_word expects shape ({params.input_dim},), got {h.data.shape}"
        )
    tape = h.tape
    w1 = tape.watch(params.w1)
    b1 = tape.watch(params.b1)
    w2 = tape.watch(params.w2)
    b2 = tape.watch(params.b2)
    hidden = ad.relu(ad.add(ad.matmul(w1, h), b1))
    return ad.add(ad.matmul(w2, hidden), b2)


def score_sentence(enc: EncodedSentence, params: ScorerParams) -> ad.DiffValue:
    """Per-word scores as one (n,) vector. Each word is scored independently."""
    return ad.concat([score_word(h, params) for h in enc.h])


def tfidf_as_scores(tokens, table: TfidfTable) -> np.ndarray:
    """Fixed per-word weights; constant with respect to every parameter."""
    if not tokens:
        raise ValueError("cannot score an empty token list")
    return np.array([table.weight(t) for t in tokens])
