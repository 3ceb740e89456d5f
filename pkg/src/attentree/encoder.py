"""Bidirectional LSTM producing context-aware state vectors per word.

Each direction packs its gate weights row-wise in the fixed order
(input, forget, output, candidate), so one matrix product yields all four
pre-activations. Per-word outputs concatenate the forward and backward
halves: position i carries [h_fwd[i]; h_bwd[i]] and [c_fwd[i]; c_bwd[i]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

__all__ = ["LstmDirectionParams", "EncodedSentence", "init_direction", "encode"]


@dataclass
class LstmDirectionParams:
    """One direction's weights; gate rows packed (input, forget, output, candidate)."""

    w_input: ad.Parameter   # (4*hidden, input_dim)
    w_recur: ad.Parameter   # (4*hidden, hidden)
    bias: ad.Parameter      # (4*hidden,)

    @property
    def hidden_dim(self) -> int:
        return self.w_recur.data.shape[1]

    def parameters(self) -> list[ad.Parameter]:
        return [self.w_input, self.w_recur, self.bias]


def init_direction(prefix: str, input_dim: int, hidden_dim: int,
                   rng: np.random.Generator) -> LstmDirectionParams:
    """Uniform [-1/sqrt(hidden), 1/sqrt(hidden)] weights; forget bias starts at +1."""
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError(f"dimensions must be >= 1, got input {input_dim}, hidden {hidden_dim}")
    bound = 1.0 / math.sqrt(hidden_dim)
    w_input = rng.uniform(-bound, bound, size=(4 * hidden_dim, input_dim))
    w_recur = rng.uniform(-bound, bound, size=(4 * hidden_dim, hidden_dim))
    bias = np.zeros(4 * hidden_dim)
    bias[hidden_dim:2 * hidden_dim] = 1.0
    return LstmDirectionParams(
        ad.Parameter(f"{prefix}.w_input", w_input),
        ad.Parameter(f"{prefix}.w_recur", w_recur),
        ad.Parameter(f"{prefix}.bias", bias),
    )


@dataclass
class EncodedSentence:
    """Per-word hidden and cell vectors, each of width 2*hidden."""

    h: list[ad.DiffValue]
    c: list[ad.DiffValue]

    def __len__(self) -> int:
        return len(self.h)

    @property
    def width(self) -> int:
        return self.h[0].data.shape[0]


def _run_direction(x: ad.DiffValue, params: LstmDirectionParams, order):
    tape = x.tape
    dh = params.hidden_dim
    w_input = tape.watch(params.w_input)
    w_recur = tape.watch(params.w_recur)
    bias = tape.watch(params.bias)
    # all input projections at once: (n, input) @ (input, 4*hidden)
    projected = ad.matmul(x, ad.transpose(w_input))

    n = x.data.shape[0]
    h = tape.leaf(np.zeros(dh))
    c = tape.leaf(np.zeros(dh))
    hs: list[ad.DiffValue | None] = [None] * n
    cs: list[ad.DiffValue | None] = [None] * n
    for i in order:
        z = ad.add(ad.add(ad.row(projected, i), ad.matmul(w_recur, h)), bias)
        gate_in = ad.sigmoid(ad.vslice(z, 0, dh))
        gate_forget = ad.sigmoid(ad.vslice(z, dh, 2 * dh))
        gate_out = ad.sigmoid(ad.vslice(z, 2 * dh, 3 * dh))
        candidate = ad.tanh(ad.vslice(z, 3 * dh, 4 * dh))
        c = ad.add(ad.mul(gate_forget, c), ad.mul(gate_in, candidate))
        h = ad.mul(gate_out, ad.tanh(c))
        hs[i] = h
        cs[i] = c
    return hs, cs


def encode(x: ad.DiffValue, fwd: LstmDirectionParams,
           bwd: LstmDirectionParams) -> EncodedSentence:
    """Run both directions over the (n, input_dim) matrix ``x``."""
    if x.data.ndim != 2:
        raise ad.ShapeError(f"encode expects an (n, input_dim) matrix, got shape {x.data.shape}")
    n = x.data.shape[0]
    if n == 0:
        raise ValueError("cannot encode an empty sentence")
    fh, fc = _run_direction(x, fwd, range(n))
    bh, bc = _run_direction(x, bwd, range(n - 1, -1, -1))
    h = [ad.concat([fh[i], bh[i]]) for i in range(n)]
    c = [ad.concat([fc[i], bc[i]]) for i in range(n)]
    return EncodedSentence(h, c)
