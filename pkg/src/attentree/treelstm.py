"""Three-input Tree-LSTM composition over a built tree.

Every node mixes its left child, right child, and own word state through six
gates computed from one packed affine map. Absent children contribute exact
zero state, so leaves and single-child nodes reuse the same formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .encoder import EncodedSentence
from .tree import TreeNode

__all__ = ["CompositionParams", "NodeState", "init_composition", "compose", "embed_tree"]


@dataclass
class NodeState:
    """Hidden and cell vectors of one composed node."""

    h: ad.DiffValue
    c: ad.DiffValue


@dataclass
class CompositionParams:
    """Packed gate map: rows (input, forget-left, forget-right, forget-word,
    output, candidate) over the concatenated [h_left; h_right; h_word]."""

    weights: ad.Parameter  # (6*width, 3*width)
    bias: ad.Parameter     # (6*width,)

    @property
    def width(self) -> int:
        return self.weights.data.shape[1] // 3

    def parameters(self) -> list[ad.Parameter]:
        return [self.weights, self.bias]


def init_composition(width: int, rng: np.random.Generator) -> CompositionParams:
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    bound = 1.0 / math.sqrt(3 * width)
    return CompositionParams(
        ad.Parameter("compose.weights", rng.uniform(-bound, bound, size=(6 * width, 3 * width))),
        ad.Parameter("compose.bias", np.zeros(6 * width)),
    )


def compose(left: NodeState | None, right: NodeState | None, word: NodeState,
            params: CompositionParams) -> NodeState:
    """Combine two child states and the node's own word state."""
    width = params.width
    if word.h.data.shape != (width,):
        raise ad.ShapeError(
            f"compose expects word state of shape ({width},), got {word.h.data.shape}"
        )
    tape = word.h.tape
    if left is None or right is None:
        zero = tape.leaf(np.zeros(width))
        if left is None:
            left = NodeState(zero, zero)
        if right is None:
            right = NodeState(zero, zero)

    weights = tape.watch(params.weights)
    bias = tape.watch(params.bias)
    z = ad.add(ad.matmul(weights, ad.concat([left.h, right.h, word.h])), bias)

    gate_in = ad.sigmoid(ad.vslice(z, 0, width))
    forget_left = ad.sigmoid(ad.vslice(z, width, 2 * width))
    forget_right = ad.sigmoid(ad.vslice(z, 2 * width, 3 * width))
    forget_word = ad.sigmoid(ad.vslice(z, 3 * width, 4 * width))
    gate_out = ad.sigmoid(ad.vslice(z, 4 * width, 5 * width))
    candidate = ad.tanh(ad.vslice(z, 5 * width, 6 * width))

    c = ad.add(
        ad.add(
            ad.add(ad.mul(forget_left, left.c), ad.mul(forget_right, right.c)),
            ad.mul(forget_word, word.c),
        ),
        ad.mul(gate_in, candidate),
    )
    return NodeState(ad.mul(gate_out, ad.tanh(c)), c)


def _post_order(root: TreeNode) -> list[TreeNode]:
    # children before parents, without recursion: chains grow as deep as n
    order: list[TreeNode] = []
    stack: list[tuple[TreeNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        stack.append((node, True))
        if node.right is not None:
            stack.append((node.right, False))
        if node.left is not None:
            stack.append((node.left, False))
    return order


def embed_tree(root: TreeNode, enc: EncodedSentence,
               params: CompositionParams) -> NodeState:
    """Compose bottom-up; the root's state is the sentence embedding.

    Every node is evaluated exactly once, over an explicit schedule rather
    than recursion so that degenerate chain trees cannot exhaust the stack.
    """
    n = len(enc)
    states: dict[int, NodeState] = {}
    for node in _post_order(root):
        if not 0 <= node.index < n:
            raise ValueError(f"tree position {node.index} outside sentence of {n} words")
        word = NodeState(enc.h[node.index], enc.c[node.index])
        left = states.get(id(node.left)) if node.left is not None else None
        right = states.get(id(node.right)) if node.right is not None else None
        states[id(node)] = compose(left, right, word, params)
    return states[id(root)]
