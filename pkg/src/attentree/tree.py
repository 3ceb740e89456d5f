"""Binary trees over word positions: greedy construction, policy sampling,
and exhaustive enumeration.

Positions are 0-based and spans are inclusive [begin, end]; an empty span
(begin > end) is an absent subtree. Construction always places one word of
the span at the node and recurses on the two remaining sides, so the
in-order traversal of any tree is exactly 0..n-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import autodiff as ad

__all__ = [
    "TreeNode",
    "PolicyStep",
    "SampledTree",
    "build_greedy",
    "policy_distribution",
    "sample_tree",
    "in_order",
    "node_depths",
    "tree_spans",
    "enumerate_trees",
    "tree_probability",
    "MAX_ENUMERATION",
]

# exhaustive enumeration grows as the Catalan numbers; keep it desk-sized
MAX_ENUMERATION = 10


@dataclass
class TreeNode:
    """A word position with optional left/right subtrees."""

    index: int
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None


@dataclass
class PolicyStep:
    """One sampled decision: which word of span [begin, end] became the node."""

    begin: int
    end: int
    chosen: int
    log_prob: ad.DiffValue
    token: str | None = None

    @property
    def size(self) -> int:
        """Number of candidate words the decision chose among."""
        return self.end - self.begin + 1


@dataclass
class SampledTree:
    """A sampled tree plus its decisions in construction (pre-)order."""

    root: TreeNode
    steps: list[PolicyStep] = field(default_factory=list)


def _check_span(begin: int, end: int, n: int) -> None:
    if begin < 0 or end >= n:
        raise ValueError(f"span [{begin}, {end}] outside positions 0..{n - 1}")


def build_greedy(scores, begin: int, end: int) -> TreeNode | None:
    """Highest score takes the node; ties go to the smallest position."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"scores must be a vector, got shape {arr.shape}")
    if begin > end:
        return None
    _check_span(begin, end, arr.shape[0])
    if begin == end:
        return TreeNode(begin)
    pivot = begin + int(np.argmax(arr[begin:end + 1]))
    return TreeNode(
        pivot,
        build_greedy(arr, begin, pivot - 1),
        build_greedy(arr, pivot + 1, end),
    )


def policy_distribution(scores: ad.DiffValue, begin: int, end: int) -> ad.DiffValue:
    """Softmax over the span's scores; differentiable w.r.t. the scores."""
    if begin > end:
        raise ValueError(f"empty span [{begin}, {end}] has no distribution")
    _check_span(begin, end, scores.data.shape[0])
    return ad.softmax(ad.vslice(scores, begin, end + 1))


def sample_tree(scores: ad.DiffValue, rng: np.random.Generator,
                tokens: Sequence[str] | None = None) -> SampledTree:
    """Sample a tree top-down from the per-span softmax policy.

    Records one step per node, with a differentiable log-probability. A
    single-word span has exactly one action, so its log-probability is 0.
    """
    n = scores.data.shape[0]
    if n == 0:
        raise ValueError("cannot sample a tree over zero words")
    if tokens is not None and len(tokens) != n:
        raise ValueError(f"{len(tokens)} tokens for {n} scores")
    steps: list[PolicyStep] = []

    def sample_span(begin: int, end: int) -> TreeNode | None:
        if begin > end:
            return None
        dist = policy_distribution(scores, begin, end)
        probs = dist.data
        offset = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        offset = min(offset, probs.size - 1)
        chosen = begin + offset
        log_prob = ad.log(ad.vslice(dist, offset, offset + 1))
        steps.append(PolicyStep(
            begin, end, chosen, log_prob,
            tokens[chosen] if tokens is not None else None,
        ))
        return TreeNode(
            chosen,
            sample_span(begin, chosen - 1),
            sample_span(chosen + 1, end),
        )

    return SampledTree(sample_span(0, n - 1), steps)


def in_order(root: TreeNode | None) -> list[int]:
    """Left subtree, node, right subtree."""
    out: list[int] = []

    def walk(node: TreeNode | None) -> None:
        if node is None:
            return
        walk(node.left)
        out.append(node.index)
        walk(node.right)

    walk(root)
    return out


def node_depths(root: TreeNode) -> dict[int, int]:
    """Depth of every position; the root sits at depth 0."""
    depths: dict[int, int] = {}

    def walk(node: TreeNode | None, depth: int) -> None:
        if node is None:
            return
        depths[node.index] = depth
        walk(node.left, depth + 1)
        walk(node.right, depth + 1)

    walk(root, 0)
    return depths


def tree_spans(root: TreeNode) -> list[tuple[int, int, int]]:
    """(index, begin, end) per node in construction order.

    Span bounds are recovered from the structure itself; they are exactly the
    spans a top-down construction would have decided over.
    """
    positions = in_order(root)
    if positions != list(range(len(positions))):
        raise ValueError("tree positions are not the contiguous range 0..n-1")
    out: list[tuple[int, int, int]] = []

    def walk(node: TreeNode | None, begin: int, end: int) -> None:
        if node is None:
            return
        out.append((node.index, begin, end))
        walk(node.left, begin, node.index - 1)
        walk(node.right, node.index + 1, end)

    walk(root, 0, len(positions) - 1)
    return out


def enumerate_trees(n: int) -> list[TreeNode]:
    """Every distinct tree over n words (the n-th Catalan number of them).

    Subtrees are shared between returned trees; treat them as read-only.
    """
    if n < 1:
        raise ValueError(f"need at least one word, got n={n}")
    if n > MAX_ENUMERATION:
        raise ValueError(
            f"enumeration over {n} words is refused; the count grows as the "
            f"Catalan numbers (limit {MAX_ENUMERATION})"
        )

    def span_trees(begin: int, end: int) -> list[TreeNode | None]:
        if begin > end:
            return [None]
        out: list[TreeNode | None] = []
        for pivot in range(begin, end + 1):
            for left in span_trees(begin, pivot - 1):
                for right in span_trees(pivot + 1, end):
                    out.append(TreeNode(pivot, left, right))
        return out

    return span_trees(0, n - 1)  # type: ignore[return-value]


def _span_softmax(scores: np.ndarray, begin: int, end: int) -> np.ndarray:
    part = scores[begin:end + 1]
    e = np.exp(part - part.max())
    return e / e.sum()


def tree_probability(root: TreeNode, scores) -> float:
    """Exact probability of sampling this tree under the span-softmax policy."""
    arr = np.asarray(scores, dtype=np.float64)
    prob = 1.0
    for index, begin, end in tree_spans(root):
        prob *= float(_span_softmax(arr, begin, end)[index - begin])
    return prob
