"""Textual tree renderings: S-expressions that round-trip, and DOT graphs.

Every node is wrapped in its own parentheses, leaves included. This keeps
one-child nodes unambiguous: "((deep) learning)" puts "deep" on the left of
"learning", "(deep (learning))" puts "learning" on the right of "deep", and
neither can be misread as the other.
"""

from __future__ import annotations

from typing import Sequence

from .tree import TreeNode

__all__ = ["to_sexpr", "parse_sexpr", "to_dot"]


def to_sexpr(root: TreeNode, tokens: Sequence[str]) -> str:
    """Render a tree over ``tokens`` as a fully parenthesized S-expression."""
    if root is None:
        raise ValueError("cannot render an empty tree")

    def render(node: TreeNode) -> str:
        word = tokens[node.index]
        if "(" in word or ")" in word or " " in word:
            raise ValueError(f"token {word!r} cannot appear in an s-expression")
        parts = []
        if node.left is not None:
            parts.append(render(node.left))
        parts.append(word)
        if node.right is not None:
            parts.append(render(node.right))
        return "(" + " ".join(parts) + ")"

    return render(root)


def parse_sexpr(text: str) -> tuple[TreeNode, list[str]]:
    """Inverse of :func:`to_sexpr`.

    Returns the root and the tokens in sentence order; node indexes refer
    to positions in that token list.
    """
    pos = 0

    def skip_spaces() -> None:
        nonlocal pos
        while pos < len(text) and text[pos] == " ":
            pos += 1

    def fail(message: str) -> ValueError:
        return ValueError(f"offset {pos}: {message}")

    tokens: list[str] = []

    def parse_node() -> TreeNode:
        nonlocal pos
        skip_spaces()
        if pos >= len(text) or text[pos] != "(":
            raise fail("expected '('")
        pos += 1
        skip_spaces()
        left = parse_node() if pos < len(text) and text[pos] == "(" else None
        skip_spaces()
        start = pos
        while pos < len(text) and text[pos] not in " ()":
            pos += 1
        if pos == start:
            raise fail("expected a word")
        word = text[start:pos]
        index = len(tokens)
        tokens.append(word)
        skip_spaces()
        right = parse_node() if pos < len(text) and text[pos] == "(" else None
        skip_spaces()
        if pos >= len(text) or text[pos] != ")":
            raise fail("expected ')'")
        pos += 1
        return TreeNode(index, left, right)

    # tokens fill in in-order, which is sentence order, because the left
    # subtree is parsed before the node's own word
    root = parse_node()
    skip_spaces()
    if pos != len(text):
        raise fail("trailing text after the tree")
    return root, tokens


def _quote(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(root: TreeNode, tokens: Sequence[str]) -> str:
    """Graphviz rendering with one node per word and L/R-labeled edges."""
    if root is None:
        raise ValueError("cannot render an empty tree")
    lines = ["digraph tree {", "  node [shape=box];"]
    edges: list[str] = []

    def walk(node: TreeNode) -> None:
        lines.append(f"  n{node.index} [label={_quote(tokens[node.index])}];")
        for child, side in ((node.left, "L"), (node.right, "R")):
            if child is not None:
                edges.append(f"  n{node.index} -> n{child.index} [label={side}];")
                walk(child)

    walk(root)
    return "\n".join(lines + edges + ["}"]) + "\n"
