"""S-expression and DOT rendering tests."""

import re

import numpy as np
import pytest

from attentree.tree import TreeNode, build_greedy, in_order, node_depths
from attentree.treefmt import parse_sexpr, to_dot, to_sexpr


def test_single_word():
    assert to_sexpr(TreeNode(0, None, None), ["word"]) == "(word)"


def test_frozen_nested_example():
    # scores [1, 9, 2]: root "b", left leaf "a", right leaf "c"
    root = build_greedy(np.array([1.0, 9.0, 2.0]), 0, 2)
    assert to_sexpr(root, ["a", "b", "c"]) == "((a) b (c))"


def test_one_child_sides_are_distinct():
    left_child = TreeNode(1, TreeNode(0, None, None), None)
    right_child = TreeNode(0, None, TreeNode(1, None, None))
    assert to_sexpr(left_child, ["deep", "learning"]) == "((deep) learning)"
    assert to_sexpr(right_child, ["deep", "learning"]) == "(deep (learning))"
    assert to_sexpr(left_child, ["deep", "learning"]) != \
        to_sexpr(right_child, ["deep", "learning"])


def test_parse_assigns_sentence_order_indexes():
    root, tokens = parse_sexpr("((a) b (c))")
    assert tokens == ["a", "b", "c"]
    assert root.index == 1
    assert in_order(root) == [0, 1, 2]


def test_round_trip_random_trees():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = int(rng.integers(1, 10))
        tokens = [f"w{i}" for i in range(n)]
        root = build_greedy(rng.normal(size=n), 0, n - 1)
        text = to_sexpr(root, tokens)
        parsed_root, parsed_tokens = parse_sexpr(text)
        assert parsed_tokens == tokens
        assert node_depths(parsed_root) == node_depths(root)
        assert to_sexpr(parsed_root, parsed_tokens) == text


def test_round_trip_deep_chain():
    n = 40
    root = build_greedy(np.arange(float(n)), 0, n - 1)
    tokens = [f"w{i}" for i in range(n)]
    parsed_root, parsed_tokens = parse_sexpr(to_sexpr(root, tokens))
    assert parsed_tokens == tokens
    assert node_depths(parsed_root) == node_depths(root)


@pytest.mark.parametrize("text", [
    "",
    "word",
    "(a",
    "(a))",
    "(a) (b)",
    "()",
    "((a) (b))",
])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError, match="offset"):
        parse_sexpr(text)


def test_tokens_with_structure_characters_rejected():
    with pytest.raises(ValueError):
        to_sexpr(TreeNode(0, None, None), ["a(b"])
    with pytest.raises(ValueError):
        to_sexpr(TreeNode(0, None, None), ["a b"])


def test_dot_counts_and_labels():
    root = build_greedy(np.array([1.0, 9.0, 2.0, 8.0]), 0, 3)
    dot = to_dot(root, ["a", "b", "c", "d"])
    assert dot.startswith("digraph tree {")
    assert dot.rstrip().endswith("}")
    assert len(re.findall(r"^\s*n\d+ \[label=", dot, re.M)) == 4
    edges = re.findall(r"n\d+ -> n\d+ \[label=([LR])\]", dot)
    assert len(edges) == 3
    assert set(edges) <= {"L", "R"}
    assert dot.index('label="b"') < dot.index('label="a"')


def test_dot_escapes_quotes():
    dot = to_dot(TreeNode(0, None, None), ['say"hi"'])
    assert 'label="say\\"hi\\""' in dot
