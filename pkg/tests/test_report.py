"""Depth-report aggregation and rendering tests."""

import numpy as np
import pytest

from attentree.data import DataError, build_vocab
from attentree.report import (
    GroupDepthStats,
    collect_depth_stats,
    depth_table,
    read_groups_file,
    read_metrics,
    render_depth_figure,
    render_training_curves,
)
from attentree.trainer import Model, TrainConfig, greedy_parse
from attentree.tree import node_depths

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def small_model(sentences):
    config = TrainConfig(word_dim=4, hidden_dim=3, classifier_dim=5)
    vocab = build_vocab(sentences)
    return Model.build(config, vocab, np.random.default_rng(4))


def test_read_groups_file(tmp_path):
    path = write(tmp_path, "groups.txt",
                 "# task words\nkeywords: Keystone ARCH\nfiller: w01 w02 w03\n\n")
    groups = read_groups_file(path)
    assert groups == {"keywords": ["keystone", "arch"],
                      "filler": ["w01", "w02", "w03"]}


@pytest.mark.parametrize("text,match", [
    ("keywords keystone\n", "expected"),
    ("keywords:\n", "lists no tokens"),
    ("a: x\na: y\n", "duplicate"),
    ("# only comments\n", "no groups"),
])
def test_read_groups_file_errors(tmp_path, text, match):
    path = write(tmp_path, "groups.txt", text)
    with pytest.raises(DataError, match=match):
        read_groups_file(path)


def test_collect_depth_stats_counts_and_values():
    sentences = [["ant", "bee", "ant"], ["bee", "cat"], ["cat"]]
    model = small_model(sentences)
    groups = {"ants": ["ant"], "bees": ["bee"], "ghosts": ["zzz"]}
    stats = collect_depth_stats(model, sentences, groups)
    by_name = {s.name: s for s in stats}

    assert [s.name for s in stats] == ["ants", "bees"]  # ghosts never occur
    assert by_name["ants"].occurrences == 2
    assert by_name["bees"].occurrences == 2

    # recompute one group against greedy parses directly
    want_depths, want_scores = [], []
    for sentence in sentences:
        root, scores = greedy_parse(model, sentence)
        depths = node_depths(root)
        for position, token in enumerate(sentence):
            if token == "ant":
                want_depths.append(depths[position])
                want_scores.append(scores[position])
    assert by_name["ants"].mean_depth == pytest.approx(np.mean(want_depths))
    assert by_name["ants"].mean_score == pytest.approx(np.mean(want_scores))


def test_single_word_sentence_depth_zero():
    sentences = [["ant"]]
    model = small_model(sentences)
    stats = collect_depth_stats(model, sentences, {"ants": ["ant"]})
    assert stats[0].mean_depth == 0.0
    assert stats[0].median_depth == 0.0
    assert stats[0].occurrences == 1


def test_depth_table_format():
    stats = [GroupDepthStats("keywords", 12, 0.25, 0.0, 1.5),
             GroupDepthStats("filler", 30, 2.125, 2.0, -0.75)]
    text = depth_table(stats)
    lines = text.splitlines()
    assert lines[0] == "group\toccurrences\tmean_depth\tmedian_depth\tmean_score"
    assert lines[1] == "keywords\t12\t0.250000\t0.000000\t1.500000"
    assert lines[2] == "filler\t30\t2.125000\t2.000000\t-0.750000"
    assert text.endswith("\n")


def test_render_depth_figure_writes_png(tmp_path):
    stats = [GroupDepthStats("a", 3, 1.0, 1.0, 0.2),
             GroupDepthStats("b", 5, 2.0, 2.0, -0.1)]
    path = tmp_path / "depths.png"
    render_depth_figure(stats, path)
    assert path.read_bytes()[:8] == PNG_MAGIC
    with pytest.raises(ValueError):
        render_depth_figure([], tmp_path / "empty.png")


def test_read_metrics_round_trip(tmp_path):
    path = write(tmp_path, "metrics.jsonl",
                 '{"epoch": 1, "train_loss": 0.9, "train_acc": 0.5, "valid_acc": 0.4}\n'
                 '\n'
                 '{"epoch": 2, "train_loss": 0.7, "train_acc": 0.6, "valid_acc": 0.5}\n')
    records = read_metrics(path)
    assert [r["epoch"] for r in records] == [1, 2]
    assert records[1]["valid_acc"] == 0.5


def test_read_metrics_bad_line(tmp_path):
    path = write(tmp_path, "metrics.jsonl", '{"epoch": 1}\nnot json\n')
    with pytest.raises(DataError, match=r"metrics\.jsonl:2"):
        read_metrics(path)


def test_render_training_curves(tmp_path):
    records = [
        {"epoch": 1, "train_loss": 1.0, "train_acc": 0.5, "valid_acc": 0.45},
        {"epoch": 2, "train_loss": 0.8, "train_acc": 0.6, "valid_acc": 0.55},
    ]
    path = tmp_path / "curves.png"
    render_training_curves(records, path)
    assert path.read_bytes()[:8] == PNG_MAGIC

    no_valid = [{"epoch": 1, "train_loss": 1.0, "train_acc": 0.5, "valid_acc": None}]
    path2 = tmp_path / "curves2.png"
    render_training_curves(no_valid, path2)
    assert path2.read_bytes()[:8] == PNG_MAGIC
    with pytest.raises(ValueError):
        render_training_curves([], tmp_path / "empty.png")
