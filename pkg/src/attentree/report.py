"""Depth statistics over greedy parses, with delimited and figure output.

A trained model should pull task-informative words toward the root, so the
report aggregates per-word depth (root = 0) and raw score across a dataset,
grouped by named token sets, and renders the comparison as a figure next to
the machine-readable table.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib import pyplot as plt

from .data import DataError
from .trainer import Model, greedy_parse
from .tree import node_depths

__all__ = [
    "GroupDepthStats",
    "read_groups_file",
    "collect_depth_stats",
    "depth_table",
    "render_depth_figure",
    "read_metrics",
    "render_training_curves",
]


@dataclass
class GroupDepthStats:
    """Aggregates for one token group across every parsed sentence."""

    name: str
    occurrences: int
    mean_depth: float
    median_depth: float
    mean_score: float


def read_groups_file(path) -> dict[str, list[str]]:
    """Named token groups, one per line: ``name: token token ...``."""
    groups: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, rest = line.partition(":")
            name = name.strip()
            if not sep or not name:
                raise DataError(f"{path}:{lineno}: expected 'name: token token ...'")
            tokens = rest.lower().split()
            if not tokens:
                raise DataError(f"{path}:{lineno}: group {name!r} lists no tokens")
            if name in groups:
                raise DataError(f"{path}:{lineno}: duplicate group {name!r}")
            groups[name] = tokens
    if not groups:
        raise DataError(f"{path}: no groups defined")
    return groups


def collect_depth_stats(model: Model, sentences: Iterable[Sequence[str]],
                        groups: dict[str, list[str]]) -> list[GroupDepthStats]:
    """Greedy-parse every sentence and aggregate depth/score per group.

    A group none of whose tokens ever occur is omitted, not an error.
    Output order follows the groups mapping.
    """
    member_of: dict[str, list[str]] = {}
    for name, tokens in groups.items():
        for token in tokens:
            member_of.setdefault(token, []).append(name)
    depths: dict[str, list[int]] = {name: [] for name in groups}
    scores: dict[str, list[float]] = {name: [] for name in groups}
    for sentence in sentences:
        root, sentence_scores = greedy_parse(model, sentence)
        by_position = node_depths(root)
        for position, token in enumerate(sentence):
            for name in member_of.get(token, ()):
                depths[name].append(by_position[position])
                scores[name].append(float(sentence_scores[position]))
    return [
        GroupDepthStats(
            name=name,
            occurrences=len(depths[name]),
            mean_depth=statistics.fmean(depths[name]),
            median_depth=float(statistics.median(depths[name])),
            mean_score=statistics.fmean(scores[name]),
        )
        for name in groups
        if depths[name]
    ]


def depth_table(stats: Sequence[GroupDepthStats]) -> str:
    """Tab-separated rendering with a header row."""
    lines = ["group\toccurrences\tmean_depth\tmedian_depth\tmean_score"]
    for s in stats:
        lines.append(
            f"{s.name}\t{s.occurrences}\t{s.mean_depth:.6f}"
            f"\t{s.median_depth:.6f}\t{s.mean_score:.6f}"
        )
    return "\n".join(lines) + "\n"


def render_depth_figure(stats: Sequence[GroupDepthStats], path) -> None:
    """Bar charts of mean depth and mean score per group."""
    if not stats:
        raise ValueError("nothing to plot: no group had any occurrence")
    names = [s.name for s in stats]
    fig, (ax_depth, ax_score) = plt.subplots(1, 2, figsize=(2 + 1.2 * len(stats) * 2, 4))
    ax_depth.bar(names, [s.mean_depth for s in stats], color="tab:blue")
    ax_depth.set_ylabel("mean depth (root = 0)")
    ax_depth.set_title("Greedy-tree depth by group")
    ax_score.bar(names, [s.mean_score for s in stats], color="tab:orange")
    ax_score.set_ylabel("mean raw score")
    ax_score.set_title("Word score by group")
    for ax in (ax_depth, ax_score):
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def read_metrics(path) -> list[dict]:
    """Per-epoch records from a line-delimited metrics file."""
    records: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: not a valid record ({err.msg})") from None
    return records


def render_training_curves(records: Sequence[dict], path) -> None:
    """Loss and accuracy curves over epochs."""
    if not records:
        raise ValueError("nothing to plot: no metrics records")
    epochs = [r["epoch"] for r in records]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 4))
    ax_loss.plot(epochs, [r["train_loss"] for r in records], marker="o")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("mean batch loss")
    ax_loss.set_title("Training loss")
    ax_acc.plot(epochs, [r["train_acc"] for r in records], marker="o", label="train")
    if all("valid_acc" in r and r["valid_acc"] is not None for r in records):
        ax_acc.plot(epochs, [r["valid_acc"] for r in records], marker="s", label="valid")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.set_title("Accuracy")
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
