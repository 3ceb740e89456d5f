"""Synthetic keyword-detection data for end-to-end runs and tests.

Label 1 means a designated keyword appears somewhere in the sentence; the
remaining words are distractors drawn uniformly from the rest of the
vocabulary. The task is linearly detectable yet still exercises the whole
pipeline, and the keyword is the one word a good parser should pull toward
the root.
"""

from __future__ import annotations

import json

import numpy as np

from .data import LabeledExample

__all__ = ["KEYWORD", "keyword_presence", "write_jsonl"]

KEYWORD = "keystone"


def keyword_presence(count: int = 200, length: int = 8, vocab_size: int = 50,
                     keyword: str = KEYWORD, seed: int = 1234) -> list[LabeledExample]:
    """Balanced labeled sentences; positives hide ``keyword`` at a uniform slot.

    The vocabulary is ``keyword`` plus ``vocab_size - 1`` distractor words,
    so sentences use at most ``vocab_size`` distinct tokens.
    """
    if count < 2 or length < 1 or vocab_size < 2:
        raise ValueError(
            f"need count >= 2, length >= 1, vocab_size >= 2; "
            f"got {count}, {length}, {vocab_size}"
        )
    rng = np.random.default_rng(seed)
    distractors = [f"w{i:02d}" for i in range(vocab_size - 1)]
    examples: list[LabeledExample] = []
    for i in range(count):
        tokens = [distractors[j] for j in rng.integers(0, len(distractors), size=length)]
        label = i % 2
        if label == 1:
            tokens[int(rng.integers(0, length))] = keyword
        examples.append(LabeledExample(label=label, tokens=tokens))
    return examples


def write_jsonl(examples, path) -> None:
    """One JSON record per line, matching the dataset reader's layout."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            if ex.is_pair:
                record = {
                    "premise": " ".join(ex.premise),
                    "hypothesis": " ".join(ex.hypothesis),
                    "label": ex.label,
                }
            else:
                record = {"sentence": " ".join(ex.tokens), "label": ex.label}
            fh.write(json.dumps(record) + "\n")
