"""Vocabulary, word vectors, tf-idf weights, and dataset ingestion."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import autodiff as ad

__all__ = [
    "DataError",
    "UNKNOWN_TOKEN",
    "Vocabulary",
    "build_vocab",
    "EmbeddingTable",
    "init_embeddings",
    "load_pretrained",
    "lookup",
    "TfidfTable",
    "compute_tfidf",
    "LabeledExample",
    "read_dataset",
    "tokenize",
]

UNKNOWN_TOKEN = "<unk>"


class DataError(Exception):
    """Malformed input data; messages carry the offending location."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace."""
    return text.lower().split()


class Vocabulary:
    """Token <-> id mapping. Id 0 is reserved for the unknown token."""

    def __init__(self, tokens: Iterable[str]):
        self._id_to_token: list[str] = [UNKNOWN_TOKEN]
        for t in tokens:
            if t == UNKNOWN_TOKEN:
                continue
            self._id_to_token.append(t)
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, 0)

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.id(t) for t in tokens], dtype=np.intp)

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def tokens(self) -> list[str]:
        """All tokens in id order, including the unknown token at 0."""
        return list(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def __len__(self) -> int:
        return len(self._id_to_token)


def build_vocab(corpus: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Ids ordered by descending frequency, ties broken lexicographically."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter[str] = Counter()
    for sentence in corpus:
        counts.update(sentence)
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(kept)


@dataclass
class EmbeddingTable:
    """Word vectors, one row per vocabulary id. Trainable iff finetuned."""

    weights: ad.Parameter
    finetune: bool

    @property
    def dim(self) -> int:
        return self.weights.data.shape[1]


def init_embeddings(vocab: Vocabulary, dim: int, rng: np.random.Generator,
                    finetune: bool = True, spread: float = 0.05) -> EmbeddingTable:
    """All rows drawn uniformly from [-spread, spread]."""
    if dim < 1:
        raise ValueError(f"embedding dim must be >= 1, got {dim}")
    data = rng.uniform(-spread, spread, size=(len(vocab), dim))
    return EmbeddingTable(ad.Parameter("embedding.weights", data, trainable=finetune), finetune)


def load_pretrained(path, dim: int, vocab: Vocabulary, rng: np.random.Generator,
                    finetune: bool = True) -> EmbeddingTable:
    """Text vectors, one line per token: the token then exactly ``dim`` reals.

    Rows present in both the file and the vocabulary are copied; every other
    row keeps its uniform [-0.05, 0.05] draw from ``rng``.
    """
    table = init_embeddings(vocab, dim, rng, finetune=finetune)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                raise DataError(f"{path}:{lineno}: blank line in vector file")
            if len(fields) != dim + 1:
                raise DataError(
                    f"{path}:{lineno}: expected token + {dim} values, got {len(fields) - 1}"
                )
            token = fields[0]
            try:
                values = [float(f) for f in fields[1:]]
            except ValueError as err:
                raise DataError(f"{path}:{lineno}: unparsable value ({err})") from None
            if token in vocab:
                table.weights.data[vocab.id(token)] = values
    return table


def lookup(tape: ad.Tape, tokens: Sequence[str], vocab: Vocabulary,
           table: EmbeddingTable) -> ad.DiffValue:
    """Stack embedding rows for ``tokens``; unknown tokens map to id 0.

    The result participates in differentiation only when the table is
    finetuned; otherwise the rows are constants.
    """
    if not tokens:
        raise ValueError("cannot look up an empty token list")
    ids = vocab.ids(tokens)
    if table.finetune:
        base = tape.watch(table.weights)
    else:
        base = tape.leaf(table.weights.data)
    return ad.take_rows(base, ids)


class TfidfTable:
    """Corpus-level term weight per token; unseen tokens weigh 0.

    tf is the token's total corpus count over the total token count, and the
    idf factor is ln((1 + documents) / (1 + documents containing the token))
    plus one, each sentence counting as one document.
    """

    def __init__(self, weights: dict[str, float]):
        self._weights = dict(weights)

    def weight(self, token: str) -> float:
        return self._weights.get(token, 0.0)

    def as_array(self, vocab: Vocabulary) -> np.ndarray:
        return np.array([self._weights.get(t, 0.0) for t in vocab.tokens()])

    @classmethod
    def from_array(cls, vocab: Vocabulary, values: np.ndarray) -> "TfidfTable":
        return cls({t: float(v) for t, v in zip(vocab.tokens(), values)})

    def __len__(self) -> int:
        return len(self._weights)


def compute_tfidf(corpus: Iterable[Sequence[str]]) -> TfidfTable:
    counts: Counter[str] = Counter()
    doc_counts: Counter[str] = Counter()
    n_docs = 0
    n_tokens = 0
    for sentence in corpus:
        n_docs += 1
        n_tokens += len(sentence)
        counts.update(sentence)
        doc_counts.update(set(sentence))
    if n_tokens == 0:
        raise DataError("cannot compute term weights over an empty corpus")
    weights = {
        t: (c / n_tokens) * (math.log((1 + n_docs) / (1 + doc_counts[t])) + 1.0)
        for t, c in counts.items()
    }
    return TfidfTable(weights)


@dataclass
class LabeledExample:
    """One classification example: a sentence, or a premise/hypothesis pair."""

    label: int
    tokens: list[str] | None = None
    premise: list[str] | None = None
    hypothesis: list[str] | None = None

    @property
    def is_pair(self) -> bool:
        return self.premise is not None

    def sentences(self) -> list[list[str]]:
        if self.is_pair:
            return [self.premise, self.hypothesis]
        return [self.tokens]


def _parse_label(value, path, lineno) -> int:
    if isinstance(value, bool):
        raise DataError(f"{path}:{lineno}: label must be an integer class id, got {value!r}")
    if isinstance(value, str):
        try:
            value = int(value)
        except ValueError:
            raise DataError(f"{path}:{lineno}: unknown label {value!r}") from None
    if not isinstance(value, int):
        raise DataError(f"{path}:{lineno}: label must be an integer class id, got {value!r}")
    if value < 0:
        raise DataError(f"{path}:{lineno}: label must be non-negative, got {value}")
    return value


def _field_tokens(record: dict, key: str, path, lineno) -> list[str]:
    if key not in record:
        raise DataError(f"{path}:{lineno}: missing field {key!r}")
    if not isinstance(record[key], str):
        raise DataError(f"{path}:{lineno}: field {key!r} must be a string")
    toks = tokenize(record[key])
    if not toks:
        raise DataError(f"{path}:{lineno}: field {key!r} is empty")
    return toks


def read_dataset(path, kind: str = "single") -> list[LabeledExample]:
    """Line-delimited JSON records; blank lines are skipped.

    ``single`` records carry ``sentence`` and ``label``; ``pair`` records
    carry ``premise``, ``hypothesis``, and ``label``.
    """
    if kind not in ("single", "pair"):
        raise ValueError(f"unknown dataset kind {kind!r}")
    examples: list[LabeledExample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: not a valid record ({err.msg})") from None
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: record must be an object")
            if "label" not in record:
                raise DataError(f"{path}:{lineno}: missing field 'label'")
            label = _parse_label(record["label"], path, lineno)
            if kind == "single":
                examples.append(LabeledExample(
                    label=label,
                    tokens=_field_tokens(record, "sentence", path, lineno),
                ))
            else:
                examples.append(LabeledExample(
                    label=label,
                    premise=_field_tokens(record, "premise", path, lineno),
                    hypothesis=_field_tokens(record, "hypothesis", path, lineno),
                ))
    return examples
