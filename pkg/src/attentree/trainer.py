"""Training: sampled-tree policy gradients, the combined loss, optimizers,
epoch loops, evaluation, and checkpoint persistence.

Tree structure is discrete, so the parser is trained with a score-function
estimator: each sampled tree earns per-node rewards of +/- (span size)
depending on whether that tree's own prediction was correct, and the tree
loss turns those rewards into a differentiable surrogate under either
micro (per-node) or macro (per-word-type) normalization.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from . import encoder, heads, scorer, treelstm
from . import tree as trees
from .data import (
    EmbeddingTable,
    TfidfTable,
    Vocabulary,
    compute_tfidf,
    init_embeddings,
    load_pretrained,
    lookup,
)

__all__ = [
    "TrainConfig",
    "Model",
    "RewardAssignment",
    "assign_rewards",
    "tree_loss_micro",
    "tree_loss_macro",
    "exact_policy_gradient",
    "Sgd",
    "Adam",
    "make_optimizer",
    "TrainState",
    "train_epoch",
    "evaluate",
    "greedy_parse",
    "greedy_predict",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
]

_CHOICES = {
    "task": ("single", "pair"),
    "scorer": ("mlp", "tfidf"),
    "normalization": ("micro", "macro"),
    "optimizer": ("adam", "sgd"),
    "policy_scope": ("full", "scorer"),
}


@dataclass
class TrainConfig:
    """Everything a training run needs besides the data itself."""

    word_dim: int = 16
    hidden_dim: int = 16
    classifier_dim: int = 64
    classes: int = 2
    task: str = "single"
    scorer: str = "mlp"
    finetune: bool = True
    dropout: float = 0.0
    alpha: float = 0.1
    l2_penalty: float = 1e-5
    samples: int = 3
    batch_size: int = 16
    normalization: str = "macro"
    optimizer: str = "adam"
    learning_rate: float = 0.01
    epochs: int = 30
    seed: int = 0
    min_freq: int = 1
    policy_scope: str = "full"

    def __post_init__(self) -> None:
        for name, allowed in _CHOICES.items():
            value = getattr(self, name)
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
        for name in ("word_dim", "hidden_dim", "classifier_dim", "samples",
                     "batch_size", "epochs", "min_freq"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.classes < 2:
            raise ValueError(f"classes must be >= 2, got {self.classes}")
        if self.alpha < 0 or self.l2_penalty < 0:
            raise ValueError("alpha and l2_penalty must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")

    @property
    def state_width(self) -> int:
        """Width of one word's encoder state (both directions)."""
        return 2 * self.hidden_dim

    def to_text(self) -> str:
        lines = []
        for f in dataclass_fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        types = {f.name: f.type for f in dataclass_fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in types:
                raise ValueError(f"line {lineno}: unknown configuration key {key!r}")
            kind = types[key]
            if kind == "int":
                kwargs[key] = int(value)
            elif kind == "float":
                kwargs[key] = float(value)
            elif kind == "bool":
                if value not in ("true", "false"):
                    raise ValueError(f"line {lineno}: {key} must be true or false, got {value!r}")
                kwargs[key] = value == "true"
            else:
                kwargs[key] = value
        return cls(**kwargs)


class Model:
    """All trainable pieces plus the vocabulary that indexes them."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary,
                 embedding: EmbeddingTable,
                 enc_fwd: encoder.LstmDirectionParams,
                 enc_bwd: encoder.LstmDirectionParams,
                 score_params: scorer.ScorerParams | None,
                 compose_params: treelstm.CompositionParams,
                 head: heads.ClassifierParams,
                 tfidf: TfidfTable | None = None):
        if config.scorer == "mlp" and score_params is None:
            raise ValueError("mlp scoring requires scorer parameters")
        if config.scorer == "tfidf" and tfidf is None:
            raise ValueError("tfidf scoring requires a term-weight table")
        self.config = config
        self.vocab = vocab
        self.embedding = embedding
        self.enc_fwd = enc_fwd
        self.enc_bwd = enc_bwd
        self.score_params = score_params
        self.compose_params = compose_params
        self.head = head
        self.tfidf = tfidf

    @classmethod
    def build(cls, config: TrainConfig, vocab: Vocabulary, rng: np.random.Generator,
              pretrained_path=None, corpus=None,
              tfidf: TfidfTable | None = None) -> "Model":
        """Construct a fresh model; rng draws happen in a fixed order."""
        if pretrained_path:
            embedding = load_pretrained(pretrained_path, config.word_dim, vocab, rng,
                                        finetune=config.finetune)
        else:
            embedding = init_embeddings(vocab, config.word_dim, rng, finetune=config.finetune)
        enc_fwd = encoder.init_direction("encoder.fwd", config.word_dim, config.hidden_dim, rng)
        enc_bwd = encoder.init_direction("encoder.bwd", config.word_dim, config.hidden_dim, rng)
        width = config.state_width
        score_params = scorer.init_scorer(width, rng) if config.scorer == "mlp" else None
        compose_params = treelstm.init_composition(width, rng)
        head_input = width if config.task == "single" else 4 * width
        head = heads.init_classifier(head_input, config.classifier_dim, config.classes, rng)
        if config.scorer == "tfidf" and tfidf is None:
            if corpus is None:
                raise ValueError("tfidf scoring needs a corpus or a prebuilt table")
            tfidf = compute_tfidf(corpus)
        return cls(config, vocab, embedding, enc_fwd, enc_bwd, score_params,
                   compose_params, head, tfidf)

    def parameters(self) -> list[ad.Parameter]:
        out = [self.embedding.weights]
        out += self.enc_fwd.parameters()
        out += self.enc_bwd.parameters()
        if self.score_params is not None:
            out += self.score_params.parameters()
        out += self.compose_params.parameters()
        out += self.head.parameters()
        return out

    def trainable_parameters(self) -> list[ad.Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def _keep_mask(rng: np.random.Generator, shape, dropout: float) -> np.ndarray:
    return (rng.random(shape) >= dropout) / (1.0 - dropout)


def _sentence_forward(tape: ad.Tape, model: Model, tokens: Sequence[str],
                      train: bool, rng: np.random.Generator | None):
    """Embed, encode, and score one sentence.

    Returns the encoded sentence and the score vector: a DiffValue for the
    mlp scorer, a plain constant array for tfidf.
    """
    cfg = model.config
    x = lookup(tape, tokens, model.vocab, model.embedding)
    if train and cfg.dropout > 0:
        x = ad.const_mul(x, _keep_mask(rng, x.data.shape, cfg.dropout))
    enc = encoder.encode(x, model.enc_fwd, model.enc_bwd)
    if cfg.scorer == "tfidf":
        return enc, scorer.tfidf_as_scores(tokens, model.tfidf)
    score_input = enc
    if cfg.policy_scope == "scorer":
        # ablation: the tree loss reaches only the scoring head
        score_input = encoder.EncodedSentence([ad.detach(h) for h in enc.h], enc.c)
    return enc, scorer.score_sentence(score_input, model.score_params)


def _classify_state(model: Model, features: ad.DiffValue, train: bool,
                    rng: np.random.Generator | None) -> ad.DiffValue:
    cfg = model.config
    input_keep = hidden_keep = None
    if train and cfg.dropout > 0:
        input_keep = _keep_mask(rng, features.data.shape, cfg.dropout)
        hidden_keep = _keep_mask(rng, (cfg.classifier_dim,), cfg.dropout)
    return heads.classify(features, model.head, input_keep=input_keep,
                          hidden_keep=hidden_keep)


@dataclass
class RewardAssignment:
    """Per-step reward values, aligned with a sampled tree's steps."""

    values: list[float]


def assign_rewards(sampled: trees.SampledTree, correct: bool) -> RewardAssignment:
    """+span-size per step when the tree's prediction was right, else -span-size.

    Bigger spans mean earlier, more consequential decisions, so they carry
    proportionally more reward mass. Rewards are constants: no gradient.
    """
    sign = 1.0 if correct else -1.0
    return RewardAssignment([sign * step.size for step in sampled.steps])


def _check_aligned(sampled: Sequence[trees.SampledTree],
                   rewards: Sequence[RewardAssignment]) -> None:
    if not sampled:
        raise ValueError("tree loss over an empty batch")
    if len(sampled) != len(rewards):
        raise ValueError(f"{len(sampled)} trees but {len(rewards)} reward assignments")
    for t, r in zip(sampled, rewards):
        if len(t.steps) != len(r.values):
            raise ValueError(
                f"tree with {len(t.steps)} steps got {len(r.values)} rewards"
            )


def tree_loss_micro(sampled: Sequence[trees.SampledTree],
                    rewards: Sequence[RewardAssignment]) -> ad.DiffValue:
    """Reward-weighted negative log-likelihood, averaged over every node."""
    _check_aligned(sampled, rewards)
    log_probs: list[ad.DiffValue] = []
    weights: list[float] = []
    for t, r in zip(sampled, rewards):
        log_probs += [step.log_prob for step in t.steps]
        weights += list(r.values)
    return ad.scale(ad.weighted_sum(log_probs, weights), -1.0 / len(log_probs))


def tree_loss_macro(sampled: Sequence[trees.SampledTree],
                    rewards: Sequence[RewardAssignment]) -> ad.DiffValue:
    """Like micro, but each word type's nodes are averaged first, then word
    types are averaged, so frequent words cannot dominate the update."""
    _check_aligned(sampled, rewards)
    groups: dict[str, tuple[list[ad.DiffValue], list[float]]] = {}
    for t, r in zip(sampled, rewards):
        for step, value in zip(t.steps, r.values):
            if step.token is None:
                raise ValueError("macro normalization needs a token on every step")
            bucket = groups.setdefault(step.token, ([], []))
            bucket[0].append(step.log_prob)
            bucket[1].append(value)
    terms = [
        ad.scale(ad.weighted_sum(log_probs, weights), 1.0 / len(log_probs))
        for log_probs, weights in groups.values()
    ]
    return ad.scale(ad.sum_scalars(terms), -1.0 / len(terms))


def exact_policy_gradient(tokens: Sequence[str], model: Model,
                          reward_fn: Callable[[trees.TreeNode], dict[int, float]],
                          ) -> dict[str, np.ndarray]:
    """Exact per-parameter expectation of the micro tree-loss gradient.

    Enumerates every tree over the sentence, weights each tree's
    reward-scaled negative log-likelihood by its exact sampling
    probability, and differentiates the per-node mean. ``reward_fn`` maps
    a tree to {position: reward}. Averaging the gradient of the sampled
    micro loss over many draws converges to exactly this quantity, which
    is what makes it a useful oracle in tests.
    """
    n = len(tokens)
    if n < 1:
        raise ValueError("cannot take a gradient over an empty sentence")
    if n > 6:
        raise ValueError(f"exact enumeration is limited to 6 words, got {n}")
    tape = ad.Tape()
    for p in model.trainable_parameters():
        tape.watch(p)
    _, scores = _sentence_forward(tape, model, tokens, False, None)
    scores_dv = scores if isinstance(scores, ad.DiffValue) else tape.leaf(scores)

    terms: list[ad.DiffValue] = []
    for root in trees.enumerate_trees(n):
        probability = trees.tree_probability(root, scores_dv.data)
        reward_by_index = reward_fn(root)
        log_probs: list[ad.DiffValue] = []
        weights: list[float] = []
        for index, begin, end in trees.tree_spans(root):
            dist = trees.policy_distribution(scores_dv, begin, end)
            offset = index - begin
            log_probs.append(ad.log(ad.vslice(dist, offset, offset + 1)))
            weights.append(float(reward_by_index[index]))
        terms.append(ad.scale(ad.weighted_sum(log_probs, weights), probability))
    expected_loss = ad.scale(ad.sum_scalars(terms), -1.0 / n)
    ad.backward(expected_loss)
    return {p.name: ad.grad_of(leaf).copy() for p, leaf in tape.watched()}


class Sgd:
    """Plain gradient descent."""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: Sequence[ad.Parameter]) -> None:
        for p in params:
            p.data -= self.learning_rate * p.grad


class Adam:
    """Adaptive steps from running first/second gradient moments."""

    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t = 0

    def step(self, params: Sequence[ad.Parameter]) -> None:
        self._t += 1
        correct1 = 1.0 - self.beta1 ** self._t
        correct2 = 1.0 - self.beta2 ** self._t
        for p in params:
            m = self._m.setdefault(p.name, np.zeros_like(p.data))
            v = self._v.setdefault(p.name, np.zeros_like(p.data))
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.data -= self.learning_rate * (m / correct1) / (np.sqrt(v / correct2) + self.epsilon)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return Sgd(config.learning_rate)
    return Adam(config.learning_rate)


@dataclass
class TrainState:
    """Mutable run state: model, optimizer, the run's generator, epoch count."""

    model: Model
    optimizer: Sgd | Adam
    rng: np.random.Generator
    epoch: int = 0


def _example_predictions(tape: ad.Tape, model: Model, example, rng: np.random.Generator,
                         task_terms, batch_trees, batch_rewards) -> tuple[int, int]:
    """Sample trees for one example, collect its loss terms. Returns (correct, total)."""
    cfg = model.config
    n_correct = 0
    if example.is_pair:
        enc_p, scores_p = _sentence_forward(tape, model, example.premise, True, rng)
        enc_h, scores_h = _sentence_forward(tape, model, example.hypothesis, True, rng)
        dv_p = scores_p if isinstance(scores_p, ad.DiffValue) else tape.leaf(scores_p)
        dv_h = scores_h if isinstance(scores_h, ad.DiffValue) else tape.leaf(scores_h)
        for _ in range(cfg.samples):
            tree_p = trees.sample_tree(dv_p, rng, tokens=example.premise)
            tree_h = trees.sample_tree(dv_h, rng, tokens=example.hypothesis)
            state_p = treelstm.embed_tree(tree_p.root, enc_p, model.compose_params)
            state_h = treelstm.embed_tree(tree_h.root, enc_h, model.compose_params)
            log_probs = _classify_state(
                model, heads.pair_features(state_p.h, state_h.h), True, rng)
            correct = int(np.argmax(log_probs.data)) == example.label
            n_correct += correct
            task_terms.append(heads.task_loss(log_probs, example.label))
            batch_trees += [tree_p, tree_h]
            batch_rewards += [assign_rewards(tree_p, correct), assign_rewards(tree_h, correct)]
        return n_correct, cfg.samples
    enc, scores = _sentence_forward(tape, model, example.tokens, True, rng)
    scores_dv = scores if isinstance(scores, ad.DiffValue) else tape.leaf(scores)
    for _ in range(cfg.samples):
        sampled = trees.sample_tree(scores_dv, rng, tokens=example.tokens)
        state = treelstm.embed_tree(sampled.root, enc, model.compose_params)
        log_probs = _classify_state(model, state.h, True, rng)
        correct = int(np.argmax(log_probs.data)) == example.label
        n_correct += correct
        task_terms.append(heads.task_loss(log_probs, example.label))
        batch_trees.append(sampled)
        batch_rewards.append(assign_rewards(sampled, correct))
    return n_correct, cfg.samples


def train_epoch(dataset, config: TrainConfig, state: TrainState) -> dict[str, float]:
    """One pass over the dataset in shuffled mini-batches.

    Returns the mean per-batch total loss and the fraction of sampled-tree
    predictions that were correct.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    model = state.model
    rng = state.rng
    order = rng.permutation(len(dataset))
    batch_losses: list[float] = []
    n_correct = 0
    n_predictions = 0
    learn_trees = config.alpha > 0 and config.scorer == "mlp"
    for start in range(0, len(order), config.batch_size):
        chunk = order[start:start + config.batch_size]
        model.zero_grads()
        tape = ad.Tape()
        leaves = [tape.watch(p) for p in model.trainable_parameters()]
        task_terms: list[ad.DiffValue] = []
        batch_trees: list[trees.SampledTree] = []
        batch_rewards: list[RewardAssignment] = []
        for index in chunk:
            correct, predictions = _example_predictions(
                tape, model, dataset[int(index)], rng,
                task_terms, batch_trees, batch_rewards)
            n_correct += correct
            n_predictions += predictions
        task = ad.scale(ad.sum_scalars(task_terms), 1.0 / len(task_terms))
        if learn_trees:
            if config.normalization == "micro":
                tree_term = tree_loss_micro(batch_trees, batch_rewards)
            else:
                tree_term = tree_loss_macro(batch_trees, batch_rewards)
        else:
            tree_term = tape.leaf(np.zeros(1))
        breakdown = heads.total_loss(task, tree_term, leaves,
                                     config.alpha, config.l2_penalty)
        ad.backward(breakdown.total)
        tape.merge_param_grads()
        state.optimizer.step(model.trainable_parameters())
        batch_losses.append(float(breakdown.total.data[0]))
    state.epoch += 1
    return {
        "loss": float(np.mean(batch_losses)),
        "accuracy": n_correct / n_predictions,
    }


def greedy_parse(model: Model, tokens: Sequence[str]) -> tuple[trees.TreeNode, np.ndarray]:
    """Deterministic tree and raw scores for one sentence, no sampling."""
    tape = ad.Tape()
    _, scores = _sentence_forward(tape, model, tokens, False, None)
    arr = scores.data if isinstance(scores, ad.DiffValue) else scores
    return trees.build_greedy(arr, 0, len(tokens) - 1), np.asarray(arr, dtype=np.float64)


def greedy_predict(model: Model, example) -> int:
    """Predicted class for one example using greedy trees, no dropout."""
    tape = ad.Tape()
    if example.is_pair:
        enc_p, scores_p = _sentence_forward(tape, model, example.premise, False, None)
        enc_h, scores_h = _sentence_forward(tape, model, example.hypothesis, False, None)
        arr_p = scores_p.data if isinstance(scores_p, ad.DiffValue) else scores_p
        arr_h = scores_h.data if isinstance(scores_h, ad.DiffValue) else scores_h
        root_p = trees.build_greedy(arr_p, 0, len(example.premise) - 1)
        root_h = trees.build_greedy(arr_h, 0, len(example.hypothesis) - 1)
        state_p = treelstm.embed_tree(root_p, enc_p, model.compose_params)
        state_h = treelstm.embed_tree(root_h, enc_h, model.compose_params)
        features = heads.pair_features(state_p.h, state_h.h)
    else:
        enc, scores = _sentence_forward(tape, model, example.tokens, False, None)
        arr = scores.data if isinstance(scores, ad.DiffValue) else scores
        root = trees.build_greedy(arr, 0, len(example.tokens) - 1)
        features = treelstm.embed_tree(root, enc, model.compose_params).h
    log_probs = _classify_state(model, features, False, None)
    return int(np.argmax(log_probs.data))


def evaluate(dataset, model: Model) -> float:
    """Greedy-tree accuracy; deterministic, consumes no randomness."""
    if not dataset:
        raise ValueError("cannot evaluate on an empty dataset")
    n_correct = sum(greedy_predict(model, ex) == ex.label for ex in dataset)
    return n_correct / len(dataset)


# --- checkpointing -----------------------------------------------------------

_MAGIC = b"ATRE"
_VERSION = 1


class CheckpointError(Exception):
    """Unreadable or inconsistent checkpoint file."""


def _pack_block(payload: bytes) -> bytes:
    return struct.pack("<Q", len(payload)) + payload


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError("truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def block(self) -> bytes:
        return self.take(self.u64())


def save_checkpoint(state: TrainState, path) -> None:
    """Versioned binary: config, vocabulary, named float64 arrays, rng state."""
    model = state.model
    arrays: list[tuple[str, np.ndarray]] = [(p.name, p.data) for p in model.parameters()]
    if model.tfidf is not None:
        arrays.append(("tfidf.weights", model.tfidf.as_array(model.vocab)))

    parts = [_MAGIC, struct.pack("<IQ", _VERSION, state.epoch)]
    parts.append(_pack_block(model.config.to_text().encode("utf-8")))

    vocab_tokens = model.vocab.tokens()
    vocab_bytes = [struct.pack("<Q", len(vocab_tokens))]
    for token in vocab_tokens:
        raw = token.encode("utf-8")
        vocab_bytes.append(struct.pack("<I", len(raw)) + raw)
    parts.append(_pack_block(b"".join(vocab_bytes)))

    array_bytes = [struct.pack("<Q", len(arrays))]
    for name, data in arrays:
        raw_name = name.encode("utf-8")
        array_bytes.append(struct.pack("<I", len(raw_name)) + raw_name)
        array_bytes.append(struct.pack("<I", data.ndim))
        array_bytes.append(struct.pack(f"<{data.ndim}Q", *data.shape))
        array_bytes.append(np.ascontiguousarray(data, dtype="<f8").tobytes())
    parts.append(_pack_block(b"".join(array_bytes)))

    rng_state = json.dumps(state.rng.bit_generator.state).encode("utf-8")
    parts.append(_pack_block(rng_state))

    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path) -> TrainState:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.take(4) != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version = reader.u32()
    if version != _VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    epoch = reader.u64()

    try:
        config = TrainConfig.from_text(reader.block().decode("utf-8"))
    except ValueError as err:
        raise CheckpointError(f"{path}: bad config block ({err})") from None

    vocab_reader = _Reader(reader.block())
    count = vocab_reader.u64()
    tokens = [vocab_reader.take(vocab_reader.u32()).decode("utf-8") for _ in range(count)]
    if not tokens:
        raise CheckpointError(f"{path}: empty vocabulary block")
    vocab = Vocabulary(tokens[1:])

    array_reader = _Reader(reader.block())
    arrays: dict[str, np.ndarray] = {}
    for _ in range(array_reader.u64()):
        name = array_reader.take(array_reader.u32()).decode("utf-8")
        ndim = array_reader.u32()
        shape = struct.unpack(f"<{ndim}Q", array_reader.take(8 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(array_reader.take(8 * size), dtype="<f8").reshape(shape)
        arrays[name] = data.astype(np.float64)

    rng_state = json.loads(reader.block().decode("utf-8"))

    tfidf = None
    if config.scorer == "tfidf":
        if "tfidf.weights" not in arrays:
            raise CheckpointError(f"{path}: missing term-weight array")
        tfidf = TfidfTable.from_array(vocab, arrays.pop("tfidf.weights"))

    model = Model.build(config, vocab, np.random.default_rng(0), tfidf=tfidf)
    for p in model.parameters():
        if p.name not in arrays:
            raise CheckpointError(f"{path}: missing parameter {p.name!r}")
        stored = arrays.pop(p.name)
        if stored.shape != p.data.shape:
            raise CheckpointError(
                f"{path}: parameter {p.name!r} has shape {stored.shape} "
                f"but the stored config implies {p.data.shape}"
            )
        p.data[...] = stored
    if arrays:
        raise CheckpointError(f"{path}: unexpected arrays {sorted(arrays)}")

    rng = np.random.default_rng()
    rng.bit_generator.state = rng_state
    return TrainState(model, make_optimizer(config), rng, epoch)
