"""Sentence embeddings over task-learned binary trees.

Each word is scored for importance by a small network over bidirectional
LSTM states; a binary tree is built by recursively rooting every span at
its best word, so important words end up near the top; a three-way
Tree-LSTM then composes the sentence embedding bottom-up. Because tree
choices are discrete, training scores them with sampled-structure rewards
instead of backpropagating through the selection.
"""

from .autodiff import Parameter, Tape, backward, finite_difference_check
from .data import (
    DataError,
    LabeledExample,
    Vocabulary,
    build_vocab,
    compute_tfidf,
    read_dataset,
    tokenize,
)
from .trainer import (
    CheckpointError,
    Model,
    TrainConfig,
    TrainState,
    evaluate,
    exact_policy_gradient,
    greedy_parse,
    load_checkpoint,
    make_optimizer,
    save_checkpoint,
    train_epoch,
)
from .tree import TreeNode, build_greedy, enumerate_trees, in_order, sample_tree
from .treefmt import parse_sexpr, to_dot, to_sexpr

__version__ = "0.1.0"

__all__ = [
    "Parameter",
    "Tape",
    "backward",
    "finite_difference_check",
    "DataError",
    "LabeledExample",
    "Vocabulary",
    "build_vocab",
    "compute_tfidf",
    "read_dataset",
    "tokenize",
    "CheckpointError",
    "Model",
    "TrainConfig",
    "TrainState",
    "evaluate",
    "exact_policy_gradient",
    "greedy_parse",
    "load_checkpoint",
    "make_optimizer",
    "save_checkpoint",
    "train_epoch",
    "TreeNode",
    "build_greedy",
    "enumerate_trees",
    "in_order",
    "sample_tree",
    "parse_sexpr",
    "to_dot",
    "to_sexpr",
    "__version__",
]
