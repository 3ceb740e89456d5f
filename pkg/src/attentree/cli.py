"""Command-line driver: train, eval, parse, score, depth-report.

Configuration is a flat ``key = value`` text file; any key can be overridden
on the command line with repeated ``--set key=value`` flags. Every training
run dumps the merged configuration it actually used, and re-running from
that dump (same seed) reproduces the metrics bitwise.

Exit codes: 0 success, 2 configuration problem, 3 bad data or checkpoint,
4 other I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields as dataclass_fields

import numpy as np

from . import report, toydata, treefmt
from .data import DataError, build_vocab, read_dataset
from .trainer import (
    CheckpointError,
    Model,
    TrainConfig,
    TrainState,
    evaluate,
    greedy_parse,
    load_checkpoint,
    make_optimizer,
    save_checkpoint,
    train_epoch,
)
from .tree import node_depths

__all__ = ["ConfigError", "main"]

PATH_KEYS = ("train_data", "valid_data", "pretrained", "out_dir")


class ConfigError(Exception):
    """Unusable run configuration; messages carry the offending location."""


def _field_types() -> dict[str, str]:
    return {f.name: f.type for f in dataclass_fields(TrainConfig)}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def default_config() -> dict[str, str]:
    """Every known key with its default, as text."""
    base = TrainConfig()
    out = {f.name: _format_value(getattr(base, f.name)) for f in dataclass_fields(TrainConfig)}
    for key in PATH_KEYS:
        out[key] = ""
    return out


def _parse_config_line(raw: str, source: str) -> tuple[str, str] | None:
    line = raw.split("#", 1)[0].strip()
    if not line:
        return None
    if "=" not in line:
        raise ConfigError(f"{source}: expected 'key = value', got {raw.strip()!r}")
    key, _, value = line.partition("=")
    return key.strip(), value.strip()


def load_run_config(config_path: str | None,
                    overrides: list[str]) -> dict[str, tuple[str, str]]:
    """Merge defaults, the optional config file, and --set flags.

    Returns key -> (text value, source description); sources make later
    type errors point at the line or flag that supplied the bad value.
    """
    merged = {k: (v, "default") for k, v in default_config().items()}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as err:
            raise ConfigError(f"{config_path}: cannot read config ({err.strerror})") from None
        for lineno, raw in enumerate(lines, 1):
            parsed = _parse_config_line(raw, f"{config_path}:{lineno}")
            if parsed is None:
                continue
            key, value = parsed
            if key not in merged:
                raise ConfigError(f"{config_path}:{lineno}: unknown key {key!r}")
            merged[key] = (value, f"{config_path}:{lineno}")
    for flag in overrides:
        if "=" not in flag:
            raise ConfigError(f"--set expects key=value, got {flag!r}")
        key, _, value = flag.partition("=")
        key = key.strip()
        if key not in merged:
            raise ConfigError(f"--set {flag!r}: unknown key {key!r}")
        merged[key] = (value.strip(), f"--set {flag}")
    return merged


def make_train_config(merged: dict[str, tuple[str, str]]) -> TrainConfig:
    types = _field_types()
    kwargs = {}
    for key, kind in types.items():
        raw, source = merged[key]
        try:
            if kind == "int":
                kwargs[key] = int(raw)
            elif kind == "float":
                kwargs[key] = float(raw)
            elif kind == "bool":
                if raw not in ("true", "false"):
                    raise ValueError("expected true or false")
                kwargs[key] = raw == "true"
            else:
                kwargs[key] = raw
        except ValueError as err:
            raise ConfigError(f"{source}: bad value for {key}: {err}") from None
    try:
        return TrainConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def dump_effective(merged: dict[str, tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(merged):
            fh.write(f"{key} = {merged[key][0]}\n")


def _dataset_kind(config: TrainConfig) -> str:
    return "pair" if config.task == "pair" else "single"


def _require(merged: dict[str, tuple[str, str]], key: str) -> str:
    value = merged[key][0]
    if not value:
        raise ConfigError(f"{key} is required (set it in the config file or with --set)")
    return value


def cmd_train(args) -> int:
    merged = load_run_config(args.config, args.set)
    config = make_train_config(merged)
    train_path = _require(merged, "train_data")
    out_dir = _require(merged, "out_dir")
    valid_path = merged["valid_data"][0] or None
    pretrained = merged["pretrained"][0] or None

    os.makedirs(out_dir, exist_ok=True)
    dump_effective(merged, os.path.join(out_dir, "effective.cfg"))

    kind = _dataset_kind(config)
    train_set = read_dataset(train_path, kind)
    if not train_set:
        raise DataError(f"{train_path}: dataset holds no examples")
    valid_set = read_dataset(valid_path, kind) if valid_path else None
    if valid_set is not None and not valid_set:
        raise DataError(f"{valid_path}: dataset holds no examples")

    corpus = [s for ex in train_set for s in ex.sentences()]
    vocab = build_vocab(corpus, config.min_freq)
    rng = np.random.default_rng(config.seed)
    model = Model.build(config, vocab, rng, pretrained_path=pretrained, corpus=corpus)
    state = TrainState(model, make_optimizer(config), rng)

    best = float("-inf")
    records: list[dict] = []
    metrics_path = os.path.join(out_dir, "metrics.jsonl")
    with open(metrics_path, "w", encoding="utf-8") as metrics_file:
        for _ in range(config.epochs):
            metrics = train_epoch(train_set, config, state)
            valid_acc = evaluate(valid_set, model) if valid_set is not None else None
            record = {
                "epoch": state.epoch,
                "train_loss": metrics["loss"],
                "train_acc": metrics["accuracy"],
                "valid_acc": valid_acc,
            }
            records.append(record)
            metrics_file.write(json.dumps(record) + "\n")
            metrics_file.flush()
            shown = "-" if valid_acc is None else f"{valid_acc:.4f}"
            print(f"epoch {state.epoch}: loss {metrics['loss']:.6f} "
                  f"train_acc {metrics['accuracy']:.4f} valid_acc {shown}")
            # strictly-better keeps the earliest epoch on ties
            selector = valid_acc if valid_acc is not None else metrics["accuracy"]
            if selector > best:
                best = selector
                save_checkpoint(state, os.path.join(out_dir, "best.ckpt"))
    save_checkpoint(state, os.path.join(out_dir, "last.ckpt"))
    report.render_training_curves(records, os.path.join(out_dir, "curves.png"))
    return 0


def cmd_eval(args) -> int:
    state = load_checkpoint(args.checkpoint)
    dataset = read_dataset(args.data, _dataset_kind(state.model.config))
    if not dataset:
        raise DataError(f"{args.data}: dataset holds no examples")
    accuracy = evaluate(dataset, state.model)
    print(f"accuracy\t{accuracy!r}")
    return 0


def _read_sentences(input_path: str | None) -> tuple[str, list[tuple[int, list[str]]]]:
    """Sentences as (line number, tokens in original case); blank lines error."""
    if input_path:
        source = input_path
        with open(input_path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        source = "<stdin>"
        lines = sys.stdin.read().splitlines()
    sentences: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(lines, 1):
        tokens = line.split()
        if not tokens:
            raise DataError(f"{source}:{lineno}: empty sentence")
        sentences.append((lineno, tokens))
    if not sentences:
        raise DataError(f"{source}: no sentences to read")
    return source, sentences


def cmd_parse(args) -> int:
    state = load_checkpoint(args.checkpoint)
    source, sentences = _read_sentences(args.input)
    for lineno, display in sentences:
        root, _ = greedy_parse(state.model, [t.lower() for t in display])
        try:
            if args.format in ("sexpr", "both"):
                print(treefmt.to_sexpr(root, display))
            if args.format in ("dot", "both"):
                print(treefmt.to_dot(root, display), end="")
        except ValueError as err:
            raise DataError(f"{source}:{lineno}: {err}") from None
    return 0


def cmd_score(args) -> int:
    state = load_checkpoint(args.checkpoint)
    _, sentences = _read_sentences(args.input)
    for position, (_, display) in enumerate(sentences):
        if position:
            print()
        root, scores = greedy_parse(state.model, [t.lower() for t in display])
        depths = node_depths(root)
        for i, token in enumerate(display):
            print(f"{token}\t{scores[i]:.6f}\t{depths[i]}")
    return 0


def cmd_depth_report(args) -> int:
    state = load_checkpoint(args.checkpoint)
    dataset = read_dataset(args.data, _dataset_kind(state.model.config))
    if not dataset:
        raise DataError(f"{args.data}: dataset holds no examples")
    groups = report.read_groups_file(args.groups)
    sentences = [s for ex in dataset for s in ex.sentences()]
    stats = report.collect_depth_stats(state.model, sentences, groups)
    table = report.depth_table(stats)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "depth_report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(table)
    if stats:
        report.render_depth_figure(stats, os.path.join(args.out_dir, "depth_report.png"))
    print(table, end="")
    return 0


def cmd_make_toy(args) -> int:
    examples = toydata.keyword_presence(count=args.count, length=args.length,
                                        vocab_size=args.vocab_size, seed=args.seed)
    toydata.write_jsonl(examples, args.out)
    print(f"wrote {len(examples)} examples to {args.out} "
          f"(keyword {toydata.KEYWORD!r})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attentree",
        description="Sentence classification over importance-ordered binary trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model, keeping the best checkpoint")
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one setting (repeatable)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="report accuracy of a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("parse", help="print greedy trees for sentences")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", help="sentence-per-line file (default: stdin)")
    p.add_argument("--format", choices=("sexpr", "dot", "both"), default="both")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("score", help="print per-word scores and greedy-tree depths")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", help="sentence-per-line file (default: stdin)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("depth-report",
                       help="aggregate depth/score statistics for token groups")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--groups", required=True,
                   help="file of lines 'name: token token ...'")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_depth_report)

    p = sub.add_parser("make-toy", help="write a synthetic keyword dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--length", type=int, default=8)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=1234)
    p.set_defaults(func=cmd_make_toy)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DataError, CheckpointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except FileNotFoundError as err:
        print(f"error: {err.filename}: file not found", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
