"""Batch command-line surface for the pipeline.

One subcommand per stage: corpus normalization and segmentation, corpus
stats, tokenizer training and encoding, pretraining example construction,
pretraining itself, fine-tuning, evaluation, synthetic data generation,
and a rules dump. ``run`` executes a whole pipeline from a key-value
manifest file, with every path declared and every seed explicit.

Exit codes: 0 on success, 1 on usage errors, 2 on data or configuration
errors. All flags use long names; ``--seed``, ``--in``, and ``--out`` are
uniform across subcommands.
"""

from __future__ import annotations

import argparse
import struct
import sys
from pathlib import Path

from . import synthetic
from .corpus import corpus_stats, format_stats_table, load_documents, stats_records
from .errors import ConfigError, DataError, FarsilmError
from .finetune import (
    FinetuneConfig,
    finetune_sequence,
    finetune_tokens,
    load_head_model,
    load_labeled,
    load_tagged,
    predict,
    save_head_model,
    write_labeled,
    write_tagged,
)
from .lineio import read_records, write_records
from .metrics import (
    accuracy,
    entity_f1,
    entity_score_records,
    eval_report_records,
    f1_report,
    format_entity_score,
    format_eval_report,
)
from .model import ModelConfig
from .pretrain_data import (
    MaskingPolicy,
    PackingConfig,
    build_pretrain_examples,
    write_examples,
)
from .segmenter import SegmenterConfig, segment_by_notation, segment_true
from .textnorm import dump_rules, normalize
from .training import OptimizerConfig, load_checkpoint, pretrain
from .wordpiece import (
    TokenizerTrainConfig,
    encode,
    encode_to_pieces,
    load_vocab,
    save_vocab,
    train_wordpiece,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage problems; this surface uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _load_sentences(path: str, format: str) -> list[str]:
    """Sentence list from plain text (one per line) or line-records.

    Records may carry a ``sentences`` list (segmenter output) or a plain
    ``text`` field; both shapes feed the tokenizer trainer.
    """
    if format == "plain":
        return [line for line in _read_text(path).splitlines() if line.strip()]
    sentences: list[str] = []
    for lineno, record in read_records(path):
        listed = record.get("sentences")
        if isinstance(listed, list):
            sentences.extend(str(s) for s in listed)
        elif "text" in record:
            sentences.append(str(record["text"]))
        else:
            raise DataError(f"{path}: record on line {lineno} has neither sentences nor text")
    return sentences


def _segmented_documents(path: str) -> list[list[str]]:
    """Per-document sentence lists from segmenter output records."""
    documents = []
    for lineno, record in read_records(path):
        listed = record.get("sentences")
        if not isinstance(listed, list):
            raise DataError(
                f"{path}: record on line {lineno} lacks a sentences list; run segment first"
            )
        documents.append([str(s) for s in listed])
    return documents


# --- subcommand handlers ---


def _cmd_normalize(args) -> int:
    if args.format == "plain":
        text = _read_text(args.infile)
        lines = [normalize(line) for line in text.splitlines()]
        _write_text(args.out, "\n".join(lines) + ("\n" if lines else ""))
        _note(f"normalized {len(lines)} lines into {args.out}")
        return 0
    records = []
    for doc in load_documents(args.infile, format=args.format):
        records.append({"id": doc.id, "source": doc.source, "text": normalize(doc.text)})
    write_records(args.out, records)
    _note(f"normalized {len(records)} documents into {args.out}")
    return 0


def _cmd_segment(args) -> int:
    config = SegmenterConfig(min_tokens=args.min_tokens)
    records = []
    total = 0
    for doc in load_documents(args.infile, format=args.format):
        if args.mode == "notation":
            sentences = segment_by_notation(doc.text, config, doc_id=doc.id)
        else:
            sentences = segment_true(doc.text, config, doc_id=doc.id, lenient=args.lenient)
        total += len(sentences)
        records.append(
            {"id": doc.id, "source": doc.source, "sentences": [s.text for s in sentences]}
        )
    write_records(args.out, records)
    _note(f"segmented {len(records)} documents into {total} sentences at {args.out}")
    return 0


def _cmd_stats(args) -> int:
    config = SegmenterConfig()
    counted = (
        (doc, len(segment_true(doc.text, config, doc_id=doc.id)))
        for doc in load_documents(args.infile, format=args.format)
    )
    stats = corpus_stats(counted)
    print(format_stats_table(stats))
    if args.out:
        write_records(args.out, stats_records(stats))
    return 0


def _cmd_train_tokenizer(args) -> int:
    sentences = _load_sentences(args.infile, args.format)
    config = TokenizerTrainConfig(
        vocab_size=args.vocab_size,
        min_frequency=args.min_freq,
        alphabet_limit=args.alphabet,
    )
    model = train_wordpiece(sentences, config)
    save_vocab(model, args.out)
    _note(f"trained vocabulary of {len(model.vocab)} tokens at {args.out}")
    return 0


def _cmd_encode(args) -> int:
    model = load_vocab(args.vocab)
    records = []
    for line in _read_text(args.infile).splitlines():
        if not line.strip():
            continue
        record = {"text": line, "ids": encode(model, line)}
        if args.pieces:
            record["pieces"] = encode_to_pieces(model, line)
        records.append(record)
    write_records(args.out, records)
    _note(f"encoded {len(records)} lines into {args.out}")
    return 0


def _cmd_build_pretrain(args) -> int:
    model = load_vocab(args.vocab)
    documents = _segmented_documents(args.infile)
    packing = PackingConfig(max_len=args.max_len, rng_seed=args.seed)
    examples = build_pretrain_examples(documents, model, packing, MaskingPolicy())
    write_examples(examples, args.out, vocab_size=len(model.vocab))
    _note(f"wrote {len(examples)} examples at {args.out}")
    return 0


def _peek_examples_header(path: str) -> tuple[int, int]:
    """(max_len, vocab_size) from an example file without loading records."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(16)
    except OSError as exc:
        raise DataError(f"cannot read example file {path}: {exc}") from exc
    if len(head) < 16 or head[:4] != b"PTEX":
        raise DataError(f"{path} is not an example file (bad magic)")
    _, max_len, vocab_size = struct.unpack("<III", head[4:16])
    return max_len, vocab_size


def _cmd_pretrain(args) -> int:
    max_len, vocab_size = _peek_examples_header(args.examples)
    model_config = ModelConfig(
        layers=args.layers,
        heads=args.heads,
        hidden=args.hidden,
        intermediate=args.intermediate,
        vocab_size=vocab_size,
        max_positions=args.max_positions or max_len,
    )
    opt_config = OptimizerConfig(
        learning_rate=args.learning_rate,
        beta1=args.beta1,
        beta2=args.beta2,
        batch_size=args.batch_size,
        max_steps=args.steps,
        warmup_steps=args.warmup,
    )
    result = pretrain(
        args.examples,
        model_config,
        opt_config,
        seed=args.seed,
        checkpoint_path=args.out,
        trace_path=args.trace,
        log=_note,
        log_every=args.log_every,
    )
    _note(f"checkpoint at step {result.step} written to {args.out}")
    return 0


def _labels_from(args_labels: str | None, seen: set[str]) -> tuple[str, ...]:
    if args_labels:
        return tuple(part.strip() for part in args_labels.split(",") if part.strip())
    return tuple(sorted(seen))


def _cmd_finetune_cls(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    tokenizer = load_vocab(args.vocab)
    train = load_labeled(args.train)
    dev = load_labeled(args.dev)
    inventory = _labels_from(args.labels, {item.label for item in train + dev})
    config = FinetuneConfig(
        label_inventory=inventory,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    outcome = finetune_sequence(checkpoint, tokenizer, train, dev, config)
    for epoch, score in enumerate(outcome.dev_trace, start=1):
        _note(f"epoch {epoch}: dev accuracy {score:.4f}")
    save_head_model(args.out, outcome.model)
    _note(f"classifier with labels {inventory} written to {args.out}")
    return 0


def _cmd_finetune_ner(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    tokenizer = load_vocab(args.vocab)
    train = load_tagged(args.train)
    dev = load_tagged(args.dev)
    seen = {tag for item in train + dev for tag in item.tags}
    inventory = _labels_from(args.labels, seen)
    config = FinetuneConfig(
        label_inventory=inventory,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    outcome = finetune_tokens(checkpoint, tokenizer, train, dev, config)
    for epoch, score in enumerate(outcome.dev_trace, start=1):
        _note(f"epoch {epoch}: dev entity F1 {score:.4f}")
    save_head_model(args.out, outcome.model)
    _note(f"tagger with {len(inventory)} tags written to {args.out}")
    return 0


def _cmd_eval_cls(args) -> int:
    model = load_head_model(args.model)
    tokenizer = load_vocab(args.vocab)
    items = load_labeled(args.infile)
    gold = [item.label for item in items]
    pred = predict(model, tokenizer, [item.text for item in items])
    report = f1_report(gold, pred, model.labels)
    print(f"accuracy {accuracy(gold, pred):.4f}")
    print(format_eval_report(report))
    if args.out:
        write_records(args.out, eval_report_records(report))
    return 0


def _cmd_eval_ner(args) -> int:
    model = load_head_model(args.model)
    tokenizer = load_vocab(args.vocab)
    items = load_tagged(args.infile)
    gold = [list(item.tags) for item in items]
    pred = predict(model, tokenizer, [list(item.tokens) for item in items])
    score = entity_f1(gold, pred)
    print(format_entity_score(score))
    if args.out:
        write_records(args.out, entity_score_records(score))
    return 0


def _cmd_gen_synthetic(args) -> int:
    if args.task == "mlm-corpus":
        docs = synthetic.generate_mlm_corpus(seed=args.seed, n_docs=args.docs)
        records = [
            {"id": doc.doc_id, "source": "synthetic", "text": doc.text} for doc in docs
        ]
        write_records(args.out, records)
        _note(f"wrote {len(records)} documents at {args.out}")
    elif args.task == "cls":
        items = synthetic.generate_classification(
            seed=args.seed, count=args.count, n_classes=args.classes
        )
        write_labeled(args.out, items)
        _note(f"wrote {len(items)} labeled texts at {args.out}")
    else:
        items = synthetic.generate_ner(seed=args.seed, count=args.count)
        write_tagged(args.out, items)
        _note(f"wrote {len(items)} tagged sequences at {args.out}")
    return 0


def _cmd_dump_rules(args) -> int:
    count = dump_rules(args.out)
    _note(f"wrote {count} rules at {args.out}")
    return 0


# --- manifest runner ---

_MANIFEST_PATHS = ("corpus", "normalized", "segments", "vocab", "examples", "checkpoint")


def _parse_manifest(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {lineno} is not a key = value entry")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}: line {lineno} has an empty key or value")
        if key in entries:
            raise ConfigError(f"{path}: duplicate key {key!r} on line {lineno}")
        entries[key] = value
    return entries


def _manifest_int(entries: dict, key: str, default: int | None = None) -> int:
    if key not in entries:
        if default is None:
            raise ConfigError(f"manifest lacks the required {key} key")
        return default
    try:
        return int(entries[key])
    except ValueError:
        raise ConfigError(f"manifest key {key} is not an integer: {entries[key]!r}") from None


def _manifest_float(entries: dict, key: str, default: float) -> float:
    if key not in entries:
        return default
    try:
        return float(entries[key])
    except ValueError:
        raise ConfigError(f"manifest key {key} is not a number: {entries[key]!r}") from None


def _manifest_path(entries: dict, base: Path, key: str) -> str:
    if key not in entries:
        raise ConfigError(f"manifest lacks the required {key} path")
    return str(base / entries[key])


def _run_finetune_stage(entries: dict, base: Path, seed: int, checkpoint_path: str, vocab_path: str, task: str) -> None:
    prefix = "cls" if task == "cls" else "ner"
    train_path = _manifest_path(entries, base, f"{prefix}_train")
    dev_path = _manifest_path(entries, base, f"{prefix}_dev")
    model_path = _manifest_path(entries, base, f"{prefix}_model")
    report_path = _manifest_path(entries, base, f"{prefix}_report")
    count = _manifest_int(entries, f"{prefix}_count", 300)
    epochs = _manifest_int(entries, f"{prefix}_epochs", 5)
    lr = _manifest_float(entries, f"{prefix}_learning_rate", 5e-4)
    batch = _manifest_int(entries, f"{prefix}_batch_size", 16)

    dev_count = max(2, count // 4)
    if task == "cls":
        classes = _manifest_int(entries, "cls_classes", 2)
        train = synthetic.generate_classification(seed=seed, count=count, n_classes=classes)
        dev = synthetic.generate_classification(seed=seed + 1, count=dev_count, n_classes=classes)
        write_labeled(train_path, train)
        write_labeled(dev_path, dev)
        inventory = synthetic.classification_labels(classes)
    else:
        train = synthetic.generate_ner(seed=seed, count=count)
        dev = synthetic.generate_ner(seed=seed + 1, count=dev_count)
        write_tagged(train_path, train)
        write_tagged(dev_path, dev)
        inventory = synthetic.ner_tag_inventory()

    checkpoint = load_checkpoint(checkpoint_path)
    tokenizer = load_vocab(vocab_path)
    config = FinetuneConfig(
        label_inventory=inventory,
        epochs=epochs,
        learning_rate=lr,
        batch_size=batch,
        seed=seed,
    )
    if task == "cls":
        outcome = finetune_sequence(checkpoint, tokenizer, train, dev, config)
        gold = [item.label for item in dev]
        pred = predict(outcome.model, tokenizer, [item.text for item in dev])
        report = f1_report(gold, pred, inventory)
        write_records(report_path, eval_report_records(report))
        _note(f"{task}: dev accuracy {accuracy(gold, pred):.4f}, report at {report_path}")
    else:
        outcome = finetune_tokens(checkpoint, tokenizer, train, dev, config)
        gold = [list(item.tags) for item in dev]
        pred = predict(outcome.model, tokenizer, [list(item.tokens) for item in dev])
        score = entity_f1(gold, pred)
        write_records(report_path, entity_score_records(score))
        _note(f"{task}: dev entity F1 {score.f1:.4f}, report at {report_path}")
    save_head_model(model_path, outcome.model)


def _cmd_run(args) -> int:
    manifest_path = Path(args.manifest)
    entries = _parse_manifest(args.manifest)
    base = manifest_path.parent

    seed = _manifest_int(entries, "seed")
    paths = {key: _manifest_path(entries, base, key) for key in _MANIFEST_PATHS}
    for target in paths.values():
        parent = Path(target).parent
        if not parent.is_dir():
            raise DataError(f"manifest output directory {parent} does not exist")

    docs = synthetic.generate_mlm_corpus(seed=seed, n_docs=_manifest_int(entries, "docs", 120))
    write_records(
        paths["corpus"],
        [{"id": d.doc_id, "source": "synthetic", "text": d.text} for d in docs],
    )
    _note(f"corpus: {len(docs)} documents at {paths['corpus']}")

    normalized = [
        {"id": d.doc_id, "source": "synthetic", "text": normalize(d.text)} for d in docs
    ]
    write_records(paths["normalized"], normalized)

    config = SegmenterConfig()
    segmented = []
    sentences: list[str] = []
    for record in normalized:
        parts = [
            s.text for s in segment_true(record["text"], config, doc_id=record["id"])
        ]
        segmented.append({"id": record["id"], "source": "synthetic", "sentences": parts})
        sentences.extend(parts)
    write_records(paths["segments"], segmented)
    _note(f"segments: {len(sentences)} sentences at {paths['segments']}")

    tok_config = TokenizerTrainConfig(
        vocab_size=_manifest_int(entries, "vocab_size", 1000),
        min_frequency=_manifest_int(entries, "min_frequency", 3),
        alphabet_limit=_manifest_int(entries, "alphabet_limit", 1500),
    )
    model = train_wordpiece(sentences, tok_config)
    save_vocab(model, paths["vocab"])
    _note(f"vocab: {len(model.vocab)} tokens at {paths['vocab']}")

    packing = PackingConfig(max_len=_manifest_int(entries, "max_len", 64), rng_seed=seed)
    examples = build_pretrain_examples(
        [d["sentences"] for d in segmented], model, packing, MaskingPolicy()
    )
    write_examples(examples, paths["examples"], vocab_size=len(model.vocab))
    _note(f"examples: {len(examples)} at {paths['examples']}")

    model_config = ModelConfig(
        layers=_manifest_int(entries, "layers", 2),
        heads=_manifest_int(entries, "heads", 2),
        hidden=_manifest_int(entries, "hidden", 64),
        intermediate=_manifest_int(entries, "intermediate", 256),
        vocab_size=len(model.vocab),
        max_positions=packing.max_len,
    )
    opt_config = OptimizerConfig(
        learning_rate=_manifest_float(entries, "learning_rate", 1e-3),
        beta1=_manifest_float(entries, "beta1", 0.9),
        beta2=_manifest_float(entries, "beta2", 0.98),
        batch_size=_manifest_int(entries, "batch_size", 32),
        max_steps=_manifest_int(entries, "steps", 100),
        warmup_steps=_manifest_int(entries, "warmup", 0),
    )
    trace_path = str(base / entries["trace"]) if "trace" in entries else None
    result = pretrain(
        paths["examples"],
        model_config,
        opt_config,
        seed=seed,
        checkpoint_path=paths["checkpoint"],
        trace_path=trace_path,
        log=_note,
        log_every=_manifest_int(entries, "log_every", 100),
    )
    _note(f"checkpoint: step {result.step} at {paths['checkpoint']}")

    if "cls_model" in entries:
        _run_finetune_stage(entries, base, seed, paths["checkpoint"], paths["vocab"], "cls")
    if "ner_model" in entries:
        _run_finetune_stage(entries, base, seed, paths["checkpoint"], paths["vocab"], "ner")
    return 0


# --- parser assembly ---


def _add_io(parser, out_required: bool = True):
    parser.add_argument("--in", dest="infile", required=True, help="input file path")
    parser.add_argument("--out", required=out_required, help="output file path")


def _add_format(parser, default: str):
    parser.add_argument(
        "--format",
        choices=("plain", "line-records"),
        default=default,
        help=f"input layout (default {default})",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="farsilm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("normalize", help="clean and standardize text")
    _add_io(p)
    _add_format(p, "plain")
    p.set_defaults(handler=_cmd_normalize)

    p = sub.add_parser("segment", help="split documents into sentences")
    _add_io(p)
    _add_format(p, "line-records")
    p.add_argument("--mode", choices=("true", "notation"), default="true")
    p.add_argument("--min-tokens", type=int, default=3)
    p.add_argument("--lenient", action="store_true", help="soften repair preconditions")
    p.set_defaults(handler=_cmd_segment)

    p = sub.add_parser("stats", help="per-source document and sentence counts")
    _add_io(p, out_required=False)
    _add_format(p, "line-records")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("train-tokenizer", help="learn a subword vocabulary")
    _add_io(p)
    _add_format(p, "line-records")
    p.add_argument("--vocab-size", type=int, default=100_000)
    p.add_argument("--min-freq", type=int, default=3)
    p.add_argument("--alphabet", type=int, default=1_500)
    p.set_defaults(handler=_cmd_train_tokenizer)

    p = sub.add_parser("encode", help="tokenize text lines into id records")
    _add_io(p)
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--pieces", action="store_true", help="also record subword pieces")
    p.set_defaults(handler=_cmd_encode)

    p = sub.add_parser("build-pretrain", help="construct masked sentence-pair examples")
    _add_io(p)
    p.add_argument("--vocab", required=True)
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(handler=_cmd_build_pretrain)

    p = sub.add_parser("pretrain", help="train the encoder on an example file")
    p.add_argument("--examples", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", help="loss trace CSV path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.98)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--intermediate", type=int, default=256)
    p.add_argument("--max-positions", type=int, default=0, help="0 means the example length")
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(handler=_cmd_pretrain)

    for name, handler, score in (
        ("finetune-cls", _cmd_finetune_cls, "accuracy"),
        ("finetune-ner", _cmd_finetune_ner, "entity F1"),
    ):
        p = sub.add_parser(name, help=f"fine-tune a head, tracking dev {score}")
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--vocab", required=True)
        p.add_argument("--train", required=True)
        p.add_argument("--dev", required=True)
        p.add_argument("--out", required=True, help="head model path")
        p.add_argument("--labels", help="comma-separated inventory (default: from train data)")
        p.add_argument("--epochs", type=int, default=5)
        p.add_argument("--learning-rate", type=float, default=5e-4)
        p.add_argument("--batch-size", type=int, default=16)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(handler=handler)

    for name, handler in (("eval-cls", _cmd_eval_cls), ("eval-ner", _cmd_eval_ner)):
        p = sub.add_parser(name, help="score predictions against gold labels")
        p.add_argument("--model", required=True, help="head model path")
        p.add_argument("--vocab", required=True)
        _add_io(p, out_required=False)
        p.set_defaults(handler=handler)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic dataset")
    p.add_argument("task", choices=("mlm-corpus", "cls", "ner"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--docs", type=int, default=120, help="mlm-corpus document count")
    p.add_argument("--count", type=int, default=200, help="cls/ner item count")
    p.add_argument("--classes", type=int, default=2, help="cls class count")
    p.set_defaults(handler=_cmd_gen_synthetic)

    p = sub.add_parser("dump-rules", help="write the normalization rule table")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_dump_rules)

    p = sub.add_parser("run", help="execute a whole pipeline from a manifest")
    p.add_argument("--manifest", required=True, help="key = value manifest file")
    p.set_defaults(handler=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FarsilmError as exc:
        print(f"farsilm {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"farsilm {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
