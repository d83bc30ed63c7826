"""MLM+NSP example construction: sentence-pair sampling, packing to a
fixed length, the 15% / 80-10-10 masking procedure, and a binary example
file format.

Randomness discipline: pair building consumes one generator; each
example's masking derives its own generator from (seed, example index),
so files are byte-identical however the work is distributed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .wordpiece import CLS, MASK, SEP, WordPieceModel, encode

IGNORE_INDEX = -100
IS_NEXT = 1
NOT_NEXT = 0

_MAGIC = b"PTEX"
_VERSION = 1


@dataclass(frozen=True)
class MaskingPolicy:
    select_fraction: float = 0.15
    mask_prob: float = 0.80
    random_prob: float = 0.10
    keep_prob: float = 0.10

    def __post_init__(self):
        if not 0.0 < self.select_fraction < 1.0:
            raise ConfigError(f"select_fraction must lie in (0,1), got {self.select_fraction}")
        total = self.mask_prob + self.random_prob + self.keep_prob
        # 0.8+0.1+0.1 is not exactly 1.0 in binary floating point, so
        # "exactly" is enforced at the tightest float64-representable slack
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"mask/random/keep probabilities sum to {total}, not 1")
        for name in ("mask_prob", "random_prob", "keep_prob"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class PackingConfig:
    max_len: int = 512
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_len < 8:
            raise ConfigError(f"max_len must be at least 8, got {self.max_len}")


@dataclass(frozen=True)
class PretrainExample:
    input_ids: tuple[int, ...]
    segment_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    mlm_labels: tuple[int, ...]
    nsp_label: int

    def __post_init__(self):
        n = len(self.input_ids)
        if not (len(self.segment_ids) == len(self.attention_mask) == len(self.mlm_labels) == n):
            raise DataError("example field lengths disagree")
        if self.nsp_label not in (IS_NEXT, NOT_NEXT):
            raise DataError(f"nsp_label must be 0 or 1, got {self.nsp_label}")


def build_nsp_pairs(
    documents: Sequence[Sequence[str]], rng: np.random.Generator
) -> list[tuple[str, str, int]]:
    """Emit one (A, B, label) per adjacent sentence pair, in corpus order.

    A fair coin keeps the true next sentence (is-next) or swaps in a
    uniformly sampled sentence that is not the true next one, drawn from
    a different document whenever one exists.
    """
    doc_of: list[int] = []
    flat: list[str] = []
    for d, sentences in enumerate(documents):
        for sentence in sentences:
            doc_of.append(d)
            flat.append(sentence)
    if len(flat) < 2:
        raise DataError("insufficient sentences for NSP")

    pairs = []
    for d, sentences in enumerate(documents):
        for i in range(len(sentences) - 1):
            first, true_next = sentences[i], sentences[i + 1]
            if rng.random() < 0.5:
                pairs.append((first, true_next, IS_NEXT))
                continue
            pool = [j for j in range(len(flat)) if doc_of[j] != d and flat[j] != true_next]
            if not pool:
                pool = [j for j in range(len(flat)) if flat[j] != true_next]
            if not pool:
                raise DataError("no negative candidate distinct from the true next sentence")
            candidate = flat[pool[int(rng.integers(0, len(pool)))]]
            pairs.append((first, candidate, NOT_NEXT))
    return pairs


def assemble_input(
    pair: tuple[str, str, int],
    model: WordPieceModel,
    packing: PackingConfig,
) -> PretrainExample:
    """Pack one pair as [CLS] A [SEP] B [SEP], truncate, pad to max_len.

    Truncation pops tokens off the end of the longer side (ties trim A)
    until the three structural tokens plus both sides fit.
    """
    text_a, text_b, nsp_label = pair
    ids_a = encode(model, text_a)
    ids_b = encode(model, text_b)
    while 3 + len(ids_a) + len(ids_b) > packing.max_len:
        longer = ids_a if len(ids_a) >= len(ids_b) else ids_b
        longer.pop()
    if not ids_a or not ids_b:
        raise DataError(f"pair untokenizable at max_len {packing.max_len}")

    cls_id = model.token_to_id[CLS]
    sep_id = model.token_to_id[SEP]
    ids = [cls_id] + ids_a + [sep_id] + ids_b + [sep_id]
    segments = [0] * (2 + len(ids_a)) + [1] * (len(ids_b) + 1)
    real = len(ids)
    pad = packing.max_len - real
    return PretrainExample(
        input_ids=tuple(ids + [model.pad_id] * pad),
        segment_ids=tuple(segments + [0] * pad),
        attention_mask=tuple([1] * real + [0] * pad),
        mlm_labels=(IGNORE_INDEX,) * packing.max_len,
        nsp_label=nsp_label,
    )


def _mask_count(n_candidates: int, select_fraction: float) -> int:
    if n_candidates < 1:
        return 0
    # round half-up, floored at one so short sequences still train
    return max(1, int(np.floor(select_fraction * n_candidates + 0.5)))


def apply_mlm_mask(
    example: PretrainExample,
    model: WordPieceModel,
    policy: MaskingPolicy,
    rng: np.random.Generator,
) -> PretrainExample:
    """Select candidate positions and apply the mask/random/keep split.

    Candidates are positions holding real (non-special) tokens under the
    attention mask. Selected positions get their original id as label;
    everything else stays ignored.
    """
    special_ids = {model.token_to_id[t] for t in model.config.special_tokens}
    candidates = [
        i
        for i, (tok, attn) in enumerate(zip(example.input_ids, example.attention_mask))
        if attn == 1 and tok not in special_ids
    ]
    k = _mask_count(len(candidates), policy.select_fraction)
    if k == 0:
        return example

    order = rng.permutation(len(candidates))
    selected = sorted(candidates[int(j)] for j in order[:k])

    non_special = [i for i in range(len(model.vocab)) if i not in special_ids]
    mask_id = model.token_to_id[MASK]
    ids = list(example.input_ids)
    labels = [IGNORE_INDEX] * len(ids)
    for pos in selected:
        labels[pos] = ids[pos]
        u = rng.random()
        if u < policy.mask_prob:
            ids[pos] = mask_id
        elif u < policy.mask_prob + policy.random_prob:
            ids[pos] = non_special[int(rng.integers(0, len(non_special)))]
        # else: keep the original token
    return replace(example, input_ids=tuple(ids), mlm_labels=tuple(labels))


def build_pretrain_examples(
    documents: Sequence[Sequence[str]],
    model: WordPieceModel,
    packing: PackingConfig = PackingConfig(),
    policy: MaskingPolicy = MaskingPolicy(),
) -> list[PretrainExample]:
    """Corpus to masked examples, reproducible from packing.rng_seed alone."""
    pair_rng = np.random.default_rng((packing.rng_seed, 0))
    pairs = build_nsp_pairs(documents, pair_rng)
    examples = []
    for idx, pair in enumerate(pairs):
        example = assemble_input(pair, model, packing)
        mask_rng = np.random.default_rng((packing.rng_seed, 1, idx))
        examples.append(apply_mlm_mask(example, model, policy, mask_rng))
    return examples


def write_examples(examples: Sequence[PretrainExample], path: str | Path, vocab_size: int) -> int:
    """Binary example file: 16-byte header, length-prefixed fixed records."""
    if examples:
        max_len = len(examples[0].input_ids)
    else:
        max_len = 0
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<III", _VERSION, max_len, vocab_size))
        for i, ex in enumerate(examples):
            if len(ex.input_ids) != max_len:
                raise DataError(
                    f"record {i}: length {len(ex.input_ids)} differs from header {max_len}"
                )
            payload = (
                np.asarray(ex.input_ids, dtype="<i4").tobytes()
                + np.asarray(ex.segment_ids, dtype="i1").tobytes()
                + np.asarray(ex.attention_mask, dtype="i1").tobytes()
                + np.asarray(ex.mlm_labels, dtype="<i4").tobytes()
                + struct.pack("B", ex.nsp_label)
            )
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)
    return len(examples)


def read_examples(path: str | Path) -> tuple[list[PretrainExample], int]:
    """Read an example file back; returns (examples, vocab_size)."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read example file {path}: {exc}") from exc
    if len(blob) < 16 or blob[:4] != _MAGIC:
        raise DataError(f"{path} is not an example file (bad magic)")
    version, max_len, vocab_size = struct.unpack("<III", blob[4:16])
    if version != _VERSION:
        raise DataError(f"{path}: unsupported example file version {version}")

    expected = 10 * max_len + 1
    examples = []
    offset = 16
    index = 0
    while offset < len(blob):
        if offset + 4 > len(blob):
            raise DataError(f"{path}: truncated length prefix at record {index}")
        (length,) = struct.unpack("<I", blob[offset : offset + 4])
        offset += 4
        if length != expected:
            raise DataError(
                f"{path}: corrupted record {index}: payload {length} bytes, expected {expected}"
            )
        if offset + length > len(blob):
            raise DataError(f"{path}: truncated record {index}")
        payload = blob[offset : offset + length]
        offset += length
        pos = 0
        ids = np.frombuffer(payload, dtype="<i4", count=max_len, offset=pos)
        pos += 4 * max_len
        segs = np.frombuffer(payload, dtype="i1", count=max_len, offset=pos)
        pos += max_len
        attn = np.frombuffer(payload, dtype="i1", count=max_len, offset=pos)
        pos += max_len
        labels = np.frombuffer(payload, dtype="<i4", count=max_len, offset=pos)
        pos += 4 * max_len
        nsp = payload[pos]
        examples.append(
            PretrainExample(
                input_ids=tuple(int(x) for x in ids),
                segment_ids=tuple(int(x) for x in segs),
                attention_mask=tuple(int(x) for x in attn),
                mlm_labels=tuple(int(x) for x in labels),
                nsp_label=int(nsp),
            )
        )
        index += 1
    return examples, vocab_size


def example_records(examples: Sequence[PretrainExample]) -> list[dict]:
    """Debug dump: one line-record per example."""
    return [
        {
            "input_ids": list(ex.input_ids),
            "segment_ids": list(ex.segment_ids),
            "attention_mask": list(ex.attention_mask),
            "mlm_labels": list(ex.mlm_labels),
            "nsp_label": ex.nsp_label,
        }
        for ex in examples
    ]


def collate(examples: Sequence[PretrainExample]) -> dict[str, np.ndarray]:
    """Stack examples into int64 arrays keyed by field name."""
    return {
        "input_ids": np.array([ex.input_ids for ex in examples], dtype=np.int64),
        "segment_ids": np.array([ex.segment_ids for ex in examples], dtype=np.int64),
        "attention_mask": np.array([ex.attention_mask for ex in examples], dtype=np.int64),
        "mlm_labels": np.array([ex.mlm_labels for ex in examples], dtype=np.int64),
        "nsp_labels": np.array([ex.nsp_label for ex in examples], dtype=np.int64),
    }
