import numpy as np
import pytest

from farsilm.errors import ConfigError, DataError
from farsilm.pretrain_data import (
    IGNORE_INDEX,
    IS_NEXT,
    NOT_NEXT,
    MaskingPolicy,
    PackingConfig,
    PretrainExample,
    apply_mlm_mask,
    assemble_input,
    build_nsp_pairs,
    build_pretrain_examples,
    collate,
    example_records,
    read_examples,
    write_examples,
)
from farsilm.wordpiece import CLS, MASK, PAD, SEP, SPECIAL_TOKENS, WordPieceModel


def model_from(tokens):
    vocab = tuple(SPECIAL_TOKENS) + tuple(tokens)
    return WordPieceModel(vocab=vocab, token_to_id={t: i for i, t in enumerate(vocab)})


LETTERS = list("abcdefghijklmnopqrst")
MODEL = model_from(LETTERS)


def sent(letters):
    return " ".join(letters)


class StubRng:
    """Fixed-coin stand-in for a Generator: forces the NSP branch."""

    def __init__(self, coin):
        self.coin = coin

    def random(self):
        return self.coin

    def integers(self, low, high):
        return low


class TestBuildNspPairs:
    def test_forced_positive_single_pair(self):
        pairs = build_nsp_pairs([["a", "b"]], StubRng(0.0))
        assert pairs == [("a", "b", IS_NEXT)]

    def test_forced_negative_prefers_other_document(self):
        pairs = build_nsp_pairs([["a", "b"], ["c", "d"]], StubRng(0.9))
        first, second = pairs
        assert first[0] == "a" and first[2] == NOT_NEXT and first[1] in {"c", "d"}
        assert second[0] == "c" and second[1] in {"a", "b"}

    def test_single_sentence_rejected(self):
        with pytest.raises(DataError, match="insufficient sentences"):
            build_nsp_pairs([["only"]], np.random.default_rng(0))

    def test_label_fraction_near_half_with_seed_one(self):
        docs = [[f"s{i}" for i in range(10_001)], ["x0", "x1"]]
        pairs = build_nsp_pairs(docs, np.random.default_rng(1))
        assert len(pairs) == 10_001
        frac = sum(p[2] == IS_NEXT for p in pairs) / len(pairs)
        assert 0.48 <= frac <= 0.52

    def test_corpus_order_preserved(self):
        docs = [["a", "b", "c"], ["d", "e"]]
        pairs = build_nsp_pairs(docs, np.random.default_rng(3))
        assert [p[0] for p in pairs] == ["a", "b", "d"]

    def test_negative_never_true_next(self):
        docs = [[f"d{d}s{i}" for i in range(5)] for d in range(4)]
        for seed in range(30):
            for first, second, label in build_nsp_pairs(docs, np.random.default_rng(seed)):
                if label == NOT_NEXT:
                    doc, i = int(first[1]), int(first[3])
                    assert second != f"d{doc}s{i + 1}"

    def test_all_identical_sentences_rejected_on_negative(self):
        with pytest.raises(DataError, match="no negative candidate"):
            build_nsp_pairs([["x", "x"], ["x"]], StubRng(0.9))

    def test_deterministic_given_seed(self):
        docs = [[f"s{i}" for i in range(50)], [f"t{i}" for i in range(50)]]
        a = build_nsp_pairs(docs, np.random.default_rng(11))
        b = build_nsp_pairs(docs, np.random.default_rng(11))
        assert a == b


class TestAssembleInput:
    def test_small_pair_layout(self):
        packing = PackingConfig(max_len=16)
        ex = assemble_input((sent("abc"), sent("de"), IS_NEXT), MODEL, packing)
        ids = ex.input_ids
        assert len(ids) == 16
        assert sum(ex.attention_mask) == 8
        assert ids[0] == MODEL.token_to_id[CLS]
        assert [MODEL.vocab[i] for i in ids[:8]] == [CLS, "a", "b", "c", SEP, "d", "e", SEP]
        assert ex.segment_ids == (0,) * 5 + (1,) * 3 + (0,) * 8
        assert ex.attention_mask == (1,) * 8 + (0,) * 8
        assert all(MODEL.vocab[i] == PAD for i in ids[8:])
        assert ex.mlm_labels == (IGNORE_INDEX,) * 16

    def test_longest_first_truncation(self):
        packing = PackingConfig(max_len=512)
        long_a = sent(["a"] * 300)
        long_b = sent(["b"] * 300)
        ex = assemble_input((long_a, long_b, NOT_NEXT), MODEL, packing)
        assert sum(ex.attention_mask) == 512
        # ties trim side A first, so B keeps one more token
        assert ex.segment_ids.count(0) == 2 + 254
        assert sum(ex.segment_ids) == 255 + 1

    def test_exactly_two_separators(self):
        ex = assemble_input((sent("ab"), sent("cd"), IS_NEXT), MODEL, PackingConfig(max_len=12))
        sep_id = MODEL.token_to_id[SEP]
        assert ex.input_ids.count(sep_id) == 2

    def test_segment_switch_after_first_sep(self):
        ex = assemble_input((sent("ab"), sent("cd"), IS_NEXT), MODEL, PackingConfig(max_len=12))
        first_sep = ex.input_ids.index(MODEL.token_to_id[SEP])
        assert ex.segment_ids[first_sep] == 0
        assert ex.segment_ids[first_sep + 1] == 1

    def test_empty_side_rejected(self):
        with pytest.raises(DataError, match="untokenizable"):
            assemble_input(("", "a b", IS_NEXT), MODEL, PackingConfig(max_len=16))

    def test_max_len_floor(self):
        with pytest.raises(ConfigError, match="max_len"):
            PackingConfig(max_len=4)


def assemble(n_a, n_b, max_len=32):
    pair = (sent(LETTERS[:n_a]), sent(LETTERS[n_a : n_a + n_b]), IS_NEXT)
    return assemble_input(pair, MODEL, PackingConfig(max_len=max_len))


class TestApplyMlmMask:
    def test_twenty_candidates_select_exactly_three(self):
        # fifteen percent of twenty candidates -> three labeled positions
        ex = apply_mlm_mask(assemble(10, 10), MODEL, MaskingPolicy(), np.random.default_rng(5))
        assert sum(l != IGNORE_INDEX for l in ex.mlm_labels) == 3

    def test_rounding_half_up_and_floor_one(self):
        cases = {(2, 1): 1, (5, 5): 2, (2, 2): 1, (6, 7): 2}  # candidates: 3->1, 10->2, 4->1, 13->2
        for (n_a, n_b), expect in cases.items():
            ex = apply_mlm_mask(
                assemble(n_a, n_b), MODEL, MaskingPolicy(), np.random.default_rng(0)
            )
            assert sum(l != IGNORE_INDEX for l in ex.mlm_labels) == expect

    def test_specials_never_selected(self):
        base = assemble(10, 10)
        cls_sep_pad = {
            i
            for i, tok in enumerate(base.input_ids)
            if MODEL.vocab[tok] in SPECIAL_TOKENS
        }
        for seed in range(200):
            ex = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(seed))
            for pos in cls_sep_pad:
                assert ex.mlm_labels[pos] == IGNORE_INDEX
                if MODEL.vocab[base.input_ids[pos]] != MASK:
                    assert ex.input_ids[pos] == base.input_ids[pos]

    def test_labels_hold_original_ids(self):
        base = assemble(10, 10)
        ex = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(9))
        for pos, label in enumerate(ex.mlm_labels):
            if label != IGNORE_INDEX:
                assert label == base.input_ids[pos]
            else:
                assert ex.input_ids[pos] == base.input_ids[pos]

    def test_branch_fractions_loose(self):
        base = assemble(10, 10)
        mask_id = MODEL.token_to_id[MASK]
        masked = randomized = kept = 0
        for seed in range(1500):
            ex = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(seed))
            for pos, label in enumerate(ex.mlm_labels):
                if label == IGNORE_INDEX:
                    continue
                if ex.input_ids[pos] == mask_id:
                    masked += 1
                elif ex.input_ids[pos] == base.input_ids[pos]:
                    kept += 1
                else:
                    randomized += 1
        total = masked + randomized + kept
        assert total == 3 * 1500
        assert abs(masked / total - 0.80) < 0.03
        # the random branch can draw the original token, which tallies as
        # kept here, so allow that drift in the loose check
        assert abs(randomized / total - 0.10) < 0.03
        assert abs(kept / total - 0.10) < 0.03

    def test_random_replacement_never_special(self):
        base = assemble(10, 10)
        special_ids = {MODEL.token_to_id[t] for t in SPECIAL_TOKENS if t != MASK}
        for seed in range(300):
            ex = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(seed))
            for pos, label in enumerate(ex.mlm_labels):
                if label != IGNORE_INDEX:
                    assert ex.input_ids[pos] not in special_ids

    def test_deterministic(self):
        base = assemble(10, 10)
        a = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(42))
        b = apply_mlm_mask(base, MODEL, MaskingPolicy(), np.random.default_rng(42))
        assert a == b

    def test_policy_validation(self):
        with pytest.raises(ConfigError, match="sum"):
            MaskingPolicy(mask_prob=0.8, random_prob=0.2, keep_prob=0.1)
        with pytest.raises(ConfigError, match="select_fraction"):
            MaskingPolicy(select_fraction=0.0)
        MaskingPolicy()  # the defaults are exactly representable enough


DOCS = [
    [sent("abc"), sent("def"), sent("ghi")],
    [sent("jkl"), sent("mno"), sent("pqr")],
]


class TestPipelineAndFiles:
    def test_build_examples_deterministic(self):
        packing = PackingConfig(max_len=16, rng_seed=7)
        a = build_pretrain_examples(DOCS, MODEL, packing)
        b = build_pretrain_examples(DOCS, MODEL, packing)
        assert a == b

    def test_write_read_round_trip(self, tmp_path):
        packing = PackingConfig(max_len=16, rng_seed=7)
        examples = build_pretrain_examples(DOCS, MODEL, packing)
        path = tmp_path / "ex.bin"
        n = write_examples(examples, path, vocab_size=len(MODEL.vocab))
        assert n == len(examples)
        loaded, vocab_size = read_examples(path)
        assert loaded == examples
        assert vocab_size == len(MODEL.vocab)

    def test_same_seed_byte_identical_files(self, tmp_path):
        packing = PackingConfig(max_len=16, rng_seed=3)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        write_examples(build_pretrain_examples(DOCS, MODEL, packing), p1, len(MODEL.vocab))
        write_examples(build_pretrain_examples(DOCS, MODEL, packing), p2, len(MODEL.vocab))
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_file_round_trip(self, tmp_path):
        path = tmp_path / "empty.bin"
        write_examples([], path, vocab_size=9)
        assert path.stat().st_size == 16
        loaded, vocab_size = read_examples(path)
        assert loaded == [] and vocab_size == 9

    def test_corrupted_record_named(self, tmp_path):
        packing = PackingConfig(max_len=16, rng_seed=7)
        examples = build_pretrain_examples(DOCS, MODEL, packing) * 3
        path = tmp_path / "ex.bin"
        write_examples(examples, path, vocab_size=len(MODEL.vocab))
        record_size = 4 + 10 * 16 + 1
        blob = bytearray(path.read_bytes())
        blob = blob[: 16 + 5 * record_size + 30]  # cut inside record 5
        path.write_bytes(bytes(blob))
        with pytest.raises(DataError, match="record 5"):
            read_examples(path)

    def test_bad_length_prefix_named(self, tmp_path):
        path = tmp_path / "ex.bin"
        examples = build_pretrain_examples(DOCS, MODEL, PackingConfig(max_len=16))
        write_examples(examples, path, vocab_size=len(MODEL.vocab))
        blob = bytearray(path.read_bytes())
        blob[16] = 0xFF  # clobber record 0's length prefix
        path.write_bytes(bytes(blob))
        with pytest.raises(DataError, match="record 0"):
            read_examples(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "ex.bin"
        write_examples([], path, vocab_size=9)
        blob = bytearray(path.read_bytes())
        blob[4] = 2
        path.write_bytes(bytes(blob))
        with pytest.raises(DataError, match="version 2"):
            read_examples(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(DataError, match="magic"):
            read_examples(path)

    def test_debug_records_mirror_examples(self):
        examples = build_pretrain_examples(DOCS, MODEL, PackingConfig(max_len=16))
        records = example_records(examples)
        assert len(records) == len(examples)
        assert records[0]["input_ids"] == list(examples[0].input_ids)

    def test_collate_shapes(self):
        examples = build_pretrain_examples(DOCS, MODEL, PackingConfig(max_len=16))
        batch = collate(examples)
        n = len(examples)
        assert batch["input_ids"].shape == (n, 16)
        assert batch["nsp_labels"].shape == (n,)
        assert batch["input_ids"].dtype == np.int64


class TestExampleValidation:
    def test_field_length_mismatch(self):
        with pytest.raises(DataError, match="lengths"):
            PretrainExample(
                input_ids=(1, 2),
                segment_ids=(0,),
                attention_mask=(1, 1),
                mlm_labels=(IGNORE_INDEX, IGNORE_INDEX),
                nsp_label=IS_NEXT,
            )

    def test_bad_nsp_label(self):
        with pytest.raises(DataError, match="nsp_label"):
            PretrainExample(
                input_ids=(1,),
                segment_ids=(0,),
                attention_mask=(1,),
                mlm_labels=(IGNORE_INDEX,),
                nsp_label=7,
            )
