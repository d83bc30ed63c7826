import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farsilm.errors import ConfigError, DataError
from farsilm.wordpiece import (
    CLS,
    MASK,
    PAD,
    SEP,
    SPECIAL_TOKENS,
    UNK,
    TokenizerTrainConfig,
    WordPieceModel,
    decode,
    encode,
    encode_to_pieces,
    load_vocab,
    pretokenize,
    save_vocab,
    train_wordpiece,
)


def model_from(tokens):
    vocab = tuple(SPECIAL_TOKENS) + tuple(tokens)
    return WordPieceModel(
        vocab=vocab, token_to_id={t: i for i, t in enumerate(vocab)}
    )


class TestPretokenize:
    def test_whitespace_split(self):
        assert pretokenize("سلام دنیا") == ["سلام", "دنیا"]

    def test_punctuation_isolated(self):
        assert pretokenize("رفت.") == ["رفت", "."]
        assert pretokenize("(سلام)") == ["(", "سلام", ")"]
        assert pretokenize("چرا؟!") == ["چرا", "؟", "!"]

    def test_zwnj_kept_word_internal(self):
        assert pretokenize("می‌روم و") == ["می‌روم", "و"]

    def test_empty(self):
        assert pretokenize("") == []
        assert pretokenize("   ") == []


class TestTraining:
    def test_hand_traced_merge_sequence(self):
        # Oracle: hand-run of the score formula on ["aaab"] x 3.
        # Seeds: a:9 occurrences, b:3. Pair scores round one:
        #   (a,##a)=3/(3*6), (##a,##a)=3/(6*6), (##a,##b)=3/(6*3)
        # tie between (a,##a) and (##a,##b) at 1/6 and frequency 3 ->
        # merged strings "aa" vs "ab" (prefix ignored) -> "aa" first.
        # Round two ties "aaa" vs "ab" -> "aaa"; round three "aaab".
        config = TokenizerTrainConfig(vocab_size=12, min_frequency=3, alphabet_limit=1500)
        model = train_wordpiece(["aaab", "aaab", "aaab"], config)
        assert list(model.vocab) == [
            PAD, UNK, CLS, SEP, MASK,
            "a", "##a", "##b",
            "aa", "aaa", "aaab",
        ]

    def test_no_frequent_pair_keeps_alphabet_only(self):
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=3)
        model = train_wordpiece(["ab", "cd"], config)
        assert list(model.vocab) == [PAD, UNK, CLS, SEP, MASK, "a", "c", "##b", "##d"]

    def test_min_frequency_boundary(self):
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=3)
        merged = train_wordpiece(["ab"] * 3, config)
        assert "ab" in merged.vocab
        unmerged = train_wordpiece(["ab"] * 2, config)
        assert "ab" not in unmerged.vocab

    def test_score_prefers_rare_pieces(self):
        # (c,##d) scores 3/9, (a,##b) scores 4/16; higher score merges first
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=3)
        model = train_wordpiece(["ab"] * 4 + ["cd"] * 3, config)
        assert model.token_to_id["cd"] < model.token_to_id["ab"]

    def test_score_tie_broken_by_pair_frequency(self):
        # both pairs score 0.25; (b,##a) is twice as frequent and wins
        # even though "ab" sorts before "ba"
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=1)
        model = train_wordpiece(["ba"] * 4 + ["ab"] * 2 + ["a"] * 2, config)
        assert model.token_to_id["ba"] < model.token_to_id["ab"]

    def test_full_tie_broken_lexicographically(self):
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=1)
        model = train_wordpiece(["ab", "ba"] * 2, config)
        assert model.token_to_id["ab"] < model.token_to_id["ba"]

    def test_vocab_size_cap_respected(self):
        config = TokenizerTrainConfig(vocab_size=9, min_frequency=1)
        model = train_wordpiece(["aaab"] * 3, config)
        assert len(model.vocab) == 9

    def test_vocab_prefix_monotone_in_vocab_size(self):
        small = train_wordpiece(
            ["aaab"] * 3, TokenizerTrainConfig(vocab_size=10, min_frequency=1)
        )
        large = train_wordpiece(
            ["aaab"] * 3, TokenizerTrainConfig(vocab_size=12, min_frequency=1)
        )
        assert list(large.vocab[: len(small.vocab)]) == list(small.vocab)

    def test_alphabet_limit_by_frequency_then_codepoint(self):
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=3, alphabet_limit=3)
        model = train_wordpiece(["aa bb cc"] * 5 + ["zz"], config)
        assert "z" not in "".join(model.vocab)
        assert encode_to_pieces(model, "zz") == [UNK]

    def test_alphabet_tie_goes_to_smaller_codepoint(self):
        config = TokenizerTrainConfig(vocab_size=100, min_frequency=99, alphabet_limit=1)
        model = train_wordpiece(["b a"], config)
        assert "a" in model.vocab and "b" not in model.vocab

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError, match="empty"):
            train_wordpiece([], TokenizerTrainConfig())
        with pytest.raises(DataError, match="empty"):
            train_wordpiece(["   ", ""], TokenizerTrainConfig())

    def test_vocab_size_deficit_reported(self):
        config = TokenizerTrainConfig(vocab_size=6, min_frequency=1)
        with pytest.raises(ConfigError, match="short by"):
            train_wordpiece(["abcdef"] * 3, config)

    def test_training_is_deterministic(self, tmp_path):
        corpus = ["سلام دنیای بزرگ", "سلام بر دنیا", "دنیای ما بزرگ است"] * 4
        config = TokenizerTrainConfig(vocab_size=60, min_frequency=2)
        first = train_wordpiece(corpus, config)
        second = train_wordpiece(corpus, config)
        assert first.vocab == second.vocab
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        save_vocab(first, a)
        save_vocab(second, b)
        assert a.read_bytes() == b.read_bytes()


class TestEncode:
    def test_greedy_longest_match(self):
        model = model_from(["un", "##aff", "##able", "u", "##n", "##a"])
        assert encode_to_pieces(model, "unaffable") == ["un", "##aff", "##able"]

    def test_unknown_character_yields_unk(self):
        model = model_from(["un"])
        assert encode_to_pieces(model, "unz") == [UNK]

    def test_empty_text(self):
        model = model_from(["a"])
        assert encode(model, "") == []

    def test_word_over_max_chars_is_unk(self):
        config = TokenizerTrainConfig(max_word_chars=5)
        vocab = tuple(SPECIAL_TOKENS) + ("a", "##a")
        model = WordPieceModel(
            vocab=vocab, token_to_id={t: i for i, t in enumerate(vocab)}, config=config
        )
        assert encode_to_pieces(model, "aaaaa") == ["a"] + ["##a"] * 4
        assert encode_to_pieces(model, "aaaaaa") == [UNK]

    def test_missing_continuation_form_falls_back_to_unk(self):
        model = model_from(["x"])
        assert encode_to_pieces(model, "x") == ["x"]
        assert encode_to_pieces(model, "xx") == [UNK]

    def test_trained_model_encodes_training_word_whole(self):
        config = TokenizerTrainConfig(vocab_size=12, min_frequency=3)
        model = train_wordpiece(["aaab"] * 3, config)
        assert encode_to_pieces(model, "aaab") == ["aaab"]
        assert encode_to_pieces(model, "aab") == ["aa", "##b"]

    def test_ids_always_in_range(self):
        config = TokenizerTrainConfig(vocab_size=30, min_frequency=1)
        model = train_wordpiece(["ab ba aab"] * 3, config)
        for text in ["ab", "ba ab", "zzz", "a b ab", "", "؟"]:
            for i in encode(model, text):
                assert 0 <= i < len(model.vocab)


class TestDecode:
    def test_glues_continuations(self):
        model = model_from(["un", "##aff", "##able"])
        ids = [model.token_to_id[t] for t in ["un", "##aff", "##able"]]
        assert decode(model, ids) == "unaffable"

    def test_specials_dropped_except_unk(self):
        model = model_from(["hi"])
        ids = [model.token_to_id[CLS], model.token_to_id["hi"], model.token_to_id[SEP]]
        assert decode(model, ids) == "hi"
        assert decode(model, [model.token_to_id[UNK]]) == UNK

    def test_out_of_range_id_named(self):
        model = model_from(["a"])
        with pytest.raises(DataError, match="99"):
            decode(model, [99])
        with pytest.raises(DataError, match="-1"):
            decode(model, [-1])

    def test_round_trip_every_vocab_word(self):
        config = TokenizerTrainConfig(vocab_size=40, min_frequency=1)
        model = train_wordpiece(["سلام دنیا خوب"] * 3, config)
        for word in ["سلام", "دنیا", "خوب"]:
            assert decode(model, encode(model, word)) == word


CORPUS_WORDS = ["سلام", "دنیا", "کتاب", "می‌روم", "خوب", "بزرگ"]


@st.composite
def corpus_sentences(draw):
    words = draw(
        st.lists(st.sampled_from(CORPUS_WORDS + [".", "؟", "!"]), min_size=1, max_size=8)
    )
    return " ".join(words)


class TestRoundTripProperty:
    @classmethod
    def setup_class(cls):
        corpus = [" ".join(CORPUS_WORDS) + " . ؟ !"] * 3
        cls.model = train_wordpiece(
            corpus, TokenizerTrainConfig(vocab_size=400, min_frequency=1)
        )

    @given(corpus_sentences())
    @settings(max_examples=150)
    def test_round_trip_on_in_alphabet_text(self, text):
        ids = encode(self.model, text)
        assert self.model.unk_id not in ids
        assert decode(self.model, ids) == " ".join(text.split())


class TestConfigValidation:
    def test_duplicate_specials_rejected(self):
        with pytest.raises(ConfigError, match="distinct"):
            TokenizerTrainConfig(special_tokens=(PAD, UNK, UNK))

    def test_pad_must_lead(self):
        with pytest.raises(ConfigError, match="id 0"):
            TokenizerTrainConfig(special_tokens=(UNK, PAD))

    def test_vocab_size_must_exceed_specials(self):
        with pytest.raises(ConfigError, match="vocab_size"):
            TokenizerTrainConfig(vocab_size=5)

    def test_model_rejects_misplaced_specials(self):
        with pytest.raises(DataError, match="special tokens"):
            WordPieceModel(vocab=("a", PAD), token_to_id={"a": 0, PAD: 1})


class TestVocabFile:
    def test_save_load_round_trip(self, tmp_path):
        config = TokenizerTrainConfig(vocab_size=12, min_frequency=3)
        model = train_wordpiece(["aaab"] * 3, config)
        path = tmp_path / "vocab.txt"
        save_vocab(model, path)
        loaded = load_vocab(path, config)
        assert loaded.vocab == model.vocab
        assert loaded.token_to_id == model.token_to_id

    def test_line_number_is_id(self, tmp_path):
        config = TokenizerTrainConfig(vocab_size=12, min_frequency=3)
        model = train_wordpiece(["aaab"] * 3, config)
        path = tmp_path / "vocab.txt"
        save_vocab(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[model.token_to_id["aaab"]] == "aaab"
        assert lines[0] == PAD

    def test_lf_endings(self, tmp_path):
        model = model_from(["a"])
        path = tmp_path / "vocab.txt"
        save_vocab(model, path)
        assert b"\r" not in path.read_bytes()

    def test_duplicate_lines_rejected(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join(SPECIAL_TOKENS + ("a", "a")) + "\n", encoding="utf-8")
        with pytest.raises(DataError, match="duplicate"):
            load_vocab(path)
