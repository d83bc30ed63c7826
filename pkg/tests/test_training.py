"""Optimizer, checkpoint container, and pretraining loop tests."""

import numpy as np
import pytest

from farsilm.errors import ConfigError, DataError
from farsilm.model import ModelConfig, init_params
from farsilm.pretrain_data import MaskingPolicy, PackingConfig, build_pretrain_examples, write_examples
from farsilm.training import (
    AdamState,
    OptimizerConfig,
    adam_step,
    init_adam_state,
    load_checkpoint,
    pretrain,
    read_loss_trace,
    save_checkpoint,
    write_loss_trace,
)
from farsilm.wordpiece import TokenizerTrainConfig, train_wordpiece

WORDS = ["ab", "abc", "bcd", "cab", "dab", "bad", "cad", "add", "dba", "cba"]


def tiny_corpus():
    rng = np.random.default_rng(42)
    documents = []
    for _ in range(6):
        sentences = []
        for _ in range(5):
            picks = rng.integers(0, len(WORDS), 5)
            sentences.append(" ".join(WORDS[int(i)] for i in picks) + ".")
        documents.append(sentences)
    return documents


@pytest.fixture(scope="module")
def example_file(tmp_path_factory):
    documents = tiny_corpus()
    flat = [s for doc in documents for s in doc]
    model = train_wordpiece(
        flat, TokenizerTrainConfig(vocab_size=60, min_frequency=1, alphabet_limit=30)
    )
    examples = build_pretrain_examples(
        documents, model, PackingConfig(max_len=32, rng_seed=5), MaskingPolicy()
    )
    path = tmp_path_factory.mktemp("examples") / "train.bin"
    write_examples(examples, str(path), len(model.vocab))
    return str(path), len(model.vocab)


def small_config(vocab_size):
    return ModelConfig(
        layers=1,
        heads=2,
        hidden=16,
        intermediate=32,
        vocab_size=vocab_size,
        max_positions=32,
    )


class TestAdam:
    def test_single_step_matches_hand_derivation(self):
        # g=0.5 at t=1: both moment corrections cancel, so the update is
        # lr * g / (|g| + eps), within 1e-10 of a full 1e-4 step
        params = {"w": np.array([1.0])}
        grads = {"w": np.array([0.5])}
        state = init_adam_state(params)
        adam_step(params, grads, state, OptimizerConfig(learning_rate=1e-4))
        assert abs(params["w"][0] - (1.0 - 1e-4)) < 1e-10
        assert state.step == 1

    def test_three_steps_match_reference_loop(self):
        config = OptimizerConfig(learning_rate=0.01, beta1=0.9, beta2=0.98, epsilon=1e-8)
        params = {"w": np.array([0.3, -0.7])}
        state = init_adam_state(params)
        grad_seq = [np.array([0.5, -0.2]), np.array([-0.1, 0.4]), np.array([0.3, 0.3])]

        # independent reference: the textbook update written out longhand
        w = np.array([0.3, -0.7])
        m = np.zeros(2)
        v = np.zeros(2)
        for t, g in enumerate(grad_seq, start=1):
            m = 0.9 * m + 0.1 * g
            v = 0.98 * v + 0.02 * g * g
            mhat = m / (1 - 0.9**t)
            vhat = v / (1 - 0.98**t)
            w = w - 0.01 * mhat / (np.sqrt(vhat) + 1e-8)

        for g in grad_seq:
            adam_step(params, {"w": g}, state, config)
        np.testing.assert_allclose(params["w"], w, rtol=1e-14)

    def test_zero_gradient_leaves_parameter_unchanged(self):
        params = {"w": np.array([2.5])}
        state = init_adam_state(params)
        adam_step(params, {"w": np.array([0.0])}, state, OptimizerConfig())
        assert params["w"][0] == 2.5

    def test_warmup_scales_first_step(self):
        params = {"w": np.array([1.0])}
        state = init_adam_state(params)
        config = OptimizerConfig(learning_rate=1e-4, warmup_steps=10)
        adam_step(params, {"w": np.array([0.5])}, state, config)
        assert abs(params["w"][0] - (1.0 - 1e-5)) < 1e-11

    def test_config_validation(self):
        with pytest.raises(ConfigError, match="learning_rate"):
            OptimizerConfig(learning_rate=0.0)
        with pytest.raises(ConfigError, match="beta2"):
            OptimizerConfig(beta2=1.0)
        with pytest.raises(ConfigError, match="batch_size"):
            OptimizerConfig(batch_size=0)

    def test_defaults_follow_recipe(self):
        config = OptimizerConfig()
        assert (config.beta1, config.beta2) == (0.9, 0.98)
        assert config.learning_rate == 1e-4
        assert config.batch_size == 32
        assert config.warmup_steps == 0


class TestCheckpoint:
    def setup_method(self):
        self.config = small_config(vocab_size=40)
        self.params = init_params(self.config, seed=3)
        self.state = init_adam_state(self.params)
        self.state.step = 7
        self.state.m["pool_w"][0, 0] = 0.25
        self.opt = OptimizerConfig(max_steps=7)

    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "model.ckpt")
        save_checkpoint(path, self.config, self.opt, self.params, self.state)
        loaded = load_checkpoint(path)
        assert loaded.model_config == self.config
        assert loaded.opt_config == self.opt
        assert loaded.step == 7
        assert all(np.array_equal(loaded.params[k], self.params[k]) for k in self.params)
        assert all(np.array_equal(loaded.adam_state.m[k], self.state.m[k]) for k in self.state.m)
        assert all(np.array_equal(loaded.adam_state.v[k], self.state.v[k]) for k in self.state.v)

    def test_double_save_is_byte_identical(self, tmp_path):
        a = tmp_path / "a.ckpt"
        b = tmp_path / "b.ckpt"
        save_checkpoint(str(a), self.config, self.opt, self.params, self.state)
        save_checkpoint(str(b), self.config, self.opt, self.params, self.state)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(DataError, match="not a checkpoint"):
            load_checkpoint(str(path))

    def test_rejects_future_version(self, tmp_path):
        path = tmp_path / "v9.ckpt"
        good = tmp_path / "good.ckpt"
        save_checkpoint(str(good), self.config, self.opt, self.params, self.state)
        data = bytearray(good.read_bytes())
        data[4] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(DataError, match="version 9"):
            load_checkpoint(str(path))

    def test_rejects_truncation(self, tmp_path):
        good = tmp_path / "good.ckpt"
        save_checkpoint(str(good), self.config, self.opt, self.params, self.state)
        data = good.read_bytes()
        cut = tmp_path / "cut.ckpt"
        cut.write_bytes(data[: len(data) - 64])
        with pytest.raises(DataError, match="truncated"):
            load_checkpoint(str(cut))


class TestLossTrace:
    def test_round_trip_and_append(self, tmp_path):
        path = str(tmp_path / "trace.csv")
        write_loss_trace(path, [(1, 5.0, 0.7), (2, 4.5, 0.69)])
        write_loss_trace(path, [(3, 4.0, 0.68)], append=True)
        rows = read_loss_trace(path)
        assert [r[0] for r in rows] == [1, 2, 3]
        assert rows[2][1] == pytest.approx(4.0)

    def test_rejects_foreign_csv(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="loss trace"):
            read_loss_trace(str(path))


class TestPretrain:
    def test_zero_steps_equals_initialization(self, example_file, tmp_path):
        path, vocab = example_file
        config = small_config(vocab)
        ckpt = str(tmp_path / "init.ckpt")
        result = pretrain(path, config, OptimizerConfig(max_steps=0, batch_size=4), 11, ckpt)
        fresh = init_params(config, 11)
        assert result.step == 0
        assert all(np.array_equal(result.params[k], fresh[k]) for k in fresh)
        assert load_checkpoint(ckpt).step == 0

    def test_resume_matches_uninterrupted_run(self, example_file, tmp_path):
        path, vocab = example_file
        config = small_config(vocab)
        opt = OptimizerConfig(learning_rate=1e-3, batch_size=4, max_steps=8)

        solid = str(tmp_path / "solid.ckpt")
        full = pretrain(path, config, opt, 13, solid, trace_path=str(tmp_path / "solid.csv"))

        split = str(tmp_path / "split.ckpt")
        pretrain(path, config, OptimizerConfig(learning_rate=1e-3, batch_size=4, max_steps=4),
                 13, split, trace_path=str(tmp_path / "split.csv"))
        resumed = pretrain(path, config, opt, 13, split, trace_path=str(tmp_path / "split.csv"))

        assert resumed.step == full.step == 8
        assert all(np.array_equal(resumed.params[k], full.params[k]) for k in full.params)
        with open(solid, "rb") as a, open(split, "rb") as b:
            assert a.read() == b.read()
        assert read_loss_trace(str(tmp_path / "split.csv")) == read_loss_trace(
            str(tmp_path / "solid.csv")
        )

    def test_trace_covers_consecutive_steps(self, example_file, tmp_path):
        path, vocab = example_file
        result = pretrain(
            path, small_config(vocab), OptimizerConfig(batch_size=4, max_steps=5),
            7, str(tmp_path / "t.ckpt"),
        )
        assert [row[0] for row in result.trace] == [1, 2, 3, 4, 5]
        assert all(np.isfinite(row[1]) and np.isfinite(row[2]) for row in result.trace)

    def test_vocab_mismatch_fails_before_first_step(self, example_file, tmp_path):
        path, vocab = example_file
        ckpt = tmp_path / "never.ckpt"
        with pytest.raises(ConfigError, match="vocab size"):
            pretrain(path, small_config(vocab + 1), OptimizerConfig(max_steps=3), 1, str(ckpt))
        assert not ckpt.exists()

    def test_resume_rejects_changed_model_config(self, example_file, tmp_path):
        path, vocab = example_file
        ckpt = str(tmp_path / "m.ckpt")
        pretrain(path, small_config(vocab), OptimizerConfig(batch_size=4, max_steps=2), 1, ckpt)
        other = ModelConfig(layers=1, heads=4, hidden=16, intermediate=32,
                            vocab_size=vocab, max_positions=32)
        with pytest.raises(ConfigError, match="model config"):
            pretrain(path, other, OptimizerConfig(batch_size=4, max_steps=4), 1, ckpt)

    def test_resume_rejects_changed_optimizer(self, example_file, tmp_path):
        path, vocab = example_file
        ckpt = str(tmp_path / "o.ckpt")
        pretrain(path, small_config(vocab), OptimizerConfig(batch_size=4, max_steps=2), 1, ckpt)
        with pytest.raises(ConfigError, match="optimizer"):
            pretrain(
                path, small_config(vocab),
                OptimizerConfig(learning_rate=5e-4, batch_size=4, max_steps=4), 1, ckpt,
            )

    def test_loss_comes_down(self, example_file, tmp_path):
        path, vocab = example_file
        opt = OptimizerConfig(learning_rate=3e-3, batch_size=8, max_steps=60)
        result = pretrain(path, small_config(vocab), opt, 21, str(tmp_path / "d.ckpt"))
        first = np.mean([r[1] + r[2] for r in result.trace[:10]])
        last = np.mean([r[1] + r[2] for r in result.trace[-10:]])
        assert last < first
