"""Adam optimization, binary checkpoints, and the pretraining loop.

Checkpoints use a small versioned container: magic ``FLCP``, a format
version, a JSON header naming every tensor with shape and dtype, then the
raw tensor bytes in header order. Saving the same state twice produces
byte-identical files, which the reproducibility checks rely on.

The pretraining loop draws each step's batch independently from the
example file with a counter-based seed, so a run resumed from step 100
replays exactly the batches an uninterrupted run would have seen.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .model import ModelConfig, gradients, init_params, shape_audit
from .pretrain_data import collate, read_examples

_MAGIC = b"FLCP"
_VERSION = 1


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam hyperparameters; the high beta2 follows the training recipe."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.98
    epsilon: float = 1e-8
    batch_size: int = 32
    max_steps: int = 1000
    warmup_steps: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"{name} must lie in [0,1), got {value}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.max_steps < 0 or self.warmup_steps < 0:
            raise ConfigError("step counts cannot be negative")


@dataclass
class AdamState:
    """First and second moment accumulators plus the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def init_adam_state(params: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        step=0,
    )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: OptimizerConfig,
) -> None:
    """One bias-corrected Adam update, applied to params in place."""
    state.step += 1
    t = state.step
    lr = config.learning_rate
    if config.warmup_steps > 0:
        lr *= min(1.0, t / config.warmup_steps)
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)


@dataclass(frozen=True)
class Checkpoint:
    model_config: ModelConfig
    opt_config: OptimizerConfig
    params: dict[str, np.ndarray]
    adam_state: AdamState
    head_kind: str | None = None
    head_labels: tuple[str, ...] | None = None
    head_params: dict[str, np.ndarray] | None = None

    @property
    def step(self) -> int:
        return self.adam_state.step


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(
    path: str,
    model_config: ModelConfig,
    opt_config: OptimizerConfig,
    params: dict[str, np.ndarray],
    state: AdamState,
    head_kind: str | None = None,
    head_labels=None,
    head_params: dict[str, np.ndarray] | None = None,
) -> None:
    tensors: dict[str, np.ndarray] = {}
    for name, value in params.items():
        tensors["param:" + name] = value
    for name, value in state.m.items():
        tensors["adam_m:" + name] = value
    for name, value in state.v.items():
        tensors["adam_v:" + name] = value
    for name, value in (head_params or {}).items():
        tensors["head:" + name] = value
    order = sorted(tensors)
    header = {
        "model_config": dataclasses.asdict(model_config),
        "opt_config": dataclasses.asdict(opt_config),
        "step": state.step,
        "tensors": [
            {
                "name": name,
                "shape": list(tensors[name].shape),
                "dtype": tensors[name].dtype.str,
            }
            for name in order
        ],
    }
    if head_kind is not None:
        header["head"] = {"kind": head_kind, "labels": list(head_labels or ())}
    blob = _json_bytes(header)
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<II", _VERSION, len(blob)))
        handle.write(blob)
        for name in order:
            handle.write(np.ascontiguousarray(tensors[name]).tobytes())


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:4] != _MAGIC:
        raise DataError(f"{path} is not a checkpoint file")
    if len(data) < 12:
        raise DataError(f"checkpoint {path} is truncated")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != _VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    if len(data) < 12 + header_len:
        raise DataError(f"checkpoint {path} is truncated")
    header = json.loads(data[12 : 12 + header_len].decode("utf-8"))

    offset = 12 + header_len
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape)) if shape else dtype.itemsize
        chunk = data[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise DataError(f"checkpoint {path} is truncated in tensor {entry['name']}")
        tensors[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes

    model_config = ModelConfig(**header["model_config"])
    opt_config = OptimizerConfig(**header["opt_config"])
    params = {
        name[len("param:") :]: value
        for name, value in tensors.items()
        if name.startswith("param:")
    }
    state = AdamState(
        m={
            name[len("adam_m:") :]: value
            for name, value in tensors.items()
            if name.startswith("adam_m:")
        },
        v={
            name[len("adam_v:") :]: value
            for name, value in tensors.items()
            if name.startswith("adam_v:")
        },
        step=int(header["step"]),
    )
    shape_audit(params, model_config)
    head = header.get("head")
    head_params = {
        name[len("head:") :]: value
        for name, value in tensors.items()
        if name.startswith("head:")
    }
    return Checkpoint(
        model_config,
        opt_config,
        params,
        state,
        head_kind=head["kind"] if head else None,
        head_labels=tuple(head["labels"]) if head else None,
        head_params=head_params or None,
    )


def write_loss_trace(path: str, rows, append: bool = False) -> None:
    """CSV of per-step losses with a step,mlm_loss,nsp_loss header."""
    mode = "a" if append and os.path.exists(path) else "w"
    with open(path, mode, newline="") as handle:
        writer = csv.writer(handle)
        if mode == "w":
            writer.writerow(["step", "mlm_loss", "nsp_loss"])
        for step, mlm_loss, nsp_loss in rows:
            writer.writerow([step, f"{mlm_loss:.10f}", f"{nsp_loss:.10f}"])


def read_loss_trace(path: str) -> list[tuple[int, float, float]]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["step", "mlm_loss", "nsp_loss"]:
            raise DataError(f"{path} is not a loss trace")
        return [(int(r[0]), float(r[1]), float(r[2])) for r in reader]


@dataclass(frozen=True)
class PretrainResult:
    params: dict[str, np.ndarray]
    adam_state: AdamState
    trace: tuple[tuple[int, float, float], ...]

    @property
    def step(self) -> int:
        return self.adam_state.step


def _batch_for_step(examples, batch_size: int, seed: int, step: int):
    # each step's batch is a pure function of (seed, step), which is what
    # makes an interrupted run resumable without replaying history
    rng = np.random.default_rng((seed, 2, step))
    picks = rng.integers(0, len(examples), batch_size)
    return collate([examples[int(i)] for i in picks])


def pretrain(
    examples_path: str,
    model_config: ModelConfig,
    opt_config: OptimizerConfig,
    seed: int,
    checkpoint_path: str,
    trace_path: str | None = None,
    log=None,
    log_every: int = 100,
) -> PretrainResult:
    """Run MLM+NSP pretraining and leave a checkpoint at checkpoint_path.

    If the checkpoint already exists, training resumes from its recorded
    step and runs until opt_config.max_steps. With max_steps 0 the saved
    checkpoint holds the untouched initialization.
    """
    examples, file_vocab = read_examples(examples_path)
    if file_vocab != model_config.vocab_size:
        raise ConfigError(
            f"example file was built for vocab size {file_vocab}, "
            f"model expects {model_config.vocab_size}"
        )
    if not examples:
        raise DataError(f"{examples_path} holds no examples")

    resumed = os.path.exists(checkpoint_path)
    if resumed:
        checkpoint = load_checkpoint(checkpoint_path)
        if checkpoint.model_config != model_config:
            raise ConfigError("checkpoint model config does not match")
        stored = dataclasses.replace(checkpoint.opt_config, max_steps=opt_config.max_steps)
        if stored != opt_config:
            raise ConfigError("checkpoint optimizer settings do not match")
        params = checkpoint.params
        state = checkpoint.adam_state
    else:
        params = init_params(model_config, seed)
        state = init_adam_state(params)

    trace: list[tuple[int, float, float]] = []
    dropout_active = model_config.dropout > 0.0
    while state.step < opt_config.max_steps:
        step = state.step + 1
        batch = _batch_for_step(examples, opt_config.batch_size, seed, step)
        dropout_rng = np.random.default_rng((seed, 3, step)) if dropout_active else None
        losses, grads = gradients(params, model_config, batch, dropout_rng)
        adam_step(params, grads, state, opt_config)
        trace.append((step, losses["mlm_loss"], losses["nsp_loss"]))
        if log is not None and (step % log_every == 0 or step == opt_config.max_steps):
            log(
                f"step {step}/{opt_config.max_steps} "
                f"mlm {losses['mlm_loss']:.4f} nsp {losses['nsp_loss']:.4f}"
            )

    save_checkpoint(checkpoint_path, model_config, opt_config, params, state)
    if trace_path is not None:
        write_loss_trace(trace_path, trace, append=resumed)
    return PretrainResult(params=params, adam_state=state, trace=tuple(trace))
