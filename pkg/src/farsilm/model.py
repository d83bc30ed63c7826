"""A miniature BERT-style bidirectional encoder with MLM and NSP heads.

Everything is plain NumPy with hand-written backpropagation, so the whole
training story fits on a laptop CPU and every gradient can be audited
against central differences. Conventions follow the original BERT:
post-layer-norm residual blocks, exact GELU, a tanh pooler over [CLS],
and an MLM decoder tied to the token embedding table.

Parameters live in a flat dict of named float64 arrays; every shape is a
function of :class:`ModelConfig` and audited by :func:`shape_audit`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DataError
from .pretrain_data import IGNORE_INDEX

LN_EPS = 1e-12
_MASK_BIAS = -1e9
_INIT_STD = 0.02


@dataclass(frozen=True)
class ModelConfig:
    """Encoder shape; defaults mirror the full-size configuration."""

    layers: int = 12
    heads: int = 12
    hidden: int = 768
    intermediate: int = 3072
    vocab_size: int = 100_000
    max_positions: int = 512
    type_vocab: int = 2
    dropout: float = 0.0

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ConfigError(
                f"hidden {self.hidden} is not divisible by heads {self.heads}"
            )
        for name in ("layers", "heads", "hidden", "intermediate", "vocab_size",
                     "max_positions", "type_vocab"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0,1), got {self.dropout}")


def desk_config(vocab_size: int, max_positions: int = 128) -> ModelConfig:
    """The laptop-scale profile used throughout the tests and demos."""
    return ModelConfig(
        layers=2,
        heads=2,
        hidden=64,
        intermediate=256,
        vocab_size=vocab_size,
        max_positions=max_positions,
    )


def _param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    h, i = config.hidden, config.intermediate
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (config.vocab_size, h),
        "pos_emb": (config.max_positions, h),
        "seg_emb": (config.type_vocab, h),
        "emb_ln_g": (h,),
        "emb_ln_b": (h,),
    }
    for layer in range(config.layers):
        p = f"layer{layer}."
        shapes.update(
            {
                p + "q_w": (h, h), p + "q_b": (h,),
                p + "k_w": (h, h), p + "k_b": (h,),
                p + "v_w": (h, h), p + "v_b": (h,),
                p + "o_w": (h, h), p + "o_b": (h,),
                p + "attn_ln_g": (h,), p + "attn_ln_b": (h,),
                p + "ffn_w1": (h, i), p + "ffn_b1": (i,),
                p + "ffn_w2": (i, h), p + "ffn_b2": (h,),
                p + "ffn_ln_g": (h,), p + "ffn_ln_b": (h,),
            }
        )
    shapes.update(
        {
            "pool_w": (h, h), "pool_b": (h,),
            "mlm_w": (h, h), "mlm_b": (h,),
            "mlm_ln_g": (h,), "mlm_ln_b": (h,),
            "mlm_out_b": (config.vocab_size,),
            "nsp_w": (h, 2), "nsp_b": (2,),
        }
    )
    return shapes


def param_count(config: ModelConfig) -> int:
    """Analytic parameter count (the tied MLM decoder adds no weights)."""
    return sum(int(np.prod(s)) for s in _param_shapes(config).values())


def _truncated_normal(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    # inverse-CDF sampling on [-2 sigma, 2 sigma]: one uniform per element,
    # so the draw count is fixed and the result reproducible
    lo, hi = ndtr(-2.0), ndtr(2.0)
    u = rng.random(shape)
    return ndtri(lo + u * (hi - lo)) * std


def init_params(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Truncated-normal weights, zero biases, unit layer-norm gains."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config).items():
        if name.endswith(("_g",)):
            params[name] = np.ones(shape)
        elif name.endswith(("_b",)) or name == "mlm_out_b":
            params[name] = np.zeros(shape)
        else:
            params[name] = _truncated_normal(rng, shape, _INIT_STD)
    return params


def shape_audit(params: dict[str, np.ndarray], config: ModelConfig) -> None:
    """Raise unless params holds exactly the tensors the config dictates."""
    expected = _param_shapes(config)
    if set(params) != set(expected):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise DataError(f"parameter names mismatch: missing {missing}, extra {extra}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise DataError(
                f"parameter {name} has shape {params[name].shape}, expected {shape}"
            )
        if not np.all(np.isfinite(params[name])):
            raise DataError(f"parameter {name} contains non-finite values")


def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    var = ((x - mu) ** 2).mean(-1, keepdims=True)
    sig = np.sqrt(var + LN_EPS)
    xhat = (x - mu) / sig
    return g * xhat + b, (xhat, sig, g)


def _layer_norm_back(dy, cache):
    xhat, sig, g = cache
    dxhat = dy * g
    dx = (
        dxhat - dxhat.mean(-1, keepdims=True) - xhat * (dxhat * xhat).mean(-1, keepdims=True)
    ) / sig
    axes = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axes)
    db = dy.sum(axes)
    return dx, dg, db


def _gelu(x):
    return x * ndtr(x)


def _gelu_back(dy, x):
    phi = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return dy * (ndtr(x) + x * phi)


def _softmax(x):
    shifted = x - x.max(-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(-1, keepdims=True)


def _log_softmax(x):
    shifted = x - x.max(-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(-1, keepdims=True))


def _dropout_mask(rng, shape, rate):
    if rate <= 0.0 or rng is None:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _validate_batch(config: ModelConfig, batch: dict[str, np.ndarray]) -> None:
    ids = batch["input_ids"]
    if ids.shape[1] > config.max_positions:
        raise DataError(
            f"sequence length {ids.shape[1]} exceeds max_positions {config.max_positions}"
        )
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise DataError(
            f"token ids must lie in [0,{config.vocab_size}), got range "
            f"[{ids.min()},{ids.max()}]"
        )
    segs = batch["segment_ids"]
    if segs.min() < 0 or segs.max() >= config.type_vocab:
        raise DataError(f"segment ids must lie in [0,{config.type_vocab})")


def _forward(params, config, batch, dropout_rng=None):
    """Run the encoder; returns (outputs, cache) with cache holding every
    intermediate the backward pass needs."""
    _validate_batch(config, batch)
    ids = batch["input_ids"]
    segs = batch["segment_ids"]
    attn = batch["attention_mask"]
    bsz, length = ids.shape
    nh = config.heads
    dh = config.hidden // nh
    rate = config.dropout

    emb = params["tok_emb"][ids] + params["pos_emb"][:length] + params["seg_emb"][segs]
    x, emb_ln_cache = _layer_norm(emb, params["emb_ln_g"], params["emb_ln_b"])
    emb_drop = _dropout_mask(dropout_rng, x.shape, rate)
    if emb_drop is not None:
        x = x * emb_drop

    # keys with attention 0 get a huge negative bias; exp underflows to an
    # exact zero weight, which is what makes padding invariance exact
    bias = (1.0 - attn[:, None, None, :]) * _MASK_BIAS

    layer_caches = []
    for layer in range(config.layers):
        p = f"layer{layer}."
        x_in = x
        q = x @ params[p + "q_w"] + params[p + "q_b"]
        k = x @ params[p + "k_w"] + params[p + "k_b"]
        v = x @ params[p + "v_w"] + params[p + "v_b"]
        qh = q.reshape(bsz, length, nh, dh).transpose(0, 2, 1, 3)
        kh = k.reshape(bsz, length, nh, dh).transpose(0, 2, 1, 3)
        vh = v.reshape(bsz, length, nh, dh).transpose(0, 2, 1, 3)
        scores = qh @ kh.transpose(0, 1, 3, 2) / np.sqrt(dh) + bias
        probs = _softmax(scores)
        probs_drop = _dropout_mask(dropout_rng, probs.shape, rate)
        probs_used = probs if probs_drop is None else probs * probs_drop
        ctx = (probs_used @ vh).transpose(0, 2, 1, 3).reshape(bsz, length, config.hidden)
        attn_out = ctx @ params[p + "o_w"] + params[p + "o_b"]
        attn_drop = _dropout_mask(dropout_rng, attn_out.shape, rate)
        if attn_drop is not None:
            attn_out = attn_out * attn_drop
        x_attn, attn_ln_cache = _layer_norm(
            x_in + attn_out, params[p + "attn_ln_g"], params[p + "attn_ln_b"]
        )

        ffn_pre = x_attn @ params[p + "ffn_w1"] + params[p + "ffn_b1"]
        ffn_act = _gelu(ffn_pre)
        ffn_out = ffn_act @ params[p + "ffn_w2"] + params[p + "ffn_b2"]
        ffn_drop = _dropout_mask(dropout_rng, ffn_out.shape, rate)
        if ffn_drop is not None:
            ffn_out = ffn_out * ffn_drop
        x, ffn_ln_cache = _layer_norm(
            x_attn + ffn_out, params[p + "ffn_ln_g"], params[p + "ffn_ln_b"]
        )
        layer_caches.append(
            dict(
                x_in=x_in, q=q, k=k, v=v, qh=qh, kh=kh, vh=vh,
                probs=probs, probs_drop=probs_drop, probs_used=probs_used,
                ctx=ctx, attn_drop=attn_drop, attn_ln=attn_ln_cache,
                x_attn=x_attn, ffn_pre=ffn_pre, ffn_act=ffn_act,
                ffn_drop=ffn_drop, ffn_ln=ffn_ln_cache,
            )
        )

    cls_state = x[:, 0]
    pool_pre = cls_state @ params["pool_w"] + params["pool_b"]
    pooled = np.tanh(pool_pre)
    nsp_logits = pooled @ params["nsp_w"] + params["nsp_b"]

    mlm_pre = x @ params["mlm_w"] + params["mlm_b"]
    mlm_act = _gelu(mlm_pre)
    mlm_tr, mlm_ln_cache = _layer_norm(mlm_act, params["mlm_ln_g"], params["mlm_ln_b"])
    mlm_logits = mlm_tr @ params["tok_emb"].T + params["mlm_out_b"]

    outputs = {
        "mlm_logits": mlm_logits,
        "nsp_logits": nsp_logits,
        "pooled": pooled,
        "sequence": x,
    }
    cache = dict(
        ids=ids, segs=segs, length=length, emb_ln=emb_ln_cache, emb_drop=emb_drop,
        layers=layer_caches, sequence=x, cls_state=cls_state, pooled=pooled,
        mlm_pre=mlm_pre, mlm_act=mlm_act, mlm_tr=mlm_tr, mlm_ln=mlm_ln_cache,
    )
    return outputs, cache


def forward(params, config: ModelConfig, batch, dropout_rng=None):
    """Encoder outputs for one batch: mlm_logits, nsp_logits, pooled, sequence."""
    outputs, _ = _forward(params, config, batch, dropout_rng)
    return outputs


def compute_losses(outputs, batch) -> dict:
    """Mean cross-entropies: MLM over non-ignored positions, NSP over items.

    A batch with no masked positions yields mlm_loss 0.0 and the
    mlm_positions count says so; nothing here can produce a NaN.
    """
    labels = batch["mlm_labels"]
    selected = labels != IGNORE_INDEX
    n_sel = int(selected.sum())
    if n_sel:
        logp = _log_softmax(outputs["mlm_logits"])
        rows = np.where(selected)
        mlm_loss = -logp[rows[0], rows[1], labels[rows]].sum() / n_sel
    else:
        mlm_loss = 0.0

    nsp_logp = _log_softmax(outputs["nsp_logits"])
    nsp_labels = batch["nsp_labels"]
    nsp_loss = -nsp_logp[np.arange(len(nsp_labels)), nsp_labels].mean()
    return {
        "mlm_loss": float(mlm_loss),
        "nsp_loss": float(nsp_loss),
        "total": float(mlm_loss + nsp_loss),
        "mlm_positions": n_sel,
    }


def gradients(params, config: ModelConfig, batch, dropout_rng=None):
    """Losses plus analytic gradients of the total loss for every parameter."""
    outputs, cache = _forward(params, config, batch, dropout_rng)
    losses = compute_losses(outputs, batch)
    if not np.isfinite(losses["total"]):
        raise DataError(f"non-finite loss {losses['total']}; aborting backward pass")

    grads = {name: np.zeros_like(value) for name, value in params.items()}
    bsz = batch["input_ids"].shape[0]

    # MLM head backward
    labels = batch["mlm_labels"]
    selected = labels != IGNORE_INDEX
    n_sel = int(selected.sum())
    dx = np.zeros_like(cache["sequence"])
    if n_sel:
        probs = _softmax(outputs["mlm_logits"])
        rows = np.where(selected)
        dlogits = probs * selected[..., None]
        dlogits[rows[0], rows[1], labels[rows]] -= 1.0
        dlogits /= n_sel

        flat_dlogits = dlogits.reshape(-1, config.vocab_size)
        flat_tr = cache["mlm_tr"].reshape(-1, config.hidden)
        grads["tok_emb"] += flat_dlogits.T @ flat_tr
        grads["mlm_out_b"] += flat_dlogits.sum(0)
        dtr = dlogits @ params["tok_emb"]
        dact, dg, db = _layer_norm_back(dtr, cache["mlm_ln"])
        grads["mlm_ln_g"] += dg
        grads["mlm_ln_b"] += db
        dpre = _gelu_back(dact, cache["mlm_pre"])
        flat_dpre = dpre.reshape(-1, config.hidden)
        flat_seq = cache["sequence"].reshape(-1, config.hidden)
        grads["mlm_w"] += flat_seq.T @ flat_dpre
        grads["mlm_b"] += flat_dpre.sum(0)
        dx += dpre @ params["mlm_w"].T

    # NSP head backward
    nsp_probs = _softmax(outputs["nsp_logits"])
    nsp_labels = batch["nsp_labels"]
    dnsp = nsp_probs.copy()
    dnsp[np.arange(bsz), nsp_labels] -= 1.0
    dnsp /= bsz
    grads["nsp_w"] += cache["pooled"].T @ dnsp
    grads["nsp_b"] += dnsp.sum(0)
    dpooled = dnsp @ params["nsp_w"].T

    backprop_encoder(params, config, cache, dx, dpooled, grads)
    return losses, grads


def backprop_encoder(params, config: ModelConfig, cache, d_sequence, d_pooled, grads):
    """Accumulate encoder gradients for upstream gradients on the final
    hidden states and, optionally, on the pooled [CLS] vector.

    This is the shared backward half used by the pretraining heads and by
    the fine-tuning heads; grads is mutated in place.
    """
    ids, segs, length = cache["ids"], cache["segs"], cache["length"]
    bsz = ids.shape[0]
    nh = config.heads
    dh = config.hidden // nh
    dx = np.array(d_sequence)

    if d_pooled is not None:
        dpool_pre = d_pooled * (1.0 - cache["pooled"] ** 2)
        grads["pool_w"] += cache["cls_state"].T @ dpool_pre
        grads["pool_b"] += dpool_pre.sum(0)
        dx[:, 0] += dpool_pre @ params["pool_w"].T

    for layer in reversed(range(config.layers)):
        p = f"layer{layer}."
        c = cache["layers"][layer]

        dsum, dg, db = _layer_norm_back(dx, c["ffn_ln"])
        grads[p + "ffn_ln_g"] += dg
        grads[p + "ffn_ln_b"] += db
        dffn_out = dsum if c["ffn_drop"] is None else dsum * c["ffn_drop"]
        flat_dffn = dffn_out.reshape(-1, config.hidden)
        flat_act = c["ffn_act"].reshape(-1, config.intermediate)
        grads[p + "ffn_w2"] += flat_act.T @ flat_dffn
        grads[p + "ffn_b2"] += flat_dffn.sum(0)
        dact = dffn_out @ params[p + "ffn_w2"].T
        dffn_pre = _gelu_back(dact, c["ffn_pre"])
        flat_dpre = dffn_pre.reshape(-1, config.intermediate)
        flat_x_attn = c["x_attn"].reshape(-1, config.hidden)
        grads[p + "ffn_w1"] += flat_x_attn.T @ flat_dpre
        grads[p + "ffn_b1"] += flat_dpre.sum(0)
        dx_attn = dsum + dffn_pre @ params[p + "ffn_w1"].T

        dsum, dg, db = _layer_norm_back(dx_attn, c["attn_ln"])
        grads[p + "attn_ln_g"] += dg
        grads[p + "attn_ln_b"] += db
        dattn_out = dsum if c["attn_drop"] is None else dsum * c["attn_drop"]
        flat_dattn = dattn_out.reshape(-1, config.hidden)
        flat_ctx = c["ctx"].reshape(-1, config.hidden)
        grads[p + "o_w"] += flat_ctx.T @ flat_dattn
        grads[p + "o_b"] += flat_dattn.sum(0)
        dctx = (dattn_out @ params[p + "o_w"].T).reshape(bsz, length, nh, dh)
        dctx = dctx.transpose(0, 2, 1, 3)

        dprobs_used = dctx @ c["vh"].transpose(0, 1, 3, 2)
        dvh = c["probs_used"].transpose(0, 1, 3, 2) @ dctx
        dprobs = (
            dprobs_used if c["probs_drop"] is None else dprobs_used * c["probs_drop"]
        )
        dscores = c["probs"] * (dprobs - (dprobs * c["probs"]).sum(-1, keepdims=True))
        dscores /= np.sqrt(dh)
        dqh = dscores @ c["kh"]
        dkh = dscores.transpose(0, 1, 3, 2) @ c["qh"]

        def merge(heads_grad):
            return heads_grad.transpose(0, 2, 1, 3).reshape(bsz, length, config.hidden)

        dq, dk, dv = merge(dqh), merge(dkh), merge(dvh)
        flat_x_in = c["x_in"].reshape(-1, config.hidden)
        for name, dmat in (("q", dq), ("k", dk), ("v", dv)):
            flat = dmat.reshape(-1, config.hidden)
            grads[p + f"{name}_w"] += flat_x_in.T @ flat
            grads[p + f"{name}_b"] += flat.sum(0)
        dx = (
            dsum
            + dq @ params[p + "q_w"].T
            + dk @ params[p + "k_w"].T
            + dv @ params[p + "v_w"].T
        )

    # embedding backward
    if cache["emb_drop"] is not None:
        dx = dx * cache["emb_drop"]
    demb, dg, db = _layer_norm_back(dx, cache["emb_ln"])
    grads["emb_ln_g"] += dg
    grads["emb_ln_b"] += db
    np.add.at(grads["tok_emb"], ids, demb)
    grads["pos_emb"][:length] += demb.sum(0)
    np.add.at(grads["seg_emb"], segs, demb)


def finite_difference_check(
    params,
    config: ModelConfig,
    batch,
    coordinates: list[tuple[str, int]],
    h: float = 1e-4,
) -> float:
    """Max relative error between analytic gradients and central differences.

    ``coordinates`` are (parameter name, flat index) pairs. Uses the total
    loss; a non-finite loss aborts before any differencing.
    """
    losses, grads = gradients(params, config, batch)
    if not np.isfinite(losses["total"]):
        raise DataError("non-finite loss; cannot run finite differences")

    worst = 0.0
    for name, flat_index in coordinates:
        perturbed = {k: v.copy() for k, v in params.items()}
        flat = perturbed[name].reshape(-1)
        original = flat[flat_index]

        flat[flat_index] = original + h
        up = compute_losses(forward(perturbed, config, batch), batch)["total"]
        flat[flat_index] = original - h
        down = compute_losses(forward(perturbed, config, batch), batch)["total"]
        flat[flat_index] = original

        numeric = (up - down) / (2.0 * h)
        analytic = grads[name].reshape(-1)[flat_index]
        scale = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / scale)
    return worst
