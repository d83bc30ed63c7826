"""Fine-tune the pretrained encoder for classification and entity tagging.

Run from the repository root:  python3 demos/05_finetune_eval.py
Builds a small pretrained checkpoint first, so expect a couple of minutes.
"""

import tempfile
from pathlib import Path

from farsilm.synthetic import generate_classification, generate_mlm_corpus, generate_ner
from farsilm.wordpiece import TokenizerTrainConfig, train_wordpiece
from farsilm.pretrain_data import MaskingPolicy, PackingConfig, build_pretrain_examples, write_examples
from farsilm.model import ModelConfig
from farsilm.training import OptimizerConfig, load_checkpoint, pretrain
from farsilm.finetune import FinetuneConfig, finetune_sequence, finetune_tokens, predict
from farsilm.metrics import accuracy, entity_f1, f1_report, format_entity_score, format_eval_report

work = Path(tempfile.mkdtemp(prefix="farsilm-demo-"))

# A quick pretraining pass so the encoder has seen the language before the
# task heads go on. Fine-tuning tolerates a short run; the point here is the
# workflow, not the scores a longer budget would buy.
docs = generate_mlm_corpus(seed=3, n_docs=200)
tok = train_wordpiece(
    [s for d in docs for s in d.sentences],
    TokenizerTrainConfig(vocab_size=600, min_frequency=3, alphabet_limit=1500),
)
examples = build_pretrain_examples(
    [d.sentences for d in docs], tok, PackingConfig(max_len=64, rng_seed=0), MaskingPolicy()
)
write_examples(examples, work / "examples.ptex", vocab_size=len(tok.vocab))
mcfg = ModelConfig(layers=2, heads=2, hidden=64, intermediate=256,
                   vocab_size=len(tok.vocab), max_positions=64)
pretrain(
    str(work / "examples.ptex"), mcfg,
    OptimizerConfig(learning_rate=1e-3, batch_size=32, max_steps=300, warmup_steps=30),
    seed=7, checkpoint_path=str(work / "model.flcp"),
)
checkpoint = load_checkpoint(str(work / "model.flcp"))
print(f"pretrained checkpoint at step {checkpoint.step}")

# Sequence classification. The synthetic task plants one marker word per
# text, so a model that learns to read it can be scored against a known
# ceiling of 1.0.
train_cls = generate_classification(seed=5, count=160)
dev_cls = generate_classification(seed=6, count=48)
labels = sorted({item.label for item in train_cls})
outcome = finetune_sequence(
    checkpoint, tok, train_cls, dev_cls,
    FinetuneConfig(label_inventory=labels, epochs=3, learning_rate=5e-4, seed=0),
)
print("\nclassifier dev accuracy by epoch:",
      " ".join(f"{a:.3f}" for a in outcome.dev_trace))

gold = [item.label for item in dev_cls]
pred = predict(outcome.model, tok, [item.text for item in dev_cls])
print(f"final accuracy {accuracy(gold, pred):.3f}")
print(format_eval_report(f1_report(gold, pred, labels)))

# Token tagging with IOB entities. Scoring is strict span matching: a
# predicted entity counts only when type and both boundaries agree.
train_ner = generate_ner(seed=5, count=160)
dev_ner = generate_ner(seed=6, count=48)
tags = sorted({t for item in train_ner for t in item.tags})
outcome = finetune_tokens(
    checkpoint, tok, train_ner, dev_ner,
    FinetuneConfig(label_inventory=tags, epochs=5, learning_rate=5e-4, seed=0),
)
print("ner dev entity F1 by epoch:",
      " ".join(f"{a:.3f}" for a in outcome.dev_trace))

gold_tags = [list(item.tags) for item in dev_ner]
pred_tags = predict(outcome.model, tok, [list(item.tokens) for item in dev_ner])
print(format_entity_score(entity_f1(gold_tags, pred_tags)))
