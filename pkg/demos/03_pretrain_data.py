"""Sentence-pair packing and the 15% / 80-10-10 masking procedure, measured.

Run from the repository root:  python3 demos/03_pretrain_data.py
"""

import numpy as np

from farsilm.synthetic import generate_mlm_corpus
from farsilm.wordpiece import TokenizerTrainConfig, train_wordpiece, MASK
from farsilm.pretrain_data import (
    IGNORE_INDEX,
    MaskingPolicy,
    PackingConfig,
    build_pretrain_examples,
)

docs = generate_mlm_corpus(seed=3, n_docs=200)
model = train_wordpiece(
    [s for d in docs for s in d.sentences],
    TokenizerTrainConfig(vocab_size=600, min_frequency=3, alphabet_limit=1500),
)

packing = PackingConfig(max_len=64, rng_seed=0)
examples = build_pretrain_examples([d.sentences for d in docs], model, packing, MaskingPolicy())
print(f"{len(examples)} examples from {len(docs)} documents")

# One example, dissected: [CLS] A [SEP] B [SEP] packing, segment ids, and the
# positions whose original token became a prediction target.
ex = examples[0]
real = sum(ex.attention_mask)
targets = [i for i, t in enumerate(ex.mlm_labels) if t != IGNORE_INDEX]
print(f"\nfirst example: {real} real tokens, nsp label {ex.nsp_label}, targets at {targets}")

# Measure the masking split across the whole file. Selected positions carry
# their original id as the label; of those, about 80% should now hold [MASK],
# 10% a random token, and 10% the untouched original.
mask_id = model.token_to_id[MASK]
masked = random = kept = 0
for ex in examples:
    for pos, label in enumerate(ex.mlm_labels):
        if label == IGNORE_INDEX:
            continue
        got = ex.input_ids[pos]
        if got == mask_id:
            masked += 1
        elif got == label:
            kept += 1
        else:
            random += 1
total = masked + random + kept
print(f"\nselected positions: {total}")
print(f"  replaced by [MASK]: {masked / total:.4f} (want 0.80)")
print(f"  random token:       {random / total:.4f} (want 0.10)")
print(f"  kept original:      {kept / total:.4f} (want 0.10)")

# NSP label balance comes from a fair coin over adjacent pairs.
labels = np.array([ex.nsp_label for ex in examples])
print(f"\nis-next fraction: {labels.mean():.4f} (want about 0.5)")
