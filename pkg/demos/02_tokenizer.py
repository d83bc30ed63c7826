"""WordPiece training on a synthetic corpus, then an encode/decode round trip.

Run from the repository root:  python3 demos/02_tokenizer.py
"""

from farsilm.synthetic import generate_mlm_corpus
from farsilm.wordpiece import (
    TokenizerTrainConfig,
    decode,
    encode,
    encode_to_pieces,
    pretokenize,
    train_wordpiece,
)

# A small seeded corpus; every run of this script sees the same documents.
docs = generate_mlm_corpus(seed=3, n_docs=150)
sentences = [s for d in docs for s in d.sentences]
print(f"training on {len(sentences)} sentences")

config = TokenizerTrainConfig(vocab_size=600, min_frequency=3, alphabet_limit=1500)
model = train_wordpiece(sentences, config)
print(f"vocabulary: {len(model.vocab)} tokens (cap {config.vocab_size})")

# Specials sit at the front; the merged full words follow the alphabet.
print("first tokens:", model.vocab[:10])
merged = [t for t in model.vocab if len(t) > 3 and not t.startswith("##") and not t.startswith("[")]
print("some merged words:", merged[:8])

# Greedy longest-match segmentation: a known word stays whole, an unseen
# compound falls apart into pieces joined by the ## continuation prefix.
sample = sentences[0]
print("\nsample:", sample)
print("pieces:", encode_to_pieces(model, sample))

# Decoding glues ## pieces back together and space-joins the words, so the
# round trip recovers the pre-tokenized form: trailing punctuation becomes
# its own space-separated word.
ids = encode(model, sample)
back = decode(model, ids)
print("round trip:", back)
print("matches pretokenized form:", back == " ".join(pretokenize(sample)))
