"""Normalization and True-Sentence segmentation on a messy snippet.

Run from the repository root:  python3 demos/01_normalize_segment.py
"""

from farsilm.textnorm import clean_junk, normalize, standardize_chars
from farsilm.segmenter import SegmenterConfig, segment_by_notation, segment_true

# A deliberately dirty paragraph: an HTML tag, a URL, Arabic yeh/kaf variants,
# Arabic-Indic digits, a diacritic, and a dotted abbreviation before a decimal.
raw = (
    "<b>سلام</b>  دنيا! ركورد جديد در سال ٣٤ ثبت شد. "
    "نگاه کنید به https://example.com حالا. "
    "در ق.م. نرخ ۳.۵ درصد بود و همه چيز آرامٌ ماند."
)

print("raw:")
print(" ", raw)

# Step one strips junk spans (tags, URLs, controls); step two folds character
# variants and digits into the canonical Persian forms.
cleaned = clean_junk(raw)
standard = standardize_chars(cleaned)
print("\nafter clean_junk:")
print(" ", cleaned)
print("after standardize_chars:")
print(" ", standard)

# normalize composes both to a fixed point, so running it again changes nothing.
once = normalize(raw)
twice = normalize(once)
print("\nnormalize is idempotent:", once == twice)

# Naive splitting treats every dot as a boundary, so the abbreviation "ق.م."
# and the decimal "۳.۵" each shatter their sentence. True-Sentence repair
# glues those false splits back together.
config = SegmenterConfig()
print("\nsegment_by_notation:")
for s in segment_by_notation(once, config):
    print("  |", s.text)
print("segment_true:")
for s in segment_true(once, config):
    print("  |", s.text)
