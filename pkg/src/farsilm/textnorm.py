"""Persian text normalization in two steps: junk removal, then character
standardization.

Step one strips markup, URLs, emails, control characters, emoji and
zero-width junk. Step two folds Arabic presentation variants onto
canonical Persian letters, unifies digit families, strips diacritics,
tidies ZWNJ and collapses whitespace. ZWNJ (U+200C) is deliberately kept
inside words; deleting it would merge distinct Persian words.

The rule inventory lives in a :class:`NormalizationRules` value so it can
be dumped, audited and overridden from a rules file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .lineio import read_records, write_records

ZWNJ = "‌"

JUNK_KINDS = ("control-char", "zero-width-junk", "emoji", "html-tag", "url", "email")

# Ordered so later, coarser patterns see text already freed of characters
# that would split their matches (a zero-width char inside a URL, say).
_DEFAULT_JUNK: tuple[tuple[str, str, str], ...] = (
    # Control characters become a space, never the empty string: "a\tb"
    # must not collapse into a single word.
    ("control-char", r"[\x00-\x09\x0b-\x1f\x7f-\x9f]", " "),
    ("zero-width-junk", "[​‍‎‏⁠-⁤­؜᠎﻿]", ""),
    ("emoji", "[☀-➿⬀-⯿︀-️\U0001f000-\U0001faff]", ""),
    ("html-tag", r"<!--.*?-->|</?[A-Za-z][^<>]*>", ""),
    ("url", r"(?:https?://|www\.)\S+", ""),
    ("email", r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}", ""),
)

# Arabic presentation variants folded onto the Persian letters they render as.
_VARIANT_FOLDS = {
    "ي": "ی",  # ي -> ی
    "ى": "ی",  # ى -> ی
    "ك": "ک",  # ك -> ک
    "ة": "ه",  # ة -> ه
    "أ": "ا",  # أ -> ا
    "إ": "ا",  # إ -> ا
    "ٱ": "ا",  # ٱ -> ا
    "ـ": "",  # tatweel carries no meaning
}

_PERSIAN_DIGITS = "۰۱۲۳۴۵۶۷۸۹"
_ARABIC_INDIC_DIGITS = "٠١٢٣٤٥٦٧٨٩"
_ASCII_DIGITS = "0123456789"

# Arabic diacritics: fathatan through sukun.
_DEFAULT_STRIP_MARKS = frozenset(range(0x064B, 0x0652 + 1))


def _default_char_map() -> dict[int, str]:
    table = {ord(src): dst for src, dst in _VARIANT_FOLDS.items()}
    for other in (_ARABIC_INDIC_DIGITS, _ASCII_DIGITS):
        for src, dst in zip(other, _PERSIAN_DIGITS):
            table[ord(src)] = dst
    return table


@dataclass(frozen=True)
class NormalizationRules:
    """The complete, ordered rule inventory for one normalization profile."""

    junk_patterns: tuple[tuple[str, str, str], ...]
    char_map: dict[int, str]
    strip_marks: frozenset[int]
    whitespace_policy: frozenset[str] = frozenset({"collapse-runs", "trim"})

    def __post_init__(self):
        for kind, pattern, _ in self.junk_patterns:
            if kind not in JUNK_KINDS:
                raise DataError(f"unknown junk rule kind {kind!r}")
            try:
                re.compile(pattern)
            except re.error as exc:
                raise DataError(f"junk rule {kind!r} has a bad pattern: {exc}") from exc
        for src, dst in self.char_map.items():
            for ch in dst:
                if ord(ch) in self.char_map:
                    raise DataError(
                        f"char_map is not closed: U+{src:04X} maps into mapped "
                        f"codepoint U+{ord(ch):04X}"
                    )


DEFAULT_RULES = NormalizationRules(
    junk_patterns=_DEFAULT_JUNK,
    char_map=_default_char_map(),
    strip_marks=_DEFAULT_STRIP_MARKS,
)


def clean_junk(text: str, rules: NormalizationRules = DEFAULT_RULES) -> str:
    """Remove trivial and junk content: markup, URLs, emails, control
    characters, emoji and zero-width characters other than ZWNJ."""
    for _, pattern, replacement in rules.junk_patterns:
        text = re.sub(pattern, replacement, text)
    return text


def standardize_chars(text: str, rules: NormalizationRules = DEFAULT_RULES) -> str:
    """Fold character variants, strip diacritics and tidy spacing.

    ZWNJ runs collapse to one ZWNJ, and a ZWNJ touching whitespace or a
    string edge is dropped since it no longer joins anything.
    """
    text = text.translate(rules.char_map)
    if rules.strip_marks:
        text = "".join(ch for ch in text if ord(ch) not in rules.strip_marks)
    text = re.sub(f"{ZWNJ}+", ZWNJ, text)
    text = re.sub(f"(?:(?<=\\s)|^){ZWNJ}", "", text)
    text = re.sub(f"{ZWNJ}(?=\\s|$)", "", text)
    if "collapse-runs" in rules.whitespace_policy:
        text = re.sub(r"\s+", " ", text)
    if "trim" in rules.whitespace_policy:
        text = text.strip()
    return text


_MAX_PASSES = 16


def normalize(text: str, rules: NormalizationRules = DEFAULT_RULES) -> str:
    """Run both steps until the text stops changing.

    One pass is `standardize_chars(clean_junk(text))`. Stripping marks or
    zero-width junk can expose new junk (a URL with a diacritic wedged in
    survives pass one), so passes repeat to a fixed point; clean input
    converges on the first pass.
    """
    prev = text
    for _ in range(_MAX_PASSES):
        cur = standardize_chars(clean_junk(prev, rules), rules)
        if cur == prev:
            return cur
        prev = cur
    return prev


def rules_records(rules: NormalizationRules = DEFAULT_RULES) -> list[dict]:
    """Flatten a rule inventory into dumpable line records, one per rule."""
    records: list[dict] = [
        {"kind": kind, "pattern": pattern, "replacement": replacement}
        for kind, pattern, replacement in rules.junk_patterns
    ]
    for src in sorted(rules.char_map):
        records.append({"kind": "char-map", "pattern": chr(src), "replacement": rules.char_map[src]})
    for mark in sorted(rules.strip_marks):
        records.append({"kind": "strip-mark", "pattern": chr(mark), "replacement": ""})
    records.append(
        {
            "kind": "whitespace-policy",
            "pattern": ",".join(sorted(rules.whitespace_policy)),
            "replacement": "",
        }
    )
    return records


def dump_rules(path: str | Path, rules: NormalizationRules = DEFAULT_RULES) -> int:
    """Write the rule inventory to a rules file; returns the record count."""
    return write_records(path, rules_records(rules))


def load_rules(path: str | Path) -> NormalizationRules:
    """Read a rules file written by :func:`dump_rules` (or edited by hand)."""
    junk: list[tuple[str, str, str]] = []
    char_map: dict[int, str] = {}
    strip_marks: set[int] = set()
    whitespace_policy: set[str] = set()
    for lineno, record in read_records(path):
        try:
            kind = record["kind"]
            pattern = record["pattern"]
            replacement = record.get("replacement", "")
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: rule on line {lineno} lacks a required field") from exc
        if kind in JUNK_KINDS:
            junk.append((kind, pattern, replacement))
        elif kind == "char-map":
            if len(pattern) != 1:
                raise DataError(
                    f"{path}: char-map rule on line {lineno} must name a single codepoint"
                )
            char_map[ord(pattern)] = replacement
        elif kind == "strip-mark":
            if len(pattern) != 1:
                raise DataError(
                    f"{path}: strip-mark rule on line {lineno} must name a single codepoint"
                )
            strip_marks.add(ord(pattern))
        elif kind == "whitespace-policy":
            whitespace_policy.update(p for p in pattern.split(",") if p)
        else:
            raise DataError(f"{path}: unknown rule kind {kind!r} on line {lineno}")
    if not whitespace_policy:
        whitespace_policy = {"collapse-runs", "trim"}
    return NormalizationRules(
        junk_patterns=tuple(junk),
        char_map=char_map,
        strip_marks=frozenset(strip_marks),
        whitespace_policy=frozenset(whitespace_policy),
    )
