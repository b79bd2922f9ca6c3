"""Word tokenization shared by span validation, the annotation UI and the metrics.

A word is a maximal run of letters/digits, optionally followed by one
apostrophe. Apostrophes therefore end a word and belong to it, which keeps
French elision pairs separate: "l'île" tokenizes as "l'" + "île". Punctuation
(including hyphens) and whitespace are boundaries but may sit *inside* a span
whose endpoints are word-aligned ("Jean-Pierre" spans word "Jean" to word
"Pierre").

The exact same rule is duplicated in the browser client; the conformance
fixture ``tests/fixtures/word_boundaries.json`` pins both sides to it.
"""

from __future__ import annotations

import re
from typing import NamedTuple

_WORD_RE = re.compile(r"[^\W_]+['’]?")


class Word(NamedTuple):
    text: str
    start: int
    end: int  # exclusive


def tokenize(text: str) -> list[Word]:
    """Return the words of ``text`` with their character offsets."""
    return [Word(m.group(0), m.start(), m.end()) for m in _WORD_RE.finditer(text)]


def word_starts(text: str) -> set[int]:
    return {w.start for w in tokenize(text)}


def word_ends(text: str) -> set[int]:
    return {w.end for w in tokenize(text)}


def is_word_aligned(text: str, start: int, length: int) -> bool:
    """True iff [start, start+length) begins at a word start and ends at a word end."""
    if length <= 0:
        return False
    return start in word_starts(text) and (start + length) in word_ends(text)
