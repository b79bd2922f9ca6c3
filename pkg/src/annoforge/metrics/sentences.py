"""Locate the sentence an answer lives in.

A boundary is a run of ``.?!`` followed by whitespace and an uppercase
letter, unless the period closes a known French abbreviation.
"""

from __future__ import annotations

import re

# Abbreviations whose trailing period never ends a sentence.
ABBREVIATIONS = frozenset({"m", "mme", "etc", "cf", "av", "apr"})

_PUNCT_RUN = re.compile(r"[.?!]+")
_WORD_BEFORE = re.compile(r"[^\W\d_]+$")


def sentence_spans(context: str) -> list[tuple[int, int]]:
    """Char ranges of the sentences of ``context``, whitespace trimmed."""
    boundaries = [0]
    for match in _PUNCT_RUN.finditer(context):
        tail = context[match.end():]
        if not tail or not tail[0].isspace():
            continue
        stripped = tail.lstrip()
        if not stripped or not stripped[0].isupper():
            continue
        if match.group() == ".":
            word = _WORD_BEFORE.search(context, 0, match.start())
            if word and word.group().lower() in ABBREVIATIONS:
                continue
        boundaries.append(match.end())
    boundaries.append(len(context))

    spans = []
    for raw_start, raw_end in zip(boundaries, boundaries[1:]):
        segment = context[raw_start:raw_end]
        start = raw_start + (len(segment) - len(segment.lstrip()))
        end = raw_end - (len(segment) - len(segment.rstrip()))
        if start < end:
            spans.append((start, end))
    return spans


def answer_sentence(context: str, answer_start: int, answer_len: int) -> tuple[str, tuple[int, int]]:
    """The sentence containing ``answer_start``, as (text, char range)."""
    if answer_len <= 0:
        raise ValueError("answer length must be positive")
    if answer_start < 0 or answer_start + answer_len > len(context):
        raise ValueError(
            f"answer span [{answer_start}, {answer_start + answer_len}) outside context of length {len(context)}"
        )
    for start, end in sentence_spans(context):
        if start <= answer_start < end:
            return context[start:end], (start, end)
    # answer_start sits in leading/trailing whitespace of a span
    raise ValueError(f"answer start {answer_start} falls between sentences")
