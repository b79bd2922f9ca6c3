"""Dependency parses arrive as CoNLL-U, one block per parsed text.

Blocks are keyed by comment lines:

    # qa_id = <question id>
    # side = question | sentence
    # sent_span = <start>:<end>        (sentence side, range in the context)

Only ID, FORM, HEAD, DEPREL and the MISC ``start_char``/``end_char`` keys
are read; the other columns may be ``_``. Multiword-token and empty-node
lines are ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

SIDE_QUESTION = "question"
SIDE_SENTENCE = "sentence"


class ParseFormatError(Exception):
    pass


class ParseToken(NamedTuple):
    form: str
    start: int
    end: int
    head: int  # 1-based index of the head token; 0 = root
    deprel: str


@dataclass(frozen=True)
class DepParse:
    tokens: tuple[ParseToken, ...]
    sentence_span: tuple[int, int] | None = None

    def __post_init__(self):
        roots = [t for t in self.tokens if t.head == 0]
        if len(roots) != 1:
            raise ParseFormatError(f"parse must have exactly one root, found {len(roots)}")
        previous_end = None
        for token in self.tokens:
            if token.start >= token.end:
                raise ParseFormatError(f"empty span on token {token.form!r}")
            if previous_end is not None and token.start < previous_end:
                raise ParseFormatError(f"token spans overlap at {token.form!r}")
            previous_end = token.end
            if not 0 <= token.head <= len(self.tokens):
                raise ParseFormatError(f"head {token.head} out of range on {token.form!r}")

    def root_index(self) -> int:
        return next(i for i, t in enumerate(self.tokens) if t.head == 0)


def _misc_offsets(misc: str, line_no: int) -> tuple[int, int]:
    fields = dict(
        part.split("=", 1) for part in misc.split("|") if "=" in part
    )
    try:
        return int(fields["start_char"]), int(fields["end_char"])
    except (KeyError, ValueError):
        raise ParseFormatError(f"line {line_no}: MISC must carry start_char and end_char")


def parse_conllu(text: str) -> dict[str, dict[str, DepParse]]:
    """All parses of a file, as qa_id -> side -> DepParse."""
    parses: dict[str, dict[str, DepParse]] = {}
    qa_id: str | None = None
    side: str | None = None
    span: tuple[int, int] | None = None
    tokens: list[ParseToken] = []

    def flush(line_no: int) -> None:
        nonlocal qa_id, side, span, tokens
        if not tokens and qa_id is None:
            return
        if qa_id is None or side is None:
            raise ParseFormatError(f"line {line_no}: block lacks qa_id or side comment")
        if side not in (SIDE_QUESTION, SIDE_SENTENCE):
            raise ParseFormatError(f"line {line_no}: unknown side {side!r}")
        if side in parses.setdefault(qa_id, {}):
            raise ParseFormatError(f"line {line_no}: duplicate parse for {qa_id!r}/{side}")
        parses[qa_id][side] = DepParse(tuple(tokens), sentence_span=span)
        qa_id = side = span = None
        tokens = []

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            flush(line_no)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, _, value = body.partition("=")
            key, value = key.strip(), value.strip()
            if key == "qa_id":
                qa_id = value
            elif key == "side":
                side = value
            elif key == "sent_span":
                try:
                    lo, _, hi = value.partition(":")
                    span = (int(lo), int(hi))
                except ValueError:
                    raise ParseFormatError(f"line {line_no}: bad sent_span {value!r}")
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ParseFormatError(f"line {line_no}: expected 10 columns, got {len(columns)}")
        token_id, form, head, deprel, misc = columns[0], columns[1], columns[6], columns[7], columns[9]
        if "-" in token_id or "." in token_id:
            continue
        try:
            int(token_id)
            head_index = int(head)
        except ValueError:
            raise ParseFormatError(f"line {line_no}: non-integer ID or HEAD")
        start, end = _misc_offsets(misc, line_no)
        tokens.append(ParseToken(form, start, end, head_index, deprel))
    flush(len(text.splitlines()) + 1)
    return parses


def load_parse_file(path: str | os.PathLike) -> dict[str, dict[str, DepParse]]:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle.read())
