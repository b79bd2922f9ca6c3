"""Word tokenization shared between span validation, metrics and the web UI."""

import json
from pathlib import Path

from hypothesis import given
from hypothesis import strategies as st

from annoforge.words import is_word_aligned, tokenize, word_ends, word_starts

FIXTURES = Path(__file__).parent / "fixtures"


def spans(text):
    return [(w.start, w.end) for w in tokenize(text)]


def test_simple_sentence():
    assert [w.text for w in tokenize("Le chat dort.")] == ["Le", "chat", "dort"]


def test_elision_splits_into_two_words():
    words = tokenize("l'île")
    assert [(w.text, w.start, w.end) for w in words] == [("l'", 0, 2), ("île", 2, 5)]


def test_typographic_apostrophe_attaches_like_ascii():
    assert [w.text for w in tokenize("d’Artagnan")] == ["d’", "Artagnan"]


def test_digits_and_hyphen():
    assert spans("Un score d'1-1") == [(0, 2), (3, 8), (9, 11), (11, 12), (13, 14)]


def test_underscore_is_a_boundary():
    assert [w.text for w in tokenize("a_b")] == ["a", "b"]


def test_alignment_accepts_full_words():
    text = "Le général Leclerc meurt."
    start = text.index("général")
    assert is_word_aligned(text, start, len("général"))
    assert is_word_aligned(text, start, len("général Leclerc"))


def test_alignment_rejects_mid_word():
    text = "Le général Leclerc"
    start = text.index("général") + 1  # "énéral"
    assert not is_word_aligned(text, start, len("énéral"))
    assert not is_word_aligned(text, text.index("général"), len("génér"))


def test_alignment_rejects_empty_and_negative():
    assert not is_word_aligned("abc", 0, 0)
    assert not is_word_aligned("abc", -1, 2)


def test_elided_article_is_a_selectable_word():
    text = "l'île"
    assert is_word_aligned(text, 0, 2)  # l'
    assert is_word_aligned(text, 2, 3)  # île
    assert is_word_aligned(text, 0, 5)  # the whole phrase
    assert not is_word_aligned(text, 0, 1)  # bare l without its apostrophe


def test_conformance_fixture_matches():
    """The fixture is the contract with the browser-side tokenizer."""
    cases = json.loads((FIXTURES / "word_boundaries.json").read_text(encoding="utf-8"))
    assert len(cases) >= 10
    for case in cases:
        assert spans(case["text"]) == [tuple(span) for span in case["words"]], case["text"]


@given(st.text(max_size=80))
def test_tokens_are_increasing_and_substrings(text):
    last_end = -1
    for word in tokenize(text):
        assert word.start >= last_end
        assert text[word.start : word.end] == word.text
        last_end = word.end


@given(st.text(max_size=80))
def test_every_token_is_word_aligned(text):
    starts = word_starts(text)
    ends = word_ends(text)
    for word in tokenize(text):
        assert word.start in starts
        assert word.end in ends
        assert is_word_aligned(text, word.start, word.end - word.start)
