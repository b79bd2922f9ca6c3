"""Lexical variation and syntactic divergence between a question and the
sentence that answers it.

Lexical variation compares content-token sets. Syntactic divergence is the
edit distance between two dependency-relation paths: wh-word to anchor in
the question parse, anchor to answer head in the sentence parse. The anchor
is a content token shared by both texts.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..words import tokenize
from .conllu import DepParse

WH_WORDS = frozenset(
    {
        "qui", "que", "quoi", "quel", "quelle", "quels", "quelles",
        "où", "quand", "comment", "pourquoi", "combien", "qu'",
    }
)

UP = "↑"
DOWN = "↓"


class MetricSkipped(Exception):
    """The metric is undefined for this sample; carries the reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    data = resources.files("annoforge.metrics").joinpath("data/stopwords_fr.txt")
    return load_stopwords(data.read_text(encoding="utf-8"))


def load_stopwords(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.replace("’", "'").lower())
    return frozenset(words)


def content_tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    """Lowercased tokens minus stopwords, document order, duplicates kept."""
    out = []
    for word in tokenize(text):
        form = word.text.lower().replace("’", "'")
        if form not in stopwords:
            out.append(form)
    return out


def lexical_variation(question: str, sentence: str, stopwords: frozenset[str]) -> float:
    """1 - |C(q) ∩ C(s)| / |C(q)|, on content-token sets; 0 if C(q) is empty."""
    q_tokens = set(content_tokens(question, stopwords))
    if not q_tokens:
        return 0.0
    s_tokens = set(content_tokens(sentence, stopwords))
    return 1 - len(q_tokens & s_tokens) / len(q_tokens)


def edit_distance(a: list[str], b: list[str]) -> int:
    """Unit-cost Levenshtein distance between two label sequences."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, label_a in enumerate(a, start=1):
        current = [i]
        for j, label_b in enumerate(b, start=1):
            cost = 0 if label_a == label_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def _ancestor_chain(parse: DepParse, index: int) -> list[int]:
    """Token indices from ``index`` up to and including the root (0-based)."""
    chain = [index]
    seen = {index}
    while parse.tokens[chain[-1]].head != 0:
        nxt = parse.tokens[chain[-1]].head - 1
        if nxt in seen:  # defensive; cycles are rejected at parse time only per-root
            raise MetricSkipped("parse_cycle")
        seen.add(nxt)
        chain.append(nxt)
    return chain


def dependency_path(parse: DepParse, start: int, goal: int) -> list[str]:
    """Relation labels from token ``start`` to token ``goal`` (0-based
    indices), each marked with its direction: label↑ while climbing to the
    common ancestor, label↓ while descending. The label of an up step is the
    relation of the token being left; of a down step, the token entered."""
    if start == goal:
        return []
    up_chain = _ancestor_chain(parse, start)
    goal_chain = _ancestor_chain(parse, goal)
    on_goal_path = {idx: depth for depth, idx in enumerate(goal_chain)}
    path = []
    lca = None
    for idx in up_chain:
        if idx in on_goal_path:
            lca = idx
            break
        path.append(parse.tokens[idx].deprel + UP)
    assert lca is not None  # both chains end at the root
    descend = goal_chain[: on_goal_path[lca]]
    for idx in reversed(descend):
        path.append(parse.tokens[idx].deprel + DOWN)
    return path


def find_form(parse: DepParse, form: str) -> int | None:
    """Index of the first token matching ``form`` case-insensitively."""
    wanted = form.lower().replace("’", "'")
    for i, token in enumerate(parse.tokens):
        if token.form.lower().replace("’", "'") == wanted:
            return i
    return None


def wh_index(parse: DepParse) -> int | None:
    for i, token in enumerate(parse.tokens):
        form = token.form.lower().replace("’", "'")
        if form in WH_WORDS:
            return i
    return None


def answer_head_index(parse: DepParse, answer_span: tuple[int, int]) -> int:
    """The token governing the answer: inside the span, head outside it."""
    lo, hi = answer_span
    inside = [i for i, t in enumerate(parse.tokens) if t.start < hi and t.end > lo]
    if not inside:
        raise MetricSkipped("answer_outside_parse")
    inside_set = set(inside)
    for i in inside:
        head = parse.tokens[i].head - 1
        if parse.tokens[i].head == 0 or head not in inside_set:
            return i
    return inside[0]  # span covers a cycle-free subtree; first token as fallback


def syntactic_divergence(
    q_parse: DepParse,
    s_parse: DepParse,
    anchor: str,
    answer_span: tuple[int, int],
) -> int:
    """Edit distance between the wh→anchor and anchor→answer-head paths."""
    wh = wh_index(q_parse)
    if wh is None:
        raise MetricSkipped("no_wh_word")
    q_anchor = find_form(q_parse, anchor)
    s_anchor = find_form(s_parse, anchor)
    if q_anchor is None or s_anchor is None:
        raise MetricSkipped("no_shared_anchor")
    head = answer_head_index(s_parse, answer_span)
    question_path = dependency_path(q_parse, wh, q_anchor)
    sentence_path = dependency_path(s_parse, s_anchor, head)
    return edit_distance(question_path, sentence_path)
