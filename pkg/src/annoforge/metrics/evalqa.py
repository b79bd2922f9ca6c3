"""SQuAD-style exact-match / F1 scoring with French answer normalization."""

from __future__ import annotations

import logging
import re
import string
from collections import Counter
from dataclasses import dataclass, field

from ..squad import Dataset

logger = logging.getLogger(__name__)

# Articles removed as standalone tokens during normalization.
ARTICLES = frozenset({"le", "la", "les", "l'", "un", "une", "des", "du", "de", "d'"})

_PUNCT = string.punctuation + "«»…–—¿¡§·’"
_ELISION = re.compile(r"(?<=\w')")


def normalize_text_fr(text: str) -> str:
    """Lowercase, split elisions, strip edge punctuation, drop articles."""
    lowered = text.lower().replace("’", "'")
    tokens = []
    for raw in lowered.split():
        for piece in _ELISION.split(raw):
            # elided articles (l', d') must be caught before the apostrophe
            # is stripped; wrapped ones ("(le)", ".la") only after
            if piece in ARTICLES:
                continue
            piece = piece.strip(_PUNCT)
            if piece and piece not in ARTICLES:
                tokens.append(piece)
    return " ".join(tokens)


def _f1(gold_tokens: list[str], pred_tokens: list[str]) -> float:
    if not gold_tokens and not pred_tokens:
        return 1.0
    common = Counter(gold_tokens) & Counter(pred_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def question_scores(gold_answers: list[str], prediction: str) -> tuple[float, float]:
    """(exact_match, f1) in [0,1], each maximized over the gold answers."""
    pred = normalize_text_fr(prediction)
    pred_tokens = pred.split()
    best_em = 0.0
    best_f1 = 0.0
    for gold in gold_answers:
        normalized = normalize_text_fr(gold)
        best_em = max(best_em, 1.0 if normalized == pred else 0.0)
        best_f1 = max(best_f1, _f1(normalized.split(), pred_tokens))
    return best_em, best_f1


@dataclass
class EvalScores:
    exact_match: float  # 0..100
    f1: float  # 0..100
    total: int
    per_question: dict[str, dict] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)
    unknown: list[str] = field(default_factory=list)


def evaluate_predictions(gold: Dataset, predictions: dict[str, str]) -> EvalScores:
    """Average EM and F1 (0-100 scale) of ``predictions`` against ``gold``.

    Questions without a prediction score 0 and are listed in ``missing``;
    prediction ids absent from the dataset are warned about and ignored.
    """
    per_question: dict[str, dict] = {}
    missing: list[str] = []
    em_sum = 0.0
    f1_sum = 0.0
    total = 0
    for _article, _paragraph, qa in gold.iter_qas():
        total += 1
        if qa.id not in predictions:
            missing.append(qa.id)
            per_question[qa.id] = {"exact_match": 0.0, "f1": 0.0, "missing": True}
            continue
        em, f1 = question_scores([a.text for a in qa.answers], predictions[qa.id])
        em_sum += em
        f1_sum += f1
        per_question[qa.id] = {"exact_match": em, "f1": f1, "missing": False}
    unknown = sorted(set(predictions) - set(per_question))
    if unknown:
        logger.warning("ignoring %d predictions for unknown question ids", len(unknown))
    if total == 0:
        return EvalScores(0.0, 0.0, 0, per_question, missing, unknown)
    return EvalScores(
        exact_match=100.0 * em_sum / total,
        f1=100.0 * f1_sum / total,
        total=total,
        per_question=per_question,
        missing=missing,
        unknown=unknown,
    )
