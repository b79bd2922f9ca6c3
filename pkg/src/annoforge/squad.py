"""SQuAD v1.1 reading, validation, canonical writing and merging.

Offsets are Unicode code point indices into the context, and the core
invariant everywhere is ``context[answer_start : answer_start + len(text)]
== text``. Export is canonical: fixed key order, compact separators, UTF-8
with ensure_ascii disabled, no trailing newline. Re-exporting an imported
canonical file reproduces it byte for byte.

Two optional fields extend the interchange format without breaking SQuAD
consumers: a top-level ``meta`` object for provenance and a per-article
``category`` string. Both survive a round trip; absent means absent.
"""

from __future__ import annotations

import copy
import json
import logging
import random
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

SQUAD_VERSION = "1.1"
MAX_QUESTION_CHARS = 200


class DatasetFormatError(Exception):
    """The file cannot be interpreted as SQuAD v1.1 at all."""


class ExportRefusedError(Exception):
    """The in-memory dataset violates an invariant; carries the offending qa id if any."""

    def __init__(self, message: str, qa_id: str | None = None):
        super().__init__(message)
        self.qa_id = qa_id


@dataclass
class AnswerEntry:
    text: str
    answer_start: int


@dataclass
class QaEntry:
    id: str
    question: str
    answers: list[AnswerEntry] = field(default_factory=list)


@dataclass
class ParagraphEntry:
    context: str
    qas: list[QaEntry] = field(default_factory=list)


@dataclass
class ArticleEntry:
    title: str
    paragraphs: list[ParagraphEntry] = field(default_factory=list)
    category: str | None = None


@dataclass
class Dataset:
    articles: list[ArticleEntry] = field(default_factory=list)
    version: str = SQUAD_VERSION
    meta: dict | None = None

    def qa_count(self) -> int:
        return sum(len(p.qas) for a in self.articles for p in a.paragraphs)

    def paragraph_count(self) -> int:
        return sum(len(a.paragraphs) for a in self.articles)

    def iter_qas(self):
        """Yield (article, paragraph, qa) triples in document order."""
        for article in self.articles:
            for paragraph in article.paragraphs:
                for qa in paragraph.qas:
                    yield article, paragraph, qa


@dataclass(frozen=True)
class SampleIssue:
    qa_id: str
    code: str
    message: str


@dataclass
class ImportResult:
    dataset: Dataset
    issues: list[SampleIssue] = field(default_factory=list)


def validate_sample(context: str, qa: QaEntry) -> list[SampleIssue]:
    """Check one qa against its context; returns issues, empty when clean."""
    issues: list[SampleIssue] = []
    if len(qa.question) > MAX_QUESTION_CHARS:
        issues.append(
            SampleIssue(qa.id, "QUESTION_TOO_LONG", f"question is {len(qa.question)} chars, limit {MAX_QUESTION_CHARS}")
        )
    if not qa.answers:
        issues.append(SampleIssue(qa.id, "NO_ANSWERS", "qa has no answers"))
    for answer in qa.answers:
        if answer.text == "":
            issues.append(SampleIssue(qa.id, "EMPTY_ANSWER", "answer text is empty"))
            continue
        start = answer.answer_start
        end = start + len(answer.text)
        if start < 0 or end > len(context) or context[start:end] != answer.text:
            issues.append(
                SampleIssue(qa.id, "SPAN_MISMATCH", f"context[{start}:{end}] does not equal the answer text")
            )
    return issues


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise DatasetFormatError(f"{path}: {message}")


def import_squad(data: bytes | str) -> ImportResult:
    """Parse SQuAD v1.1 JSON. Structural problems raise DatasetFormatError;
    per-sample span/length problems are collected as issues and the sample is
    kept, so callers can decide what to do with it."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "$", "top level must be an object")
    _require("version" in doc, "$", "missing 'version'")
    _require("data" in doc, "$", "missing 'data'")
    _require(isinstance(doc["version"], str), "$.version", "must be a string")
    _require(isinstance(doc["data"], list), "$.data", "must be a list")
    meta = doc.get("meta")
    if meta is not None:
        _require(isinstance(meta, dict), "$.meta", "must be an object")

    issues: list[SampleIssue] = []
    articles: list[ArticleEntry] = []
    for ai, raw_article in enumerate(doc["data"]):
        apath = f"$.data[{ai}]"
        _require(isinstance(raw_article, dict), apath, "article must be an object")
        _require(isinstance(raw_article.get("title"), str), f"{apath}.title", "must be a string")
        _require(isinstance(raw_article.get("paragraphs"), list), f"{apath}.paragraphs", "must be a list")
        category = raw_article.get("category")
        if category is not None:
            _require(isinstance(category, str), f"{apath}.category", "must be a string")
        paragraphs: list[ParagraphEntry] = []
        for pi, raw_para in enumerate(raw_article["paragraphs"]):
            ppath = f"{apath}.paragraphs[{pi}]"
            _require(isinstance(raw_para, dict), ppath, "paragraph must be an object")
            _require(isinstance(raw_para.get("context"), str), f"{ppath}.context", "must be a string")
            _require(isinstance(raw_para.get("qas"), list), f"{ppath}.qas", "must be a list")
            qas: list[QaEntry] = []
            for qi, raw_qa in enumerate(raw_para["qas"]):
                qpath = f"{ppath}.qas[{qi}]"
                _require(isinstance(raw_qa, dict), qpath, "qa must be an object")
                _require(isinstance(raw_qa.get("id"), str), f"{qpath}.id", "must be a string")
                _require(isinstance(raw_qa.get("question"), str), f"{qpath}.question", "must be a string")
                _require(isinstance(raw_qa.get("answers"), list), f"{qpath}.answers", "must be a list")
                answers: list[AnswerEntry] = []
                for xi, raw_answer in enumerate(raw_qa["answers"]):
                    xpath = f"{qpath}.answers[{xi}]"
                    _require(isinstance(raw_answer, dict), xpath, "answer must be an object")
                    _require(isinstance(raw_answer.get("text"), str), f"{xpath}.text", "must be a string")
                    _require(
                        isinstance(raw_answer.get("answer_start"), int)
                        and not isinstance(raw_answer["answer_start"], bool),
                        f"{xpath}.answer_start",
                        "must be an integer",
                    )
                    answers.append(AnswerEntry(raw_answer["text"], raw_answer["answer_start"]))
                qa = QaEntry(raw_qa["id"], raw_qa["question"], answers)
                issues.extend(validate_sample(raw_para["context"], qa))
                qas.append(qa)
            paragraphs.append(ParagraphEntry(raw_para["context"], qas))
        articles.append(ArticleEntry(raw_article["title"], paragraphs, category))
    dataset = Dataset(articles=articles, version=doc["version"], meta=meta)
    return ImportResult(dataset, issues)


def _check_exportable(dataset: Dataset) -> None:
    seen_ids: set[str] = set()
    seen_titles: set[str] = set()
    for article in dataset.articles:
        if article.title in seen_titles:
            raise ExportRefusedError(f"duplicate article title {article.title!r}")
        seen_titles.add(article.title)
        if not article.paragraphs:
            raise ExportRefusedError(f"article {article.title!r} has no paragraphs")
        for paragraph in article.paragraphs:
            if paragraph.context == "":
                raise ExportRefusedError(f"article {article.title!r} has an empty context")
            for qa in paragraph.qas:
                if qa.id in seen_ids:
                    raise ExportRefusedError(f"duplicate qa id {qa.id!r}", qa.id)
                seen_ids.add(qa.id)
                problems = validate_sample(paragraph.context, qa)
                if problems:
                    raise ExportRefusedError(f"qa {qa.id!r}: {problems[0].message}", qa.id)


def export_squad(dataset: Dataset) -> bytes:
    """Serialize to canonical bytes, refusing datasets that break invariants."""
    _check_exportable(dataset)
    doc: dict = {"version": dataset.version}
    if dataset.meta is not None:
        doc["meta"] = {k: dataset.meta[k] for k in sorted(dataset.meta)}
    doc["data"] = []
    for article in dataset.articles:
        raw_article: dict = {"title": article.title}
        if article.category is not None:
            raw_article["category"] = article.category
        raw_article["paragraphs"] = [
            {
                "context": paragraph.context,
                "qas": [
                    {
                        "id": qa.id,
                        "question": qa.question,
                        "answers": [
                            {"text": answer.text, "answer_start": answer.answer_start}
                            for answer in qa.answers
                        ],
                    }
                    for qa in paragraph.qas
                ],
            }
            for paragraph in article.paragraphs
        ]
        doc["data"].append(raw_article)
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def merge_datasets(parts: list[Dataset], shuffle_seed: int | None = None) -> Dataset:
    """Concatenate datasets into one.

    Qa ids get a ``d<i>-`` prefix keyed by source position so they stay unique.
    A title collision across parts gets the same suffix on the later article,
    with a warning. With a seed, article order is shuffled reproducibly.
    """
    merged: list[ArticleEntry] = []
    seen_titles: set[str] = set()
    for i, part in enumerate(parts):
        for article in part.articles:
            clone = copy.deepcopy(article)
            if clone.title in seen_titles:
                new_title = f"{clone.title} (d{i})"
                logger.warning("duplicate title %r renamed to %r", clone.title, new_title)
                clone.title = new_title
            seen_titles.add(clone.title)
            for paragraph in clone.paragraphs:
                for qa in paragraph.qas:
                    qa.id = f"d{i}-{qa.id}"
            merged.append(clone)
    result = Dataset(articles=merged)
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(result.articles)
    return result
