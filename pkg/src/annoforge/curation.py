"""Turning ranked raw articles into an annotation-ready paragraph corpus.

The defaults encode the editorial rules used to build the collection corpus:
navigation-style sections are cut, stub and disambiguation pages rejected,
event-list pages rejected, paragraphs kept only within a character window,
and articles kept only when enough paragraphs survive and a manual category
is known for them.
"""

from __future__ import annotations

import csv
import hashlib
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .ingest import RawArticle
from .squad import ArticleEntry, Dataset, ParagraphEntry
from .wikitext import SectionNode, split_sections, strip_markup


class Category(str, Enum):
    ARTS = "Arts"
    GEOGRAPHY = "Geography"
    HISTORY = "History"
    RELIGION = "Religion"
    SCIENCES = "Sciences"
    SOCIETY_MISC = "SocietyMisc"
    SPORT = "Sport"


class DropReason(str, Enum):
    MISSING_ARTICLE = "missing_article"
    EVENTS_SECTION = "events_section"
    DRAFT = "draft"
    DISAMBIGUATION = "disambiguation"
    REJECTED_CATEGORY = "rejected_category"
    TOO_FEW_PARAGRAPHS = "too_few_paragraphs"
    UNMAPPED_CATEGORY = "unmapped_category"


# "Articles connexe" covers the singular heading found in real pages.
DEFAULT_DISCARD_SECTIONS = frozenset(
    {"Voir aussi", "Articles connexes", "Articles connexe", "Liens externes", "Notes et références"}
)
DEFAULT_REJECT_SECTIONS = frozenset({"Événements"})
DEFAULT_REJECT_CATEGORY_PREFIXES = frozenset({"Wikipédia:ébauche", "Homonymie"})


@dataclass(frozen=True)
class CurationRules:
    discard_sections: frozenset[str] = DEFAULT_DISCARD_SECTIONS
    reject_sections: frozenset[str] = DEFAULT_REJECT_SECTIONS
    reject_category_prefixes: frozenset[str] = DEFAULT_REJECT_CATEGORY_PREFIXES
    min_paragraph_chars: int = 500
    max_paragraph_chars: int = 1000
    min_paragraphs: int = 5

    def __post_init__(self):
        if self.min_paragraph_chars < 1:
            raise ValueError("min_paragraph_chars must be positive")
        if self.max_paragraph_chars < self.min_paragraph_chars:
            raise ValueError("max_paragraph_chars must be >= min_paragraph_chars")
        if self.min_paragraphs < 1:
            raise ValueError("min_paragraphs must be positive")


def _norm(title: str) -> str:
    return " ".join(title.split()).casefold()


@dataclass(frozen=True)
class Eligibility:
    eligible: bool
    reason: DropReason | None = None
    detail: str = ""


def article_eligible(article: RawArticle, rules: CurationRules, sections: SectionNode | None = None) -> Eligibility:
    """Page-level accept/reject. Section titles and categories are matched
    case-insensitively; categories match on prefix."""
    if sections is None:
        sections = split_sections(article.wikitext)
    reject_titles = {_norm(t) for t in rules.reject_sections}
    for node in sections.walk():
        if _norm(node.heading) in reject_titles:
            return Eligibility(False, DropReason.EVENTS_SECTION, node.heading)
    for category in sorted(article.categories):
        got = _norm(category)
        for prefix in rules.reject_category_prefixes:
            if got.startswith(_norm(prefix)):
                if "ébauche" in got:
                    reason = DropReason.DRAFT
                elif "homonymie" in got:
                    reason = DropReason.DISAMBIGUATION
                else:
                    reason = DropReason.REJECTED_CATEGORY
                return Eligibility(False, reason, category)
    return Eligibility(True)


def filter_sections(root: SectionNode, rules: CurationRules) -> SectionNode:
    """Copy of the tree with discarded subtrees removed; the input is untouched."""
    discard = {_norm(t) for t in rules.discard_sections}

    def keep(node: SectionNode) -> SectionNode:
        return SectionNode(
            heading=node.heading,
            level=node.level,
            body=node.body,
            children=[keep(c) for c in node.children if _norm(c.heading) not in discard],
        )

    return keep(root)


@dataclass(frozen=True)
class Paragraph:
    id: str
    article_title: str
    index: int
    text: str


def paragraph_id(article_title: str, index: int, text: str) -> str:
    digest = hashlib.sha256(f"{article_title}\x00{index}\x00{text}".encode("utf-8")).hexdigest()
    return digest[:16]


_BLANK_LINE_RE = re.compile(r"\n[ \t]*\n")
_WS_RE = re.compile(r"\s+")


def segment_paragraphs(sections: SectionNode, rules: CurationRules, article_title: str) -> list[Paragraph]:
    """Split section bodies on blank lines, clean markup, keep blocks whose
    plain-text length is within the configured window. Indices number the
    kept paragraphs 0..n-1 in document order."""
    paragraphs: list[Paragraph] = []
    for node in sections.walk():
        plain = strip_markup(node.body)
        for block in _BLANK_LINE_RE.split(plain):
            text = _WS_RE.sub(" ", block).strip()
            if rules.min_paragraph_chars <= len(text) <= rules.max_paragraph_chars:
                index = len(paragraphs)
                paragraphs.append(Paragraph(paragraph_id(article_title, index, text), article_title, index, text))
    return paragraphs


def load_category_mapping(path) -> dict[str, Category]:
    """Read a two-column csv ``title,category`` with a header row."""
    mapping: dict[str, Category] = {}
    by_value = {c.value.casefold(): c for c in Category}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["title", "category"]:
            raise ValueError("mapping file must start with a 'title,category' header")
        for row_number, row in enumerate(reader, start=2):
            title = (row["title"] or "").strip()
            label = (row["category"] or "").strip()
            if not title:
                raise ValueError(f"line {row_number}: empty title")
            category = by_value.get(label.casefold())
            if category is None:
                valid = ", ".join(c.value for c in Category)
                raise ValueError(f"line {row_number}: unknown category {label!r} (valid: {valid})")
            mapping[title] = category
    return mapping


def assign_category(title: str, mapping: Mapping[str, Category]) -> Category | None:
    return mapping.get(title)


@dataclass(frozen=True)
class CuratedArticle:
    title: str
    category: Category
    paragraphs: tuple[Paragraph, ...]


@dataclass
class CurationReport:
    input_count: int = 0
    kept: int = 0
    dropped: Counter = field(default_factory=Counter)
    kept_per_category: Counter = field(default_factory=Counter)
    unmapped_titles: list[str] = field(default_factory=list)

    def dropped_total(self) -> int:
        return sum(self.dropped.values())

    def check_conservation(self) -> bool:
        return self.input_count == self.kept + self.dropped_total()


def _curate_one(
    title: str,
    articles: Mapping[str, RawArticle],
    rules: CurationRules,
    mapping: Mapping[str, Category],
):
    article = articles.get(title)
    if article is None:
        return title, None, DropReason.MISSING_ARTICLE
    sections = split_sections(article.wikitext)
    verdict = article_eligible(article, rules, sections)
    if not verdict.eligible:
        return title, None, verdict.reason
    kept_sections = filter_sections(sections, rules)
    paragraphs = segment_paragraphs(kept_sections, rules, title)
    if len(paragraphs) < rules.min_paragraphs:
        return title, None, DropReason.TOO_FEW_PARAGRAPHS
    category = assign_category(title, mapping)
    if category is None:
        return title, None, DropReason.UNMAPPED_CATEGORY
    return title, CuratedArticle(title, category, tuple(paragraphs)), None


def curate(
    ranked_titles: Iterable[str],
    articles: Mapping[str, RawArticle],
    rules: CurationRules,
    mapping: Mapping[str, Category],
    k: int | None = None,
    jobs: int = 1,
) -> tuple[list[CuratedArticle], CurationReport]:
    """Apply the rules to the top-k ranked titles, preserving rank order.

    Every input title lands either in the kept list or in exactly one drop
    bucket of the report. The per-article work is pure, so re-running on the
    same input reproduces the same output.
    """
    titles = list(ranked_titles)
    if k is not None:
        titles = titles[:k]
    report = CurationReport(input_count=len(titles))
    kept: list[CuratedArticle] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda t: _curate_one(t, articles, rules, mapping), titles))
    else:
        outcomes = [_curate_one(t, articles, rules, mapping) for t in titles]
    for title, curated, reason in outcomes:
        if curated is not None:
            kept.append(curated)
            report.kept += 1
            report.kept_per_category[curated.category] += 1
        else:
            report.dropped[reason] += 1
            if reason is DropReason.UNMAPPED_CATEGORY:
                report.unmapped_titles.append(title)
    return kept, report


def to_squad_skeleton(curated: Iterable[CuratedArticle], meta: Mapping[str, str] | None = None) -> Dataset:
    """Question-less dataset: one article per curated article, one paragraph
    per kept paragraph, empty qa lists, category recorded per article."""
    articles = [
        ArticleEntry(
            title=a.title,
            paragraphs=[ParagraphEntry(context=p.text) for p in a.paragraphs],
            category=a.category.value,
        )
        for a in curated
    ]
    return Dataset(articles=articles, meta=dict(meta) if meta else None)
