"""Dataset-wide metric report: histograms, per-category breakdown, and the
seeded sampling used for manual assessment rounds."""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..squad import Dataset, QaEntry
from .conllu import SIDE_QUESTION, SIDE_SENTENCE, DepParse
from .divergence import (
    MetricSkipped,
    content_tokens,
    lexical_variation,
    syntactic_divergence,
)
from .sentences import answer_sentence

logger = logging.getLogger(__name__)

LEXVAR_BINS = 10
_NO_CATEGORY = "(none)"


@dataclass(frozen=True)
class SampleMetrics:
    qa_id: str
    category: str
    lexical_variation: float
    syntactic_divergence: int
    sentence_span: tuple[int, int]


@dataclass
class MetricsReport:
    sample_count: int
    lexical_variation_histogram: list[int]
    syntactic_divergence_histogram: list[int]
    per_category: dict[str, dict]
    skipped: dict[str, str]  # qa_id -> reason
    samples: dict[str, SampleMetrics]

    def skipped_by_reason(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for reason in self.skipped.values():
            counts[reason] = counts.get(reason, 0) + 1
        return dict(sorted(counts.items()))

    def to_json_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "skipped_count": len(self.skipped),
            "skipped_by_reason": self.skipped_by_reason(),
            "lexical_variation_histogram": self.lexical_variation_histogram,
            "syntactic_divergence_histogram": self.syntactic_divergence_histogram,
            "per_category": {
                name: self.per_category[name] for name in sorted(self.per_category)
            },
        }


def _lexvar_bin(value: float) -> int:
    return min(int(value * LEXVAR_BINS), LEXVAR_BINS - 1)


def _anchor_for(question: str, sentence: str, stopwords: frozenset[str]) -> str | None:
    """First content token of the question that the sentence shares."""
    sentence_forms = set(content_tokens(sentence, stopwords))
    for form in content_tokens(question, stopwords):
        if form in sentence_forms:
            return form
    return None


def _parse_within(parse: DepParse, span: tuple[int, int]) -> bool:
    return all(span[0] <= t.start and t.end <= span[1] for t in parse.tokens)


def dataset_report(
    dataset: Dataset,
    parses: dict[str, dict[str, DepParse]],
    stopwords: frozenset[str],
) -> MetricsReport:
    """Compute both metrics for every qa and bin the results.

    A sample lands in the histograms only when both metrics are defined;
    otherwise it is recorded under ``skipped`` with a reason, so that
    binned + skipped = qa count always holds.
    """
    samples: dict[str, SampleMetrics] = {}
    skipped: dict[str, str] = {}
    for article, paragraph, qa in dataset.iter_qas():
        category = article.category or _NO_CATEGORY
        try:
            samples[qa.id] = _measure(qa, paragraph.context, category, parses, stopwords)
        except MetricSkipped as skip:
            skipped[qa.id] = skip.reason

    max_divergence = max((s.syntactic_divergence for s in samples.values()), default=-1)
    lexvar_hist = [0] * LEXVAR_BINS
    syndiv_hist = [0] * (max_divergence + 1)
    per_category: dict[str, dict] = {}
    for sample in samples.values():
        lexvar_hist[_lexvar_bin(sample.lexical_variation)] += 1
        syndiv_hist[sample.syntactic_divergence] += 1
        bucket = per_category.setdefault(
            sample.category,
            {
                "sample_count": 0,
                "lexical_variation_histogram": [0] * LEXVAR_BINS,
                "syntactic_divergence_histogram": [0] * (max_divergence + 1),
            },
        )
        bucket["sample_count"] += 1
        bucket["lexical_variation_histogram"][_lexvar_bin(sample.lexical_variation)] += 1
        bucket["syntactic_divergence_histogram"][sample.syntactic_divergence] += 1

    return MetricsReport(
        sample_count=len(samples),
        lexical_variation_histogram=lexvar_hist,
        syntactic_divergence_histogram=syndiv_hist,
        per_category=per_category,
        skipped=skipped,
        samples=samples,
    )


def _measure(
    qa: QaEntry,
    context: str,
    category: str,
    parses: dict[str, dict[str, DepParse]],
    stopwords: frozenset[str],
) -> SampleMetrics:
    if not qa.answers:
        raise MetricSkipped("no_answer")
    answer = qa.answers[0]
    try:
        sentence, span = answer_sentence(context, answer.answer_start, len(answer.text))
    except ValueError:
        raise MetricSkipped("answer_outside_context")
    variation = lexical_variation(qa.question, sentence, stopwords)
    anchor = _anchor_for(qa.question, sentence, stopwords)
    if anchor is None:
        raise MetricSkipped("no_shared_anchor")
    pair = parses.get(qa.id, {})
    q_parse = pair.get(SIDE_QUESTION)
    s_parse = pair.get(SIDE_SENTENCE)
    if q_parse is None or s_parse is None:
        raise MetricSkipped("missing_parse")
    if not _parse_within(s_parse, span):
        raise MetricSkipped("parse_mismatch")
    answer_span = (answer.answer_start, answer.answer_start + len(answer.text))
    divergence = syntactic_divergence(q_parse, s_parse, anchor, answer_span)
    return SampleMetrics(
        qa_id=qa.id,
        category=category,
        lexical_variation=variation,
        syntactic_divergence=divergence,
        sentence_span=span,
    )


# -- delimited + figure output ------------------------------------------------


def write_report_csv(report: MetricsReport, directory: str | Path) -> list[Path]:
    """Histogram tables and one row per measured qa, as CSV files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []

    path = directory / "lexical_variation_histogram.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_low", "bin_high", "count"])
        for i, count in enumerate(report.lexical_variation_histogram):
            writer.writerow([i / LEXVAR_BINS, (i + 1) / LEXVAR_BINS, count])
    paths.append(path)

    path = directory / "syntactic_divergence_histogram.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["value", "count"])
        for value, count in enumerate(report.syntactic_divergence_histogram):
            writer.writerow([value, count])
    paths.append(path)

    path = directory / "samples.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["qa_id", "category", "lexical_variation", "syntactic_divergence"])
        for qa_id in sorted(report.samples):
            s = report.samples[qa_id]
            writer.writerow([s.qa_id, s.category, repr(s.lexical_variation), s.syntactic_divergence])
    paths.append(path)
    return paths


def render_report_figures(report: MetricsReport, directory: str | Path) -> list[Path]:
    """Histogram figures as PNG files next to the CSV output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    edges = [i / LEXVAR_BINS for i in range(LEXVAR_BINS)]
    ax.bar(edges, report.lexical_variation_histogram, width=1 / LEXVAR_BINS, align="edge", edgecolor="black")
    ax.set_xlabel("lexical variation")
    ax.set_ylabel("questions")
    ax.set_xlim(0, 1)
    path = directory / "lexical_variation.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    values = list(range(len(report.syntactic_divergence_histogram)))
    ax.bar(values, report.syntactic_divergence_histogram, width=0.8, edgecolor="black")
    ax.set_xlabel("syntactic divergence")
    ax.set_ylabel("questions")
    if values:
        ax.set_xticks(values)
    path = directory / "syntactic_divergence.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


# -- manual assessment sampling ----------------------------------------------


class AssessmentLabel(Enum):
    SYNONYMY = "Synonymy"
    WORLD_KNOWLEDGE = "WorldKnowledge"
    SYNTACTIC_VARIATION = "SyntacticVariation"
    MULTI_SENTENCE_REASONING = "MultiSentenceReasoning"
    AMBIGUOUS = "Ambiguous"


@dataclass
class AssessmentSample:
    article_title: str
    qa: QaEntry
    context: str
    labels: set[AssessmentLabel] = field(default_factory=set)


def sample_for_assessment(dataset: Dataset, seed: int) -> list[AssessmentSample]:
    """One random qa per article, reproducible for a given seed.

    Articles without any question are skipped with a warning.
    """
    rng = random.Random(seed)
    out = []
    for article in dataset.articles:
        pool = [(p.context, qa) for p in article.paragraphs for qa in p.qas]
        if not pool:
            logger.warning("article %r has no questions; skipped from assessment", article.title)
            continue
        context, qa = pool[rng.randrange(len(pool))]
        out.append(AssessmentSample(article_title=article.title, qa=qa, context=context))
    return out


def label_percentages(samples: list[AssessmentSample]) -> dict[str, float]:
    """Share of samples carrying each label; multi-label, so the values can
    sum past 100."""
    if not samples:
        return {label.value: 0.0 for label in AssessmentLabel}
    return {
        label.value: 100.0 * sum(label in s.labels for s in samples) / len(samples)
        for label in AssessmentLabel
    }
