"""Dataset-wide report: histogram shape, conservation, file output, and the
seeded assessment sampling."""

import csv

from annoforge.metrics import (
    AssessmentLabel,
    dataset_report,
    default_stopwords,
    label_percentages,
    parse_conllu,
    render_report_figures,
    sample_for_assessment,
    write_report_csv,
)
from annoforge.squad import AnswerEntry, ArticleEntry, Dataset, ParagraphEntry, QaEntry

from metrics_fixture import build_fixture, build_skip_fixture

SW = default_stopwords()


def full_report():
    dataset, conllu, _ = build_fixture()
    return dataset, dataset_report(dataset, parse_conllu(conllu), SW)


def test_fixture_report_matches_hand_values_exactly():
    dataset, conllu, expected = build_fixture()
    report = dataset_report(dataset, parse_conllu(conllu), SW)
    assert report.skipped == {}
    assert report.sample_count == 10
    for qa_id, (variation, divergence) in expected.items():
        sample = report.samples[qa_id]
        assert sample.lexical_variation == variation, qa_id
        assert sample.syntactic_divergence == divergence, qa_id


def test_fixture_histograms_exact():
    _, report = full_report()
    assert report.lexical_variation_histogram == [1, 1, 1, 2, 0, 1, 1, 1, 1, 1]
    assert report.syntactic_divergence_histogram == [0, 3, 3, 3, 1]


def test_bins_conserve_sample_count():
    dataset, report = full_report()
    assert sum(report.lexical_variation_histogram) == report.sample_count
    assert sum(report.syntactic_divergence_histogram) == report.sample_count
    assert report.sample_count + len(report.skipped) == dataset.qa_count()


def test_per_category_breakdown_sums_to_totals():
    _, report = full_report()
    assert set(report.per_category) == {"Arts", "History"}
    for i in range(10):
        assert report.lexical_variation_histogram[i] == sum(
            c["lexical_variation_histogram"][i] for c in report.per_category.values()
        )
    for v in range(len(report.syntactic_divergence_histogram)):
        assert report.syntactic_divergence_histogram[v] == sum(
            c["syntactic_divergence_histogram"][v] for c in report.per_category.values()
        )
    assert sum(c["sample_count"] for c in report.per_category.values()) == report.sample_count


def test_skip_reasons_reported_and_conserved():
    dataset, conllu, reasons = build_skip_fixture()
    report = dataset_report(dataset, parse_conllu(conllu), SW)
    assert report.sample_count == 0
    assert report.skipped == reasons
    assert report.skipped_by_reason() == {
        "missing_parse": 1,
        "no_shared_anchor": 1,
        "no_wh_word": 1,
        "parse_mismatch": 1,
    }
    assert report.sample_count + len(report.skipped) == dataset.qa_count()
    assert report.syntactic_divergence_histogram == []


def test_empty_dataset_report_is_all_zero():
    report = dataset_report(Dataset(), {}, SW)
    assert report.sample_count == 0
    assert report.lexical_variation_histogram == [0] * 10
    assert report.syntactic_divergence_histogram == []
    assert report.per_category == {}


def test_report_is_deterministic():
    _, first = full_report()
    _, second = full_report()
    assert first.to_json_dict() == second.to_json_dict()


def test_json_dict_has_stable_key_order():
    _, report = full_report()
    payload = report.to_json_dict()
    assert list(payload) == [
        "sample_count",
        "skipped_count",
        "skipped_by_reason",
        "lexical_variation_histogram",
        "syntactic_divergence_histogram",
        "per_category",
    ]
    assert list(payload["per_category"]) == ["Arts", "History"]


def test_csv_output_roundtrips(tmp_path):
    _, report = full_report()
    paths = write_report_csv(report, tmp_path)
    assert [p.name for p in paths] == [
        "lexical_variation_histogram.csv",
        "syntactic_divergence_histogram.csv",
        "samples.csv",
    ]
    with open(paths[0], newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert [int(r["count"]) for r in rows] == report.lexical_variation_histogram
    assert [float(r["bin_low"]) for r in rows][:2] == [0.0, 0.1]
    with open(paths[2], newline="", encoding="utf-8") as handle:
        sample_rows = list(csv.DictReader(handle))
    assert len(sample_rows) == report.sample_count
    by_id = {r["qa_id"]: r for r in sample_rows}
    assert float(by_id["fx-2"]["lexical_variation"]) == report.samples["fx-2"].lexical_variation


def test_figures_are_written_as_png(tmp_path):
    _, report = full_report()
    paths = render_report_figures(report, tmp_path)
    assert [p.name for p in paths] == ["lexical_variation.png", "syntactic_divergence.png"]
    for path in paths:
        payload = path.read_bytes()
        assert payload[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(payload) > 1000


# -- assessment sampling --------------------------------------------------------


def three_article_dataset() -> Dataset:
    dataset, _, _ = build_fixture()
    third = ArticleEntry(
        title="Troisième",
        category="Sport",
        paragraphs=[
            ParagraphEntry(
                context="Un texte bref.",
                qas=[
                    QaEntry(id=f"t-{i}", question=f"Question {i} ?", answers=[AnswerEntry("bref", 9)])
                    for i in range(1, 4)
                ],
            )
        ],
    )
    return Dataset(articles=dataset.articles + [third])


def test_seeded_sample_golden():
    picks = [(s.article_title, s.qa.id) for s in sample_for_assessment(three_article_dataset(), 7)]
    assert picks == [("Promenades", "fx-3"), ("Chantiers", "fx-7"), ("Troisième", "t-2")]


def test_same_seed_same_sample_other_seed_differs():
    dataset = three_article_dataset()
    first = [s.qa.id for s in sample_for_assessment(dataset, 7)]
    again = [s.qa.id for s in sample_for_assessment(dataset, 7)]
    other = [s.qa.id for s in sample_for_assessment(dataset, 8)]
    assert first == again
    assert other == ["fx-2", "fx-8", "t-2"]


def test_one_triplet_per_article_on_large_store():
    articles = [
        ArticleEntry(
            title=f"Article {i}",
            paragraphs=[
                ParagraphEntry(
                    context="Un paragraphe.",
                    qas=[QaEntry(id=f"a{i}-q{j}", question="Q ?", answers=[]) for j in range(4)],
                )
            ],
        )
        for i in range(191)
    ]
    samples = sample_for_assessment(Dataset(articles=articles), seed=1)
    assert len(samples) == 191
    assert [s.article_title for s in samples] == [a.title for a in articles]


def test_article_without_questions_skipped_with_warning(caplog):
    dataset = Dataset(
        articles=[
            ArticleEntry(title="Vide", paragraphs=[ParagraphEntry(context="Rien.", qas=[])]),
            ArticleEntry(
                title="Plein",
                paragraphs=[
                    ParagraphEntry(
                        context="Un fait.",
                        qas=[QaEntry(id="p-1", question="Q ?", answers=[AnswerEntry("fait", 3)])],
                    )
                ],
            ),
        ]
    )
    with caplog.at_level("WARNING"):
        samples = sample_for_assessment(dataset, 3)
    assert [s.article_title for s in samples] == ["Plein"]
    assert "Vide" in caplog.text


def test_samples_start_unlabelled_and_percentages_are_multilabel():
    samples = sample_for_assessment(three_article_dataset(), 7)
    assert all(s.labels == set() for s in samples)
    samples[0].labels.update({AssessmentLabel.SYNONYMY, AssessmentLabel.WORLD_KNOWLEDGE})
    samples[1].labels.add(AssessmentLabel.SYNONYMY)
    samples[2].labels.add(AssessmentLabel.AMBIGUOUS)
    shares = label_percentages(samples)
    assert shares["Synonymy"] == 100.0 * 2 / 3
    assert shares["WorldKnowledge"] == 100.0 / 3
    assert shares["Ambiguous"] == 100.0 / 3
    assert sum(shares.values()) > 100.0


def test_percentages_of_empty_sample_are_zero():
    assert set(label_percentages([]).values()) == {0.0}
