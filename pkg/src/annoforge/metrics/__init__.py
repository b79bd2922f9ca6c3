"""Dataset quality measurement: answer-sentence extraction, lexical
variation, syntactic divergence over dependency parses, EM/F1 evaluation
with French normalization, and assessment sampling."""

from .conllu import (
    SIDE_QUESTION,
    SIDE_SENTENCE,
    DepParse,
    ParseFormatError,
    ParseToken,
    load_parse_file,
    parse_conllu,
)
from .divergence import (
    WH_WORDS,
    MetricSkipped,
    content_tokens,
    default_stopwords,
    dependency_path,
    edit_distance,
    lexical_variation,
    load_stopwords,
    syntactic_divergence,
)
from .evalqa import ARTICLES, EvalScores, evaluate_predictions, normalize_text_fr, question_scores
from .report import (
    AssessmentLabel,
    AssessmentSample,
    MetricsReport,
    SampleMetrics,
    dataset_report,
    label_percentages,
    render_report_figures,
    sample_for_assessment,
    write_report_csv,
)
from .sentences import ABBREVIATIONS, answer_sentence, sentence_spans

__all__ = [
    "ABBREVIATIONS",
    "ARTICLES",
    "AssessmentLabel",
    "AssessmentSample",
    "DepParse",
    "EvalScores",
    "MetricSkipped",
    "MetricsReport",
    "ParseFormatError",
    "ParseToken",
    "SampleMetrics",
    "SIDE_QUESTION",
    "SIDE_SENTENCE",
    "WH_WORDS",
    "answer_sentence",
    "content_tokens",
    "dataset_report",
    "default_stopwords",
    "dependency_path",
    "edit_distance",
    "evaluate_predictions",
    "label_percentages",
    "lexical_variation",
    "load_parse_file",
    "load_stopwords",
    "normalize_text_fr",
    "parse_conllu",
    "question_scores",
    "render_report_figures",
    "sample_for_assessment",
    "sentence_spans",
    "syntactic_divergence",
    "write_report_csv",
]
