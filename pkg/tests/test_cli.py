"""Command-line behavior: exit codes, provenance, config and env layering."""

import json
import logging
import sqlite3

import pytest
from click.testing import CliRunner

from annoforge.cli import main
from annoforge.config import load_rules, provenance, read_header_comments, sha256_file
from annoforge.squad import export_squad, import_squad

from metrics_fixture import build_fixture

PAGE = """  <page>
    <title>{title}</title>
    <ns>{ns}</ns>
    <id>{id}</id>
    {extra}<revision><id>1</id><text>{text}</text></revision>
  </page>"""


def dump_xml(pages):
    """pages: list of (title, text) or (title, text, ns) or dicts."""
    rendered = []
    for i, page in enumerate(pages):
        if isinstance(page, dict):
            spec = dict(page)
        else:
            spec = {"title": page[0], "text": page[1]}
            if len(page) > 2:
                spec["ns"] = page[2]
        spec.setdefault("ns", 0)
        spec.setdefault("extra", "")
        rendered.append(PAGE.format(id=i + 1, **spec))
    return (
        '<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">\n'
        + "\n".join(rendered)
        + "\n</mediawiki>\n"
    )


PARA = ("Un long paragraphe qui parle de la ville et de son histoire ancienne. " * 8).strip()
assert 500 <= len(PARA) <= 1000

FIVE_PARAS = "\n\n".join([PARA] * 5)


def pipeline_dump():
    return dump_xml(
        [
            ("Paris", "[[France]] et [[Lyon]] et [[Gaule]].\n\n" + FIVE_PARAS),
            ("France", "[[Paris]]\n\n" + FIVE_PARAS),
            ("Lyon", "[[Paris]] [[France]]\n\n" + PARA),
            ("Gaule", "#REDIRECT [[France]]"),
            ("Discussion:Paris", "[[France]] hors espace principal", 1),
        ]
    )


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    result = runner.invoke(main, args, catch_exceptions=False, **kwargs)
    return result


def run_pipeline(runner, tmp_path, rank_args=()):
    dump = tmp_path / "dump.xml"
    dump.write_text(pipeline_dump(), encoding="utf-8")
    (tmp_path / "map.csv").write_text(
        "title,category\nParis,Geography\nFrance,History\nLyon,Geography\n",
        encoding="utf-8",
    )
    assert (
        invoke(
            runner,
            ["ingest", str(dump), "--out", str(tmp_path / "edges.txt"),
             "--extract-dir", str(tmp_path / "extract")],
        ).exit_code
        == 0
    )
    assert (
        invoke(
            runner,
            ["rank", "--graph", str(tmp_path / "edges.txt"),
             "--out", str(tmp_path / "scores.tsv"), *rank_args],
        ).exit_code
        == 0
    )
    result = invoke(
        runner,
        ["curate", "--scores", str(tmp_path / "scores.tsv"),
         "--dump-extract", str(tmp_path / "extract"),
         "--mapping", str(tmp_path / "map.csv"),
         "--out", str(tmp_path / "corpus.json")],
    )
    assert result.exit_code == 0
    return result


HELP_PATHS = [
    [],
    ["ingest"],
    ["rank"],
    ["curate"],
    ["serve"],
    ["dataset"],
    ["dataset", "validate"],
    ["dataset", "merge"],
    ["metrics"],
    ["metrics", "report"],
    ["metrics", "eval"],
    ["admin"],
    ["admin", "create-user"],
]


@pytest.mark.parametrize("path", HELP_PATHS, ids=[" ".join(p) or "root" for p in HELP_PATHS])
def test_help_available_everywhere(runner, path):
    result = invoke(runner, path + ["--help"])
    assert result.exit_code == 0
    assert "Usage:" in result.output


def test_unknown_option_is_a_usage_error(runner):
    result = runner.invoke(main, ["rank", "--nope"])
    assert result.exit_code == 2
    assert "Usage:" in result.stderr


def test_pipeline_produces_corpus_with_provenance(runner, tmp_path):
    run_pipeline(runner, tmp_path)

    headers = read_header_comments(tmp_path / "edges.txt")
    dump_sha = sha256_file(tmp_path / "dump.xml")
    assert headers["dump_sha256"] == dump_sha
    assert headers["tool"].startswith("annoforge ")

    score_headers = read_header_comments(tmp_path / "scores.tsv")
    assert score_headers["dump_sha256"] == dump_sha
    assert "graph_sha256" in score_headers

    rows = [
        line.split("\t")
        for line in (tmp_path / "scores.tsv").read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    ]
    scores = [float(s) for _, s in rows]
    assert scores == sorted(scores, reverse=True)
    # the redirect and the talk page never become nodes
    assert {t for t, _ in rows} == {"Paris", "France", "Lyon"}

    corpus = json.loads((tmp_path / "corpus.json").read_text(encoding="utf-8"))
    assert corpus["meta"]["dump_sha256"] == dump_sha
    assert "timestamp" not in corpus["meta"]
    # Lyon has one paragraph and drops out
    assert [a["title"] for a in corpus["data"]] == ["Paris", "France"]
    assert all(len(a["paragraphs"]) == 5 for a in corpus["data"])

    result = invoke(runner, ["dataset", "validate", str(tmp_path / "corpus.json")])
    assert result.exit_code == 0
    assert result.stdout == ""
    assert "ok" in result.stderr


def test_redirect_resolved_into_edges(runner, tmp_path):
    run_pipeline(runner, tmp_path)
    lines = (tmp_path / "edges.txt").read_text(encoding="utf-8").splitlines()
    body = [l for l in lines if not l.startswith("#")]
    nodes = {}
    for line in body[1 : 1 + int(body[0].split()[1])]:
        node_id, title = line.split("\t")
        nodes[title] = node_id
    edge_start = 2 + len(nodes)
    edges = {tuple(l.split("\t")) for l in body[edge_start:]}
    # Paris links [[Gaule]], a redirect to France: resolved, not a node
    assert "Gaule" not in nodes
    assert (nodes["Paris"], nodes["France"]) in edges


def test_reruns_are_byte_identical_without_timestamp(runner, tmp_path):
    run_pipeline(runner, tmp_path)
    first = {
        name: (tmp_path / name).read_bytes()
        for name in ("edges.txt", "scores.tsv", "corpus.json")
    }
    run_pipeline(runner, tmp_path)
    for name, blob in first.items():
        assert (tmp_path / name).read_bytes() == blob, name


def test_source_date_epoch_adds_a_fixed_timestamp(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    run_pipeline(runner, tmp_path)
    headers = read_header_comments(tmp_path / "edges.txt")
    assert headers["timestamp"] == "2023-11-14T22:13:20+00:00"
    corpus = json.loads((tmp_path / "corpus.json").read_text(encoding="utf-8"))
    assert corpus["meta"]["timestamp"] == "2023-11-14T22:13:20+00:00"


def test_ingest_rejects_malformed_xml(runner, tmp_path):
    bad = tmp_path / "dump.xml"
    bad.write_text("<mediawiki><page><title>Oops", encoding="utf-8")
    result = runner.invoke(main, ["ingest", str(bad), "--out", str(tmp_path / "e.txt")])
    assert result.exit_code == 1
    assert "Error" in result.stderr


def test_curate_honors_rules_file_and_k(runner, tmp_path):
    dump = tmp_path / "dump.xml"
    dump.write_text(pipeline_dump(), encoding="utf-8")
    (tmp_path / "map.csv").write_text(
        "title,category\nParis,Geography\nFrance,History\nLyon,Geography\n", encoding="utf-8"
    )
    invoke(runner, ["ingest", str(dump), "--out", str(tmp_path / "edges.txt"),
                    "--extract-dir", str(tmp_path / "extract")])
    invoke(runner, ["rank", "--graph", str(tmp_path / "edges.txt"),
                    "--out", str(tmp_path / "scores.tsv")])

    # a rules file that no paragraph can satisfy empties the corpus
    rules = tmp_path / "rules.cfg"
    rules.write_text("[paragraphs]\nmin_chars = 900\nmax_chars = 1000\n", encoding="utf-8")
    result = invoke(
        runner,
        ["curate", "--scores", str(tmp_path / "scores.tsv"),
         "--dump-extract", str(tmp_path / "extract"),
         "--mapping", str(tmp_path / "map.csv"),
         "--rules", str(rules), "--out", str(tmp_path / "strict.json")],
    )
    assert result.exit_code == 0
    assert json.loads((tmp_path / "strict.json").read_text(encoding="utf-8"))["data"] == []

    result = invoke(
        runner,
        ["curate", "--scores", str(tmp_path / "scores.tsv"),
         "--dump-extract", str(tmp_path / "extract"),
         "--mapping", str(tmp_path / "map.csv"),
         "--k", "1", "--out", str(tmp_path / "top1.json")],
    )
    top1 = json.loads((tmp_path / "top1.json").read_text(encoding="utf-8"))
    assert len(top1["data"]) <= 1


def test_rules_file_loader_defaults_and_overrides(tmp_path):
    path = tmp_path / "rules.cfg"
    path.write_text(
        "[sections]\ndiscard = Notes|Annexes\n\n"
        "[categories]\nreject_prefixes = Wikipédia:ébauche\n\n"
        "[paragraphs]\nmin_chars = 300\n",
        encoding="utf-8",
    )
    rules = load_rules(path)
    assert rules.discard_sections == frozenset({"Notes", "Annexes"})
    assert rules.min_paragraph_chars == 300
    assert rules.max_paragraph_chars == 1000  # untouched default
    assert rules.min_paragraphs == 5


def test_env_variable_overrides_default(runner, tmp_path):
    dump = tmp_path / "dump.xml"
    dump.write_text(pipeline_dump(), encoding="utf-8")
    invoke(runner, ["ingest", str(dump), "--out", str(tmp_path / "edges.txt")])
    result = runner.invoke(
        main,
        ["rank", "--graph", str(tmp_path / "edges.txt"), "--out", str(tmp_path / "s.tsv")],
        env={"ANNOFORGE_RANK_K": "1"},
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    rows = [
        l for l in (tmp_path / "s.tsv").read_text(encoding="utf-8").splitlines()
        if not l.startswith("#")
    ]
    assert len(rows) == 1


def test_config_file_sets_defaults_flags_still_win(runner, tmp_path):
    dump = tmp_path / "dump.xml"
    dump.write_text(pipeline_dump(), encoding="utf-8")
    invoke(runner, ["ingest", str(dump), "--out", str(tmp_path / "edges.txt")])
    conf = tmp_path / "annoforge.cfg"
    conf.write_text("[rank]\nk = 1\n", encoding="utf-8")

    invoke(runner, ["--config", str(conf), "rank", "--graph", str(tmp_path / "edges.txt"),
                    "--out", str(tmp_path / "one.tsv")])
    one = [l for l in (tmp_path / "one.tsv").read_text(encoding="utf-8").splitlines()
           if not l.startswith("#")]
    assert len(one) == 1

    invoke(runner, ["--config", str(conf), "rank", "--graph", str(tmp_path / "edges.txt"),
                    "--k", "2", "--out", str(tmp_path / "two.tsv")])
    two = [l for l in (tmp_path / "two.tsv").read_text(encoding="utf-8").splitlines()
           if not l.startswith("#")]
    assert len(two) == 2


BAD_CORPUS = {
    "version": "1.1",
    "data": [
        {
            "title": "T",
            "paragraphs": [
                {
                    "context": "Le musée ouvre demain matin.",
                    "qas": [
                        {
                            "id": "bad-1",
                            "question": "Quand ?",
                            "answers": [{"text": "jamais", "answer_start": 3}],
                        }
                    ],
                }
            ],
        }
    ],
}


def test_validate_lists_issues_and_exits_1(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(BAD_CORPUS, ensure_ascii=False), encoding="utf-8")
    result = runner.invoke(main, ["dataset", "validate", str(bad)])
    assert result.exit_code == 1
    assert "bad-1\tSPAN_MISMATCH" in result.stdout


def test_validate_rejects_malformed_json(runner, tmp_path):
    garbage = tmp_path / "nope.json"
    garbage.write_text("{not json", encoding="utf-8")
    result = runner.invoke(main, ["dataset", "validate", str(garbage)])
    assert result.exit_code == 1


def _tiny_dataset(title, qa_id):
    context = "Le musée municipal ouvre demain matin pour la grande exposition annuelle."
    start = context.index("demain")
    return {
        "version": "1.1",
        "data": [
            {
                "title": title,
                "paragraphs": [
                    {
                        "context": context,
                        "qas": [
                            {
                                "id": qa_id,
                                "question": "Quand ouvre le musée ?",
                                "answers": [{"text": "demain matin", "answer_start": start}],
                            }
                        ],
                    }
                ],
            }
        ],
    }


def test_merge_combines_files_with_source_checksums(runner, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(_tiny_dataset("Alpha", "q-1"), ensure_ascii=False), encoding="utf-8")
    b.write_text(json.dumps(_tiny_dataset("Beta", "q-2"), ensure_ascii=False), encoding="utf-8")
    out = tmp_path / "merged.json"
    result = invoke(runner, ["dataset", "merge", str(out), str(a), str(b), "--seed", "3"])
    assert result.exit_code == 0
    merged = json.loads(out.read_text(encoding="utf-8"))
    assert merged["meta"]["source00_sha256"] == sha256_file(a)
    assert merged["meta"]["source01_sha256"] == sha256_file(b)
    assert {art["title"] for art in merged["data"]} == {"Alpha", "Beta"}
    qa_ids = [
        qa["id"]
        for art in merged["data"]
        for p in art["paragraphs"]
        for qa in p["qas"]
    ]
    assert sorted(qa_ids) == ["d0-q-1", "d1-q-2"]


def test_merge_rejects_invalid_input(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(BAD_CORPUS, ensure_ascii=False), encoding="utf-8")
    result = runner.invoke(main, ["dataset", "merge", str(tmp_path / "out.json"), str(bad)])
    assert result.exit_code == 1
    assert not (tmp_path / "out.json").exists()


REPORT_KEYS = [
    "provenance",
    "sample_count",
    "skipped_count",
    "skipped_by_reason",
    "lexical_variation_histogram",
    "syntactic_divergence_histogram",
    "per_category",
]


def metrics_inputs(tmp_path):
    dataset, conllu, expected = build_fixture()
    data_path = tmp_path / "annotated.json"
    data_path.write_bytes(export_squad(dataset))
    parse_path = tmp_path / "parses.conllu"
    parse_path.write_text(conllu, encoding="utf-8")
    return data_path, parse_path, expected


def test_metrics_report_writes_documented_key_order(runner, tmp_path):
    data_path, parse_path, expected = metrics_inputs(tmp_path)
    out = tmp_path / "report.json"
    result = invoke(
        runner,
        ["metrics", "report", "--dataset", str(data_path),
         "--parses", str(parse_path), "--out", str(out)],
    )
    assert result.exit_code == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert list(payload) == REPORT_KEYS
    assert payload["sample_count"] == len(expected)
    assert payload["skipped_count"] == 0
    assert payload["provenance"]["dataset_sha256"] == sha256_file(data_path)


def test_metrics_report_plot_emits_csv_and_png(runner, tmp_path):
    data_path, parse_path, _ = metrics_inputs(tmp_path)
    out = tmp_path / "report.json"
    result = invoke(
        runner,
        ["metrics", "report", "--dataset", str(data_path),
         "--parses", str(parse_path), "--out", str(out), "--plot"],
    )
    assert result.exit_code == 0
    for name in ("lexical_variation_histogram.csv", "syntactic_divergence_histogram.csv",
                 "samples.csv"):
        assert (tmp_path / name).exists(), name
    for name in ("lexical_variation.png", "syntactic_divergence.png"):
        assert (tmp_path / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n", name


def test_metrics_report_rejects_invalid_dataset(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(BAD_CORPUS, ensure_ascii=False), encoding="utf-8")
    parses = tmp_path / "p.conllu"
    parses.write_text("", encoding="utf-8")
    result = runner.invoke(
        main, ["metrics", "report", "--dataset", str(bad), "--parses", str(parses),
               "--out", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 1


def test_metrics_eval_scores_to_stdout_and_file(runner, tmp_path):
    gold = tmp_path / "gold.json"
    gold.write_text(json.dumps(_tiny_dataset("Alpha", "q-1"), ensure_ascii=False),
                    encoding="utf-8")
    pred = tmp_path / "pred.json"
    pred.write_text(json.dumps({"q-1": "demain matin"}), encoding="utf-8")

    result = invoke(runner, ["metrics", "eval", "--gold", str(gold), "--pred", str(pred)])
    assert result.exit_code == 0
    scores = json.loads(result.stdout)
    assert scores["exact_match"] == 100.0
    assert scores["f1"] == 100.0
    assert scores["total"] == 1

    out = tmp_path / "scores.json"
    result = invoke(runner, ["metrics", "eval", "--gold", str(gold), "--pred", str(pred),
                             "--out", str(out)])
    assert result.stdout == ""
    assert json.loads(out.read_text(encoding="utf-8")) == scores


def test_metrics_eval_rejects_non_object_predictions(runner, tmp_path):
    gold = tmp_path / "gold.json"
    gold.write_text(json.dumps(_tiny_dataset("Alpha", "q-1"), ensure_ascii=False),
                    encoding="utf-8")
    pred = tmp_path / "pred.json"
    pred.write_text("[1, 2]", encoding="utf-8")
    result = runner.invoke(main, ["metrics", "eval", "--gold", str(gold), "--pred", str(pred)])
    assert result.exit_code == 1
    assert "expected a JSON object" in result.stderr


def test_admin_create_user_prints_id_and_persists(runner, tmp_path):
    db = tmp_path / "svc.db"
    result = invoke(
        runner,
        ["admin", "create-user", "ops@example.org", "--db", str(db),
         "--password", "hunter22", "--role", "superadmin", "--verified", "--onboarded"],
    )
    assert result.exit_code == 0
    assert result.stdout.strip() == "1"
    row = sqlite3.connect(db).execute(
        "SELECT role, email_verified, onboarding_passed FROM users WHERE email = ?",
        ("ops@example.org",),
    ).fetchone()
    assert row == ("superadmin", 1, 1)

    duplicate = runner.invoke(
        main,
        ["admin", "create-user", "ops@example.org", "--db", str(db), "--password", "x1234567"],
    )
    assert duplicate.exit_code == 1
    assert "EMAIL_TAKEN" in duplicate.stderr


def test_serve_check_builds_service_and_imports(runner, tmp_path):
    corpus = tmp_path / "corpus.json"
    body = _tiny_dataset("Alpha", "q-1")
    body["data"][0]["category"] = "Arts"
    corpus.write_text(json.dumps(body, ensure_ascii=False), encoding="utf-8")
    assessment = tmp_path / "quiz.cfg"
    assessment.write_text(
        "[assessment]\nversion = 1\n\n"
        "[question:spans]\ntext = Faut-il couper les mots ?\nchoices = oui|non\nanswer = 1\n",
        encoding="utf-8",
    )
    result = invoke(
        runner,
        ["serve", "--db", str(tmp_path / "svc.db"), "--import", str(corpus),
         "--assessment", str(assessment), "--check"],
    )
    assert result.exit_code == 0
    assert "configuration ok" in result.stderr


def test_serve_keeps_mailed_tokens_visible_at_default_verbosity(runner, tmp_path):
    # the log doubles as the mail channel: info lines must not be filtered
    invoke(runner, ["serve", "--db", str(tmp_path / "svc.db"), "--check"])
    assert logging.getLogger("annoforge.core").getEffectiveLevel() <= logging.INFO


def test_serve_rejects_invalid_import(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(BAD_CORPUS, ensure_ascii=False), encoding="utf-8")
    result = runner.invoke(main, ["serve", "--db", ":memory:", "--import", str(bad), "--check"])
    assert result.exit_code == 1
    assert "SPAN_MISMATCH" in result.stderr


def test_provenance_keys_are_ordered_and_optional_timestamp(monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    stamp = provenance(b_sha256="2", a_sha256="1")
    assert list(stamp) == ["tool", "a_sha256", "b_sha256"]
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    stamped = provenance()
    assert stamped["timestamp"] == "1970-01-01T00:00:00+00:00"


def test_export_then_validate_roundtrip(runner, tmp_path):
    # what the CLI writes, the CLI accepts
    dataset, _, _ = build_fixture()
    path = tmp_path / "round.json"
    path.write_bytes(export_squad(dataset))
    result = invoke(runner, ["dataset", "validate", str(path)])
    assert result.exit_code == 0
    reread = import_squad(path.read_bytes())
    assert export_squad(reread.dataset) == path.read_bytes()
