"""Unified command-line entrypoint.

Subcommands cover the whole pipeline: ``ingest`` builds the link graph from a
MediaWiki dump, ``rank`` scores it, ``curate`` produces the corpus skeleton,
``serve`` runs the annotation service, plus dataset, metrics, and admin
utilities. Exit codes: 0 success, 1 processing or validation failure, 2 usage
error. Logs go to stderr; data goes to stdout or the requested files.

Every flag can also come from an environment variable prefixed ``ANNOFORGE_``
(for example ``ANNOFORGE_RANK_DAMPING``) or from a config file passed with
``--config``, whose ``[section]`` names match subcommand names.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import config as cfg
from .core import (
    AnnotationCore,
    CoreConfig,
    CoreError,
    LogMailer,
    Role,
    Status,
    load_assessment,
)
from .curation import CurationRules, curate, load_category_mapping, to_squad_skeleton
from .ingest import DumpParseError, RawArticle, parse_dump
from .linkgraph import build_link_graph, read_edge_list, write_edge_list
from .metrics import (
    ParseFormatError,
    dataset_report,
    default_stopwords,
    evaluate_predictions,
    load_parse_file,
    load_stopwords,
    render_report_figures,
    write_report_csv,
)
from .rank import RankConfig, pagerank, read_scores, top_k, write_scores
from .squad import DatasetFormatError, export_squad, import_squad, merge_datasets
from .store import Store

logger = logging.getLogger(__name__)

CONTEXT_SETTINGS = {
    "help_option_names": ["-h", "--help"],
    "auto_envvar_prefix": "ANNOFORGE",
}

ARTICLE_SUBDIR = "articles"


def guarded(fn):
    """Convert expected processing failures into exit-code-1 errors."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CoreError as exc:
            raise click.ClickException(f"{exc.code}: {exc}") from exc
        except (DumpParseError, DatasetFormatError, ParseFormatError) as exc:
            raise click.ClickException(str(exc)) from exc
        except (OSError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_config(ctx: click.Context, _param: click.Parameter, value):
    if value is not None:
        ctx.default_map = cfg.load_cli_defaults(value)
    return value


@click.group(context_settings=CONTEXT_SETTINGS)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    expose_value=False,
    is_eager=True,
    help="Config file with [subcommand] sections of key = value defaults.",
)
@click.option("-v", "--verbose", count=True, help="More logging (-v info, -vv debug).")
@click.version_option(cfg.tool_version(), prog_name=cfg.TOOL_NAME)
def main(verbose: int) -> None:
    """Participatory question-answering data collection tools."""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    # force: reruns in one process (tests) must rebind the captured stderr
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True
    )


def _article_path(directory: Path, title: str) -> Path:
    return directory / ARTICLE_SUBDIR / (urllib.parse.quote(title, safe="") + ".json")


@main.command()
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Edge-list output.")
@click.option(
    "--extract-dir",
    type=click.Path(file_okay=False),
    help="Also write one JSON file per article for later curation.",
)
@click.option("--jobs", default=1, show_default=True, help="Parallel link extraction workers.")
@guarded
def ingest(dump: str, out: str, extract_dir: str | None, jobs: int) -> None:
    """Build the internal link graph from a MediaWiki XML dump."""
    from .ingest import extract_internal_links

    dump_sha = cfg.sha256_file(dump)
    extract_root = Path(extract_dir) if extract_dir else None
    if extract_root is not None:
        (extract_root / ARTICLE_SUBDIR).mkdir(parents=True, exist_ok=True)

    pages: list[tuple[str, list[str]]] = []
    redirects: dict[str, str] = {}
    articles = 0

    def scan(article: RawArticle) -> tuple[RawArticle, list[str]]:
        links, _ = extract_internal_links(article.wikitext)
        return article, links

    stream = (a for a in parse_dump(dump) if a.namespace == 0)
    if jobs > 1:
        pool = ThreadPoolExecutor(max_workers=jobs)
        scanned = pool.map(scan, stream)
    else:
        pool = None
        scanned = map(scan, stream)
    try:
        for article, links in scanned:
            if article.redirect_target is not None:
                redirects[article.title] = article.redirect_target
                continue
            articles += 1
            pages.append((article.title, links))
            if extract_root is not None:
                payload = {
                    "title": article.title,
                    "categories": sorted(article.categories),
                    "wikitext": article.wikitext,
                }
                _article_path(extract_root, article.title).write_text(
                    json.dumps(payload, ensure_ascii=False), encoding="utf-8"
                )
    finally:
        if pool is not None:
            pool.shutdown()

    graph = build_link_graph(pages, redirects)
    write_edge_list(graph, out, header=cfg.provenance(dump_sha256=dump_sha))
    if extract_root is not None:
        (extract_root / "provenance.json").write_text(
            json.dumps(cfg.provenance(dump_sha256=dump_sha), ensure_ascii=False),
            encoding="utf-8",
        )
    click.echo(
        f"ingested {articles} articles, {len(redirects)} redirects, "
        f"{len(graph.titles)} nodes",
        err=True,
    )


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Scores TSV output.")
@click.option("--k", default=25000, show_default=True, help="How many titles to keep.")
@click.option("--damping", default=0.85, show_default=True)
@click.option("--epsilon", default=1e-9, show_default=True)
@click.option("--max-iterations", default=1000, show_default=True)
@guarded
def rank(
    graph_path: str, out: str, k: int, damping: float, epsilon: float, max_iterations: int
) -> None:
    """Score an edge-list graph and keep the top-k titles by PageRank."""
    graph = read_edge_list(graph_path)
    result = pagerank(
        graph,
        RankConfig(damping=damping, epsilon=epsilon, max_iterations=max_iterations, top_k=k),
    )
    if not result.converged:
        logger.warning(
            "no convergence after %d iterations (residual %.3e)",
            result.iterations_run,
            result.final_residual,
        )
    ranked = top_k(graph, result, k)
    carried = cfg.read_header_comments(graph_path)
    checksums = {"graph_sha256": cfg.sha256_file(graph_path)}
    if "dump_sha256" in carried:
        checksums["dump_sha256"] = carried["dump_sha256"]
    write_scores(out, ranked, header=cfg.provenance(**checksums))
    click.echo(f"ranked {len(graph.titles)} nodes, kept {len(ranked)}", err=True)


def _load_extract(directory: Path, titles: list[str]) -> dict[str, RawArticle]:
    articles: dict[str, RawArticle] = {}
    for title in titles:
        path = _article_path(directory, title)
        if not path.exists():
            continue
        raw = json.loads(path.read_text(encoding="utf-8"))
        articles[title] = RawArticle(
            title=raw["title"],
            namespace=0,
            wikitext=raw["wikitext"],
            categories=frozenset(raw["categories"]),
        )
    return articles


@main.command(name="curate")
@click.option("--scores", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--dump-extract",
    "extract_dir",
    required=True,
    type=click.Path(exists=True, file_okay=False),
    help="Article directory written by ingest --extract-dir.",
)
@click.option("--mapping", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--rules", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, help="Restrict to the k best-ranked titles first.")
@click.option("--jobs", default=1, show_default=True, help="Parallel curation workers.")
@guarded
def curate_cmd(
    scores: str,
    extract_dir: str,
    mapping: str,
    out: str,
    rules: str | None,
    k: int | None,
    jobs: int,
) -> None:
    """Filter and segment ranked articles into a corpus skeleton."""
    ranked_titles = [title for title, _ in read_scores(scores)]
    if k is not None:
        ranked_titles = ranked_titles[:k]
    extract_root = Path(extract_dir)
    articles = _load_extract(extract_root, ranked_titles)
    rule_set = cfg.load_rules(rules) if rules else CurationRules()
    category_map = load_category_mapping(mapping)

    curated, report = curate(ranked_titles, articles, rule_set, category_map, k=k, jobs=jobs)

    checksums = {
        "scores_sha256": cfg.sha256_file(scores),
        "mapping_sha256": cfg.sha256_file(mapping),
    }
    extract_meta = extract_root / "provenance.json"
    if extract_meta.exists():
        carried = json.loads(extract_meta.read_text(encoding="utf-8"))
        if "dump_sha256" in carried:
            checksums["dump_sha256"] = carried["dump_sha256"]
    dataset = to_squad_skeleton(curated, meta=cfg.provenance(**checksums))
    Path(out).write_bytes(export_squad(dataset))

    dropped = sum(report.dropped.values())
    click.echo(f"kept {report.kept} of {report.input_count} articles ({dropped} dropped)", err=True)
    for reason in sorted(report.dropped):
        click.echo(f"  dropped {report.dropped[reason]:>5}  {reason}", err=True)
    if report.unmapped_titles:
        click.echo(f"  unmapped: {', '.join(report.unmapped_titles)}", err=True)


@main.command()
@click.option("--db", required=True, help="SQLite path, or :memory: for a throwaway instance.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--session-ttl", default=86400, show_default=True, help="Session lifetime, seconds.")
@click.option("--lease-ttl", default=1800, show_default=True, help="Paragraph lease, seconds.")
@click.option("--assessment", type=click.Path(exists=True, dir_okay=False))
@click.option("--certified-only", is_flag=True, help="Only certified accounts may annotate.")
@click.option(
    "--import",
    "import_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Load a dataset file into the store before serving.",
)
@click.option("--check", is_flag=True, hidden=True)
@guarded
def serve(
    db: str,
    host: str,
    port: int,
    session_ttl: int,
    lease_ttl: int,
    assessment: str | None,
    certified_only: bool,
    import_path: str | None,
    check: bool,
) -> None:
    """Run the annotation collection service."""
    from .api import create_app

    core_config = CoreConfig(
        lease_ttl_seconds=lease_ttl,
        session_ttl_seconds=session_ttl,
        require_certified_for_annotation=certified_only,
        assessment=load_assessment(assessment) if assessment else None,
    )
    store = Store(db)
    core = AnnotationCore(store, core_config, LogMailer())
    # the log is the mail delivery channel here; tokens must surface even
    # at the default (warning) verbosity
    mail_log = logging.getLogger("annoforge.core")
    if mail_log.getEffectiveLevel() > logging.INFO:
        mail_log.setLevel(logging.INFO)
    if import_path:
        result = import_squad(Path(import_path).read_bytes())
        if result.issues:
            first = result.issues[0]
            raise click.ClickException(
                f"{import_path}: {len(result.issues)} invalid samples "
                f"(first: {first.qa_id}: {first.code})"
            )
        counts = core.import_dataset(result.dataset)
        click.echo(f"imported {counts}", err=True)
    app = create_app(core)
    if check:
        click.echo("configuration ok", err=True)
        return
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")


@main.group()
def dataset() -> None:
    """Inspect and combine dataset files."""


@dataset.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@guarded
def validate(ctx: click.Context, file: str) -> None:
    """Check a dataset file; list offending samples and exit 1 if invalid."""
    result = import_squad(Path(file).read_bytes())
    if result.issues:
        for issue in result.issues:
            click.echo(f"{issue.qa_id}\t{issue.code}\t{issue.message}")
        click.echo(f"{file}: {len(result.issues)} invalid samples", err=True)
        ctx.exit(1)
    paragraphs = sum(len(a.paragraphs) for a in result.dataset.articles)
    questions = sum(len(p.qas) for a in result.dataset.articles for p in a.paragraphs)
    click.echo(
        f"{file}: ok ({len(result.dataset.articles)} articles, "
        f"{paragraphs} paragraphs, {questions} questions)",
        err=True,
    )


@dataset.command()
@click.argument("out", type=click.Path(dir_okay=False))
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, help="Shuffle article order with this seed.")
@guarded
def merge(out: str, inputs: tuple[str, ...], seed: int | None) -> None:
    """Merge dataset files into one; identical titles must not collide."""
    parts = []
    checksums = {}
    for index, path in enumerate(inputs):
        result = import_squad(Path(path).read_bytes())
        if result.issues:
            raise click.ClickException(f"{path}: {len(result.issues)} invalid samples")
        parts.append(result.dataset)
        checksums[f"source{index:02d}_sha256"] = cfg.sha256_file(path)
    merged = merge_datasets(parts, shuffle_seed=seed)
    merged.meta = cfg.provenance(**checksums)
    Path(out).write_bytes(export_squad(merged))
    click.echo(f"merged {len(inputs)} files into {out}", err=True)


@main.group()
def metrics() -> None:
    """Dataset difficulty measures and evaluation."""


@metrics.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--parses", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--stopwords", type=click.Path(exists=True, dir_okay=False))
@click.option("--plot", is_flag=True, help="Also write histogram CSVs and PNG charts.")
@guarded
def report(
    dataset_path: str, parses: str, out: str, stopwords: str | None, plot: bool
) -> None:
    """Compute lexical variation and syntactic divergence histograms."""
    result = import_squad(Path(dataset_path).read_bytes())
    if result.issues:
        raise click.ClickException(f"{dataset_path}: {len(result.issues)} invalid samples")
    parse_map = load_parse_file(parses)
    words = (
        load_stopwords(Path(stopwords).read_text(encoding="utf-8"))
        if stopwords
        else default_stopwords()
    )
    measured = dataset_report(result.dataset, parse_map, words)
    payload = {
        "provenance": cfg.provenance(
            dataset_sha256=cfg.sha256_file(dataset_path),
            parses_sha256=cfg.sha256_file(parses),
        )
    }
    payload.update(measured.to_json_dict())
    out_path = Path(out)
    out_path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    written = [out_path]
    if plot:
        written += write_report_csv(measured, out_path.parent)
        written += render_report_figures(measured, out_path.parent)
    click.echo(
        f"measured {measured.sample_count} samples, skipped {len(measured.skipped)}; "
        f"wrote {', '.join(str(p) for p in written)}",
        err=True,
    )


@metrics.command(name="eval")
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Write scores here, not stdout.")
@guarded
def eval_cmd(gold: str, pred: str, out: str | None) -> None:
    """Score a predictions file (JSON map of qa id to answer) against gold."""
    result = import_squad(Path(gold).read_bytes())
    if result.issues:
        raise click.ClickException(f"{gold}: {len(result.issues)} invalid samples")
    predictions = json.loads(Path(pred).read_text(encoding="utf-8"))
    if not isinstance(predictions, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in predictions.items()
    ):
        raise click.ClickException(f"{pred}: expected a JSON object of qa id to answer text")
    scores = evaluate_predictions(result.dataset, predictions)
    payload = {
        "exact_match": scores.exact_match,
        "f1": scores.f1,
        "total": scores.total,
        "missing": scores.missing,
        "unknown": scores.unknown,
        "per_question": scores.per_question,
    }
    text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


@main.group()
def admin() -> None:
    """Account management for operators."""


@admin.command(name="create-user")
@click.argument("email")
@click.option("--db", required=True, help="SQLite path of the service store.")
@click.option("--password", required=True, prompt=True, hide_input=True)
@click.option(
    "--role",
    default=Role.REGULAR.value,
    show_default=True,
    type=click.Choice([r.value for r in Role]),
)
@click.option(
    "--status",
    default=Status.OPEN.value,
    show_default=True,
    type=click.Choice([s.value for s in Status]),
)
@click.option("--verified", is_flag=True, help="Skip email verification.")
@click.option("--onboarded", is_flag=True, help="Mark the onboarding assessment as passed.")
@guarded
def create_user(
    email: str, db: str, password: str, role: str, status: str, verified: bool, onboarded: bool
) -> None:
    """Create an account directly in the store, bypassing the signup flow."""
    store = Store(db)
    core = AnnotationCore(store, CoreConfig(), LogMailer())
    user, token = core.create_user(email, password, role=Role(role), status=Status(status))
    if verified:
        core.verify_email(token)
    if onboarded:
        with store.transaction() as conn:
            conn.execute("UPDATE users SET onboarding_passed = 1 WHERE id = ?", (user.id,))
    click.echo(str(user.id))
    click.echo(
        f"created {role} account {user.id} <{email}>"
        + (" (verified)" if verified else " (verification token emailed)"),
        err=True,
    )


if __name__ == "__main__":
    main()
