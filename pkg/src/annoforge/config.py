"""Configuration plumbing shared by the pipeline commands.

Covers the ``key = value`` config file (sections named after subcommands),
curation rule files, and the provenance stamp embedded in every artifact.
The stamp has a timestamp only when SOURCE_DATE_EPOCH is set, so that runs
are byte-identical by default.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from datetime import datetime, timezone
from importlib import metadata

from .curation import CurationRules

TOOL_NAME = "annoforge"


def tool_version() -> str:
    try:
        return metadata.version(TOOL_NAME)
    except metadata.PackageNotFoundError:
        return "0.0.0"


def provenance(**checksums: str) -> dict[str, str]:
    """Ordered provenance mapping: tool, input checksums, optional timestamp."""
    stamp: dict[str, str] = {"tool": f"{TOOL_NAME} {tool_version()}"}
    for key in sorted(checksums):
        stamp[key] = checksums[key]
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        stamp["timestamp"] = moment.isoformat()
    return stamp


def sha256_file(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_header_comments(path: str | os.PathLike) -> dict[str, str]:
    """The leading ``# key: value`` lines of a pipeline text artifact."""
    headers: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition(":")
            if sep:
                headers[key.strip()] = value.strip()
    return headers


def _parser(path: str | os.PathLike) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as handle:
        parser.read_file(handle)
    return parser


def _split_list(raw: str) -> frozenset[str]:
    return frozenset(part.strip() for part in raw.split("|") if part.strip())


def load_rules(path: str | os.PathLike) -> CurationRules:
    """Curation rules from a sectioned config file; absent keys keep the
    defaults. Lists use ``|`` separators since section names contain commas."""
    parser = _parser(path)
    defaults = CurationRules()
    kwargs = {}
    if parser.has_section("sections"):
        section = parser["sections"]
        if "discard" in section:
            kwargs["discard_sections"] = _split_list(section["discard"])
        if "reject" in section:
            kwargs["reject_sections"] = _split_list(section["reject"])
    if parser.has_section("categories"):
        section = parser["categories"]
        if "reject_prefixes" in section:
            kwargs["reject_category_prefixes"] = _split_list(section["reject_prefixes"])
    if parser.has_section("paragraphs"):
        section = parser["paragraphs"]
        if "min_chars" in section:
            kwargs["min_paragraph_chars"] = section.getint("min_chars")
        if "max_chars" in section:
            kwargs["max_paragraph_chars"] = section.getint("max_chars")
        if "min_count" in section:
            kwargs["min_paragraphs"] = section.getint("min_count")
    return CurationRules(
        discard_sections=kwargs.get("discard_sections", defaults.discard_sections),
        reject_sections=kwargs.get("reject_sections", defaults.reject_sections),
        reject_category_prefixes=kwargs.get(
            "reject_category_prefixes", defaults.reject_category_prefixes
        ),
        min_paragraph_chars=kwargs.get("min_paragraph_chars", defaults.min_paragraph_chars),
        max_paragraph_chars=kwargs.get("max_paragraph_chars", defaults.max_paragraph_chars),
        min_paragraphs=kwargs.get("min_paragraphs", defaults.min_paragraphs),
    )


def load_cli_defaults(path: str | os.PathLike) -> dict:
    """Config file sections as a click default map; dotted section names
    (``dataset.merge``) address nested subcommands."""
    parser = _parser(path)
    defaults: dict = {}
    for section in parser.sections():
        target = defaults
        for part in section.split("."):
            target = target.setdefault(part, {})
        for key, value in parser[section].items():
            target[key.replace("-", "_")] = value
    return defaults


def default_rules_text() -> str:
    """A config file mirroring the built-in curation rules, for reference."""
    rules = CurationRules()
    return (
        "[sections]\n"
        f"discard = {'|'.join(sorted(rules.discard_sections))}\n"
        f"reject = {'|'.join(sorted(rules.reject_sections))}\n"
        "\n[categories]\n"
        f"reject_prefixes = {'|'.join(sorted(rules.reject_category_prefixes))}\n"
        "\n[paragraphs]\n"
        f"min_chars = {rules.min_paragraph_chars}\n"
        f"max_chars = {rules.max_paragraph_chars}\n"
        f"min_count = {rules.min_paragraphs}\n"
    )
