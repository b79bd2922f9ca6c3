"""Wikitext structure extraction: section trees, internal links, markup removal.

This is deliberately not a full wikitext renderer. Templates are dropped
wholesale (and links inside them are ignored), tables and reference markers
are removed, and links render to their labels. That is enough for paragraph
curation and link-graph building, and the behaviour is fixed so that runs are
reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

CATEGORY_PREFIXES = ("catégorie", "category")
FILE_PREFIXES = ("fichier", "file", "image", "média", "media")

_HEADING_RE = re.compile(r"^(={2,6})(.+?)\1[ \t]*$", re.MULTILINE)
_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_REF_RE = re.compile(r"<ref[^>/]*/\s*>|<ref[^>]*>.*?</ref\s*>", re.DOTALL | re.IGNORECASE)
_TAG_RE = re.compile(r"</?[a-zA-Z][^>\n]*>")
_TABLE_RE = re.compile(r"^\{\|.*?^\|\}[ \t]*$", re.DOTALL | re.MULTILINE)
_QUOTES_RE = re.compile(r"'{2,}")
_LIST_MARKER_RE = re.compile(r"^[*#:;]+\s*", re.MULTILINE)
_REDIRECT_RE = re.compile(r"^\s*#(?:REDIRECT|REDIRECTION)\s*:?\s*\[\[([^\]|#]+)", re.IGNORECASE)


def normalize_title(title: str) -> str:
    """Canonical page title: underscores to spaces, collapsed whitespace, first letter uppercased."""
    t = " ".join(title.replace("_", " ").split())
    if not t:
        return t
    return t[0].upper() + t[1:]


@dataclass
class SectionNode:
    """One section of a page; the root holds the lead text with an empty heading."""

    heading: str
    level: int
    body: str = ""
    children: list["SectionNode"] = field(default_factory=list)

    def walk(self):
        """Yield this node and all descendants, depth-first in document order."""
        yield self
        for child in self.children:
            yield from child.walk()

    def text(self) -> str:
        """Depth-first concatenation of bodies: the page text minus heading lines."""
        return "".join(node.body for node in self.walk())


def split_sections(wikitext: str) -> SectionNode:
    """Parse ``== Heading ==`` markup (2..6 equals) into a section tree.

    The body of each node is the verbatim slice between its heading line and
    the next one, so concatenating bodies depth-first reproduces the page
    text with heading lines removed. Markup that never forms a valid heading
    line leaves everything in the root body.
    """
    root = SectionNode(heading="", level=1)
    matches = list(_HEADING_RE.finditer(wikitext))
    if not matches:
        root.body = wikitext
        return root

    root.body = wikitext[: matches[0].start()]
    stack = [root]
    for i, m in enumerate(matches):
        level = len(m.group(1))
        body_start = m.end()
        if body_start < len(wikitext) and wikitext[body_start] == "\n":
            body_start += 1
        body_end = matches[i + 1].start() if i + 1 < len(matches) else len(wikitext)
        node = SectionNode(heading=m.group(2).strip(), level=level, body=wikitext[body_start:body_end])
        while len(stack) > 1 and stack[-1].level >= level:
            stack.pop()
        stack[-1].children.append(node)
        stack.append(node)
    return root


def _strip_templates(text: str) -> str:
    """Remove {{...}} blocks, including nested ones; unbalanced braces are left as-is."""
    out: list[str] = []
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        if text.startswith("{{", i):
            depth += 1
            i += 2
        elif text.startswith("}}", i) and depth > 0:
            depth -= 1
            i += 2
        else:
            if depth == 0:
                out.append(text[i])
            i += 1
    return "".join(out)


def _iter_link_spans(text: str):
    """Yield (inner, start, end) for each balanced [[...]] with nesting support.

    An unbalanced ``[[`` is skipped and scanning resumes right after it, so the
    remainder of the text is still processed.
    """
    i = 0
    n = len(text)
    while i < n:
        start = text.find("[[", i)
        if start < 0:
            return
        depth = 1
        j = start + 2
        while j < n and depth > 0:
            if text.startswith("[[", j):
                depth += 1
                j += 2
            elif text.startswith("]]", j):
                depth -= 1
                j += 2
            else:
                j += 1
        if depth != 0:
            i = start + 2
            continue
        yield text[start + 2 : j - 2], start, j
        i = j


def _link_target_prefix(target: str) -> str:
    head, sep, _ = target.partition(":")
    return head.strip().lower() if sep else ""


def extract_internal_links(wikitext: str) -> tuple[list[str], set[str]]:
    """Collect outgoing article links and category names from a page.

    Links inside templates are ignored. ``[[Target|label]]`` keeps the target,
    section anchors after ``#`` are stripped, file/image links are dropped and
    ``[[Catégorie:X]]`` feeds the category set (prefix removed). Outlinks are
    deduplicated preserving first occurrence.
    """
    text = _COMMENT_RE.sub("", wikitext)
    text = _strip_templates(text)
    outlinks: dict[str, None] = {}
    categories: set[str] = set()
    for inner, _, _ in _iter_link_spans(text):
        target = inner.split("|", 1)[0].strip()
        if target.startswith(":"):
            target = target[1:].strip()
        prefix = _link_target_prefix(target)
        if prefix in CATEGORY_PREFIXES:
            name = target.partition(":")[2].strip()
            if name:
                categories.add(name)
            continue
        if prefix in FILE_PREFIXES:
            continue
        target = target.split("#", 1)[0]
        title = normalize_title(target)
        if title:
            outlinks.setdefault(title)
    return list(outlinks), categories


def _render_link(inner: str) -> str:
    target = inner.split("|", 1)[0].strip()
    prefix = _link_target_prefix(target.lstrip(":"))
    if prefix in FILE_PREFIXES:
        return ""
    label = inner.rsplit("|", 1)[-1] if "|" in inner else inner.split("#", 1)[0]
    if prefix in CATEGORY_PREFIXES and "|" not in inner:
        return ""
    return label.strip()


def strip_markup(wikitext: str) -> str:
    """Reduce wikitext to plain paragraph text.

    Removes comments, reference markers, templates, tables and html-ish tags;
    renders links to their labels; drops bold/italic quotes and list markers.
    Blank-line structure is preserved so paragraph segmentation can act on the
    result.
    """
    text = _COMMENT_RE.sub("", wikitext)
    text = _REF_RE.sub("", text)
    text = _strip_templates(text)
    text = _TABLE_RE.sub("", text)
    pieces: list[str] = []
    last = 0
    for inner, start, end in _iter_link_spans(text):
        pieces.append(text[last:start])
        pieces.append(_render_link(inner))
        last = end
    pieces.append(text[last:])
    text = "".join(pieces)
    text = _TAG_RE.sub("", text)
    text = _QUOTES_RE.sub("", text)
    text = _LIST_MARKER_RE.sub("", text)
    return text


def parse_redirect(wikitext: str) -> str | None:
    """Return the redirect target title for ``#REDIRECT [[X]]`` pages, else None."""
    m = _REDIRECT_RE.match(wikitext or "")
    if not m:
        return None
    return normalize_title(m.group(1))
