"""Directed link graph over article titles, with redirect resolution.

Node ids are assigned in sorted title order so that the same input always
produces the same graph, whatever order pages were streamed in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)


@dataclass
class LinkGraph:
    titles: list[str]
    out_edges: list[list[int]]

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.titles)}

    @property
    def node_count(self) -> int:
        return len(self.titles)

    @property
    def edge_count(self) -> int:
        return sum(len(e) for e in self.out_edges)


def resolve_redirect(title: str, redirects: Mapping[str, str]) -> str | None:
    """Follow redirect hops to a final title; cycles resolve to nothing."""
    seen = {title}
    current = title
    while current in redirects:
        current = redirects[current]
        if current in seen:
            logger.warning("redirect cycle through %r; links to it are dropped", title)
            return None
        seen.add(current)
    return current


def build_link_graph(
    pages: Iterable[tuple[str, Iterable[str]]],
    redirects: Mapping[str, str] | None = None,
) -> LinkGraph:
    """Build the graph from (title, outlinks) pairs.

    Redirects are resolved transitively before edges are added. Links to
    titles that are not themselves pages are dropped, as are self-loops and
    duplicate edges. Redirect pages are not nodes.
    """
    redirects = dict(redirects or {})
    raw: dict[str, list[str]] = {}
    for title, outlinks in pages:
        raw[title] = list(outlinks)
    titles = sorted(t for t in raw if t not in redirects)
    index = {t: i for i, t in enumerate(titles)}

    resolved_cache: dict[str, str | None] = {}

    def resolve(t: str) -> str | None:
        if t not in resolved_cache:
            resolved_cache[t] = resolve_redirect(t, redirects)
        return resolved_cache[t]

    out_edges: list[list[int]] = []
    for title in titles:
        seen: set[int] = set()
        edges: list[int] = []
        for target in raw[title]:
            final = resolve(target)
            if final is None or final == title:
                continue
            dst = index.get(final)
            if dst is None or dst in seen:
                continue
            seen.add(dst)
            edges.append(dst)
        edges.sort()
        out_edges.append(edges)
    return LinkGraph(titles=titles, out_edges=out_edges)


def write_edge_list(graph: LinkGraph, path, header: Mapping[str, str] | None = None) -> None:
    """Serialize to a line-oriented text format.

    Layout: optional ``# key: value`` comment lines, then ``nodes <n>``,
    one ``<id>\\t<title>`` line per node, ``edges <m>``, and one
    ``<src>\\t<dst>`` line per edge. UTF-8 with \\n line endings.
    """
    lines: list[str] = []
    for key, value in (header or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"nodes {graph.node_count}")
    for i, title in enumerate(graph.titles):
        lines.append(f"{i}\t{title}")
    lines.append(f"edges {graph.edge_count}")
    for src, targets in enumerate(graph.out_edges):
        for dst in targets:
            lines.append(f"{src}\t{dst}")
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def read_edge_list(path) -> LinkGraph:
    """Read a graph written by write_edge_list, ignoring comment lines."""
    lines = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    pos = 0
    if not lines[pos].startswith("nodes "):
        raise ValueError("expected 'nodes <n>' line")
    n = int(lines[pos].split()[1])
    pos += 1
    titles: list[str] = []
    for _ in range(n):
        ident, title = lines[pos].split("\t", 1)
        if int(ident) != len(titles):
            raise ValueError(f"node ids must be sequential, got {ident}")
        titles.append(title)
        pos += 1
    if not lines[pos].startswith("edges "):
        raise ValueError("expected 'edges <m>' line")
    m = int(lines[pos].split()[1])
    pos += 1
    out_edges: list[list[int]] = [[] for _ in range(n)]
    for _ in range(m):
        src_s, dst_s = lines[pos].split("\t")
        src, dst = int(src_s), int(dst_s)
        if not (0 <= src < n and 0 <= dst < n):
            raise ValueError(f"edge ({src}, {dst}) out of range")
        out_edges[src].append(dst)
        pos += 1
    return LinkGraph(titles=titles, out_edges=out_edges)
