"""Streaming reader for MediaWiki pages-articles XML dumps.

Pages are yielded one at a time and parsed subtrees are discarded as soon as
they are consumed, so memory stays flat in the number of pages. Dumps may be
bz2-compressed; detection is by magic bytes, not filename.
"""

from __future__ import annotations

import bz2
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterator

from .wikitext import extract_internal_links, normalize_title, parse_redirect

ARTICLE_NAMESPACE = 0

_BZ2_MAGIC = b"BZh"


class DumpParseError(Exception):
    """Malformed dump XML; carries the byte offset where parsing stopped."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class RawArticle:
    """One page as read from the dump.

    ``categories`` hold the names from ``[[Catégorie:...]]`` links with the
    prefix removed. ``redirect_target`` is set either from the dump's
    ``<redirect>`` element or from ``#REDIRECT``-style wikitext.
    """

    title: str
    namespace: int
    wikitext: str
    categories: frozenset[str] = field(default_factory=frozenset)
    redirect_target: str | None = None

    @property
    def is_redirect(self) -> bool:
        return self.redirect_target is not None


class _CountingReader(io.RawIOBase):
    """Wraps a binary stream and tracks how many bytes were consumed."""

    def __init__(self, raw: BinaryIO):
        self._raw = raw
        self.bytes_read = 0

    def readable(self) -> bool:
        return True

    def readinto(self, b) -> int:
        data = self._raw.read(len(b))
        n = len(data)
        b[:n] = data
        self.bytes_read += n
        return n


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _open_stream(source, accept_compressed: bool) -> tuple[BinaryIO, _CountingReader]:
    if isinstance(source, (str, Path)):
        raw: BinaryIO = open(source, "rb")
    else:
        raw = source
    counter = _CountingReader(raw)
    buffered = io.BufferedReader(counter)
    if buffered.peek(3)[:3] == _BZ2_MAGIC:
        if not accept_compressed:
            raise ValueError("compressed dump given but accept_compressed is False")
        return bz2.open(buffered, "rb"), counter
    return buffered, counter


def parse_dump(source, accept_compressed: bool = True) -> Iterator[RawArticle]:
    """Yield every page of a dump as a RawArticle, in file order.

    ``source`` is a path or a binary file object. All namespaces are yielded;
    callers filter on ``namespace`` themselves. Malformed XML raises
    DumpParseError with the byte offset reached in the underlying file.
    """
    stream, counter = _open_stream(source, accept_compressed)
    close_after = isinstance(source, (str, Path))
    try:
        yield from _iter_pages(stream, counter)
    finally:
        if close_after:
            stream.close()


def _iter_pages(stream: BinaryIO, counter: _CountingReader) -> Iterator[RawArticle]:
    root = None
    try:
        for event, elem in ET.iterparse(stream, events=("start", "end")):
            if event == "start":
                if root is None:
                    root = elem
                continue
            if _local_name(elem.tag) != "page":
                continue
            article = _read_page(elem)
            elem.clear()
            if root is not None:
                # Drop the reference the root keeps to the finished page.
                for child in list(root):
                    root.remove(child)
            if article is not None:
                yield article
    except ET.ParseError as exc:
        raise DumpParseError(f"malformed dump XML: {exc}", counter.bytes_read) from exc


def _read_page(page: ET.Element) -> RawArticle | None:
    title = ""
    namespace = ARTICLE_NAMESPACE
    wikitext = ""
    redirect: str | None = None
    for child in page:
        name = _local_name(child.tag)
        if name == "title":
            title = normalize_title(child.text or "")
        elif name == "ns":
            try:
                namespace = int((child.text or "0").strip())
            except ValueError:
                namespace = ARTICLE_NAMESPACE
        elif name == "redirect":
            redirect = normalize_title(child.attrib.get("title", "")) or None
        elif name == "revision":
            for part in child:
                if _local_name(part.tag) == "text":
                    wikitext = part.text or ""
    if not title:
        return None
    if redirect is None:
        redirect = parse_redirect(wikitext)
    _, categories = extract_internal_links(wikitext)
    return RawArticle(
        title=title,
        namespace=namespace,
        wikitext=wikitext,
        categories=frozenset(categories),
        redirect_target=redirect,
    )
