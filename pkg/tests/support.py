"""Shared helpers for platform tests: fake clock, quick fixtures."""

from __future__ import annotations

from annoforge.core import AnnotationCore, CoreConfig, MemoryMailer, Role, Status, User
from annoforge.curation import Category, CuratedArticle, Paragraph, paragraph_id
from annoforge.store import Store


class FakeClock:
    """Injectable wall clock; tests advance it explicitly."""

    def __init__(self, start: float = 1_000_000.0):
        self.time = start

    def __call__(self) -> float:
        return self.time

    def advance(self, seconds: float) -> None:
        self.time += seconds


def make_paragraph(title: str, index: int, text: str) -> Paragraph:
    return Paragraph(paragraph_id(title, index, text), title, index, text)


SENTENCES = [
    "Le soleil se lève sur la ville et les habitants commencent leur journée de travail.",
    "La rivière traverse la vallée avant de rejoindre le fleuve près du vieux pont.",
    "Les artisans du quartier fabriquent des meubles réputés dans toute la région.",
    "Un marché se tient chaque semaine sur la place centrale depuis le Moyen Âge.",
    "L'école du village accueille les enfants des communes voisines chaque matin.",
    "Le musée expose une collection de peintures données par un mécène local.",
]


def make_corpus(articles: dict[str, tuple[Category, int]]) -> list[CuratedArticle]:
    """articles: title -> (category, paragraph_count). Texts cycle over SENTENCES."""
    out = []
    for title, (category, count) in articles.items():
        paragraphs = tuple(
            make_paragraph(title, i, SENTENCES[i % len(SENTENCES)]) for i in range(count)
        )
        out.append(CuratedArticle(title=title, category=category, paragraphs=paragraphs))
    return out


def insert_user_fast(
    store: Store,
    email: str,
    role: Role = Role.REGULAR,
    status: Status = Status.OPEN,
    verified: bool = True,
    onboarded: bool = True,
) -> User:
    """Direct insert that skips slow password hashing; for workflow tests only."""
    with store.transaction() as conn:
        cursor = conn.execute(
            "INSERT INTO users (email, password_hash, role, status, email_verified, onboarding_passed, created_at)"
            " VALUES (?, 'x', ?, ?, ?, ?, ?)",
            (email, role.value, status.value, int(verified), int(onboarded), store.now()),
        )
        user_id = cursor.lastrowid
    return User(
        id=user_id,
        email=email,
        role=role,
        status=status,
        created_at=store.now(),
        email_verified=verified,
        onboarding_passed=onboarded,
    )


def make_platform(articles=None, config: CoreConfig | None = None, path=":memory:"):
    """Store + core + clock + mailer, with an optional preloaded corpus."""
    clock = FakeClock()
    store = Store(path, clock=clock)
    mailer = MemoryMailer()
    core = AnnotationCore(store, config or CoreConfig(), mailer=mailer)
    if articles:
        core.import_curated(make_corpus(articles))
    return core, store, clock, mailer


def five_pairs(text: str) -> list[tuple[str, str, int]]:
    """Five valid word-aligned pairs over the paragraph text."""
    words = [w for w in text.split() if len(w) > 3][:5]
    pairs = []
    for i, word in enumerate(words, start=1):
        clean = word.strip(".,'")
        start = text.index(clean)
        pairs.append((f"Question numéro {i} sur le texte ?", clean, start))
    return pairs
