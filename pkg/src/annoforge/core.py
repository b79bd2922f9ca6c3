"""Domain logic of the collection workflow.

Accounts and roles, paragraph leasing, five-pair batch submission, the
additional-answer cycle, flagging, contributor stats, monitoring and
import/export. Every state transition runs inside a store transaction; all
validation errors surface as CoreError with a stable code string.
"""

from __future__ import annotations

import configparser
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Protocol, Sequence

from . import auth
from .config import provenance
from .curation import Category, CuratedArticle, paragraph_id
from .squad import (
    AnswerEntry,
    ArticleEntry,
    Dataset,
    MAX_QUESTION_CHARS,
    ParagraphEntry,
    QaEntry,
)
from .store import Store
from .words import is_word_aligned

logger = logging.getLogger(__name__)

PAIRS_PER_BATCH = 5
ADDITIONAL_ANSWERS_REQUIRED = 2
DISTINCT_CONTRIBUTORS_REQUIRED = 3


class Role(str, Enum):
    REGULAR = "regular"
    ADMIN = "admin"
    SUPERADMIN = "superadmin"


_ROLE_ORDER = {Role.REGULAR: 0, Role.ADMIN: 1, Role.SUPERADMIN: 2}


def role_dominates(actual: Role, required: Role) -> bool:
    return _ROLE_ORDER[actual] >= _ROLE_ORDER[required]


class Status(str, Enum):
    OPEN = "open"
    CERTIFIED = "certified"


class QuestionPhase(str, Enum):
    FRESH = "fresh"
    NEEDS_ANSWERS = "needs_answers"
    COMPLETE = "complete"
    FLAGGED = "flagged"


class FlagReason(str, Enum):
    UNANSWERABLE = "unanswerable"
    AMBIGUOUS = "ambiguous"
    OFFENSIVE = "offensive"


class CoreError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _fail(code: str, message: str):
    raise CoreError(code, message)


_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


class Mailer(Protocol):
    def send(self, to: str, subject: str, body: str) -> None: ...


class LogMailer:
    """Dev mode: the verification/reset link lands in the server log."""

    def send(self, to: str, subject: str, body: str) -> None:
        logger.info("mail to %s: %s | %s", to, subject, body)


class MemoryMailer:
    """Test mode: keeps every message for inspection."""

    def __init__(self):
        self.sent: list[tuple[str, str, str]] = []

    def send(self, to: str, subject: str, body: str) -> None:
        self.sent.append((to, subject, body))


@dataclass(frozen=True)
class User:
    id: int
    email: str
    role: Role
    status: Status
    created_at: float
    email_verified: bool
    onboarding_passed: bool


@dataclass(frozen=True)
class ParagraphView:
    id: str
    article_title: str
    category: str
    index: int
    text: str


@dataclass(frozen=True)
class Lease:
    id: int
    user_id: int
    kind: str  # 'paragraph' | 'question'
    target_id: str
    issued_at: float
    expires_at: float
    renewed: bool


@dataclass(frozen=True)
class QuestionView:
    id: str
    paragraph_id: str
    question: str
    author_id: int | None
    original_answer: tuple[str, int]
    additional_answers: tuple[tuple[int, str, int], ...]  # (user_id, text, start)
    flags: tuple[tuple[int, FlagReason], ...]
    state: QuestionPhase


@dataclass(frozen=True)
class FlagRecord:
    question_id: str
    user_id: int
    reason: FlagReason
    created_at: float


@dataclass(frozen=True)
class MonitoringRow:
    article_title: str
    category: str
    paragraphs_total: int
    paragraphs_annotated: int
    questions_total: int
    questions_complete: int
    flags: int


@dataclass(frozen=True)
class AssessmentQuestion:
    id: str
    text: str
    choices: tuple[str, ...]
    answer_index: int
    mandatory: bool


@dataclass(frozen=True)
class Assessment:
    version: int
    questions: tuple[AssessmentQuestion, ...]


def load_assessment(path) -> Assessment:
    """Read the onboarding quiz from a sectioned key=value file.

    Layout: an ``[assessment]`` section with ``version``, then one
    ``[question:<id>]`` section per question with ``text``, ``choices``
    (pipe-separated), ``answer`` (0-based index into choices) and
    ``mandatory`` (yes/no, default yes).
    """
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as handle:
        parser.read_file(handle)
    version = parser.getint("assessment", "version", fallback=1)
    questions: list[AssessmentQuestion] = []
    for section in parser.sections():
        if not section.startswith("question:"):
            continue
        qid = section.split(":", 1)[1]
        choices = tuple(c.strip() for c in parser.get(section, "choices").split("|"))
        answer = parser.getint(section, "answer")
        if not 0 <= answer < len(choices):
            raise ValueError(f"question {qid!r}: answer index {answer} outside choices")
        questions.append(
            AssessmentQuestion(
                id=qid,
                text=parser.get(section, "text"),
                choices=choices,
                answer_index=answer,
                mandatory=parser.getboolean(section, "mandatory", fallback=True),
            )
        )
    if not questions:
        raise ValueError("assessment defines no questions")
    return Assessment(version=version, questions=tuple(questions))


@dataclass(frozen=True)
class CoreConfig:
    lease_ttl_seconds: float = 30 * 60
    verification_ttl_seconds: float = 48 * 3600
    session_ttl_seconds: float = 24 * 3600
    # Deployment policy: outside guided events anyone verified may annotate;
    # flip this to restrict the annotation mode to certified users.
    require_certified_for_annotation: bool = False
    assessment: Assessment | None = None


class AnnotationCore:
    def __init__(self, store: Store, config: CoreConfig = CoreConfig(), mailer: Mailer | None = None):
        self.store = store
        self.config = config
        self.mailer = mailer or LogMailer()

    # -- helpers -----------------------------------------------------------

    def _now(self) -> float:
        return self.store.now()

    @staticmethod
    def _user_from_row(row) -> User:
        return User(
            id=row["id"],
            email=row["email"],
            role=Role(row["role"]),
            status=Status(row["status"]),
            created_at=row["created_at"],
            email_verified=bool(row["email_verified"]),
            onboarding_passed=bool(row["onboarding_passed"]),
        )

    def _get_user(self, user_id: int) -> User:
        row = self.store.query_one("SELECT * FROM users WHERE id = ?", (user_id,))
        if row is None:
            _fail("UNKNOWN_USER", f"no user with id {user_id}")
        return self._user_from_row(row)

    @staticmethod
    def _lease_from_row(row) -> Lease:
        return Lease(
            id=row["id"],
            user_id=row["user_id"],
            kind=row["kind"],
            target_id=row["target_id"],
            issued_at=row["issued_at"],
            expires_at=row["expires_at"],
            renewed=bool(row["renewed"]),
        )

    def _audit(self, conn, actor_id: int | None, action: str, target: str | None = None, detail: str | None = None):
        conn.execute(
            "INSERT INTO audit_log (at, actor_id, action, target, detail) VALUES (?, ?, ?, ?, ?)",
            (self._now(), actor_id, action, target, detail),
        )

    # -- accounts ----------------------------------------------------------

    def create_user(
        self,
        email: str,
        password: str,
        role: Role = Role.REGULAR,
        status: Status = Status.OPEN,
    ) -> tuple[User, str]:
        """Register an account and issue a single-use verification token."""
        email = email.strip().lower()
        if not _EMAIL_RE.match(email):
            _fail("INVALID_EMAIL", f"not an email address: {email!r}")
        if not password:
            _fail("INVALID_PASSWORD", "password must not be empty")
        password_hash = auth.hash_password(password)
        token = auth.new_token()
        now = self._now()
        with self.store.transaction() as conn:
            existing = conn.execute("SELECT id FROM users WHERE email = ?", (email,)).fetchone()
            if existing is not None:
                _fail("EMAIL_TAKEN", "this email is already registered")
            cursor = conn.execute(
                "INSERT INTO users (email, password_hash, role, status, created_at) VALUES (?, ?, ?, ?, ?)",
                (email, password_hash, role.value, status.value, now),
            )
            user_id = cursor.lastrowid
            conn.execute(
                "INSERT INTO tokens (token, user_id, purpose, expires_at) VALUES (?, ?, 'verify_email', ?)",
                (token, user_id, now + self.config.verification_ttl_seconds),
            )
            self._audit(conn, user_id, "user_created", email)
        self.mailer.send(email, "Confirmez votre adresse", f"Lien de validation : /verify?token={token}")
        return self._get_user(user_id), token

    def _consume_token(self, conn, token: str, purpose: str) -> int:
        row = conn.execute(
            "SELECT * FROM tokens WHERE token = ? AND purpose = ?", (token, purpose)
        ).fetchone()
        if row is None or row["used"]:
            _fail("TOKEN_INVALID", "unknown or already used token")
        if row["expires_at"] <= self._now():
            _fail("TOKEN_EXPIRED", "this token has expired")
        conn.execute("UPDATE tokens SET used = 1 WHERE token = ?", (token,))
        return row["user_id"]

    def verify_email(self, token: str) -> User:
        with self.store.transaction() as conn:
            user_id = self._consume_token(conn, token, "verify_email")
            conn.execute("UPDATE users SET email_verified = 1 WHERE id = ?", (user_id,))
        return self._get_user(user_id)

    def request_password_reset(self, email: str) -> None:
        """Always succeeds; unknown addresses are not revealed to the caller."""
        email = email.strip().lower()
        with self.store.transaction() as conn:
            row = conn.execute("SELECT id FROM users WHERE email = ?", (email,)).fetchone()
            if row is None:
                logger.info("password reset requested for unknown email")
                return
            token = auth.new_token()
            conn.execute(
                "INSERT INTO tokens (token, user_id, purpose, expires_at) VALUES (?, ?, 'reset_password', ?)",
                (token, row["id"], self._now() + self.config.verification_ttl_seconds),
            )
        self.mailer.send(email, "Réinitialisation du mot de passe", f"Lien : /reset?token={token}")

    def reset_password(self, token: str, new_password: str) -> User:
        if not new_password:
            _fail("INVALID_PASSWORD", "password must not be empty")
        password_hash = auth.hash_password(new_password)
        with self.store.transaction() as conn:
            user_id = self._consume_token(conn, token, "reset_password")
            conn.execute("UPDATE users SET password_hash = ? WHERE id = ?", (password_hash, user_id))
        return self._get_user(user_id)

    def authenticate(self, email: str, password: str) -> User:
        email = email.strip().lower()
        row = self.store.query_one("SELECT * FROM users WHERE email = ?", (email,))
        # Hash even for unknown emails so timing does not leak existence.
        stored = row["password_hash"] if row is not None else auth.hash_password("decoy")
        if not auth.verify_password(password, stored) or row is None:
            _fail("BAD_CREDENTIALS", "email or password is wrong")
        if not row["email_verified"]:
            _fail("EMAIL_UNVERIFIED", "confirm your email address first")
        return self._user_from_row(row)

    def create_session(self, user: User) -> tuple[str, float]:
        token = auth.new_token()
        now = self._now()
        expires_at = now + self.config.session_ttl_seconds
        with self.store.transaction() as conn:
            conn.execute(
                "INSERT INTO sessions (token, user_id, created_at, expires_at) VALUES (?, ?, ?, ?)",
                (token, user.id, now, expires_at),
            )
        return token, expires_at

    def resolve_session(self, token: str) -> User | None:
        row = self.store.query_one("SELECT * FROM sessions WHERE token = ?", (token,))
        if row is None or row["expires_at"] <= self._now():
            return None
        return self._get_user(row["user_id"])

    def set_status(self, admin: User, target_id: int, status: Status) -> User:
        if not role_dominates(admin.role, Role.ADMIN):
            _fail("PERMISSION_DENIED", "changing certification requires an admin")
        with self.store.transaction() as conn:
            target = self._get_user(target_id)
            conn.execute("UPDATE users SET status = ? WHERE id = ?", (status.value, target_id))
            self._audit(conn, admin.id, "set_status", target.email, status.value)
        return self._get_user(target_id)

    def set_role(self, admin: User, target_id: int, role: Role) -> User:
        if admin.role is not Role.SUPERADMIN:
            _fail("PERMISSION_DENIED", "changing roles requires the super-admin")
        with self.store.transaction() as conn:
            target = self._get_user(target_id)
            conn.execute("UPDATE users SET role = ? WHERE id = ?", (role.value, target_id))
            self._audit(conn, admin.id, "set_role", target.email, role.value)
        return self._get_user(target_id)

    # -- onboarding --------------------------------------------------------

    def onboarding_definition(self) -> Assessment | None:
        return self.config.assessment

    def onboarding_assess(self, user: User, answers: Mapping[str, int]) -> bool:
        """Grade a submitted answer sheet; a pass is recorded on the account.

        Passing requires every mandatory question to be answered correctly.
        Failing is recorded in the audit log only, so the user can retake.
        """
        assessment = self.config.assessment
        if assessment is None:
            # No quiz configured: the gate is open.
            with self.store.transaction() as conn:
                conn.execute("UPDATE users SET onboarding_passed = 1 WHERE id = ?", (user.id,))
            return True
        known = {q.id for q in assessment.questions}
        for qid in answers:
            if qid not in known:
                _fail("UNKNOWN_QUESTION", f"assessment has no question {qid!r}")
        passed = all(
            answers.get(q.id) == q.answer_index for q in assessment.questions if q.mandatory
        )
        with self.store.transaction() as conn:
            if passed:
                conn.execute("UPDATE users SET onboarding_passed = 1 WHERE id = ?", (user.id,))
            self._audit(conn, user.id, "onboarding", detail="pass" if passed else "fail")
        return passed

    # -- corpus ------------------------------------------------------------

    def import_curated(self, curated: Iterable[CuratedArticle]) -> int:
        """Load curated articles straight from the pipeline."""
        count = 0
        with self.store.transaction() as conn:
            for article in curated:
                conn.execute(
                    "INSERT OR REPLACE INTO articles (title, category) VALUES (?, ?)",
                    (article.title, article.category.value),
                )
                for paragraph in article.paragraphs:
                    conn.execute(
                        "INSERT OR IGNORE INTO paragraphs (id, article_title, idx, text) VALUES (?, ?, ?, ?)",
                        (paragraph.id, article.title, paragraph.index, paragraph.text),
                    )
                    count += 1
        return count

    def import_dataset(self, dataset: Dataset, actor: User | None = None) -> dict:
        """Load a dataset file: articles, paragraphs and any existing questions.

        Articles must carry one of the known category labels. Imported
        questions keep their original answer, have no author, and enter the
        Fresh state: they are served neither as annotation work (their
        paragraph counts as annotated) nor as additional-answer work.
        """
        valid = {c.value for c in Category}
        counts = {"articles": 0, "paragraphs": 0, "questions": 0}
        now = self._now()
        with self.store.transaction() as conn:
            for article in dataset.articles:
                if article.category not in valid:
                    _fail(
                        "UNKNOWN_CATEGORY",
                        f"article {article.title!r} has category {article.category!r}; expected one of {sorted(valid)}",
                    )
            for article in dataset.articles:
                conn.execute(
                    "INSERT OR REPLACE INTO articles (title, category) VALUES (?, ?)",
                    (article.title, article.category),
                )
                counts["articles"] += 1
                for index, paragraph in enumerate(article.paragraphs):
                    pid = paragraph_id(article.title, index, paragraph.context)
                    conn.execute(
                        "INSERT OR IGNORE INTO paragraphs (id, article_title, idx, text) VALUES (?, ?, ?, ?)",
                        (pid, article.title, index, paragraph.context),
                    )
                    counts["paragraphs"] += 1
                    for qa in paragraph.qas:
                        if not qa.answers:
                            _fail("NO_ANSWERS", f"imported qa {qa.id!r} has no answers")
                        first = qa.answers[0]
                        conn.execute(
                            "INSERT OR REPLACE INTO questions (id, paragraph_id, batch_id, author_id, question,"
                            " answer_text, answer_start, state, created_at)"
                            " VALUES (?, ?, NULL, NULL, ?, ?, ?, 'fresh', ?)",
                            (qa.id, pid, qa.question, first.text, first.answer_start, now),
                        )
                        counts["questions"] += 1
            # tool and timestamp describe the producing run; exports mint
            # their own, so only the checksums are worth keeping
            for key, value in (dataset.meta or {}).items():
                if key in ("tool", "timestamp"):
                    continue
                conn.execute(
                    "INSERT OR REPLACE INTO dataset_meta (key, value) VALUES (?, ?)",
                    (key, str(value)),
                )
            self._audit(conn, actor.id if actor else None, "import_dataset", detail=str(counts))
        return counts

    def categories(self) -> list[dict]:
        """Category names with remaining-work counts, stable order."""
        rows = self.store.query(
            """
            SELECT a.category AS category,
                   COUNT(DISTINCT a.title) AS articles,
                   COUNT(p.id) AS paragraphs,
                   SUM(CASE WHEN b.id IS NULL AND NOT EXISTS (
                         SELECT 1 FROM questions q WHERE q.paragraph_id = p.id
                       ) THEN 1 ELSE 0 END) AS paragraphs_available
            FROM articles a
            LEFT JOIN paragraphs p ON p.article_title = a.title
            LEFT JOIN batches b ON b.paragraph_id = p.id
            GROUP BY a.category ORDER BY a.category
            """
        )
        return [
            {
                "category": row["category"],
                "articles": row["articles"],
                "paragraphs": row["paragraphs"],
                "paragraphs_available": row["paragraphs_available"] or 0,
            }
            for row in rows
        ]

    def get_paragraph(self, paragraph_id_: str) -> ParagraphView:
        row = self.store.query_one(
            "SELECT p.*, a.category FROM paragraphs p JOIN articles a ON a.title = p.article_title WHERE p.id = ?",
            (paragraph_id_,),
        )
        if row is None:
            _fail("UNKNOWN_PARAGRAPH", f"no paragraph {paragraph_id_!r}")
        return ParagraphView(
            id=row["id"],
            article_title=row["article_title"],
            category=row["category"],
            index=row["idx"],
            text=row["text"],
        )

    # -- leases ------------------------------------------------------------

    def _active_lease_condition(self) -> str:
        return "released = 0 AND expires_at > ?"

    def _require_annotation_access(self, user: User) -> None:
        if not user.email_verified:
            _fail("EMAIL_UNVERIFIED", "confirm your email address first")
        if not user.onboarding_passed:
            _fail("ONBOARDING_REQUIRED", "pass the onboarding assessment first")
        if self.config.require_certified_for_annotation and user.status is not Status.CERTIFIED:
            _fail("PERMISSION_DENIED", "annotation is restricted to certified users here")

    def lease_next_paragraph(self, user: User, category: str) -> tuple[ParagraphView, Lease]:
        """Hand out the first unworked paragraph of the category, in
        (article title, paragraph index) order, under a fresh lease."""
        self._require_annotation_access(user)
        if category not in {c.value for c in Category}:
            _fail("UNKNOWN_CATEGORY", f"no category named {category!r}")
        now = self._now()
        with self.store.transaction() as conn:
            row = conn.execute(
                f"""
                SELECT p.id FROM paragraphs p
                JOIN articles a ON a.title = p.article_title
                WHERE a.category = ?
                  AND NOT EXISTS (SELECT 1 FROM batches b WHERE b.paragraph_id = p.id)
                  AND NOT EXISTS (SELECT 1 FROM questions q WHERE q.paragraph_id = p.id)
                  AND NOT EXISTS (
                        SELECT 1 FROM leases l
                        WHERE l.kind = 'paragraph' AND l.target_id = p.id AND {self._active_lease_condition()}
                      )
                  AND NOT EXISTS (
                        SELECT 1 FROM batches b2 WHERE b2.paragraph_id = p.id AND b2.user_id = ?
                      )
                ORDER BY p.article_title, p.idx
                LIMIT 1
                """,
                (category, now, user.id),
            ).fetchone()
            if row is None:
                _fail("NO_WORK", f"no paragraph available in category {category!r}")
            lease = self._insert_lease(conn, user, "paragraph", row["id"], now)
        return self.get_paragraph(row["id"]), lease

    def _insert_lease(self, conn, user: User, kind: str, target_id: str, now: float) -> Lease:
        cursor = conn.execute(
            "INSERT INTO leases (user_id, kind, target_id, issued_at, expires_at) VALUES (?, ?, ?, ?, ?)",
            (user.id, kind, target_id, now, now + self.config.lease_ttl_seconds),
        )
        row = conn.execute("SELECT * FROM leases WHERE id = ?", (cursor.lastrowid,)).fetchone()
        return self._lease_from_row(row)

    def _get_active_lease(self, conn, lease_id: int, user: User, kind: str) -> Lease:
        row = conn.execute("SELECT * FROM leases WHERE id = ?", (lease_id,)).fetchone()
        if row is None or row["user_id"] != user.id or row["kind"] != kind:
            _fail("LEASE_NOT_HELD", "no such lease for this user")
        if row["released"] or row["expires_at"] <= self._now():
            _fail("LEASE_EXPIRED", "this lease is no longer active")
        return self._lease_from_row(row)

    def renew_lease(self, user: User, lease_id: int) -> Lease:
        """One extension of a still-active lease; a second renewal is refused."""
        with self.store.transaction() as conn:
            row = conn.execute("SELECT * FROM leases WHERE id = ?", (lease_id,)).fetchone()
            if row is None or row["user_id"] != user.id:
                _fail("LEASE_NOT_HELD", "no such lease for this user")
            if row["released"] or row["expires_at"] <= self._now():
                _fail("LEASE_EXPIRED", "this lease is no longer active")
            if row["renewed"]:
                _fail("LEASE_RENEWED", "a lease can be renewed only once")
            new_expiry = self._now() + self.config.lease_ttl_seconds
            conn.execute("UPDATE leases SET expires_at = ?, renewed = 1 WHERE id = ?", (new_expiry, lease_id))
            updated = conn.execute("SELECT * FROM leases WHERE id = ?", (lease_id,)).fetchone()
        return self._lease_from_row(updated)

    def release_lease(self, user: User, lease_id: int) -> None:
        with self.store.transaction() as conn:
            row = conn.execute("SELECT * FROM leases WHERE id = ?", (lease_id,)).fetchone()
            if row is None or row["user_id"] != user.id:
                _fail("LEASE_NOT_HELD", "no such lease for this user")
            conn.execute("UPDATE leases SET released = 1 WHERE id = ?", (lease_id,))

    # -- annotation --------------------------------------------------------

    def _validate_span(self, text: str, answer_text: str, answer_start: int) -> None:
        if not answer_text:
            _fail("EMPTY_ANSWER", "answer text is empty")
        end = answer_start + len(answer_text)
        if answer_start < 0 or end > len(text) or text[answer_start:end] != answer_text:
            _fail("SPAN_MISMATCH", "answer text does not match the paragraph at that offset")
        if not is_word_aligned(text, answer_start, len(answer_text)):
            _fail("SPAN_NOT_WORD_ALIGNED", "answer must start and end on word boundaries")

    def _validate_question_text(self, question: str) -> None:
        if not question.strip():
            _fail("EMPTY_QUESTION", "question text is empty")
        if len(question) > MAX_QUESTION_CHARS:
            _fail(
                "QUESTION_TOO_LONG",
                f"question is {len(question)} chars, limit {MAX_QUESTION_CHARS}",
            )

    def submit_batch(self, user: User, lease_id: int, pairs: Sequence[tuple[str, str, int]]) -> list[str]:
        """Store the five pairs of a leased paragraph; returns new question ids.

        ``pairs`` entries are (question, answer_text, answer_start). The lease
        is consumed on success. Questions start in NeedsAnswers.
        """
        if len(pairs) != PAIRS_PER_BATCH:
            _fail("BATCH_INCOMPLETE", f"exactly {PAIRS_PER_BATCH} pairs required, got {len(pairs)}")
        now = self._now()
        with self.store.transaction() as conn:
            lease = self._get_active_lease(conn, lease_id, user, kind="paragraph")
            paragraph = self.get_paragraph(lease.target_id)
            for question, answer_text, answer_start in pairs:
                self._validate_question_text(question)
                self._validate_span(paragraph.text, answer_text, answer_start)
            existing = conn.execute(
                "SELECT 1 FROM batches WHERE paragraph_id = ?", (paragraph.id,)
            ).fetchone()
            if existing is not None:
                _fail("ALREADY_ANNOTATED", "this paragraph already has a batch")
            cursor = conn.execute(
                "INSERT INTO batches (paragraph_id, user_id, submitted_at) VALUES (?, ?, ?)",
                (paragraph.id, user.id, now),
            )
            batch_id = cursor.lastrowid
            question_ids = []
            for k, (question, answer_text, answer_start) in enumerate(pairs, start=1):
                qid = f"{paragraph.id}-q{k}"
                conn.execute(
                    "INSERT INTO questions (id, paragraph_id, batch_id, author_id, question, answer_text,"
                    " answer_start, state, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, 'needs_answers', ?)",
                    (qid, paragraph.id, batch_id, user.id, question, answer_text, answer_start, now),
                )
                question_ids.append(qid)
            conn.execute("UPDATE leases SET released = 1 WHERE id = ?", (lease_id,))
        return question_ids

    # -- additional answers --------------------------------------------------

    def next_additional_task(self, user: User) -> tuple[ParagraphView, QuestionView, Lease]:
        """Serve a question needing answers that this user may still answer."""
        if user.status is not Status.CERTIFIED:
            _fail("PERMISSION_DENIED", "the additional-answer mode is for certified users")
        if not user.email_verified:
            _fail("EMAIL_UNVERIFIED", "confirm your email address first")
        now = self._now()
        with self.store.transaction() as conn:
            row = conn.execute(
                f"""
                SELECT q.id FROM questions q
                JOIN paragraphs p ON p.id = q.paragraph_id
                WHERE q.state = 'needs_answers'
                  AND (q.author_id IS NULL OR q.author_id != ?)
                  AND (SELECT COUNT(*) FROM additional_answers aa WHERE aa.question_id = q.id) < ?
                  AND NOT EXISTS (
                        SELECT 1 FROM additional_answers aa2
                        WHERE aa2.question_id = q.id AND aa2.user_id = ?
                      )
                  AND NOT EXISTS (
                        SELECT 1 FROM leases l
                        WHERE l.kind = 'question' AND l.target_id = q.id AND {self._active_lease_condition()}
                      )
                ORDER BY p.article_title, p.idx, q.id
                LIMIT 1
                """,
                (user.id, ADDITIONAL_ANSWERS_REQUIRED, user.id, now),
            ).fetchone()
            if row is None:
                _fail("NO_WORK", "no question currently needs an additional answer from you")
            lease = self._insert_lease(conn, user, "question", row["id"], now)
            question = self._question_view(conn, row["id"])
        return self.get_paragraph(question.paragraph_id), question, lease

    def _question_view(self, conn, question_id: str) -> QuestionView:
        row = conn.execute("SELECT * FROM questions WHERE id = ?", (question_id,)).fetchone()
        if row is None:
            _fail("UNKNOWN_QUESTION", f"no question {question_id!r}")
        answers = conn.execute(
            "SELECT user_id, answer_text, answer_start FROM additional_answers"
            " WHERE question_id = ? ORDER BY submitted_at, id",
            (question_id,),
        ).fetchall()
        flags = conn.execute(
            "SELECT user_id, reason FROM flags WHERE question_id = ? ORDER BY created_at, id",
            (question_id,),
        ).fetchall()
        return QuestionView(
            id=row["id"],
            paragraph_id=row["paragraph_id"],
            question=row["question"],
            author_id=row["author_id"],
            original_answer=(row["answer_text"], row["answer_start"]),
            additional_answers=tuple((a["user_id"], a["answer_text"], a["answer_start"]) for a in answers),
            flags=tuple((f["user_id"], FlagReason(f["reason"])) for f in flags),
            state=QuestionPhase(row["state"]),
        )

    def question_state(self, question_id: str) -> QuestionView:
        with self.store.transaction() as conn:
            return self._question_view(conn, question_id)

    def _find_question_lease(self, conn, user: User, question_id: str) -> Lease:
        row = conn.execute(
            f"SELECT * FROM leases WHERE kind = 'question' AND target_id = ? AND user_id = ?"
            f" AND {self._active_lease_condition()} ORDER BY id DESC LIMIT 1",
            (question_id, user.id, self._now()),
        ).fetchone()
        if row is None:
            _fail("LEASE_NOT_HELD", "this question is not currently leased to you")
        return self._lease_from_row(row)

    def submit_additional_answer(self, user: User, question_id: str, answer_text: str, answer_start: int) -> QuestionView:
        """Append one additional answer; the question completes at two
        additional answers from three distinct contributors overall."""
        with self.store.transaction() as conn:
            lease = self._find_question_lease(conn, user, question_id)
            question = self._question_view(conn, question_id)
            if question.state is not QuestionPhase.NEEDS_ANSWERS:
                _fail("WRONG_STATE", f"question is {question.state.value}, not answerable")
            contributors = {question.author_id} | {uid for uid, _, _ in question.additional_answers}
            if user.id in contributors:
                _fail("DUPLICATE_CONTRIBUTOR", "you have already contributed to this question")
            paragraph = self.get_paragraph(question.paragraph_id)
            self._validate_span(paragraph.text, answer_text, answer_start)
            conn.execute(
                "INSERT INTO additional_answers (question_id, user_id, answer_text, answer_start, submitted_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (question_id, user.id, answer_text, answer_start, self._now()),
            )
            conn.execute("UPDATE leases SET released = 1 WHERE id = ?", (lease.id,))
            updated = self._question_view(conn, question_id)
            distinct = {uid for uid, _, _ in updated.additional_answers}
            if updated.author_id is not None:
                distinct.add(updated.author_id)
            if (
                len(updated.additional_answers) == ADDITIONAL_ANSWERS_REQUIRED
                and len(distinct) >= DISTINCT_CONTRIBUTORS_REQUIRED
            ):
                conn.execute("UPDATE questions SET state = 'complete' WHERE id = ?", (question_id,))
                updated = self._question_view(conn, question_id)
            return updated

    def flag_question(self, user: User, question_id: str, reason: FlagReason | str) -> FlagRecord:
        """Flag the question currently served to this user; it leaves the pool."""
        try:
            reason = FlagReason(reason)
        except ValueError:
            _fail("INVALID_REASON", f"flag reason must be one of {[r.value for r in FlagReason]}")
        if user.status is not Status.CERTIFIED:
            _fail("PERMISSION_DENIED", "flagging happens in the certified additional-answer mode")
        now = self._now()
        with self.store.transaction() as conn:
            lease = self._find_question_lease(conn, user, question_id)
            existing = conn.execute(
                "SELECT 1 FROM flags WHERE question_id = ? AND user_id = ?", (question_id, user.id)
            ).fetchone()
            if existing is not None:
                _fail("DUPLICATE_FLAG", "you have already flagged this question")
            conn.execute(
                "INSERT INTO flags (question_id, user_id, reason, created_at) VALUES (?, ?, ?, ?)",
                (question_id, user.id, reason.value, now),
            )
            conn.execute("UPDATE questions SET state = 'flagged' WHERE id = ?", (question_id,))
            conn.execute("UPDATE leases SET released = 1 WHERE id = ?", (lease.id,))
        return FlagRecord(question_id=question_id, user_id=user.id, reason=reason, created_at=now)

    # -- stats, monitoring, export ------------------------------------------

    def contributor_stats(self, user: User) -> dict:
        row = self.store.query_one(
            """
            SELECT
              (SELECT COUNT(*) FROM batches WHERE user_id = :uid) AS paragraphs_completed,
              (SELECT COUNT(*) FROM questions WHERE author_id = :uid) AS questions_written,
              (SELECT COUNT(*) FROM additional_answers WHERE user_id = :uid) AS additional_answers,
              (SELECT COUNT(*) FROM flags WHERE user_id = :uid) AS flags
            """,
            {"uid": user.id},
        )
        return {
            "paragraphs_completed": row["paragraphs_completed"],
            "questions_written": row["questions_written"],
            "additional_answers": row["additional_answers"],
            "flags": row["flags"],
        }

    def monitoring_report(
        self,
        category: str | None = None,
        cursor: str | None = None,
        page_size: int = 100,
    ) -> dict:
        """Per-article progress rows plus per-category totals.

        Rows are ordered by title and paged; ``next_cursor`` is an opaque
        string to pass back, absent on the last page. Totals cover the whole
        filter, not just the page.
        """
        after = ""
        if cursor is not None:
            after = _decode_cursor(cursor)
        params: list = [after]
        where = "a.title > ?"
        if category is not None:
            where += " AND a.category = ?"
            params.append(category)
        rows = self.store.query(
            f"""
            SELECT a.title AS article_title, a.category AS category,
                   COUNT(p.id) AS paragraphs_total,
                   SUM(CASE WHEN b.id IS NOT NULL THEN 1 ELSE 0 END) AS paragraphs_annotated,
                   (SELECT COUNT(*) FROM questions q JOIN paragraphs p2 ON p2.id = q.paragraph_id
                     WHERE p2.article_title = a.title) AS questions_total,
                   (SELECT COUNT(*) FROM questions q JOIN paragraphs p2 ON p2.id = q.paragraph_id
                     WHERE p2.article_title = a.title AND q.state = 'complete') AS questions_complete,
                   (SELECT COUNT(*) FROM flags f JOIN questions q2 ON q2.id = f.question_id
                     JOIN paragraphs p3 ON p3.id = q2.paragraph_id
                     WHERE p3.article_title = a.title) AS flags
            FROM articles a
            LEFT JOIN paragraphs p ON p.article_title = a.title
            LEFT JOIN batches b ON b.paragraph_id = p.id
            WHERE {where}
            GROUP BY a.title ORDER BY a.title
            LIMIT ?
            """,
            params + [page_size + 1],
        )
        page = rows[:page_size]
        out_rows = [
            MonitoringRow(
                article_title=r["article_title"],
                category=r["category"],
                paragraphs_total=r["paragraphs_total"],
                paragraphs_annotated=r["paragraphs_annotated"] or 0,
                questions_total=r["questions_total"],
                questions_complete=r["questions_complete"],
                flags=r["flags"],
            )
            for r in page
        ]
        totals_where = "1=1" if category is None else "a.category = ?"
        totals = self.store.query(
            f"""
            SELECT a.category AS category,
                   COUNT(DISTINCT a.title) AS articles,
                   COUNT(p.id) AS paragraphs_total,
                   SUM(CASE WHEN b.id IS NOT NULL THEN 1 ELSE 0 END) AS paragraphs_annotated
            FROM articles a
            LEFT JOIN paragraphs p ON p.article_title = a.title
            LEFT JOIN batches b ON b.paragraph_id = p.id
            WHERE {totals_where}
            GROUP BY a.category ORDER BY a.category
            """,
            [] if category is None else [category],
        )
        result = {
            "rows": out_rows,
            "category_totals": [
                {
                    "category": t["category"],
                    "articles": t["articles"],
                    "paragraphs_total": t["paragraphs_total"],
                    "paragraphs_annotated": t["paragraphs_annotated"] or 0,
                }
                for t in totals
            ],
        }
        if len(rows) > page_size:
            result["next_cursor"] = _encode_cursor(page[-1]["article_title"])
        return result

    def export_dataset(self, only_complete: bool = False, include_flagged: bool = False) -> Dataset:
        """Assemble the collected data as a Dataset.

        Default: one (original) answer per question, flagged questions left
        out. With only_complete, only Complete questions are exported and each
        carries its three answers, original first then additional ones in
        submission order. Paragraphs without exported questions are skipped,
        as are articles left empty.
        """
        articles_rows = self.store.query("SELECT * FROM articles ORDER BY title")
        articles: list[ArticleEntry] = []
        for article_row in articles_rows:
            paragraphs_rows = self.store.query(
                "SELECT * FROM paragraphs WHERE article_title = ? ORDER BY idx",
                (article_row["title"],),
            )
            paragraphs: list[ParagraphEntry] = []
            for paragraph_row in paragraphs_rows:
                question_rows = self.store.query(
                    "SELECT * FROM questions WHERE paragraph_id = ? ORDER BY id",
                    (paragraph_row["id"],),
                )
                qas: list[QaEntry] = []
                for q in question_rows:
                    state = QuestionPhase(q["state"])
                    if state is QuestionPhase.FLAGGED and not include_flagged:
                        continue
                    if only_complete and state is not QuestionPhase.COMPLETE:
                        continue
                    answers = [AnswerEntry(q["answer_text"], q["answer_start"])]
                    if only_complete:
                        extra = self.store.query(
                            "SELECT answer_text, answer_start FROM additional_answers"
                            " WHERE question_id = ? ORDER BY submitted_at, id",
                            (q["id"],),
                        )
                        answers.extend(AnswerEntry(e["answer_text"], e["answer_start"]) for e in extra)
                    qas.append(QaEntry(q["id"], q["question"], answers))
                if qas:
                    paragraphs.append(ParagraphEntry(paragraph_row["text"], qas))
            if paragraphs:
                articles.append(ArticleEntry(article_row["title"], paragraphs, article_row["category"]))
        stored = self.store.query("SELECT key, value FROM dataset_meta")
        meta = provenance(**{row["key"]: row["value"] for row in stored})
        return Dataset(articles=articles, meta=meta)


def _encode_cursor(title: str) -> str:
    import base64

    return base64.urlsafe_b64encode(title.encode("utf-8")).decode("ascii")


def _decode_cursor(cursor: str) -> str:
    import base64

    try:
        raw = base64.b64decode(cursor.encode("ascii"), altchars=b"-_", validate=True)
        return raw.decode("utf-8")
    except Exception:
        raise CoreError("BAD_CURSOR", "cursor is not valid") from None
