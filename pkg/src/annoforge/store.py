"""SQLite-backed store with versioned, forward-only migrations.

Writes happen inside BEGIN IMMEDIATE transactions so concurrent writers
serialize at the database level; a process-local lock keeps one writer per
connection. The wall clock is injected so lease and token expiry are
testable without sleeping.
"""

from __future__ import annotations

import sqlite3
import threading
import time
from contextlib import contextmanager
from pathlib import Path

MIGRATIONS: list[str] = [
    # 1: initial schema
    """
    CREATE TABLE users (
        id INTEGER PRIMARY KEY,
        email TEXT NOT NULL UNIQUE,
        password_hash TEXT NOT NULL,
        role TEXT NOT NULL CHECK (role IN ('regular', 'admin', 'superadmin')),
        status TEXT NOT NULL CHECK (status IN ('open', 'certified')),
        email_verified INTEGER NOT NULL DEFAULT 0,
        onboarding_passed INTEGER NOT NULL DEFAULT 0,
        created_at REAL NOT NULL
    );
    CREATE TABLE tokens (
        token TEXT PRIMARY KEY,
        user_id INTEGER NOT NULL REFERENCES users(id),
        purpose TEXT NOT NULL CHECK (purpose IN ('verify_email', 'reset_password')),
        expires_at REAL NOT NULL,
        used INTEGER NOT NULL DEFAULT 0
    );
    CREATE TABLE sessions (
        token TEXT PRIMARY KEY,
        user_id INTEGER NOT NULL REFERENCES users(id),
        created_at REAL NOT NULL,
        expires_at REAL NOT NULL
    );
    CREATE TABLE articles (
        title TEXT PRIMARY KEY,
        category TEXT NOT NULL
    );
    CREATE TABLE paragraphs (
        id TEXT PRIMARY KEY,
        article_title TEXT NOT NULL REFERENCES articles(title),
        idx INTEGER NOT NULL,
        text TEXT NOT NULL,
        UNIQUE (article_title, idx)
    );
    CREATE TABLE leases (
        id INTEGER PRIMARY KEY,
        user_id INTEGER NOT NULL REFERENCES users(id),
        kind TEXT NOT NULL CHECK (kind IN ('paragraph', 'question')),
        target_id TEXT NOT NULL,
        issued_at REAL NOT NULL,
        expires_at REAL NOT NULL,
        renewed INTEGER NOT NULL DEFAULT 0,
        released INTEGER NOT NULL DEFAULT 0
    );
    CREATE INDEX leases_by_target ON leases (kind, target_id) WHERE released = 0;
    CREATE INDEX leases_by_user ON leases (user_id) WHERE released = 0;
    CREATE TABLE batches (
        id INTEGER PRIMARY KEY,
        paragraph_id TEXT NOT NULL UNIQUE REFERENCES paragraphs(id),
        user_id INTEGER NOT NULL REFERENCES users(id),
        submitted_at REAL NOT NULL
    );
    CREATE TABLE questions (
        id TEXT PRIMARY KEY,
        paragraph_id TEXT NOT NULL REFERENCES paragraphs(id),
        batch_id INTEGER REFERENCES batches(id),
        author_id INTEGER REFERENCES users(id),
        question TEXT NOT NULL,
        answer_text TEXT NOT NULL,
        answer_start INTEGER NOT NULL,
        state TEXT NOT NULL CHECK (state IN ('fresh', 'needs_answers', 'complete', 'flagged')),
        created_at REAL NOT NULL
    );
    CREATE INDEX questions_by_paragraph ON questions (paragraph_id);
    CREATE INDEX questions_by_state ON questions (state);
    CREATE TABLE additional_answers (
        id INTEGER PRIMARY KEY,
        question_id TEXT NOT NULL REFERENCES questions(id),
        user_id INTEGER NOT NULL REFERENCES users(id),
        answer_text TEXT NOT NULL,
        answer_start INTEGER NOT NULL,
        submitted_at REAL NOT NULL,
        UNIQUE (question_id, user_id)
    );
    CREATE TABLE flags (
        id INTEGER PRIMARY KEY,
        question_id TEXT NOT NULL REFERENCES questions(id),
        user_id INTEGER NOT NULL REFERENCES users(id),
        reason TEXT NOT NULL CHECK (reason IN ('unanswerable', 'ambiguous', 'offensive')),
        created_at REAL NOT NULL,
        UNIQUE (question_id, user_id)
    );
    CREATE TABLE audit_log (
        id INTEGER PRIMARY KEY,
        at REAL NOT NULL,
        actor_id INTEGER,
        action TEXT NOT NULL,
        target TEXT,
        detail TEXT
    );
    """,
    # 2: checksums from imported files, replayed into exports
    """
    CREATE TABLE dataset_meta (
        key TEXT PRIMARY KEY,
        value TEXT NOT NULL
    );
    """,
]


class Store:
    """One sqlite connection plus transaction and clock management.

    A single Store may be shared across threads; the internal lock serializes
    its writers while file-level locking coordinates separate Store instances
    on the same database file.
    """

    def __init__(self, path: str | Path = ":memory:", clock=time.time):
        self.path = str(path)
        self.clock = clock
        self._conn = sqlite3.connect(self.path, check_same_thread=False, isolation_level=None)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        if self.path != ":memory:":
            self._conn.execute("PRAGMA journal_mode = WAL")
            self._conn.execute("PRAGMA busy_timeout = 10000")
        self._lock = threading.RLock()
        self._txn_depth = 0
        self._migrate()

    def now(self) -> float:
        return self.clock()

    @contextmanager
    def transaction(self):
        """Serialized read-modify-write scope; nested uses join the outer one."""
        with self._lock:
            if self._txn_depth > 0:
                self._txn_depth += 1
                try:
                    yield self._conn
                finally:
                    self._txn_depth -= 1
                return
            self._conn.execute("BEGIN IMMEDIATE")
            self._txn_depth = 1
            try:
                yield self._conn
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            else:
                self._conn.execute("COMMIT")
            finally:
                self._txn_depth = 0

    def query(self, sql: str, params=()) -> list[sqlite3.Row]:
        with self._lock:
            return self._conn.execute(sql, params).fetchall()

    def query_one(self, sql: str, params=()) -> sqlite3.Row | None:
        rows = self.query(sql, params)
        return rows[0] if rows else None

    def execute(self, sql: str, params=()) -> sqlite3.Cursor:
        """Single statement inside the current (or a fresh) transaction."""
        with self.transaction() as conn:
            return conn.execute(sql, params)

    def _migrate(self) -> None:
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS schema_migrations (version INTEGER PRIMARY KEY, applied_at REAL NOT NULL)"
            )
            row = self._conn.execute("SELECT MAX(version) AS v FROM schema_migrations").fetchone()
            current = row["v"] or 0
            if current > len(MIGRATIONS):
                raise RuntimeError(
                    f"database is at schema version {current}, newer than this build ({len(MIGRATIONS)})"
                )
            for version in range(current + 1, len(MIGRATIONS) + 1):
                # executescript would auto-commit, so feed statements one by one.
                statements = [s.strip() for s in MIGRATIONS[version - 1].split(";") if s.strip()]
                self._conn.execute("BEGIN IMMEDIATE")
                try:
                    for statement in statements:
                        self._conn.execute(statement)
                    self._conn.execute(
                        "INSERT INTO schema_migrations (version, applied_at) VALUES (?, ?)",
                        (version, self.now()),
                    )
                except BaseException:
                    self._conn.execute("ROLLBACK")
                    raise
                else:
                    self._conn.execute("COMMIT")

    @property
    def schema_version(self) -> int:
        row = self.query_one("SELECT MAX(version) AS v FROM schema_migrations")
        return row["v"] or 0

    def close(self) -> None:
        self._conn.close()
