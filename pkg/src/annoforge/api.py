"""HTTP facade over the annotation core.

JSON in, JSON out; every error body is ``{"code": ..., "message": ...}`` with
the stable code strings raised by the core. Sessions are opaque bearer
tokens. Mutating requests are rate-limited per session.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict, deque
from dataclasses import asdict

from fastapi import Depends, FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import (
    AnnotationCore,
    CoreError,
    Lease,
    ParagraphView,
    QuestionView,
    Role,
    Status,
    User,
    role_dominates,
)
from .squad import DatasetFormatError, export_squad, import_squad

# HTTP status for each core error code; anything unlisted maps to 400.
_STATUS_BY_CODE = {
    "BAD_CREDENTIALS": 401,
    "UNAUTHENTICATED": 401,
    "EMAIL_UNVERIFIED": 403,
    "PERMISSION_DENIED": 403,
    "ONBOARDING_REQUIRED": 403,
    "EMAIL_TAKEN": 409,
    "ALREADY_ANNOTATED": 409,
    "DUPLICATE_CONTRIBUTOR": 409,
    "DUPLICATE_FLAG": 409,
    "LEASE_EXPIRED": 409,
    "LEASE_RENEWED": 409,
    "LEASE_NOT_HELD": 409,
    "WRONG_STATE": 409,
    "NO_WORK": 404,
    "UNKNOWN_CATEGORY": 404,
    "UNKNOWN_USER": 404,
    "UNKNOWN_PARAGRAPH": 404,
    "UNKNOWN_QUESTION": 404,
    "RATE_LIMITED": 429,
}

MUTATING_METHODS = {"POST", "PUT", "PATCH", "DELETE"}


class RateLimiter:
    """Sliding one-second window per session token."""

    def __init__(self, limit_per_second: int = 10, clock=time.monotonic):
        self.limit = limit_per_second
        self.clock = clock
        self._hits: dict[str, deque[float]] = defaultdict(deque)
        self._lock = threading.Lock()

    def allow(self, key: str) -> bool:
        now = self.clock()
        with self._lock:
            window = self._hits[key]
            while window and window[0] <= now - 1.0:
                window.popleft()
            if len(window) >= self.limit:
                return False
            window.append(now)
            return True


class RegisterBody(BaseModel):
    email: str
    password: str


class VerifyBody(BaseModel):
    token: str


class LoginBody(BaseModel):
    email: str
    password: str


class PasswordResetBody(BaseModel):
    email: str | None = None
    token: str | None = None
    password: str | None = None


class LeaseBody(BaseModel):
    category: str


class RenewBody(BaseModel):
    lease_id: int


class PairBody(BaseModel):
    question: str
    answer_text: str
    answer_start: int


class AnnotationBody(BaseModel):
    lease_id: int
    pairs: list[PairBody]


class AdditionalAnswerBody(BaseModel):
    question_id: str
    answer_text: str
    answer_start: int


class FlagBody(BaseModel):
    question_id: str
    reason: str


class StatusBody(BaseModel):
    status: str


class OnboardingBody(BaseModel):
    answers: dict[str, int] = Field(default_factory=dict)


def _paragraph_json(p: ParagraphView) -> dict:
    return asdict(p)


def _lease_json(lease: Lease) -> dict:
    return {
        "id": lease.id,
        "target_id": lease.target_id,
        "kind": lease.kind,
        "issued_at": lease.issued_at,
        "expires_at": lease.expires_at,
        "renewed": lease.renewed,
    }


def _question_json(q: QuestionView) -> dict:
    return {
        "id": q.id,
        "paragraph_id": q.paragraph_id,
        "question": q.question,
        "state": q.state.value,
        "additional_answers": len(q.additional_answers),
    }


def _user_json(user: User) -> dict:
    return {
        "id": user.id,
        "email": user.email,
        "role": user.role.value,
        "status": user.status.value,
        "email_verified": user.email_verified,
        "onboarding_passed": user.onboarding_passed,
    }


def create_app(core: AnnotationCore, rate_limit_per_second: int = 10, rate_clock=time.monotonic) -> FastAPI:
    app = FastAPI(title="annoforge", docs_url=None, redoc_url=None, openapi_url=None)
    limiter = RateLimiter(rate_limit_per_second, clock=rate_clock)

    @app.exception_handler(CoreError)
    async def core_error_handler(request: Request, exc: CoreError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(status_code=status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "INVALID_BODY", "message": str(exc.errors()[:3])},
        )

    def current_user(request: Request) -> User:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise CoreError("UNAUTHENTICATED", "missing bearer token")
        user = core.resolve_session(header[7:].strip())
        if user is None:
            raise CoreError("UNAUTHENTICATED", "session invalid or expired")
        if request.method in MUTATING_METHODS and not limiter.allow(header[7:].strip()):
            raise CoreError("RATE_LIMITED", "too many requests, slow down")
        return user

    def require_role(user: User, role: Role) -> None:
        if not role_dominates(user.role, role):
            raise CoreError("PERMISSION_DENIED", f"requires {role.value} rights")

    # -- accounts --

    @app.post("/api/users", status_code=201)
    def register(body: RegisterBody):
        user, _token = core.create_user(body.email, body.password)
        return {"user": _user_json(user)}

    @app.post("/api/users/verify")
    def verify(body: VerifyBody):
        user = core.verify_email(body.token)
        return {"user": _user_json(user)}

    @app.post("/api/sessions", status_code=201)
    def login(body: LoginBody):
        user = core.authenticate(body.email, body.password)
        token, expires_at = core.create_session(user)
        return {"token": token, "expires_at": expires_at, "user": _user_json(user)}

    @app.post("/api/password-reset")
    def password_reset(body: PasswordResetBody):
        if body.token is not None:
            if not body.password:
                raise CoreError("INVALID_PASSWORD", "a new password is required")
            core.reset_password(body.token, body.password)
            return {"reset": True}
        if body.email is not None:
            core.request_password_reset(body.email)
            return {"requested": True}
        raise CoreError("INVALID_BODY", "provide email (request) or token+password (confirm)")

    # -- onboarding --

    @app.get("/api/onboarding")
    def onboarding_definition(user: User = Depends(current_user)):
        assessment = core.onboarding_definition()
        if assessment is None:
            return {"questions": [], "passed": user.onboarding_passed}
        return {
            "version": assessment.version,
            # The answer key stays server-side.
            "questions": [
                {"id": q.id, "text": q.text, "choices": list(q.choices), "mandatory": q.mandatory}
                for q in assessment.questions
            ],
            "passed": user.onboarding_passed,
        }

    @app.post("/api/onboarding")
    def onboarding_submit(body: OnboardingBody, user: User = Depends(current_user)):
        return {"passed": core.onboarding_assess(user, body.answers)}

    # -- work --

    @app.get("/api/categories")
    def categories(user: User = Depends(current_user)):
        return {"categories": core.categories()}

    @app.post("/api/leases", status_code=201)
    def lease(body: LeaseBody, user: User = Depends(current_user)):
        paragraph, lease_ = core.lease_next_paragraph(user, body.category)
        return {"paragraph": _paragraph_json(paragraph), "lease": _lease_json(lease_)}

    @app.post("/api/leases/renew")
    def renew(body: RenewBody, user: User = Depends(current_user)):
        return {"lease": _lease_json(core.renew_lease(user, body.lease_id))}

    @app.post("/api/annotations", status_code=201)
    def submit_annotations(body: AnnotationBody, user: User = Depends(current_user)):
        question_ids = core.submit_batch(
            user,
            body.lease_id,
            [(p.question, p.answer_text, p.answer_start) for p in body.pairs],
        )
        return {"question_ids": question_ids, "stats": core.contributor_stats(user)}

    @app.get("/api/additional/next")
    def additional_next(user: User = Depends(current_user)):
        paragraph, question, lease_ = core.next_additional_task(user)
        return {
            "paragraph": _paragraph_json(paragraph),
            "question": _question_json(question),
            "lease": _lease_json(lease_),
        }

    @app.post("/api/additional/answers", status_code=201)
    def additional_answer(body: AdditionalAnswerBody, user: User = Depends(current_user)):
        state = core.submit_additional_answer(user, body.question_id, body.answer_text, body.answer_start)
        return {"question": _question_json(state)}

    @app.post("/api/flags", status_code=201)
    def flag(body: FlagBody, user: User = Depends(current_user)):
        record = core.flag_question(user, body.question_id, body.reason)
        return {
            "flag": {
                "question_id": record.question_id,
                "reason": record.reason.value,
                "created_at": record.created_at,
            }
        }

    @app.get("/api/me/stats")
    def my_stats(user: User = Depends(current_user)):
        return {"stats": core.contributor_stats(user)}

    # -- admin --

    @app.get("/api/admin/monitoring")
    def monitoring(
        category: str | None = None,
        cursor: str | None = None,
        user: User = Depends(current_user),
    ):
        require_role(user, Role.ADMIN)
        report = core.monitoring_report(category=category, cursor=cursor)
        out = {
            "rows": [asdict(r) for r in report["rows"]],
            "category_totals": report["category_totals"],
        }
        if "next_cursor" in report:
            out["next_cursor"] = report["next_cursor"]
        return out

    @app.post("/api/admin/users/{user_id}/status")
    def set_status(user_id: int, body: StatusBody, user: User = Depends(current_user)):
        require_role(user, Role.ADMIN)
        try:
            status = Status(body.status)
        except ValueError:
            raise CoreError("INVALID_STATUS", f"status must be one of {[s.value for s in Status]}")
        return {"user": _user_json(core.set_status(user, user_id, status))}

    @app.post("/api/admin/import", status_code=201)
    async def admin_import(request: Request, user: User = Depends(current_user)):
        require_role(user, Role.SUPERADMIN)
        payload = await request.body()
        try:
            result = import_squad(payload)
        except DatasetFormatError as exc:
            raise CoreError("DATASET_FORMAT", str(exc))
        if result.issues:
            first = result.issues[0]
            raise CoreError(first.code, f"{len(result.issues)} invalid samples; first: {first.message}")
        counts = core.import_dataset(result.dataset, actor=user)
        return {"imported": counts}

    @app.get("/api/admin/export")
    def admin_export(
        only_complete: bool = False,
        include_flagged: bool = False,
        user: User = Depends(current_user),
    ):
        require_role(user, Role.ADMIN)
        dataset = core.export_dataset(only_complete=only_complete, include_flagged=include_flagged)
        return Response(content=export_squad(dataset), media_type="application/json")

    return app
