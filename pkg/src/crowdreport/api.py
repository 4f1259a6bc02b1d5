"""HTTP surface over the platform.

Thin by design: every route parses JSON, calls one platform method, and maps
domain errors to structured status codes. Browsers (the requester dashboard)
are first-class callers, hence the permissive CORS setup.
"""

from __future__ import annotations

import json
from typing import Any

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .model import TaskValidationError
from .predictor import PredictorProtocolError
from .service import (
    DuplicateTaskError,
    Platform,
    ReportNotReadyError,
    SubmissionError,
    TaskClosedError,
    UnknownTaskError,
)


def _error(status: int, code: str, detail: Any = None) -> JSONResponse:
    body: dict[str, Any] = {"error": code}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


async def _json_body(request: Request) -> dict[str, Any]:
    try:
        data = json.loads(await request.body())
    except json.JSONDecodeError as exc:
        raise SubmissionError(f"body is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SubmissionError("body must be a JSON object")
    return data


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="crowdreport", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(UnknownTaskError)
    async def _unknown_task(request: Request, exc: UnknownTaskError) -> JSONResponse:
        return _error(404, "unknown_task", str(exc.args[0]) if exc.args else None)

    @app.exception_handler(TaskValidationError)
    async def _invalid_task(request: Request, exc: TaskValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": "invalid_task", "violations": exc.violations})

    @app.exception_handler(DuplicateTaskError)
    async def _duplicate_task(request: Request, exc: DuplicateTaskError) -> JSONResponse:
        return _error(409, "duplicate_task", str(exc))

    @app.exception_handler(TaskClosedError)
    async def _task_closed(request: Request, exc: TaskClosedError) -> JSONResponse:
        return _error(409, "task_closed", str(exc))

    @app.exception_handler(SubmissionError)
    async def _bad_submission(request: Request, exc: SubmissionError) -> JSONResponse:
        return _error(400, "invalid_submission", str(exc))

    @app.exception_handler(ReportNotReadyError)
    async def _report_not_ready(request: Request, exc: ReportNotReadyError) -> JSONResponse:
        return _error(404, "report_not_ready", str(exc))

    @app.exception_handler(PredictorProtocolError)
    async def _predictor_protocol(request: Request, exc: PredictorProtocolError) -> JSONResponse:
        return _error(502, "predictor_protocol", str(exc))

    @app.post("/tasks", status_code=201)
    async def create_task(request: Request) -> dict[str, Any]:
        body = await _json_body(request)
        task, warning = platform.create_task(body)
        out: dict[str, Any] = {"task_id": task.task_id, "task": task.to_dict()}
        if warning:
            out["warning"] = warning
        return out

    @app.post("/tasks/{task_id}/submissions")
    async def submit(task_id: str, request: Request) -> dict[str, Any]:
        body = await _json_body(request)
        verdict, path = platform.submit(task_id, body)
        return {
            "verdict": verdict.to_dict(),
            "group_path": list(path) if path is not None else None,
        }

    @app.get("/tasks/{task_id}")
    async def status(task_id: str) -> dict[str, Any]:
        return platform.status(task_id)

    @app.post("/tasks/{task_id}/close")
    async def close(task_id: str) -> dict[str, Any]:
        return platform.close_task(task_id).to_dict()

    @app.get("/tasks/{task_id}/report")
    async def report(task_id: str) -> dict[str, Any]:
        return platform.report(task_id).to_dict()

    return app
