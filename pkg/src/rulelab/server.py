"""HTTP JSON API over a session store.

One FastAPI app per store; every route is a thin adapter that parses the
request, calls the corresponding session operation, and shapes the reply.
All domain errors surface as structured JSON: 400 for validation problems,
404 for unknown sessions/images, 409 when a writer holds the session lock.
"""
from __future__ import annotations

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from .induction import InductionError, induction_config_from_json
from .labels import STATUS_AMBIGUOUS, STATUS_AUTO, STATUS_MANUAL, STATUS_UNLABELED
from .predicates import ParseError, ValidationError, image_to_json
from .recommend import al_config_from_json, rank_objects_for_dropdown
from .rules import EditError, edit_from_json, ruleset_from_json
from .session import (
    ConflictError,
    NoLabelsError,
    SessionState,
    SessionStore,
    StorageError,
    UnknownClassError,
    UnknownImageError,
    UnknownSessionError,
    progress_stats,
)

_ERROR_STATUS = {
    ParseError: (400, "parse_error"),
    ValidationError: (400, "validation_error"),
    EditError: (400, "edit_error"),
    InductionError: (400, "induction_error"),
    NoLabelsError: (400, "no_labels"),
    UnknownClassError: (400, "unknown_class"),
    UnknownSessionError: (404, "unknown_session"),
    UnknownImageError: (404, "unknown_image"),
    ConflictError: (409, "conflict"),
    StorageError: (500, "storage_error"),
}


def _report_json(state: SessionState):
    return state.last_report.to_json() if state.last_report is not None else None


def _stats_payload(state: SessionState) -> dict:
    report = _report_json(state)
    donut = {} if report is None else report["per_class"]
    return {
        "report": report,
        "progress": progress_stats(state).to_json(),
        "donut": donut,
        "iteration": state.iteration,
    }


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="rulelab", docs_url=None, redoc_url=None)

    for exc_type, (status, code) in _ERROR_STATUS.items():
        def handler(request: Request, exc: Exception,
                    status: int = status, code: str = code) -> JSONResponse:
            return JSONResponse(
                status_code=status,
                content={"code": code, "message": str(exc),
                         "detail": type(exc).__name__},
            )

        app.add_exception_handler(exc_type, handler)

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)) -> dict:
        path = payload.get("path")
        doc = payload.get("dataset")
        strict = bool(payload.get("strict", False))
        state = store.create(path, dataset_doc=doc, strict=strict)
        return {"session_id": state.session_id}

    @app.get("/sessions/{sid}/images")
    def list_images(sid: str, status: str | None = None, label: str | None = None,
                    page: int = 1, page_size: int = 50, sort: str = "id") -> dict:
        if status is not None and status not in (STATUS_MANUAL, STATUS_AUTO,
                                                 STATUS_UNLABELED, STATUS_AMBIGUOUS):
            raise ValidationError(f"unknown status filter {status!r}")
        if page < 1 or page_size < 1:
            raise ValidationError("page and page_size must be positive")
        if sort not in ("id", "suggested"):
            raise ValidationError(f"unknown sort order {sort!r}")
        state = store.get(sid)
        suggested = set(state.suggestions.image_ids)

        items = []
        for img in state.dataset.pool:
            ls = state.labels[img.image_id]
            if status is not None and ls.status != status:
                continue
            if label is not None and ls.label != label:
                continue
            items.append(img.image_id)
        items.sort()
        if sort == "suggested":
            order = {iid: i for i, iid in enumerate(state.suggestions.image_ids)}
            items.sort(key=lambda iid: (iid not in order, order.get(iid, 0), iid))

        start = (page - 1) * page_size
        page_ids = items[start:start + page_size]
        return {
            "page": page,
            "page_size": page_size,
            "total": len(items),
            "items": [
                {
                    "image": image_to_json(state.dataset.pool_by_id[iid]),
                    "label_state": state.labels[iid].to_json(),
                    "suggested": iid in suggested,
                }
                for iid in page_ids
            ],
        }

    @app.put("/sessions/{sid}/labels/{image_id}")
    def put_label(sid: str, image_id: str, payload: dict = Body(...)) -> dict:
        label = payload.get("label")
        if not isinstance(label, str) or not label:
            raise ValidationError("body must carry a non-empty 'label'")
        state = store.set_label(sid, image_id, label)
        return {"label_state": state.labels[image_id].to_json(),
                "progress": progress_stats(state).to_json()}

    @app.delete("/sessions/{sid}/labels/{image_id}")
    def delete_label(sid: str, image_id: str) -> dict:
        state = store.clear_label(sid, image_id)
        return {"label_state": state.labels[image_id].to_json(),
                "progress": progress_stats(state).to_json()}

    @app.post("/sessions/{sid}/autolabel")
    def autolabel(sid: str, payload: dict = Body(default={})) -> dict:
        cfg = induction_config_from_json(payload.get("config") or {})
        al = al_config_from_json(payload.get("active_learning") or {})
        state = store.autolabel(sid, cfg, al)
        return {
            "generation": state.ruleset.generation,
            "report": _report_json(state),
            "stats": progress_stats(state).to_json(),
            "timing_ms": state.events[-1].payload["timing_ms"],
        }

    @app.get("/sessions/{sid}/rules")
    def get_rules(sid: str) -> dict:
        return store.get(sid).ruleset.to_json()

    @app.put("/sessions/{sid}/rules/edit")
    def edit_rules(sid: str, payload: dict = Body(...)) -> dict:
        if "edit" not in payload:
            raise ValidationError("body must carry an 'edit' object")
        edit = edit_from_json(payload["edit"])
        state = store.edit_rules(sid, edit)
        return {
            "ruleset": state.ruleset.to_json(),
            "report": _report_json(state),
            "stats": progress_stats(state).to_json(),
        }

    @app.post("/sessions/{sid}/rules/preview")
    def preview(sid: str, payload: dict = Body(...)) -> dict:
        if "ruleset" not in payload:
            raise ValidationError("body must carry a 'ruleset' object")
        candidate = ruleset_from_json(payload["ruleset"])
        report, stats = store.preview(sid, candidate)
        return {
            "report": report.to_json() if report is not None else None,
            "stats": stats.to_json(),
        }

    @app.get("/sessions/{sid}/suggestions")
    def suggestions(sid: str) -> dict:
        return store.get(sid).suggestions.to_json()

    @app.get("/sessions/{sid}/stats")
    def stats(sid: str) -> dict:
        return _stats_payload(store.get(sid))

    @app.get("/sessions/{sid}/importance")
    def importance(sid: str) -> dict:
        state = store.get(sid)
        return {
            "ranked": rank_objects_for_dropdown(state.importance),
            "table": state.importance.to_json(),
        }

    @app.post("/sessions/{sid}/export")
    def export(sid: str, payload: dict = Body(default={})) -> dict:
        return store.export(sid, payload.get("path"))

    return app
