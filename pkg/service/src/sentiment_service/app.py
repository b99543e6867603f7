"""HTTP scoring endpoint.

Wire protocol: POST /v1/score with ``{"headlines": ["...", ...]}`` returns
``{"results": [{"label": ..., "score": ...}, ...]}`` in request order.
Validation failures are 400; a service whose model is still loading answers
503. Every response carries the backend identifier in X-Model-Id.
"""

from typing import List

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .stub import StubBackend

MAX_BATCH = 64


class ScoreRequest(BaseModel):
    headlines: List[str] = Field(min_length=1, max_length=MAX_BATCH)

    @field_validator("headlines")
    @classmethod
    def non_empty_strings(cls, value):
        for h in value:
            if not h:
                raise ValueError("headlines must be non-empty strings")
        return value


class ScoreItem(BaseModel):
    label: str
    score: float


class ScoreResponse(BaseModel):
    results: List[ScoreItem]


def create_app(backend=None, preload: bool = True) -> FastAPI:
    """Build the service around a scoring backend.

    With preload, the backend loads before the app is returned; a load
    failure propagates and the service never starts. Without preload the
    endpoint answers 503 until finish_loading() is called (used to exercise
    the loading window in tests, or to defer heavy loads to startup).
    """
    backend = backend or StubBackend()
    app = FastAPI(title="sentiment-service")
    app.state.backend = backend
    app.state.loaded = False

    def finish_loading() -> None:
        backend.load()
        app.state.loaded = True

    app.state.finish_loading = finish_loading
    if preload:
        finish_loading()

    @app.exception_handler(RequestValidationError)
    async def validation_to_400(request: Request, exc: RequestValidationError):
        detail = [{"loc": [str(part) for part in err.get("loc", ())],
                   "msg": str(err.get("msg", "")),
                   "type": str(err.get("type", ""))}
                  for err in exc.errors()]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.get("/healthz")
    async def healthz():
        return JSONResponse(
            {"status": "ok" if app.state.loaded else "loading",
             "model": backend.model_id},
            headers={"X-Model-Id": backend.model_id})

    @app.post("/v1/score", response_model=ScoreResponse)
    async def score(request: ScoreRequest):
        if not app.state.loaded:
            return JSONResponse(status_code=503,
                                content={"detail": "model is loading"},
                                headers={"Retry-After": "5",
                                         "X-Model-Id": backend.model_id})
        results = backend.score(request.headlines)
        return JSONResponse(
            {"results": [{"label": label, "score": score}
                         for label, score in results]},
            headers={"X-Model-Id": backend.model_id})

    return app


def create_stub_app() -> FastAPI:
    """uvicorn --factory entry point for stub mode."""
    return create_app(StubBackend())


def create_model_app() -> FastAPI:
    """uvicorn --factory entry point for the pretrained model."""
    from .model_backend import FinbertBackend

    return create_app(FinbertBackend())
