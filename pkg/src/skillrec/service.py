"""HTTP serving layer for recommendations.

Endpoints
---------
POST /recommend   {"student", "week", "k"?, "strategy"?, "metric"?}
                  -> [{"problem", "score", "rank"}, ...]
GET  /health      liveness check, plain "ok"

The service is read-only: it holds an immutable corpus and trained bundle
and answers concurrent requests without coordination.  Responses are
rendered by the same function the CLI uses, so the two are byte-identical
for identical inputs.  Errors: 400 malformed body, 404 unknown student,
409 student has no submissions in scope, 503 bundle not loaded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .bundle import ModelBundle
from .context import STRATEGY_NAMES, SummarizationStrategy
from .errors import EmptyAfterScope, UnknownStudent
from .ingest import Corpus
from .recommend import METRICS, RankedRecommendation, recommend_for_student


class RecommendRequest(BaseModel):
    student: str
    week: int = Field(ge=1)
    k: int = Field(default=5, ge=1)
    strategy: str | None = None
    metric: str | None = None


class RecommendationItem(BaseModel):
    problem: str
    score: float
    rank: int


def render_recommendations(recs: list[RankedRecommendation]) -> str:
    """Canonical JSON for a recommendation list, trailing newline included."""
    payload = [{"problem": r.problem_id, "score": r.score, "rank": r.rank} for r in recs]
    return json.dumps(payload) + "\n"


@dataclass
class ServiceState:
    corpus: Corpus
    bundle: ModelBundle
    default_k: int = 5
    default_strategy: str = "centroid-last-lab"
    default_metric: str = "skills"
    week_filter: bool = True
    context_correct_only: bool = False


def create_app(state: ServiceState | None) -> FastAPI:
    """Build the service; ``state=None`` models a bundle that failed to load."""
    app = FastAPI(title="skillrec", version="0.1.0")
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    @app.get("/health", response_class=PlainTextResponse)
    def health() -> str:
        return "ok"

    @app.post("/recommend", response_model=list[RecommendationItem])
    def recommend(body: RecommendRequest) -> Response:
        service: ServiceState | None = app.state.service
        if service is None:
            return JSONResponse(status_code=503, content={"detail": "bundle not loaded"})
        strategy_name = body.strategy or service.default_strategy
        metric = body.metric or service.default_metric
        if strategy_name not in STRATEGY_NAMES or metric not in METRICS:
            return JSONResponse(status_code=400, content={"detail": "unknown strategy or metric"})
        try:
            recs = recommend_for_student(
                service.corpus,
                service.bundle,
                student_id=body.student,
                current_week=body.week,
                strategy=SummarizationStrategy.parse(strategy_name),
                metric=metric,
                k=body.k,
                week_filter=service.week_filter,
                correct_only=service.context_correct_only,
            )
        except UnknownStudent:
            return JSONResponse(status_code=404, content={"detail": f"unknown student {body.student!r}"})
        except EmptyAfterScope:
            return JSONResponse(
                status_code=409,
                content={"detail": f"student {body.student!r} has no submissions in scope"},
            )
        return Response(content=render_recommendations(recs), media_type="application/json")

    return app
