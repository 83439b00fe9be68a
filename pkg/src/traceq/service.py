"""HTTP recommendation service over a frozen policy snapshot.

Stateless: every response is a pure function of (snapshot, request), so the
service can handle unlimited concurrent readers.  Reloading a new snapshot
means restarting the process.

Endpoints: POST /recommend, GET /vocabulary, GET /health.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .errors import UnseenStateError
from .mdp import StateKey, StateMode
from .policy import Policy


class RecommendRequest(BaseModel):
    mode: Optional[str] = None
    executed_prefix: Optional[list[str]] = None
    remaining: Optional[list[str]] = None
    k: int = 3


class RecommendationOut(BaseModel):
    activity: str
    q: float
    rank: int


class RecommendResponse(BaseModel):
    recommendations: list[RecommendationOut]
    fallback_used: bool
    policy_version: str


def create_app(policy: Optional[Policy], cors_origins: Optional[list[str]] = None) -> FastAPI:
    """Build the service around an already-loaded policy.

    `policy=None` models the not-yet-loaded startup window: /health answers
    503 and nothing else is served.
    """
    app = FastAPI(title="traceq recommendation service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.policy = policy
    app.state.snapshot_hash = policy.snapshot_hash() if policy else None

    @app.exception_handler(RequestValidationError)
    async def malformed_body(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def current_policy() -> Policy:
        if app.state.policy is None:
            raise HTTPException(status_code=503, detail="policy snapshot not loaded yet")
        return app.state.policy

    @app.get("/health")
    def health():
        if app.state.policy is None:
            raise HTTPException(status_code=503, detail="policy snapshot not loaded yet")
        return {
            "status": "ok",
            "version": __version__,
            "snapshot_hash": app.state.snapshot_hash,
        }

    @app.get("/vocabulary")
    def vocabulary():
        return sorted(current_policy().vocabulary)

    @app.post("/recommend", response_model=RecommendResponse)
    def recommend(request: RecommendRequest):
        pol = current_policy()
        if request.k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        given = [f for f in ("executed_prefix", "remaining") if getattr(request, f) is not None]
        if len(given) != 1:
            raise HTTPException(
                status_code=400,
                detail="supply exactly one of executed_prefix or remaining",
            )
        want_mode = StateMode.PREFIX if given[0] == "executed_prefix" else StateMode.REMAINING
        if request.mode is not None and request.mode != want_mode.value:
            raise HTTPException(
                status_code=400,
                detail=f"mode {request.mode!r} contradicts the {given[0]} field",
            )
        if pol.mode is not want_mode:
            raise HTTPException(
                status_code=400,
                detail=f"policy uses {pol.mode.value!r} states; request sent {want_mode.value!r}",
            )
        activities = request.executed_prefix or request.remaining or []
        known = set(pol.vocabulary)
        for label in activities:
            if label not in known:
                raise HTTPException(status_code=404, detail=f"unknown activity: {label!r}")
        state = (
            StateKey.prefix(activities)
            if want_mode is StateMode.PREFIX
            else StateKey.remaining(activities)
        )
        try:
            result = pol.recommend(state, request.k)
        except UnseenStateError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RecommendResponse(
            recommendations=[
                RecommendationOut(activity=r.action, q=r.q, rank=r.rank)
                for r in result.recommendations
            ],
            fallback_used=result.fallback_used,
            policy_version=app.state.snapshot_hash,
        )

    return app
