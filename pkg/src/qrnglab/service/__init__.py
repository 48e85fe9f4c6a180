"""FastAPI front end for the noisy simulator."""

from .app import MAX_SHOTS, RunRequest, RunResponse, WireOp, create_app

__all__ = ["MAX_SHOTS", "RunRequest", "RunResponse", "WireOp", "create_app"]
