"""Main FastAPI application."""

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from . import __version__
from .config import LOG_FORMAT, LOG_LEVEL
from .errors import DomainError, NumericalError
from .routes import correspondences, curves, geodesics, reports

# Configure logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)

logger = logging.getLogger(__name__)

# Create app
app = FastAPI(
    title="Helical CR",
    description="Helical CR structures, step-two Carnot geodesics and Q0/Q1 curves",
    version=__version__,
)

# Include routers
app.include_router(curves.router)
app.include_router(geodesics.router)
app.include_router(correspondences.router)
app.include_router(reports.router)


def _error(status_code: int, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(DomainError)
async def domain_error_handler(request: Request, exc: DomainError):
    return _error(422, exc)


@app.exception_handler(NumericalError)
async def numerical_error_handler(request: Request, exc: NumericalError):
    logger.error(f"{request.url.path}: {type(exc).__name__}: {exc}")
    return _error(500, exc)


@app.exception_handler(ValidationError)
async def schema_error_handler(request: Request, exc: ValidationError):
    return _error(422, exc)


@app.exception_handler(KeyError)
async def missing_field_handler(request: Request, exc: KeyError):
    return JSONResponse(status_code=422, content={"error": "MissingField", "detail": f"missing field {exc}"})


@app.get("/")
async def root():
    return {"message": "Helical CR API", "docs": "/docs"}


@app.get("/health")
async def health():
    """Health check endpoint."""
    return {"status": "healthy"}
