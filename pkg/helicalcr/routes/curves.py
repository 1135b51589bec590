"""Curve routes."""

import math

from fastapi import APIRouter

from ..commands import decompose_generator, decompose_samples, gamma_table
from ..models import DecomposeRequest, DecompositionReport, SRange

router = APIRouter(prefix="/api/curves", tags=["curves"])


@router.get("/gamma/{m}")
def get_gamma(m: int, start: float = 0.0, end: float = math.tau, samples: int = 65):
    """Samples of the homogeneous curve gamma_m."""
    header, rows = gamma_table(m, SRange(start=start, end=end, samples=samples))
    return {"m": m, "header": header, "rows": rows.tolist()}


@router.post("/decompose", response_model=DecompositionReport)
def post_decompose(request: DecomposeRequest):
    """Canonical decomposition from a generator and initial point, or from samples."""
    if request.A is not None:
        return decompose_generator(request.A.to_array(), request.u0)
    return decompose_samples(list(zip(request.s, request.points)), max_freqs=request.max_freqs)
