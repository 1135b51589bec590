"""Geodesic routes."""

from fastapi import APIRouter

from ..commands import geodesic_table
from ..models import GeodesicRequest

router = APIRouter(prefix="/api/geodesics", tags=["geodesics"])


@router.post("/trajectory")
def post_trajectory(request: GeodesicRequest):
    """Closed-form trajectory table (s, x, t, xi, H)."""
    header, rows, notes = geodesic_table(request.algebra, request.ivp, request.s_range)
    return {"header": header, "rows": rows.tolist(), "warnings": notes}
