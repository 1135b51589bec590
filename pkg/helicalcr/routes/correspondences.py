"""Correspondence routes."""

from typing import Any, Dict

from fastapi import APIRouter, Body

from ..commands import correspond
from ..models import CorrespondenceMode

router = APIRouter(prefix="/api/correspondences", tags=["correspondences"])


@router.post("/{mode}")
def post_correspondence(mode: CorrespondenceMode, document: Dict[str, Any] = Body(...), check: bool = False):
    """Run one correspondence on a JSON document."""
    return correspond(mode, document, check=check)
