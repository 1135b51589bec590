"""Verification report routes."""

from typing import List

from fastapi import APIRouter, HTTPException

from ..config import get_tolerances
from ..models import VerificationReport, VerifyRequest
from ..storage import report_storage
from ..verify import SUITES, run_verification

router = APIRouter(prefix="/api/reports", tags=["reports"])


@router.get("", response_model=List[VerificationReport])
def get_reports():
    """Get all stored reports."""
    return report_storage.get_all()


@router.get("/{report_id}", response_model=VerificationReport)
def get_report(report_id: str):
    """Get a specific report."""
    report = report_storage.get_by_id(report_id)
    if not report:
        raise HTTPException(status_code=404, detail="Report not found")
    return report


@router.post("", response_model=VerificationReport)
def create_report(request: VerifyRequest):
    """Run the verification suites and store the report."""
    unknown = sorted(set(request.suites or []) - set(SUITES))
    if unknown:
        raise HTTPException(status_code=400, detail=f"Unknown suites: {', '.join(unknown)}")
    report = run_verification(
        seed=request.seed,
        quick=request.quick,
        tolerances=request.tolerances or get_tolerances(),
        only=request.suites,
    )
    return report_storage.create(report)


@router.delete("/{report_id}")
def delete_report(report_id: str):
    """Delete a report."""
    if not report_storage.delete(report_id):
        raise HTTPException(status_code=404, detail="Report not found")
    return {"message": "Report deleted"}
