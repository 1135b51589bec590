"""Data storage layer."""

import csv
import json
import logging
import uuid
from pathlib import Path
from threading import Lock
from typing import Any, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .config import REPORTS_FILE
from .models import VerificationReport

logger = logging.getLogger(__name__)


class JSONStorage:
    """Base JSON file storage."""

    def __init__(self, file_path: Path):
        self.file_path = file_path
        self.lock = Lock()
        self._ensure_file()

    def _ensure_file(self):
        """Ensure the JSON file and directory exist."""
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        if not self.file_path.exists():
            self._write({})

    def _read(self) -> dict:
        """Read data from JSON file."""
        with self.lock:
            with open(self.file_path, "r") as f:
                return json.load(f)

    def _write(self, data: dict):
        """Write data to JSON file."""
        with self.lock:
            with open(self.file_path, "w") as f:
                json.dump(data, f, indent=2)


class ReportStorage(JSONStorage):
    """Verification report storage."""

    def get_all(self) -> List[VerificationReport]:
        """Get all reports, oldest first."""
        data = self._read()
        return [VerificationReport(**r) for r in data.get("reports", [])]

    def get_by_id(self, report_id: str) -> Optional[VerificationReport]:
        """Get a report by ID."""
        return next((r for r in self.get_all() if r.id == report_id), None)

    def create(self, report: VerificationReport) -> VerificationReport:
        """Store a report, generating an ID if needed."""
        data = self._read()
        if "reports" not in data:
            data["reports"] = []

        if not report.id:
            report.id = str(uuid.uuid4())
        if any(r.get("id") == report.id for r in data["reports"]):
            raise ValueError(f"Report {report.id} already exists")

        data["reports"].append(report.model_dump(mode="json"))
        self._write(data)
        logger.info(f"stored verification report {report.id}")
        return report

    def delete(self, report_id: str) -> bool:
        """Delete a report."""
        data = self._read()
        reports = data.get("reports", [])

        initial_len = len(reports)
        data["reports"] = [r for r in reports if r.get("id") != report_id]

        if len(data["reports"]) < initial_len:
            self._write(data)
            return True
        return False


report_storage = ReportStorage(REPORTS_FILE)


# Documents and tables


def read_document(path: Path) -> Any:
    with open(path, "r") as f:
        return json.load(f)


def dump_document(document: Any) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_document(path: Path, document: Any):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(dump_document(document))


def format_number(x: float) -> str:
    return format(float(x), ".17g")


def write_table(stream: TextIO, header: Sequence[str], rows: np.ndarray):
    """CSV with 17 significant digits and '.' as decimal separator."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in np.atleast_2d(rows):
        writer.writerow([format_number(x) for x in row])


def write_csv(path: Path, header: Sequence[str], rows: np.ndarray):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        write_table(f, header, rows)


def read_samples_csv(path: Path) -> List[Tuple[float, np.ndarray]]:
    """Rows of s followed by point coordinates; a non-numeric first row is a header."""
    samples = []
    with open(path, "r", newline="") as f:
        for i, row in enumerate(csv.reader(f)):
            if not row:
                continue
            try:
                values = [float(x) for x in row]
            except ValueError:
                if i == 0:
                    continue
                raise
            samples.append((values[0], np.array(values[1:])))
    return samples
