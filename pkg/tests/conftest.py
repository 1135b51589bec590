"""Shared test fixtures."""

from unittest.mock import patch

import numpy as np
import pytest
from fastapi.testclient import TestClient

from helicalcr.skewlin import J
from helicalcr.storage import ReportStorage
from helicalcr.verify import random_contact_instance, random_q0


@pytest.fixture(autouse=True)
def isolated_data_dir(tmp_path):
    """Redirect report storage to a temporary directory for every test.

    The singleton is patched everywhere it is referenced so that the CLI
    and the routes use the tmp-backed store.
    """
    data_dir = tmp_path / "data"
    data_dir.mkdir()

    tmp_report_storage = ReportStorage(data_dir / "reports.json")

    patches = [
        patch("helicalcr.storage.report_storage", tmp_report_storage),
        patch("helicalcr.cli.report_storage", tmp_report_storage),
        patch("helicalcr.routes.reports.report_storage", tmp_report_storage),
    ]

    for p in patches:
        p.start()

    yield tmp_path

    for p in patches:
        p.stop()


@pytest.fixture
def report_storage():
    """Return the (patched) report storage for the current test."""
    from helicalcr.storage import report_storage

    return report_storage


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def q0_curve(rng):
    return random_q0(rng)


@pytest.fixture
def contact_instance(rng):
    return random_contact_instance(rng, n_max=2)


@pytest.fixture
def heisenberg_doc():
    """Helical structure (J, w=(1)) as a JSON document."""
    return {"A": {"rows": 2, "cols": 2, "data": J.ravel().tolist()}, "w": [1.0]}


@pytest.fixture
def client(isolated_data_dir):
    """Provide a FastAPI TestClient."""
    from helicalcr.main import app

    with TestClient(app) as c:
        yield c
