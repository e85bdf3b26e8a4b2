"""Fixtures for the primary suite; builders live in helpers.py."""

import pytest

from helpers import StubService


@pytest.fixture
def stub_service():
    service = StubService()
    yield service
    service.close()
