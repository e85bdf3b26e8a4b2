"""Service test fixtures: in-process TestClient and a live uvicorn server."""

import pytest
from fastapi.testclient import TestClient

from live_server import LiveServer
from xlrank_service import ServiceConfig, create_app


@pytest.fixture
def stub_app():
    return create_app(ServiceConfig())


@pytest.fixture
def client(stub_app):
    return TestClient(stub_app)


@pytest.fixture
def live_stub_server(stub_app):
    with LiveServer(stub_app) as server:
        yield server
