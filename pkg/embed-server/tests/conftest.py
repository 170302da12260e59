import pytest
from fastapi.testclient import TestClient

from embed_server import ServerConfig, create_app


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app(ServerConfig()))
