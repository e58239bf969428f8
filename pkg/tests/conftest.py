import numpy as np
import pytest
from fastapi.testclient import TestClient
from sqlalchemy.pool import StaticPool
from sqlmodel import Session, SQLModel, create_engine

from palm.config import get_settings
from palm.dependencies import get_db
from palm.fuzzy.types import StreamSample
from palm.main import app


@pytest.fixture(name="engine")
def engine_fixture():
    engine = create_engine(
        "sqlite://",
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )
    SQLModel.metadata.create_all(engine)
    yield engine
    engine.dispose()


@pytest.fixture(name="session")
def session_fixture(engine):
    with Session(engine) as session:
        yield session
        session.rollback()


@pytest.fixture(name="client")
def client_fixture(session, workspace):
    def _get_db_override():
        yield session

    app.dependency_overrides[get_db] = _get_db_override
    with TestClient(app) as client:
        yield client
    app.dependency_overrides.clear()


@pytest.fixture(name="workspace")
def workspace_fixture(tmp_path, monkeypatch):
    """Point data, output and ledger settings at a temporary directory."""
    monkeypatch.setenv("PALM_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("PALM_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("PALM_DATABASE_URL", f"sqlite:///{tmp_path / 'palm.db'}")
    (tmp_path / "data").mkdir()
    get_settings.cache_clear()
    yield tmp_path
    get_settings.cache_clear()


def _two_regime_stream(count: int = 120, n_inputs: int = 2, seed: int = 7) -> list[StreamSample]:
    """Piecewise-linear target over uniform inputs, two regimes."""
    rng = np.random.default_rng(seed)
    samples = []
    for k in range(1, count + 1):
        x = rng.uniform(0.0, 1.0, n_inputs)
        if k <= count // 2:
            y = 0.2 + 0.5 * x.sum()
        else:
            y = 1.0 - 0.8 * x[0] + 0.3 * x[-1]
        samples.append(StreamSample.from_inputs(x, y + 0.01 * rng.standard_normal(), k))
    return samples


@pytest.fixture(name="stream")
def stream_fixture() -> list[StreamSample]:
    return _two_regime_stream()


@pytest.fixture(name="make_stream")
def make_stream_fixture():
    return _two_regime_stream
