"""
Database Connection and Session Management for the results database.

The engine is created lazily from ``Settings.RESULTS_DB_URL`` (or an explicit
URL passed by ``bench --db``) and cached per URL, so tests can point at
``sqlite:///:memory:`` while the CLI writes to a file.

Time Complexity:
  - get_engine(): O(1) after the first call for a URL
  - get_session(): O(1)
"""

from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from src.config import get_settings

# Engines and session factories keyed by URL (initialized once each)
_engines: dict[str, Engine] = {}
_session_factories: dict[str, sessionmaker] = {}


def get_engine(url: Optional[str] = None) -> Engine:
    """
    Get or create the SQLAlchemy engine for ``url``.

    In-memory SQLite URLs use a ``StaticPool`` so every session of the
    process sees the same database.

    Args:
        url: SQLAlchemy URL; defaults to ``LIOS_RESULTS_DB_URL``.
    """
    url = url or get_settings().RESULTS_DB_URL
    engine = _engines.get(url)
    if engine is None:
        if url in ("sqlite://", "sqlite:///:memory:"):
            engine = create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
        else:
            engine = create_engine(url)
        _engines[url] = engine
    return engine


def get_session_factory(url: Optional[str] = None) -> sessionmaker:
    engine = get_engine(url)
    key = str(engine.url)
    factory = _session_factories.get(key)
    if factory is None:
        factory = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        _session_factories[key] = factory
    return factory


def get_session(url: Optional[str] = None) -> Session:
    """
    Get a new database session.

    Usage (Recommended):
        >>> with get_session("sqlite:///results.db") as session:
        ...     TrialRepository(session).add_records(records)
    """
    return get_session_factory(url)()


def init_db(url: Optional[str] = None) -> None:
    """Create all tables defined in ``orm_models``; safe to call repeatedly."""
    from src.models.orm_models import Base

    Base.metadata.create_all(bind=get_engine(url))


def close_all_sessions() -> None:
    """Dispose every cached engine (test teardown, CLI shutdown)."""
    for engine in _engines.values():
        engine.dispose()
    _engines.clear()
    _session_factories.clear()
