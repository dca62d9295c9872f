import os
import logging
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, declarative_base, declared_attr
from sqlalchemy.pool import StaticPool

logger = logging.getLogger("database")

DATABASE_URL_ENV = "OBSTACLE_DATABASE_URL"
LEDGER_FILENAME = "runs.sqlite"
DISABLED = "none"

Base = declarative_base()


class ModelBase:
    """Base class for every ledger table"""

    @declared_attr
    def __tablename__(cls):
        return cls.__name__.lower()


def resolve_database_url(output_root: str) -> Optional[str]:
    """
    The ledger URL from OBSTACLE_DATABASE_URL, defaulting to a SQLite file in the
    output root. ``none`` disables the ledger.
    """
    url = os.environ.get(DATABASE_URL_ENV)
    if url is None:
        return f"sqlite:///{os.path.join(os.path.abspath(output_root), LEDGER_FILENAME)}"
    if url.strip().lower() == DISABLED:
        return None
    return url


def create_db_engine(url: str) -> Engine:
    """Create an engine; in-memory SQLite shares one connection across threads"""
    if url.startswith("sqlite"):
        if ":memory:" in url or url == "sqlite://":
            return create_engine(
                url,
                echo=False,
                poolclass=StaticPool,
                connect_args={"check_same_thread": False},
            )
        path = url.split("sqlite:///", 1)[-1]
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        return create_engine(url, echo=False, connect_args={"check_same_thread": False})
    return create_engine(url, echo=False, pool_pre_ping=True)


def init_db(engine: Engine):
    """Create every ledger table"""
    # Registers the models on Base.metadata
    from infrastructure.database import models  # noqa: F401

    try:
        Base.metadata.create_all(bind=engine)
        logger.info("Run ledger initialized")
    except Exception as e:
        logger.error(f"Error initializing the run ledger: {str(e)}")
        raise


def create_session_factory(url: str) -> sessionmaker:
    """Engine, tables and a session factory for one ledger URL"""
    engine = create_db_engine(url)
    init_db(engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)
