from datetime import datetime

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, JSON, String
from sqlalchemy.orm import relationship

from infrastructure.database.connection import Base, ModelBase


class Run(Base, ModelBase):
    """One CLI invocation of a preset"""

    id = Column(String(36), primary_key=True)
    preset = Column(String(50), nullable=False)
    config_digest = Column(String(64), nullable=False)
    seed = Column(Integer, nullable=False, default=0)
    out_dir = Column(String(1024), nullable=False)
    started_at = Column(DateTime, default=datetime.now)
    finished_at = Column(DateTime, nullable=True)
    status = Column(String(30), nullable=False, default="running")
    exit_code = Column(Integer, nullable=True)

    checks = relationship("RunCheck", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Run(id='{self.id}', preset='{self.preset}', status='{self.status}')>"

    def to_dict(self):
        return {
            "run_id": self.id,
            "preset": self.preset,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "status": self.status,
            "exit_code": self.exit_code,
            "checks": [check.name for check in self.checks] if self.checks else [],
        }


class RunCheck(Base, ModelBase):
    """One verified inequality or property of a run"""

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String(36), ForeignKey("run.id"), nullable=False)
    name = Column(String(100), nullable=False)
    value = Column(Float, nullable=True)
    threshold = Column(Float, nullable=True)
    passed = Column(Boolean, nullable=False)
    detail = Column(JSON, default=dict)

    run = relationship("Run", back_populates="checks")

    def __repr__(self):
        return f"<RunCheck(name='{self.name}', passed={self.passed})>"
