from datetime import datetime
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

from sqlmodel import Field, SQLModel


class RunStatus(StrEnum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class RunKind(StrEnum):
    SINGLE = "single"
    SUITE = "suite"
    SWEEP = "sweep"


class RunRecord(SQLModel, table=True):
    id: int | None = Field(default=None, primary_key=True)
    name: str = Field(index=True)
    kind: RunKind = RunKind.SINGLE
    dataset: str
    fuzzy_order: str
    learning: str
    recurrent: bool = False
    status: RunStatus = RunStatus.RUNNING
    started_at: datetime = Field(default_factory=datetime.utcnow)
    finished_at: datetime | None = None
    rmse: float | None = None
    ndei: float | None = None
    nrmse: float | None = None
    rule_count: int | None = None
    param_count: int | None = None
    train_samples: int | None = None
    test_samples: int | None = None
    exec_time: float | None = None
    report_path: str | None = None
    trace_path: str | None = None
    error_message: str | None = None
