import logging
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

# (field, low, high) ranges from the published parameter study
HYPERPARAMETER_RANGES: dict[str, tuple[float, float]] = {
    "gamma": (1.0, 100.0),
    "b1": (0.01, 0.1),
    "b2": (0.01, 0.1),
    "c1": (0.01, 0.1),
    "c2": (0.001, 0.1),
}


class FuzzyOrder(StrEnum):
    TYPE1 = "type1"
    TYPE2 = "type2"


class LearningMode(StrEnum):
    LOCAL = "local"
    GLOBAL = "global"


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    fuzzy_order: FuzzyOrder = FuzzyOrder.TYPE1
    learning: LearningMode = LearningMode.LOCAL
    recurrent: bool = False
    gamma: float = 10.0
    b1: float = 0.02
    b2: float = 0.055
    c1: float = 0.01
    c2: float = 0.001
    beta: float = 1e-7
    omega_init: float = 1e5
    lr: float = 0.1
    q_l: float = 0.3
    q_r: float = 0.7
    interval_offset: float = 0.05
    # smallest half-width kept between the lower and upper intercepts of a type-2 rule
    footprint: float = 0.002
    max_rules: int = 64
    # input slot (0-based, intercept excluded) -> lag in samples of the fed-back target
    feedback_slots: dict[int, int] = Field(default_factory=dict)
    force: bool = False

    @property
    def label(self) -> str:
        return f"{self.fuzzy_order.value}-{self.learning.value}"

    @model_validator(mode="after")
    def check_ranges(self) -> "ModelConfig":
        for name, (low, high) in HYPERPARAMETER_RANGES.items():
            value = getattr(self, name)
            if not low <= value <= high:
                message = f"{name}={value} outside [{low:g}, {high:g}]"
                if not self.force:
                    raise ValueError(f"{message} (pass --force to override)")
                log.warning(f"{message}; accepted because force is set")
        if self.fuzzy_order == FuzzyOrder.TYPE2 and not self.q_l < self.q_r:
            message = f"q_l={self.q_l} must be lower than q_r={self.q_r}"
            if not self.force:
                raise ValueError(message)
            log.warning(f"{message}; accepted because force is set")
        if self.beta < 0:
            raise ValueError(f"beta={self.beta} must be non-negative")
        if self.omega_init <= 0:
            raise ValueError(f"omega_init={self.omega_init} must be positive")
        if self.lr <= 0:
            raise ValueError(f"lr={self.lr} must be positive")
        if self.interval_offset <= 0:
            raise ValueError(f"interval_offset={self.interval_offset} must be positive")
        if self.footprint < 0:
            raise ValueError(f"footprint={self.footprint} must be non-negative")
        if self.max_rules < 1:
            raise ValueError(f"max_rules={self.max_rules} must be at least 1")
        if self.recurrent and not self.feedback_slots:
            raise ValueError(
                "recurrent mode needs at least one lagged-output input slot (feedback_slots)"
            )
        if any(lag < 1 for lag in self.feedback_slots.values()):
            raise ValueError("feedback_slots lags must be at least 1")
        return self


class LagSlot(BaseModel):
    column: str
    lag: int = Field(default=0, ge=0)


class TargetSlot(BaseModel):
    column: str
    lead: int = Field(default=0, ge=0)


DatasetSource = Literal["csv", "mackey-glass", "nonlinear-sysid", "gas-furnace-standin"]


class DatasetSpec(BaseModel):
    """Lag map and split protocol of one benchmark stream."""

    format_version: int = FORMAT_VERSION
    name: str
    source: DatasetSource
    path: str | None = None
    inputs: list[LagSlot]
    target: TargetSlot
    train_count: int | None = Field(default=None, ge=1)
    test_count: int | None = Field(default=None, ge=0)
    train_fraction: float | None = Field(default=None, gt=0, lt=1)
    train_start: int | None = Field(default=None, ge=0)
    test_start: int | None = Field(default=None, ge=0)
    mirror: bool = False
    normalize: bool = False

    @field_validator("format_version")
    @classmethod
    def check_version(cls, v: int) -> int:
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported dataset spec version {v}")
        return v

    @model_validator(mode="after")
    def check_protocol(self) -> "DatasetSpec":
        if not self.inputs:
            raise ValueError("a dataset needs at least one input slot")
        if self.source == "csv" and not self.path:
            raise ValueError("csv datasets need a path")
        if self.train_count is None and self.train_fraction is None:
            raise ValueError("set train_count or train_fraction")
        return self

    @property
    def max_lag(self) -> int:
        return max(slot.lag for slot in self.inputs)

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    def feedback_slots(self) -> dict[int, int]:
        """Input slots that carry past values of the target column."""
        return {
            i: slot.lag + self.target.lead
            for i, slot in enumerate(self.inputs)
            if slot.column == self.target.column and slot.lag + self.target.lead >= 1
        }


class RunConfig(BaseModel):
    format_version: int = FORMAT_VERSION
    dataset: str
    model: ModelConfig = Field(default_factory=ModelConfig)
    output_dir: str | None = None
    name: str | None = None
    train_limit: int | None = Field(default=None, ge=1)
    test_limit: int | None = Field(default=None, ge=1)

    @field_validator("format_version")
    @classmethod
    def check_version(cls, v: int) -> int:
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported run config version {v}")
        return v

    @property
    def run_name(self) -> str:
        return self.name or f"{self.dataset}-{self.model.label}{'-rec' if self.model.recurrent else ''}"


class MetricReport(BaseModel):
    run_name: str
    dataset: str
    rmse: float
    ndei: float
    nrmse: float
    rule_count: int
    param_count: int
    train_samples: int
    test_samples: int
    exec_time: float
    config: RunConfig
    trace_path: str | None = None


class SweepRow(BaseModel):
    b1: float
    b2: float
    varied: Literal["b1", "b2"]
    nrmse: float
    ndei: float
    exec_time: float
    rules: int
