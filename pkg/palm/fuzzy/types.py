from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from palm.errors import DimensionMismatchError
from palm.fuzzy.coherence import MomentTracker
from palm.schemas import FuzzyOrder, LearningMode, ModelConfig

Array = NDArray[np.float64]


@dataclass(frozen=True)
class StreamSample:
    """One observation: extended input [1, x1..xn], target and sample index."""

    x_e: Array
    y_d: float
    k: int

    def __post_init__(self) -> None:
        if self.x_e.ndim != 1 or self.x_e.size < 1 or self.x_e[0] != 1.0:
            raise ValueError("extended input must be a vector starting with the intercept 1")

    @classmethod
    def from_inputs(cls, x: Sequence[float] | Array, y_d: float, k: int) -> "StreamSample":
        x_e = np.concatenate(([1.0], np.asarray(x, dtype=np.float64).ravel()))
        return cls(x_e=x_e, y_d=float(y_d), k=int(k))

    @property
    def n(self) -> int:
        return self.x_e.size - 1

    @property
    def x(self) -> Array:
        return self.x_e[1:]

    def with_target(self, y_d: float) -> "StreamSample":
        return replace(self, y_d=float(y_d))


@dataclass
class Hyperplane:
    omega: Array
    cov: Array
    support: int = 1
    moments: MomentTracker | None = None

    @classmethod
    def bootstrap(cls, n_inputs: int, omega_init: float) -> "Hyperplane":
        size = n_inputs + 1
        return cls(omega=np.zeros(size), cov=omega_init * np.eye(size))

    @property
    def tracks(self) -> tuple[Array, ...]:
        return (self.omega,)

    def responses(self, x_e: Array) -> Array:
        return np.array([x_e @ self.omega])


@dataclass
class IntervalHyperplane:
    omega_lower: Array
    omega_upper: Array
    cov_lower: Array
    cov_upper: Array
    support: int = 1
    moments: MomentTracker | None = None

    @classmethod
    def bootstrap(cls, n_inputs: int, omega_init: float, offset: float) -> "IntervalHyperplane":
        size = n_inputs + 1
        return cls(
            omega_lower=np.full(size, -offset),
            omega_upper=np.full(size, offset),
            cov_lower=omega_init * np.eye(size),
            cov_upper=omega_init * np.eye(size),
        )

    @property
    def tracks(self) -> tuple[Array, ...]:
        return (self.omega_lower, self.omega_upper)

    def responses(self, x_e: Array) -> Array:
        return np.array([x_e @ self.omega_lower, x_e @ self.omega_upper])


Rule = Hyperplane | IntervalHyperplane


@dataclass(frozen=True)
class QFactors:
    q_l: float
    q_r: float


@dataclass
class RuleBase:
    config: ModelConfig
    n_inputs: int | None = None
    rules: list[Rule] = field(default_factory=list)
    q: QFactors | None = None
    # concatenated covariances, global learning only
    global_cov: Array | None = None
    global_cov_upper: Array | None = None

    def __post_init__(self) -> None:
        if self.q is None:
            self.q = QFactors(self.config.q_l, self.config.q_r)

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def gamma(self) -> float:
        return self.config.gamma

    @property
    def is_type2(self) -> bool:
        return self.config.fuzzy_order == FuzzyOrder.TYPE2

    @property
    def is_global(self) -> bool:
        return self.config.learning == LearningMode.GLOBAL

    @property
    def rule_size(self) -> int:
        if self.n_inputs is None:
            return 0
        return self.n_inputs + 1

    def param_count(self) -> int:
        return len(self.rules) * self.rule_size * (2 if self.is_type2 else 1)

    def check_sample(self, sample: StreamSample) -> None:
        if self.n_inputs is not None and sample.n != self.n_inputs:
            raise DimensionMismatchError(
                f"expected {self.n_inputs} inputs, got {sample.n}", k=sample.k
            )

    def new_rule(self) -> Rule:
        if self.n_inputs is None:
            raise ValueError("input dimension is unknown until the first sample")
        if self.is_type2:
            return IntervalHyperplane.bootstrap(
                self.n_inputs, self.config.omega_init, self.config.interval_offset
            )
        return Hyperplane.bootstrap(self.n_inputs, self.config.omega_init)

    def weight_matrix(self, track: int = 0) -> Array:
        """Stacked weight vectors (R, n+1) of one track (0 lower/type-1, 1 upper)."""
        return np.vstack([rule.tracks[track] for rule in self.rules])
