"""Single-pass training and prediction loop."""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

import numpy as np
import pandas as pd

from palm.errors import ConfigError, EmptyRuleBaseError
from palm.fuzzy.coherence import CoherenceState
from palm.fuzzy.inference import Type2Inference, firing_weights, infer
from palm.fuzzy.learning import adapt_q, global_step, hold_footprint, local_step
from palm.fuzzy.structure import maybe_grow, maybe_merge
from palm.fuzzy.types import RuleBase, StreamSample
from palm.schemas import ModelConfig

log = logging.getLogger(__name__)

_LAMBDA_FLOOR = 1e-12

TRACE_COLUMNS = ["k", "y_d", "y_hat", "rule_count", "event", "phase", "scored"]


class SampleEvent(StrEnum):
    NONE = "none"
    GROW = "grow"
    MERGE = "merge"


@dataclass(frozen=True)
class TraceRow:
    k: int
    y_d: float
    y_hat: float
    rule_count: int
    event: SampleEvent = SampleEvent.NONE
    phase: str = "train"
    scored: bool = True


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def extend(self, other: "RunTrace") -> None:
        self.rows.extend(other.rows)

    def scored(self) -> tuple[np.ndarray, np.ndarray]:
        """(predictions, targets) of the scored rows."""
        rows = [r for r in self.rows if r.scored]
        return np.array([r.y_hat for r in rows]), np.array([r.y_d for r in rows])

    @property
    def final_rule_count(self) -> int:
        return self.rows[-1].rule_count if self.rows else 0

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            [
                (r.k, r.y_d, r.y_hat, r.rule_count, r.event.value, r.phase, r.scored)
                for r in self.rows
            ],
            columns=TRACE_COLUMNS,
        )
        return frame


class PalmModel:
    """An evolving hyperplane rule base plus the state it learns with."""

    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        self.rule_base = RuleBase(config)
        self.coherence: CoherenceState | None = None
        self.last_prediction = 0.0
        self.samples_seen = 0

    @property
    def rule_count(self) -> int:
        return len(self.rule_base)

    @property
    def param_count(self) -> int:
        return self.rule_base.param_count()

    def predict_one(self, sample: StreamSample) -> float:
        if not self.rule_base.rules:
            raise EmptyRuleBaseError()
        return infer(sample, self.rule_base).prediction

    def learn_one(self, sample: StreamSample) -> TraceRow:
        """Predict first, then grow/merge and adapt on the same sample."""
        rb = self.rule_base
        rb.check_sample(sample)

        scored = bool(rb.rules)
        prediction = infer(sample, rb) if scored else None
        y_hat = prediction.prediction if prediction is not None else 0.0

        if self.coherence is None:
            self.coherence = CoherenceState(sample.n)
        self.coherence.update(sample)

        event = SampleEvent.NONE
        decision = maybe_grow(sample, rb, self.coherence)
        if decision.grew:
            event = SampleEvent.GROW
        elif not rb.is_global and maybe_merge(rb) is not None:
            event = SampleEvent.MERGE

        lambdas = tuple(
            np.maximum(w, _LAMBDA_FLOOR) for w in firing_weights(infer(sample, rb))
        )
        if rb.is_global:
            global_step(rb, sample, lambdas)
        else:
            local_step(rb, sample, lambdas)
        if rb.is_type2 and self.config.footprint > 0:
            rb.rules = [hold_footprint(rule, self.config.footprint) for rule in rb.rules]

        if isinstance(prediction, Type2Inference):
            rb.q = adapt_q(rb.q, prediction, sample.y_d, self.config.lr)

        self.last_prediction = y_hat
        self.samples_seen += 1
        return TraceRow(
            k=sample.k,
            y_d=sample.y_d,
            y_hat=y_hat,
            rule_count=len(rb),
            event=event,
            phase="train",
            scored=scored,
        )


def train_stream(
    config: ModelConfig,
    stream: Iterable[StreamSample],
    model: PalmModel | None = None,
) -> tuple[PalmModel, RunTrace]:
    model = model or PalmModel(config)
    trace = RunTrace()
    for sample in stream:
        trace.append(model.learn_one(sample))
    log.debug(f"trained on {len(trace)} samples, {model.rule_count} rules")
    return model, trace


def _feedback_inputs(
    sample: StreamSample, position: int, predictions: list[float], slots: dict[int, int]
) -> StreamSample:
    x_e = sample.x_e.copy()
    for slot, lag in slots.items():
        source = position - lag
        if source >= 0:
            x_e[slot + 1] = predictions[source]
    return StreamSample(x_e=x_e, y_d=sample.y_d, k=sample.k)


def predict_stream(
    model: PalmModel, stream: Iterable[StreamSample], recurrent: bool = False
) -> RunTrace:
    """Frozen-parameter pass; recurrent mode feeds predictions back in place of targets."""
    if not model.rule_base.rules:
        raise EmptyRuleBaseError()
    slots = model.config.feedback_slots
    if recurrent and not slots:
        raise ConfigError("recurrent prediction needs a lagged-output input slot (feedback_slots)")
    trace = RunTrace()
    predictions: list[float] = []
    y_ref = model.last_prediction
    for position, sample in enumerate(stream):
        model.rule_base.check_sample(sample)
        if recurrent:
            query = _feedback_inputs(sample, position, predictions, slots).with_target(y_ref)
        else:
            query = sample
        y_hat = infer(query, model.rule_base).prediction
        predictions.append(y_hat)
        y_ref = y_hat
        trace.append(
            TraceRow(
                k=sample.k,
                y_d=sample.y_d,
                y_hat=y_hat,
                rule_count=model.rule_count,
                phase="test",
            )
        )
    return trace
