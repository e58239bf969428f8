import json
import logging

import numpy as np
from pydantic import BaseModel, ValidationError

from palm.errors import SnapshotError
from palm.engine import PalmModel
from palm.fuzzy.coherence import CoherenceState, MomentTracker
from palm.fuzzy.types import Hyperplane, IntervalHyperplane, QFactors, Rule
from palm.schemas import ModelConfig

log = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1

Matrix = list[list[float]]


class TrackerState(BaseModel):
    dim: int
    count: int
    mean: list[float]
    comoment: Matrix


class RuleState(BaseModel):
    support: int
    omega: list[float] | None = None
    cov: Matrix | None = None
    omega_lower: list[float] | None = None
    omega_upper: list[float] | None = None
    cov_lower: Matrix | None = None
    cov_upper: Matrix | None = None
    moments: TrackerState | None = None


class ModelSnapshot(BaseModel):
    format_version: int = SNAPSHOT_VERSION
    config: ModelConfig
    n_inputs: int | None
    rules: list[RuleState]
    q_l: float
    q_r: float
    global_cov: Matrix | None = None
    global_cov_upper: Matrix | None = None
    coherence: TrackerState | None = None
    last_prediction: float
    samples_seen: int


def _tracker_state(tracker: MomentTracker | None) -> TrackerState | None:
    if tracker is None:
        return None
    return TrackerState(
        dim=tracker.dim,
        count=tracker.count,
        mean=tracker.mean.tolist(),
        comoment=tracker.comoment.tolist(),
    )


def _tracker(state: TrackerState | None) -> MomentTracker | None:
    if state is None:
        return None
    return MomentTracker(state.dim, state.count, np.array(state.mean), np.array(state.comoment))


def _rule_state(rule: Rule) -> RuleState:
    if isinstance(rule, IntervalHyperplane):
        return RuleState(
            support=rule.support,
            omega_lower=rule.omega_lower.tolist(),
            omega_upper=rule.omega_upper.tolist(),
            cov_lower=rule.cov_lower.tolist(),
            cov_upper=rule.cov_upper.tolist(),
            moments=_tracker_state(rule.moments),
        )
    return RuleState(
        support=rule.support,
        omega=rule.omega.tolist(),
        cov=rule.cov.tolist(),
        moments=_tracker_state(rule.moments),
    )


def _rule(state: RuleState, type2: bool) -> Rule:
    if type2:
        if state.omega_lower is None or state.omega_upper is None:
            raise SnapshotError("type-2 rule is missing its interval weights")
        return IntervalHyperplane(
            omega_lower=np.array(state.omega_lower),
            omega_upper=np.array(state.omega_upper),
            cov_lower=np.array(state.cov_lower),
            cov_upper=np.array(state.cov_upper),
            support=state.support,
            moments=_tracker(state.moments),
        )
    if state.omega is None or state.cov is None:
        raise SnapshotError("type-1 rule is missing its weights")
    return Hyperplane(
        omega=np.array(state.omega),
        cov=np.array(state.cov),
        support=state.support,
        moments=_tracker(state.moments),
    )


def _matrix(value: np.ndarray | None) -> Matrix | None:
    return None if value is None else value.tolist()


def snapshot(model: PalmModel) -> str:
    """Canonical JSON of the full model state."""
    rb = model.rule_base
    payload = ModelSnapshot(
        config=model.config,
        n_inputs=rb.n_inputs,
        rules=[_rule_state(rule) for rule in rb.rules],
        q_l=rb.q.q_l,
        q_r=rb.q.q_r,
        global_cov=_matrix(rb.global_cov),
        global_cov_upper=_matrix(rb.global_cov_upper),
        coherence=_tracker_state(model.coherence.tracker if model.coherence else None),
        last_prediction=model.last_prediction,
        samples_seen=model.samples_seen,
    )
    return json.dumps(payload.model_dump(mode="json"), sort_keys=True)


def restore(payload: str, config: ModelConfig | None = None) -> PalmModel:
    try:
        raw = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"corrupt snapshot: {exc}") from exc
    if not isinstance(raw, dict):
        raise SnapshotError("corrupt snapshot: expected a JSON object")
    version = raw.get("format_version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version!r}")
    try:
        state = ModelSnapshot.model_validate(raw)
    except ValidationError as exc:
        raise SnapshotError(f"corrupt snapshot: {exc.error_count()} invalid fields") from exc

    if config is not None and (
        config.fuzzy_order != state.config.fuzzy_order or config.learning != state.config.learning
    ):
        raise SnapshotError(
            f"snapshot holds a {state.config.label} model, config asks for {config.label}"
        )

    model = PalmModel(state.config)
    rb = model.rule_base
    rb.n_inputs = state.n_inputs
    rb.rules = [_rule(rule, rb.is_type2) for rule in state.rules]
    rb.q = QFactors(state.q_l, state.q_r)
    rb.global_cov = None if state.global_cov is None else np.array(state.global_cov)
    rb.global_cov_upper = (
        None if state.global_cov_upper is None else np.array(state.global_cov_upper)
    )
    if state.coherence is not None:
        model.coherence = CoherenceState(
            n_inputs=state.coherence.dim - 1, tracker=_tracker(state.coherence)
        )
    model.last_prediction = state.last_prediction
    model.samples_seen = state.samples_seen
    log.debug(f"restored {state.config.label} model with {len(rb.rules)} rules")
    return model


def rule_table(model: PalmModel) -> list[str]:
    """Header plus one line per rule: weight entries (lower then upper for type-2) and support."""
    rb = model.rule_base
    n = rb.n_inputs or 0
    names = ["b0", *(f"a{i}" for i in range(1, n + 1))]
    if rb.is_type2:
        columns = [f"{c}_lower" for c in names] + [f"{c}_upper" for c in names]
    else:
        columns = names
    lines = ["# " + " ".join([*columns, "support"])]
    for rule in rb.rules:
        values = np.concatenate(rule.tracks)
        lines.append(" ".join([*(f"{v:.6g}" for v in values), str(rule.support)]))
    return lines


def _expression(omega: np.ndarray) -> str:
    terms = [f"{omega[0]:.4f}"]
    for i, a in enumerate(omega[1:], start=1):
        terms.append(f"{'-' if a < 0 else '+'} {abs(a):.4f}x{i}")
    return " ".join(terms)


def render_rules(model: PalmModel) -> list[str]:
    lines = []
    for j, rule in enumerate(model.rule_base.rules, start=1):
        if isinstance(rule, IntervalHyperplane):
            then = f"y{j} = [{_expression(rule.omega_lower)}, {_expression(rule.omega_upper)}]"
        else:
            then = f"y{j} = {_expression(rule.omega)}"
        lines.append(f"R{j}: IF X is close to hyperplane {j} THEN {then}")
    return lines
