"""Memberships, firing strengths and crisp outputs of a hyperplane rule base.

Each rule is a hyperplane y = b0 + a.x over the input/target space. A sample
fires a rule according to its distance to that hyperplane; the crisp output
is the firing-weighted average of the rule consequents (type-1) or the
q-factor type reduction of lower and upper consequents (type-2).
"""

from typing import NamedTuple

import numpy as np

from palm.errors import DimensionMismatchError, EmptyRuleBaseError, NumericDomainError
from palm.fuzzy.types import Array, Hyperplane, RuleBase, StreamSample


class Type1Inference(NamedTuple):
    prediction: float
    firing: Array
    weights: Array
    consequents: Array


class Type2Inference(NamedTuple):
    prediction: float
    y_l: float
    y_r: float
    f_lower: Array
    f_upper: Array
    c_lower: Array
    c_upper: Array


def _check_finite(sample: StreamSample) -> None:
    if not (np.all(np.isfinite(sample.x_e)) and np.isfinite(sample.y_d)):
        raise NumericDomainError(f"sample {sample.k} has non-finite values")


def hyperplane_distances(x_e: Array, y_d: float, weights: Array) -> Array:
    """Distance of (x, y_d) to each row of weights (R, n+1); intercept excluded from the norm."""
    residual = np.abs(y_d - weights @ x_e)
    return residual / np.sqrt(1.0 + np.sum(weights[:, 1:] ** 2, axis=1))


def point_to_hyperplane_distance(sample: StreamSample, rule: Hyperplane) -> float:
    _check_finite(sample)
    if rule.omega.size != sample.x_e.size:
        raise DimensionMismatchError(
            f"rule has {rule.omega.size} coefficients, sample has {sample.x_e.size}", k=sample.k
        )
    if not np.all(np.isfinite(rule.omega)):
        raise NumericDomainError("rule weights are not finite")
    return float(hyperplane_distances(sample.x_e, sample.y_d, rule.omega[None, :])[0])


def membership(distances: Array, gamma: float) -> Array:
    distances = np.asarray(distances, dtype=np.float64)
    if distances.size == 0:
        raise EmptyRuleBaseError()
    d_max = np.max(distances)
    if d_max == 0.0:
        return np.ones_like(distances)
    return np.exp(-gamma * distances / d_max)


def consequent(sample: StreamSample, rule: Hyperplane) -> float:
    if rule.omega.size != sample.x_e.size:
        raise DimensionMismatchError(
            f"rule has {rule.omega.size} coefficients, sample has {sample.x_e.size}", k=sample.k
        )
    return float(sample.x_e @ rule.omega)


def _prepare(sample: StreamSample, rb: RuleBase) -> None:
    if not rb.rules:
        raise EmptyRuleBaseError()
    rb.check_sample(sample)
    _check_finite(sample)


def infer_type1(sample: StreamSample, rb: RuleBase) -> Type1Inference:
    _prepare(sample, rb)
    weights = rb.weight_matrix()
    firing = membership(hyperplane_distances(sample.x_e, sample.y_d, weights), rb.gamma)
    normalized = firing / np.sum(firing)
    consequents = weights @ sample.x_e
    return Type1Inference(
        prediction=float(normalized @ consequents),
        firing=firing,
        weights=normalized,
        consequents=consequents,
    )


def type_reduce(
    f_lower: Array,
    f_upper: Array,
    c_lower: Array,
    c_upper: Array,
    q_l: float,
    q_r: float,
) -> tuple[float, float, float]:
    """q-factor type reduction; returns (y, y_l, y_r)."""
    sum_lower = np.sum(f_lower)
    sum_upper = np.sum(f_upper)
    y_l = np.sum(q_l * f_lower * c_lower) / sum_upper + np.sum((1 - q_l) * f_upper * c_lower) / sum_lower
    y_r = np.sum(q_r * f_lower * c_upper) / sum_upper + np.sum((1 - q_r) * f_upper * c_upper) / sum_lower
    return float((y_l + y_r) / 2), float(y_l), float(y_r)


def infer_type2(sample: StreamSample, rb: RuleBase) -> Type2Inference:
    _prepare(sample, rb)
    lower = rb.weight_matrix(0)
    upper = rb.weight_matrix(1)
    mu_lower = membership(hyperplane_distances(sample.x_e, sample.y_d, lower), rb.gamma)
    mu_upper = membership(hyperplane_distances(sample.x_e, sample.y_d, upper), rb.gamma)
    # adapted tracks may cross; keep a valid interval per rule
    f_lower = np.minimum(mu_lower, mu_upper)
    f_upper = np.maximum(mu_lower, mu_upper)
    c_lower = lower @ sample.x_e
    c_upper = upper @ sample.x_e
    prediction, y_l, y_r = type_reduce(f_lower, f_upper, c_lower, c_upper, rb.q.q_l, rb.q.q_r)
    return Type2Inference(
        prediction=prediction,
        y_l=y_l,
        y_r=y_r,
        f_lower=f_lower,
        f_upper=f_upper,
        c_lower=c_lower,
        c_upper=c_upper,
    )


def infer(sample: StreamSample, rb: RuleBase) -> Type1Inference | Type2Inference:
    if rb.is_type2:
        return infer_type2(sample, rb)
    return infer_type1(sample, rb)


def firing_weights(result: Type1Inference | Type2Inference) -> tuple[Array, ...]:
    """Normalized firing strengths per learning track."""
    if isinstance(result, Type2Inference):
        return (
            result.f_lower / np.sum(result.f_lower),
            result.f_upper / np.sum(result.f_upper),
        )
    return (result.weights,)
