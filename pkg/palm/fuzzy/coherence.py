"""Streaming moments and the maximal information compression index (MCI).

The MCI of a pair of scalar signals is the smallest eigenvalue of their 2x2
covariance matrix: zero for perfectly correlated signals, growing as the
pair decorrelates. Rule growth compares each rule's response sequence with
the inputs (input coherence) and with the target (output coherence).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from numpy.typing import NDArray

from palm.errors import NumericDomainError

if TYPE_CHECKING:
    from palm.fuzzy.types import Rule, RuleBase, StreamSample

log = logging.getLogger(__name__)

_VARIANCE_FLOOR = 1e-18


class MciResult(NamedTuple):
    xi: float
    degenerate: bool


class Coherence(NamedTuple):
    input: float
    output: float
    eligible: bool


def mci_from_moments(var_u: float, var_v: float, cov_uv: float) -> MciResult:
    if var_u <= _VARIANCE_FLOOR or var_v <= _VARIANCE_FLOOR:
        return MciResult(0.0, True)
    total = var_u + var_v
    # var_u*var_v*(1 - rho^2) == var_u*var_v - cov^2
    disc = total * total - 4.0 * (var_u * var_v - cov_uv * cov_uv)
    xi = 0.5 * (total - np.sqrt(max(disc, 0.0)))
    return MciResult(max(float(xi), 0.0), False)


def mci_correlation(u: NDArray, v: NDArray) -> MciResult:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise NumericDomainError("MCI needs two scalar sequences of equal length")
    if u.size < 2:
        raise NumericDomainError("MCI needs at least two samples")
    c = np.cov(np.vstack([u, v]), bias=True)
    return mci_from_moments(c[0, 0], c[1, 1], c[0, 1])


class MomentTracker:
    """One-pass mean and co-moment matrix of a vector signal (Welford)."""

    def __init__(
        self,
        dim: int,
        count: int = 0,
        mean: NDArray | None = None,
        comoment: NDArray | None = None,
    ) -> None:
        self.dim = dim
        self.count = count
        self.mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=np.float64)
        self.comoment = (
            np.zeros((dim, dim)) if comoment is None else np.asarray(comoment, dtype=np.float64)
        )

    @classmethod
    def starting_at(cls, z: NDArray) -> MomentTracker:
        tracker = cls(dim=len(z))
        tracker.update(z)
        return tracker

    def update(self, z: NDArray) -> None:
        z = np.asarray(z, dtype=np.float64)
        if z.size != self.dim:
            raise NumericDomainError(f"expected {self.dim} channels, got {z.size}")
        self.count += 1
        delta = z - self.mean
        self.mean = self.mean + delta / self.count
        self.comoment = self.comoment + np.outer(delta, z - self.mean)

    def updated(self, z: NDArray) -> MomentTracker:
        copy = MomentTracker(self.dim, self.count, self.mean.copy(), self.comoment.copy())
        copy.update(z)
        return copy

    def covariance(self) -> NDArray:
        if self.count == 0:
            return np.zeros((self.dim, self.dim))
        return self.comoment / self.count

    def mci(self, i: int, j: int) -> MciResult:
        if self.count < 2:
            return MciResult(0.0, True)
        c = self.covariance()
        return mci_from_moments(c[i, i], c[j, j], c[i, j])


def _mean_mci(tracker: MomentTracker, source: int, channels: range) -> MciResult:
    values = [r.xi for r in (tracker.mci(source, c) for c in channels) if not r.degenerate]
    if not values:
        return MciResult(0.0, True)
    return MciResult(float(np.mean(values)), False)


@dataclass
class CoherenceState:
    """Global (x, t) moments shared by every rule's coherence test."""

    n_inputs: int
    tracker: MomentTracker | None = None
    warned: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.tracker is None:
            self.tracker = MomentTracker(self.n_inputs + 1)

    def update(self, sample: StreamSample) -> None:
        self.tracker.update(np.append(sample.x, sample.y_d))

    def input_target_mci(self) -> MciResult:
        """xi(X, T): mean over non-constant input channels of xi(x_c, t)."""
        result = _mean_mci(self.tracker, self.n_inputs, range(self.n_inputs))
        if result.degenerate and self.tracker.count >= 2 and not self.warned:
            log.warning("every input channel is constant so far; coherence is degenerate")
            self.warned = True
        return result


def rule_observation(rule: Rule, sample: StreamSample) -> NDArray:
    """Vector [responses..., x..., t] accumulated by a rule's tracker."""
    return np.concatenate((rule.responses(sample.x_e), sample.x, [sample.y_d]))


def rule_coherence(
    tracker: MomentTracker,
    n_responses: int,
    n_inputs: int,
    xi_xt: float,
    q_l: float = 0.5,
    q_r: float = 0.5,
) -> Coherence:
    inputs = range(n_responses, n_responses + n_inputs)
    target = n_responses + n_inputs
    per_input = [_mean_mci(tracker, h, inputs) for h in range(n_responses)]
    per_target = [tracker.mci(h, target) for h in range(n_responses)]
    if any(r.degenerate for r in per_input + per_target):
        return Coherence(0.0, 0.0, False)
    if n_responses == 1:
        ic = per_input[0].xi
        xi_ht = per_target[0].xi
    else:
        lower, upper = per_input
        ic = _blend(lower.xi, upper.xi, q_l, q_r)
        xi_ht = _blend(per_target[0].xi, per_target[1].xi, q_l, q_r)
    return Coherence(ic, xi_xt - xi_ht, True)


def _blend(lower: float, upper: float, q_l: float, q_r: float) -> float:
    left = (1 - q_l) * upper + q_l * lower
    right = (1 - q_r) * upper + q_r * lower
    return (left + right) / 2


def input_output_coherence(
    sample: StreamSample, rb: RuleBase, state: CoherenceState
) -> list[Coherence]:
    """Per-rule (I_c, O_c) with the current sample tentatively included."""
    xi_xt = state.input_target_mci()
    n_responses = 2 if rb.is_type2 else 1
    results = []
    for rule in rb.rules:
        z = rule_observation(rule, sample)
        tracker = rule.moments.updated(z) if rule.moments is not None else MomentTracker.starting_at(z)
        if xi_xt.degenerate:
            results.append(Coherence(0.0, 0.0, False))
            continue
        results.append(
            rule_coherence(tracker, n_responses, rb.n_inputs, xi_xt.xi, rb.q.q_l, rb.q.q_r)
        )
    return results
