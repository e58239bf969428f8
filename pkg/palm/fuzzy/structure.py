"""Rule growth and rule merging."""

import logging
from dataclasses import dataclass, replace

import numpy as np

from palm.errors import DegenerateRuleError
from palm.fuzzy.coherence import (
    CoherenceState,
    MomentTracker,
    input_output_coherence,
    rule_observation,
)
from palm.fuzzy.inference import hyperplane_distances
from palm.fuzzy.learning import extend_global_covariance
from palm.fuzzy.types import Array, Hyperplane, IntervalHyperplane, Rule, RuleBase, StreamSample

log = logging.getLogger(__name__)

_PARALLEL_EPS = 1e-12


@dataclass(frozen=True)
class GrowDecision:
    grew: bool
    input_coherence: float = 0.0
    output_coherence: float = 0.0
    seeded_from: int | None = None
    bootstrapped: bool = False


@dataclass(frozen=True)
class MergeReport:
    retained: int
    removed: int
    angle: float
    distance: float
    support: int


def _copy_rule(rule: Rule, omega_init: float) -> Rule:
    if isinstance(rule, IntervalHyperplane):
        size = rule.omega_lower.size
        return IntervalHyperplane(
            omega_lower=rule.omega_lower.copy(),
            omega_upper=rule.omega_upper.copy(),
            cov_lower=omega_init * np.eye(size),
            cov_upper=omega_init * np.eye(size),
        )
    return Hyperplane(omega=rule.omega.copy(), cov=omega_init * np.eye(rule.omega.size))


def _winner(sample: StreamSample, rb: RuleBase) -> int:
    distances = np.mean(
        [
            hyperplane_distances(sample.x_e, sample.y_d, rb.weight_matrix(track))
            for track in range(2 if rb.is_type2 else 1)
        ],
        axis=0,
    )
    return int(np.argmin(distances))


def maybe_grow(sample: StreamSample, rb: RuleBase, state: CoherenceState) -> GrowDecision:
    """Add a rule when the best-matching rule is input-incoherent yet output-coherent."""
    cfg = rb.config
    if not rb.rules:
        rb.n_inputs = sample.n
        rule = rb.new_rule()
        rule.moments = MomentTracker.starting_at(rule_observation(rule, sample))
        rb.rules.append(rule)
        if rb.is_global:
            rb.global_cov = extend_global_covariance(None, rb.rule_size, cfg.omega_init)
            if rb.is_type2:
                rb.global_cov_upper = extend_global_covariance(None, rb.rule_size, cfg.omega_init)
        return GrowDecision(grew=False, bootstrapped=True)

    coherences = input_output_coherence(sample, rb, state)
    eligible = [i for i, c in enumerate(coherences) if c.eligible]
    if eligible:
        best = max(eligible, key=lambda i: coherences[i].input)
        ic, oc = coherences[best].input, coherences[best].output
        if ic > cfg.b1 and oc < cfg.b2:
            if len(rb.rules) >= cfg.max_rules:
                log.debug(f"sample {sample.k}: growth refused, rule cap {cfg.max_rules} reached")
            else:
                _grow(sample, rb, best)
                log.debug(f"sample {sample.k}: grew rule {len(rb.rules) - 1} from rule {best}")
                return GrowDecision(True, ic, oc, seeded_from=best)
    else:
        ic = oc = 0.0
        best = None

    winner = _winner(sample, rb)
    rule = rb.rules[winner]
    rule.support += 1
    z = rule_observation(rule, sample)
    if rule.moments is None:
        rule.moments = MomentTracker.starting_at(z)
    else:
        rule.moments.update(z)
    return GrowDecision(False, ic, oc, seeded_from=best)


def _grow(sample: StreamSample, rb: RuleBase, seed: int) -> None:
    cfg = rb.config
    parent = rb.rules[seed]
    child = _copy_rule(parent, cfg.omega_init)
    z = rule_observation(parent, sample)
    parent.moments = MomentTracker.starting_at(z)
    child.moments = MomentTracker.starting_at(z)
    rb.rules.append(child)
    if rb.is_global:
        rb.global_cov = extend_global_covariance(rb.global_cov, rb.rule_size, cfg.omega_init)
        if rb.is_type2:
            rb.global_cov_upper = extend_global_covariance(
                rb.global_cov_upper, rb.rule_size, cfg.omega_init
            )


def hyperplane_angle(w1: Array, w2: Array) -> float:
    n1, n2 = np.linalg.norm(w1), np.linalg.norm(w2)
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateRuleError("angle is undefined for a zero weight vector")
    cosine = abs(float(np.dot(w1, w2))) / (n1 * n2)
    return float(np.arccos(min(cosine, 1.0)))


def _unit_normal(w: Array) -> Array:
    normal = np.append(-w[1:], 1.0)
    return normal / np.linalg.norm(normal)


def hyperplane_min_distance(r1: Rule, r2: Rule, track: int = 0) -> float:
    """Minimum distance between one weight track of two rules, each a point plus a direction.

    With three coefficients the rules are taken as lines a + s*b in 3-D,
    a = (0, 0, b0) and b the unit normal, and the skew-line distance is used.
    Otherwise, and for (near) parallel directions, the intercept gap is
    projected on the mean unit normal.
    """
    w1, w2 = r1.tracks[track], r2.tracks[track]
    b1, b2 = _unit_normal(w1), _unit_normal(w2)
    offset = np.zeros_like(b1)
    offset[-1] = w1[0] - w2[0]
    if w1.size == 3:
        cross = np.cross(b1, b2)
        norm = np.linalg.norm(cross)
        if norm > _PARALLEL_EPS:
            return float(abs(offset @ cross) / norm)
    mean_normal = b1 + b2
    mean_normal /= np.linalg.norm(mean_normal)
    return float(abs(offset @ mean_normal))


def _pair_angles(weights: Array) -> Array:
    norms = np.linalg.norm(weights, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = weights / safe[:, None]
    cosine = np.clip(np.abs(unit @ unit.T), 0.0, 1.0)
    angles = np.arccos(cosine)
    zero = norms == 0
    angles[zero, :] = np.inf
    angles[:, zero] = np.inf
    return angles


def _merge_rules(keep: Rule, drop: Rule) -> Rule:
    total = keep.support + drop.support
    if isinstance(keep, IntervalHyperplane):
        return replace(
            keep,
            omega_lower=(keep.omega_lower * keep.support + drop.omega_lower * drop.support) / total,
            omega_upper=(keep.omega_upper * keep.support + drop.omega_upper * drop.support) / total,
            support=total,
        )
    return replace(
        keep,
        omega=(keep.omega * keep.support + drop.omega * drop.support) / total,
        support=total,
    )


def maybe_merge(rb: RuleBase) -> MergeReport | None:
    """Fuse the most parallel pair of nearby hyperplanes (local learning only)."""
    if rb.is_global or len(rb.rules) < 2:
        return None
    cfg = rb.config
    tracks = range(2 if rb.is_type2 else 1)
    angles = [_pair_angles(rb.weight_matrix(t)) for t in tracks]
    candidates = []
    for i in range(len(rb.rules)):
        for j in range(i + 1, len(rb.rules)):
            pair_angles = [a[i, j] for a in angles]
            if max(pair_angles) > cfg.c1:
                continue
            distances = [
                hyperplane_min_distance(rb.rules[i], rb.rules[j], t)
                for t in tracks
            ]
            if max(distances) <= cfg.c2:
                candidates.append((float(np.mean(pair_angles)), i, j, max(distances)))
    if not candidates:
        return None
    angle, i, j, distance = min(candidates)
    keep, drop = (i, j) if rb.rules[i].support >= rb.rules[j].support else (j, i)
    rb.rules[keep] = _merge_rules(rb.rules[keep], rb.rules[drop])
    del rb.rules[drop]
    retained = keep if keep < drop else keep - 1
    log.debug(f"merged rule {drop} into rule {keep} (angle {angle:.3g}, distance {distance:.3g})")
    return MergeReport(
        retained=retained,
        removed=drop,
        angle=angle,
        distance=distance,
        support=rb.rules[retained].support,
    )
