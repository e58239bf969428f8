import logging
from dataclasses import replace

import numpy as np
from scipy.linalg import block_diag

from palm.fuzzy.inference import Type2Inference
from palm.fuzzy.types import Array, Hyperplane, IntervalHyperplane, QFactors, RuleBase, StreamSample

log = logging.getLogger(__name__)


def _gain_and_cov(cov: Array, x: Array, lam: float) -> tuple[Array, Array]:
    cx = cov @ x
    gain = cx / (1.0 / lam + x @ cx)
    new_cov = cov - np.outer(gain, x @ cov)
    return gain, 0.5 * (new_cov + new_cov.T)


def _rls_update(
    omega: Array,
    cov: Array,
    x: Array,
    y: float,
    lam: float,
    beta: float,
    omega_init: float,
) -> tuple[Array, Array]:
    """One weighted RLS step with quadratic weight decay on the previous weights."""
    gain, new_cov = _gain_and_cov(cov, x, lam)
    if not (np.all(np.isfinite(gain)) and np.all(np.isfinite(new_cov))):
        log.warning(f"non-finite RLS gain; covariance reset to {omega_init:g}*I")
        return omega.copy(), omega_init * np.eye(omega.size)
    new_omega = omega - beta * (new_cov @ omega) + gain * (y - x @ omega)
    return new_omega, new_cov


def fwrls_step(rule: Hyperplane, sample: StreamSample, lam: float, omega_init: float = 1e5) -> Hyperplane:
    """Fuzzily weighted RLS without weight decay."""
    gain, new_cov = _gain_and_cov(rule.cov, sample.x_e, lam)
    if not (np.all(np.isfinite(gain)) and np.all(np.isfinite(new_cov))):
        log.warning(f"non-finite RLS gain; covariance reset to {omega_init:g}*I")
        return replace(rule, omega=rule.omega.copy(), cov=omega_init * np.eye(rule.omega.size))
    new_omega = rule.omega + gain * (sample.y_d - sample.x_e @ rule.omega)
    return replace(rule, omega=new_omega, cov=new_cov)


def fwgrls_step(
    rule: Hyperplane,
    sample: StreamSample,
    lam: float,
    beta: float = 1e-7,
    omega_init: float = 1e5,
) -> Hyperplane:
    omega, cov = _rls_update(rule.omega, rule.cov, sample.x_e, sample.y_d, lam, beta, omega_init)
    return replace(rule, omega=omega, cov=cov)


def fwgrls_step_type2(
    rule: IntervalHyperplane,
    sample: StreamSample,
    lam_lower: float,
    lam_upper: float,
    beta: float = 1e-7,
    omega_init: float = 1e5,
) -> IntervalHyperplane:
    lower, cov_lower = _rls_update(
        rule.omega_lower, rule.cov_lower, sample.x_e, sample.y_d, lam_lower, beta, omega_init
    )
    upper, cov_upper = _rls_update(
        rule.omega_upper, rule.cov_upper, sample.x_e, sample.y_d, lam_upper, beta, omega_init
    )
    return replace(
        rule, omega_lower=lower, omega_upper=upper, cov_lower=cov_lower, cov_upper=cov_upper
    )


def hold_footprint(rule: IntervalHyperplane, half_width: float) -> IntervalHyperplane:
    """Re-centre the intercept interval when it is narrower than 2*half_width."""
    lower, upper = rule.omega_lower[0], rule.omega_upper[0]
    if upper - lower >= 2.0 * half_width:
        return rule
    centre = 0.5 * (lower + upper)
    omega_lower, omega_upper = rule.omega_lower.copy(), rule.omega_upper.copy()
    omega_lower[0], omega_upper[0] = centre - half_width, centre + half_width
    return replace(rule, omega_lower=omega_lower, omega_upper=omega_upper)


def extend_global_covariance(cov: Array | None, rule_size: int, omega_init: float) -> Array:
    block = omega_init * np.eye(rule_size)
    if cov is None:
        return block
    return block_diag(cov, block)


def _global_track(
    rb: RuleBase, sample: StreamSample, lambdas: Array, track: int, cov: Array
) -> tuple[list[Array], Array]:
    theta = rb.weight_matrix(track).ravel()
    regressor = np.concatenate([lam * sample.x_e for lam in lambdas])
    theta, cov = _rls_update(
        theta, cov, regressor, sample.y_d, 1.0, rb.config.beta, rb.config.omega_init
    )
    return list(theta.reshape(len(rb.rules), rb.rule_size)), cov


def global_step(rb: RuleBase, sample: StreamSample, lambdas: tuple[Array, ...]) -> None:
    """One RLS update over the concatenated weights of every rule (mutates rb)."""
    expected = len(rb.rules) * rb.rule_size
    if rb.global_cov is None or rb.global_cov.shape[0] != expected:
        raise ValueError("global covariance does not match the rule base")
    weights, rb.global_cov = _global_track(rb, sample, lambdas[0], 0, rb.global_cov)
    if rb.is_type2:
        uppers, rb.global_cov_upper = _global_track(
            rb, sample, lambdas[1], 1, rb.global_cov_upper
        )
        rb.rules = [
            replace(rule, omega_lower=lower, omega_upper=upper)
            for rule, lower, upper in zip(rb.rules, weights, uppers)
        ]
    else:
        rb.rules = [replace(rule, omega=w) for rule, w in zip(rb.rules, weights)]


def local_step(rb: RuleBase, sample: StreamSample, lambdas: tuple[Array, ...]) -> None:
    beta, omega_init = rb.config.beta, rb.config.omega_init
    if rb.is_type2:
        rb.rules = [
            fwgrls_step_type2(rule, sample, lo, up, beta, omega_init)
            for rule, lo, up in zip(rb.rules, lambdas[0], lambdas[1])
        ]
    else:
        rb.rules = [
            fwgrls_step(rule, sample, lam, beta, omega_init)
            for rule, lam in zip(rb.rules, lambdas[0])
        ]


def q_gradients(result: Type2Inference, y_d: float) -> tuple[float, float]:
    """dE/dq_l and dE/dq_r for E = (y_d - y)^2 / 2."""
    sum_lower = np.sum(result.f_lower)
    sum_upper = np.sum(result.f_upper)
    error = y_d - result.prediction
    d_yl = np.sum(result.f_lower * result.c_lower) / sum_upper - np.sum(
        result.f_upper * result.c_lower
    ) / sum_lower
    d_yr = np.sum(result.f_lower * result.c_upper) / sum_upper - np.sum(
        result.f_upper * result.c_upper
    ) / sum_lower
    return float(-0.5 * error * d_yl), float(-0.5 * error * d_yr)


def adapt_q(q: QFactors, result: Type2Inference, y_d: float, lr: float = 0.1) -> QFactors:
    grad_l, grad_r = q_gradients(result, y_d)
    return QFactors(
        q_l=float(np.clip(q.q_l - lr * grad_l, 0.0, 1.0)),
        q_r=float(np.clip(q.q_r - lr * grad_r, 0.0, 1.0)),
    )
