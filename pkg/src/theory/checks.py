import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import special

from src.core.errors import ValidationError
from src.core.utils import derive_seed, make_rng
from src.qnet.policy import entropy_ceiling
from src.theory.bellman import (QStarResult, causal_bellman, causal_soft_value, greedy_backup, solve_qstar,
                                soft_bellman)
from src.theory.toy_mdp import ToyMdp, random_toy_mdp

CONTRACTION_TOL = 1e-12
BOUND_TOL = 1e-8
ENTROPY_TOL = 1e-10


@dataclass
class BoundReport:
    """
    Outcome of one numerical bound check.

    max_slack is the largest (lhs - rhs) seen over every checked inequality;
    it stays at or below the tolerance on a passing run, and its distance
    from zero shows how tight the bound is.
    """

    name: str
    checked: int = 0
    violations: int = 0
    max_slack: float = -math.inf
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, lhs, rhs, tol: float) -> None:
        gap = np.atleast_1d(np.asarray(lhs, dtype=float) - np.asarray(rhs, dtype=float))
        self.checked += int(gap.size)
        self.violations += int(np.count_nonzero(gap > tol))
        self.max_slack = max(self.max_slack, float(gap.max()))

    def as_row(self) -> Dict[str, Any]:
        params = ";".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        return {"check": self.name, "checked": self.checked, "violations": self.violations,
                "max_slack": self.max_slack, "passed": self.passed, "params": params}


def combine_reports(name: str, reports: Sequence[BoundReport]) -> BoundReport:
    """Sum counts and keep the worst slack of reports of the same check."""
    combined = BoundReport(name=name, params={"runs": len(reports)})
    for report in reports:
        combined.checked += report.checked
        combined.violations += report.violations
        combined.max_slack = max(combined.max_slack, report.max_slack)
    return combined


def entropy_bias(mdp: ToyMdp) -> float:
    """gamma / (1 - gamma) * ln(sum C) / tau, with the largest admissible count over states."""
    return mdp.gamma / (1.0 - mdp.gamma) * mdp.log_mask_sum / mdp.tau


def check_contraction(mdp: ToyMdp, trials: int = 1000, seed: int = 0) -> BoundReport:
    """||T Q - T Q'|| <= gamma ||Q - Q'|| in the sup norm for random bounded pairs (fixed policy)."""
    if mdp.softmax_policy:
        raise ValidationError("The contraction check needs a fixed policy")
    rng = np.random.default_rng(seed)
    scale = 1.0 / (1.0 - mdp.gamma)
    report = BoundReport(name="contraction", params={"gamma": mdp.gamma, "trials": trials})
    max_ratio = 0.0
    for _ in range(trials):
        q1 = rng.uniform(-scale, scale, size=mdp.reward.shape)
        q2 = rng.uniform(-scale, scale, size=mdp.reward.shape)
        lhs = np.max(np.abs(causal_bellman(q1, mdp) - causal_bellman(q2, mdp)))
        dist = np.max(np.abs(q1 - q2))
        report.record(lhs, mdp.gamma * dist, CONTRACTION_TOL)
        if dist > 0:
            max_ratio = max(max_ratio, lhs / dist)
    report.params["max_ratio"] = max_ratio
    logging.info(f"Contraction: {report.violations} violations in {report.checked} pairs, max ratio {max_ratio:.6f}")
    return report


def check_qstar_bounds(mdp: ToyMdp, qstar: QStarResult, iterates: int = 0) -> BoundReport:
    """
    Bracket Q* elementwise between the greedy admissible backup of Q* and the
    same backup plus the entropy bias. Both sides use Q* itself; with
    iterates > 0 the bracket is also checked for (Q_t, T Q_t) along soft value
    iteration from Q_0 = 0.
    """
    bias = entropy_bias(mdp)
    report = BoundReport(name="qstar_bounds", params={
        "causal_bias": bias,
        "non_causal_bias": mdp.gamma / (1.0 - mdp.gamma) * math.log(mdp.n_actions) / mdp.tau,
        "iterates": iterates,
    })
    lower = greedy_backup(qstar.q, mdp)
    report.record(lower, qstar.q, BOUND_TOL)
    report.record(qstar.q, lower + bias, BOUND_TOL)

    q = np.zeros_like(qstar.q)
    for _ in range(iterates):
        updated = soft_bellman(q, mdp)
        lower = greedy_backup(q, mdp)
        report.record(lower, updated, BOUND_TOL)
        report.record(updated, lower + bias, BOUND_TOL)
        q = updated
    logging.info(f"Q* bounds: {report.violations} violations in {report.checked} entries, bias {bias:.4f}")
    return report


def check_error_decay(mdp: ToyMdp, qstar: QStarResult, t_max: int = 200, limit_tol: float = 1e-12,
                      limit_sweeps: int = 100000) -> BoundReport:
    """
    ||Q_t - Q*|| <= gamma^t ||V_0 - V*|| + bias for 1 <= t <= t_max along soft value
    iteration from Q_0 = 0, plus the limiting cap min{gamma ln(sum C) / (tau (1 - gamma)),
    2 g / (1 - gamma)^3}. Whether the tighter 2 g / (1 - gamma)^2 cap also holds is echoed.
    """
    bias = entropy_bias(mdp)
    q = np.zeros_like(qstar.q)
    d0 = float(np.max(np.abs(causal_soft_value(q, mdp) - qstar.v)))
    report = BoundReport(name="error_decay", params={"t_max": t_max, "bias": bias, "initial_value_gap": d0})
    err0 = float(np.max(np.abs(q - qstar.q)))
    report.params["t0_holds"] = bool(err0 <= d0 + bias + BOUND_TOL)

    for t in range(1, t_max + 1):
        q = soft_bellman(q, mdp)
        report.record(np.max(np.abs(q - qstar.q)), mdp.gamma ** t * d0 + bias, BOUND_TOL)

    err = float(np.max(np.abs(q - qstar.q)))
    for _ in range(limit_sweeps):
        if err <= limit_tol:
            break
        q = soft_bellman(q, mdp)
        err = float(np.max(np.abs(q - qstar.q)))
    g = mdp.max_reward
    loose_cap = min(mdp.gamma * mdp.log_mask_sum / (mdp.tau * (1.0 - mdp.gamma)), 2.0 * g / (1.0 - mdp.gamma) ** 3)
    tight_cap = min(mdp.gamma * mdp.log_mask_sum / (mdp.tau * (1.0 - mdp.gamma)), 2.0 * g / (1.0 - mdp.gamma) ** 2)
    report.record(err, loose_cap, BOUND_TOL)
    report.params["limit_error"] = err
    report.params["tight_cap_holds"] = bool(err <= tight_cap + BOUND_TOL)
    logging.info(f"Error decay: {report.violations} violations over {t_max} sweeps, limit error {err:.3e}")
    return report


def convergence_time_cap(eps: float, bias: float, d0: float, gamma: float) -> int:
    """ceil(log((eps - bias) / d0) / log gamma) + 1, floored at 1."""
    if eps <= bias:
        raise ValidationError(f"eps={eps} must exceed the entropy bias floor {bias}")
    if d0 <= 0 or gamma == 0:
        return 1
    ratio = (eps - bias) / d0
    if ratio >= 1:
        return 1
    return max(math.ceil(math.log(ratio) / math.log(gamma)), 0) + 1


def check_convergence_time(mdp: ToyMdp, qstar: QStarResult, eps_grid: Sequence[float],
                           max_steps: int = 100000) -> BoundReport:
    """
    First sweep with ||Q_t - Q*|| <= eps against convergence_time_cap, for every eps
    above the bias floor. A log-linear fit of the measured times is echoed.
    """
    bias = entropy_bias(mdp)
    low = [eps for eps in eps_grid if eps <= bias]
    if low:
        raise ValidationError(f"eps values {low} are at or below the entropy bias floor {bias:.6g}")
    d0 = float(np.max(np.abs(causal_soft_value(np.zeros_like(qstar.q), mdp) - qstar.v)))
    report = BoundReport(name="convergence_time", params={"bias": bias, "initial_value_gap": d0})

    q = np.zeros_like(qstar.q)
    errors = [float(np.max(np.abs(q - qstar.q)))]
    times = []
    for eps in sorted(eps_grid, reverse=True):
        while errors[-1] > eps:
            if len(errors) > max_steps:
                raise ValidationError(f"eps={eps} not reached within {max_steps} sweeps")
            q = soft_bellman(q, mdp)
            errors.append(float(np.max(np.abs(q - qstar.q))))
        t_emp = next(t for t, err in enumerate(errors) if err <= eps)
        times.append((eps, t_emp))
        report.record(t_emp, convergence_time_cap(eps, bias, d0, mdp.gamma), 0)

    spread = [(math.log(eps - bias), t) for eps, t in times]
    if len({x for x, _ in spread}) > 1 and 0 < mdp.gamma:
        slope = np.polyfit([x for x, _ in spread], [t for _, t in spread], 1)[0]
        report.params["fitted_slope"] = float(slope)
        report.params["analytic_slope"] = 1.0 / math.log(mdp.gamma)
    report.params["times"] = " ".join(f"{eps:g}:{t}" for eps, t in times)
    logging.info(f"Convergence time: {report.violations} violations over {len(times)} eps values")
    return report


@dataclass(frozen=True)
class FiniteTimeTerms:
    """The four terms of the finite-time expectation bound at one t."""

    transient: float
    variance: float
    causal: float
    noise: float

    @property
    def total(self) -> float:
        return self.transient + self.variance + self.causal + self.noise


def finite_time_rhs(t: int, alpha: float, gamma: float, omega_min: float, omega_max: float, n_pairs: int,
                    log_mask_sum: float, tau: float) -> FiniteTimeTerms:
    """
    Right-hand side of the expected sup-norm error bound of asynchronous
    causal Q-learning after t updates with constant step alpha.

    Args:
        t (int): Update count.
        alpha (float): Step size in (0, 1].
        gamma (float): Discount factor.
        omega_min (float): Smallest state-action sampling weight, in (0, 1).
        omega_max (float): Largest state-action sampling weight.
        n_pairs (int): Number of state-action pairs.
        log_mask_sum (float): ln of the admissible-action count.
        tau (float): Entropy temperature.
    """
    if omega_min <= 0:
        raise ValidationError(f"omega_min must be positive, got {omega_min}")
    if not 0 < alpha <= 1:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    rho = 1.0 - alpha * omega_min * (1.0 - gamma)
    one_minus = 1.0 - gamma
    transient = 4.0 * alpha * gamma * omega_max * n_pairs / one_minus * t * rho ** (t - 1)
    variance = (2.0 * math.sqrt(6.0) * math.sqrt(alpha) * gamma * omega_max * math.sqrt(n_pairs)
                / (omega_min ** 1.5 * one_minus ** 2.5))
    geometric = (1.0 - rho ** t) / (1.0 - rho)
    causal = log_mask_sum / tau * (2.0 * gamma ** 2 * omega_max ** 2 / (omega_min ** 2 * one_minus ** 2)
                                   + 1.0 / (omega_min * one_minus)
                                   + alpha * gamma * omega_max * math.sqrt(n_pairs) * geometric)
    noise = math.sqrt(n_pairs ** (2.0 / 3.0) * (2.0 / one_minus) ** 2 * rho ** (2 * t)
                      + 6.0 * alpha * n_pairs / (omega_min * one_minus ** 3))
    return FiniteTimeTerms(transient=transient, variance=variance, causal=causal, noise=noise)


def _q_learning_errors(mdp: ToyMdp, qstar: np.ndarray, alpha_lr: float, t_points: Sequence[int], trials: int,
                       seed: int):
    """Vectorised asynchronous causal Q-learning under a uniform behaviour policy."""
    rng = np.random.default_rng(seed)
    rows = np.arange(trials)
    q = np.zeros((trials,) + mdp.reward.shape)
    visits = np.zeros(mdp.reward.shape)
    states = rng.integers(mdp.n_states, size=trials)
    cumulative = np.cumsum(mdp.transition, axis=2)
    errors = {}
    for t in range(1, max(t_points) + 1):
        actions = rng.integers(mdp.n_actions, size=trials)
        u = rng.random(trials)
        next_states = np.minimum((cumulative[states, actions] <= u[:, None]).sum(axis=1), mdp.n_states - 1)
        next_value = special.logsumexp(mdp.tau * q[rows, next_states], b=mdp.mask[next_states], axis=1) / mdp.tau
        target = mdp.reward[states, actions] + mdp.gamma * next_value
        q[rows, states, actions] += alpha_lr * (target - q[rows, states, actions])
        np.add.at(visits, (states, actions), 1)
        states = next_states
        if t in t_points:
            errors[t] = np.max(np.abs(q - qstar), axis=(1, 2))
    return errors, visits / visits.sum()


def check_finite_time_bound(mdp: ToyMdp, alpha_lr: float = 0.1, t_max: int = 1000, trials: int = 200,
                            seed: int = 0, t_points: Optional[Sequence[int]] = None,
                            qstar: Optional[QStarResult] = None) -> BoundReport:
    """
    Monte-Carlo estimate of E||Q_t - Q*|| for asynchronous tabular causal Q-learning,
    compared as mean + 2 stderr against finite_time_rhs at each t in t_points.
    Sampling weights come from the pooled visitation frequencies.
    """
    if trials < 2:
        raise ValidationError(f"trials must be at least 2, got {trials}")
    t_points = sorted(set(t_points or [t for t in (10, 100, 1000) if t <= t_max] or [t_max]))
    qstar = qstar or solve_qstar(mdp)
    errors, omega = _q_learning_errors(mdp, qstar.q, alpha_lr, t_points, trials, seed)
    unvisited = np.argwhere(omega == 0)
    if unvisited.size:
        raise ValidationError(f"State-action pairs {[tuple(int(i) for i in p) for p in unvisited]} were never "
                              f"sampled; omega_min = 0")
    omega_min, omega_max = float(omega.min()), float(omega.max())
    report = BoundReport(name="finite_time", params={"alpha_lr": alpha_lr, "trials": trials,
                                                     "omega_min": omega_min, "omega_max": omega_max})
    for t in t_points:
        rhs = finite_time_rhs(t, alpha_lr, mdp.gamma, omega_min, omega_max, mdp.reward.size, mdp.log_mask_sum,
                              mdp.tau)
        estimate = errors[t].mean() + 2.0 * errors[t].std(ddof=1) / math.sqrt(trials)
        report.record(estimate, rhs.total, 0.0)
        report.params[f"mean_error_t{t}"] = float(errors[t].mean())
        report.params[f"rhs_t{t}"] = rhs.total
    logging.info(f"Finite-time bound: {report.violations} violations at t in {t_points}")
    return report


def _random_masks(rng: np.random.Generator, samples: int, n_actions: int) -> np.ndarray:
    masks = (rng.random((samples, n_actions)) < 0.5).astype(int)
    empty = masks.sum(axis=1) == 0
    masks[empty, rng.integers(n_actions, size=int(empty.sum()))] = 1
    return masks


def check_entropy_convexity(n_actions: int = 4, samples: int = 10000, seed: int = 0) -> BoundReport:
    """f(l pi + (1 - l) pi') <= l f(pi) + (1 - l) f(pi') for f = sum C pi ln pi."""
    rng = np.random.default_rng(seed)
    masks = _random_masks(rng, samples, n_actions)
    pi = rng.dirichlet(np.ones(n_actions), size=samples)
    pi_prime = rng.dirichlet(np.ones(n_actions), size=samples)
    lam = rng.random((samples, 1))

    def f(policy):
        return np.sum(masks * special.xlogy(policy, policy), axis=1)

    report = BoundReport(name="entropy_convexity", params={"samples": samples, "n_actions": n_actions})
    report.record(f(lam * pi + (1 - lam) * pi_prime), lam[:, 0] * f(pi) + (1 - lam[:, 0]) * f(pi_prime),
                  ENTROPY_TOL)
    return report


def check_entropy_bound(n_actions: int = 4, samples: int = 10000, seed: int = 0) -> BoundReport:
    """
    0 <= H_c <= ln(sum C) for policies supported on the mask, and
    H_c <= entropy_ceiling(mask) for arbitrary policies.
    """
    rng = np.random.default_rng(seed)
    masks = _random_masks(rng, samples, n_actions)
    raw = rng.dirichlet(np.ones(n_actions), size=samples)
    supported = raw * masks
    supported /= supported.sum(axis=1, keepdims=True)
    report = BoundReport(name="entropy_bound", params={"samples": samples, "n_actions": n_actions})

    h_supported = np.sum(masks * special.entr(supported), axis=1)
    report.record(-h_supported, 0.0, ENTROPY_TOL)
    report.record(h_supported, np.log(masks.sum(axis=1)), ENTROPY_TOL)
    h_general = np.sum(masks * special.entr(raw), axis=1)
    report.record(h_general, [entropy_ceiling(m) for m in masks], ENTROPY_TOL)
    return report


def run_verification_suite(n_mdps: int = 20, seed: int = 0, contraction_trials: int = 1000, t_max: int = 200,
                           finite_trials: int = 200, max_states: int = 8, max_actions: int = 4) -> List[BoundReport]:
    """
    Run every check on n_mdps random toy MDPs (at most max_states x max_actions)
    and return one combined report per check.
    """
    if n_mdps < 1:
        raise ValidationError(f"n_mdps must be positive, got {n_mdps}")
    per_check: Dict[str, List[BoundReport]] = {}
    for index in range(n_mdps):
        rng = make_rng(seed, "toy-mdp", index)
        n_states = int(rng.integers(2, max_states + 1))
        n_actions = int(rng.integers(2, max_actions + 1))
        gamma = float(rng.choice([0.5, 0.8, 0.9]))
        mdp = random_toy_mdp(n_states, n_actions, derive_seed(seed, "toy-mdp-draw", index), gamma=gamma)
        qstar = solve_qstar(mdp)
        bias = entropy_bias(mdp)
        d0 = float(np.max(np.abs(causal_soft_value(np.zeros_like(qstar.q), mdp) - qstar.v)))
        eps_grid = [bias + max(d0, 1.0) * f for f in (0.5, 0.1, 1e-2, 1e-3)] + [bias + 1e-6]
        reports = [
            check_contraction(mdp, contraction_trials, derive_seed(seed, "contraction", index)),
            check_qstar_bounds(mdp, qstar, iterates=20),
            check_error_decay(mdp, qstar, t_max),
            check_convergence_time(mdp, qstar, eps_grid),
            check_finite_time_bound(mdp, trials=finite_trials, seed=derive_seed(seed, "finite-time", index),
                                    qstar=qstar),
        ]
        for report in reports:
            per_check.setdefault(report.name, []).append(report)
        logging.info(f"Toy MDP {index + 1}/{n_mdps}: {n_states} states x {n_actions} actions, gamma={gamma}")

    combined = [combine_reports(name, reports) for name, reports in per_check.items()]
    combined.append(check_entropy_convexity(seed=derive_seed(seed, "convexity")))
    combined.append(check_entropy_bound(seed=derive_seed(seed, "entropy-bound")))
    return combined


def write_bound_reports(reports: Sequence[BoundReport], path: str) -> None:
    """One CSV line per check."""
    frame = pd.DataFrame([r.as_row() for r in reports],
                         columns=["check", "checked", "violations", "max_slack", "passed", "params"])
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise ValidationError(f"Cannot write verification report {path}: {e}")
    logging.info(f"Wrote {len(reports)} verification results to {path}")
