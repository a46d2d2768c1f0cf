import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import special

from src.core.errors import NumericalError, ValidationError
from src.theory.toy_mdp import ToyMdp


def state_entropy(policy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-state causal entropy -sum_a C(s, a) pi(a|s) ln pi(a|s)."""
    return np.sum(mask * special.entr(policy), axis=1)


def _expect_next(mdp: ToyMdp, values: np.ndarray) -> np.ndarray:
    """E_{s'}[values(s')] for every (s, a)."""
    return np.einsum("sat,t->sa", mdp.transition, values)


def _check_q(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != mdp.reward.shape:
        raise ValidationError(f"Q shape {q.shape} does not match {mdp.reward.shape}")
    if not np.all(np.isfinite(q)):
        raise ValidationError("Q must be finite")
    return q


def causal_bellman(q: np.ndarray, mdp: ToyMdp, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Causal-entropy Bellman operator:
        (T Q)(s, a) = r(s, a) + gamma E_{s'}[sum_a' pi(a'|s') Q(s', a') - tau H_c(pi(.|s'))]

    Args:
        q (np.ndarray): S x A action values.
        mdp (ToyMdp): The MDP; its policy is used unless softmax_policy is set,
            in which case pi = softmax(Q(s', .) / tau).
        mask (np.ndarray): Optional S x A mask replacing mdp.mask (may be all zero).

    Returns:
        np.ndarray: S x A image of q.
    """
    q = _check_q(q, mdp)
    mask = mdp.mask if mask is None else np.asarray(mask)
    policy = special.softmax(q / mdp.tau, axis=1) if mdp.softmax_policy else mdp.policy
    next_value = np.sum(policy * q, axis=1) - mdp.tau * state_entropy(policy, mask)
    return mdp.reward + mdp.gamma * _expect_next(mdp, next_value)


def causal_soft_value(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """V(s) = (1/tau) ln sum_{a admissible} exp(tau Q(s, a))."""
    q = _check_q(q, mdp)
    return special.logsumexp(mdp.tau * q, b=mdp.mask, axis=1) / mdp.tau


def admissible_policy(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """Boltzmann policy with inverse temperature tau over the admissible actions."""
    q = _check_q(q, mdp)
    logits = np.where(mdp.mask == 1, mdp.tau * q, -np.inf)
    return special.softmax(logits, axis=1)


def value_from_entropy_identity(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """
    V(s) = [H_c(s) + tau sum_a C pi Q] / (tau w(s)) with w(s) = sum_a C pi and
    pi the admissible Boltzmann policy; equals causal_soft_value.
    """
    policy = admissible_policy(q, mdp)
    weighted = mdp.mask * policy
    w = weighted.sum(axis=1)
    return (state_entropy(policy, mdp.mask) + mdp.tau * np.sum(weighted * q, axis=1)) / (mdp.tau * w)


def soft_bellman(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """Causal soft optimality operator r + gamma E_{s'}[V(s')]."""
    return mdp.reward + mdp.gamma * _expect_next(mdp, causal_soft_value(q, mdp))


def admissible_max(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """max over admissible actions of Q(s, .) per state."""
    return np.max(np.where(mdp.mask == 1, q, -np.inf), axis=1)


def greedy_backup(q: np.ndarray, mdp: ToyMdp) -> np.ndarray:
    """r + gamma E_{s'}[max_{admissible a'} Q(s', a')]."""
    return mdp.reward + mdp.gamma * _expect_next(mdp, admissible_max(q, mdp))


@dataclass
class QStarResult:
    q: np.ndarray
    v: np.ndarray
    iterations: int
    residuals: List[float]


def solve_qstar(mdp: ToyMdp, tol: float = 1e-12, max_iter: int = 100000) -> QStarResult:
    """
    Fixed-point iteration of soft_bellman from Q = 0 until the sup-norm change drops below tol.

    Returns:
        QStarResult: Q*, V* from the entropy identity, the sweep count and every residual.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    q = np.zeros_like(mdp.reward, dtype=float)
    residuals: List[float] = []
    for iteration in range(1, max_iter + 1):
        updated = soft_bellman(q, mdp)
        residuals.append(float(np.max(np.abs(updated - q))))
        q = updated
        if residuals[-1] < tol:
            logging.debug(f"Soft value iteration converged after {iteration} sweeps")
            return QStarResult(q=q, v=value_from_entropy_identity(q, mdp), iterations=iteration,
                               residuals=residuals)
    raise NumericalError(f"Soft value iteration did not converge within {max_iter} sweeps "
                         f"(last change {residuals[-1]:.3e})")
