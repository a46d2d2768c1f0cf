from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from src.core.errors import ValidationError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class PolicyDistribution:
    probs: np.ndarray
    tau: float


def boltzmann(q: np.ndarray, tau: float) -> PolicyDistribution:
    """Softmax of q / tau (max-subtracted inside scipy's softmax)."""
    if tau <= 0:
        raise ValidationError(f"Temperature must be positive, got {tau}")
    q = np.asarray(q, dtype=float)
    return PolicyDistribution(probs=special.softmax(q / tau), tau=float(tau))


def causal_entropy(pi: PolicyDistribution, mask: np.ndarray) -> float:
    """H_c = -sum_i mask_i pi_i ln pi_i, with 0 ln 0 = 0."""
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise ValidationError("Causal mask must be binary")
    return float(np.sum(mask * special.entr(pi.probs)))


def entropy_ceiling(mask: np.ndarray) -> float:
    """
    Largest H_c over all distributions for this mask: ln k when k >= e, else k / e
    (k = number of admissible streams). Policies supported on the mask stay below ln k.
    """
    k = float(np.sum(mask))
    if k == 0:
        return 0.0
    return float(np.log(k)) if k >= np.e else k / np.e


def entropy_gradient_wrt_q(pi: PolicyDistribution, mask: np.ndarray, tau: float) -> np.ndarray:
    """
    Closed-form dH_c/dq for a Boltzmann policy:
        -(1/tau) [C_k pi_k (ln pi_k + 1) - pi_k sum_i C_i pi_i (ln pi_i + 1)]
    """
    probs = pi.probs
    a = np.asarray(mask, dtype=float) * (special.xlogy(probs, probs) + probs)
    return -(a - probs * a.sum()) / tau


def select_top_m(q: np.ndarray, m: int) -> Tuple[int, ...]:
    """The m largest entries of q, ties toward the lowest index, returned sorted."""
    q = np.asarray(q, dtype=float)
    if not 1 <= m <= q.shape[0]:
        raise ValidationError(f"m={m} out of range for {q.shape[0]} streams")
    order = np.argsort(-q, kind="stable")
    return tuple(sorted(int(i) for i in order[:m]))


def sample_streams(pi: PolicyDistribution, m: int, rng: np.random.Generator) -> Tuple[int, ...]:
    """m distinct streams drawn without replacement in proportion to pi."""
    probs = np.maximum(pi.probs, PROB_FLOOR)
    probs = probs / probs.sum()
    if not 1 <= m <= probs.shape[0]:
        raise ValidationError(f"m={m} out of range for {probs.shape[0]} streams")
    return tuple(sorted(int(i) for i in rng.choice(probs.shape[0], size=m, replace=False, p=probs)))
