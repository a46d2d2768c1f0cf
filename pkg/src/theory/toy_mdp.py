from dataclasses import dataclass

import numpy as np

from src.core.errors import ValidationError

_ROW_TOL = 1e-9


@dataclass(frozen=True)
class ToyMdp:
    """
    A tabular MDP carrying a causal mask and a behaviour policy.

    Attributes:
        transition (np.ndarray): S x A x S tensor; transition[s, a] is a distribution over next states.
        reward (np.ndarray): S x A rewards with |r| <= 1.
        gamma (float): Discount factor in [0, 1).
        mask (np.ndarray): S x A binary causal mask, at least one admissible action per state.
        policy (np.ndarray): S x A stochastic matrix used when softmax_policy is False.
        tau (float): Temperature of the entropy terms.
        softmax_policy (bool): Recompute the policy as a Boltzmann policy of Q instead of using policy.
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    mask: np.ndarray
    policy: np.ndarray
    tau: float = 1.0
    softmax_policy: bool = False

    def __post_init__(self):
        n_states, n_actions = self.reward.shape
        if self.transition.shape != (n_states, n_actions, n_states):
            raise ValidationError(f"Transition shape {self.transition.shape} does not match rewards {self.reward.shape}")
        if self.mask.shape != self.reward.shape or self.policy.shape != self.reward.shape:
            raise ValidationError("mask and policy must have the shape of the reward matrix")
        if np.any(self.transition < 0) or not np.allclose(self.transition.sum(axis=2), 1.0, atol=_ROW_TOL):
            raise ValidationError("Transition rows must be probability distributions")
        if np.any(self.policy < 0) or not np.allclose(self.policy.sum(axis=1), 1.0, atol=_ROW_TOL):
            raise ValidationError("Policy rows must be probability distributions")
        if np.max(np.abs(self.reward)) > 1.0:
            raise ValidationError(f"Rewards must satisfy |r| <= 1, got {np.max(np.abs(self.reward))}")
        if not np.all((self.mask == 0) | (self.mask == 1)):
            raise ValidationError("Causal mask must be binary")
        empty = np.flatnonzero(self.mask.sum(axis=1) == 0)
        if empty.size:
            raise ValidationError(f"States {empty.tolist()} have no admissible action")
        if not 0 <= self.gamma < 1:
            raise ValidationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_actions(self) -> int:
        return self.reward.shape[1]

    @property
    def admissible_counts(self) -> np.ndarray:
        """Number of admissible actions per state."""
        return self.mask.sum(axis=1)

    @property
    def log_mask_sum(self) -> float:
        """ln of the largest admissible-action count over states."""
        return float(np.log(self.admissible_counts.max()))

    @property
    def max_reward(self) -> float:
        return float(np.max(np.abs(self.reward)))


def random_toy_mdp(n_states: int, n_actions: int, seed: int, gamma: float = 0.9, tau: float = 1.0,
                   mask_prob: float = 0.5, softmax_policy: bool = False) -> ToyMdp:
    """
    Draw a random ToyMdp: Dirichlet transitions and policy, uniform rewards in
    [-1, 1], and a Bernoulli(mask_prob) mask with one admissible action forced
    in every state that drew none.
    """
    if n_states < 1 or n_actions < 1:
        raise ValidationError(f"Need at least one state and one action, got {n_states} x {n_actions}")
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    mask = (rng.random((n_states, n_actions)) < mask_prob).astype(int)
    for s in np.flatnonzero(mask.sum(axis=1) == 0):
        mask[s, rng.integers(n_actions)] = 1
    policy = rng.dirichlet(np.ones(n_actions), size=n_states)
    return ToyMdp(transition=transition, reward=reward, gamma=gamma, mask=mask, policy=policy, tau=tau,
                  softmax_policy=softmax_policy)
