from collections import deque
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.core.errors import ValidationError


@dataclass(frozen=True)
class Transition:
    """
    One (s, a, r, s') sample. States are flat 3p causal states; causal_mask
    marks the streams whose selection causally produces reward.
    """

    state: np.ndarray
    action: Tuple[int, ...]
    reward: float
    next_state: np.ndarray
    causal_mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.causal_mask)
        if not np.all((mask == 0) | (mask == 1)):
            raise ValidationError("Causal mask must be binary")
        if len(set(self.action)) != len(self.action):
            raise ValidationError(f"Action {self.action} repeats a stream")


class ReplayBuffer:
    """Fixed-capacity ring of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, seed: int):
        if capacity < 1:
            raise ValidationError(f"Replay capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.memory = deque(maxlen=capacity)
        self.rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self.memory)

    def push(self, transition: Transition) -> None:
        self.memory.append(transition)

    def sample(self, batch_size: int) -> List[Transition]:
        """Up to batch_size distinct transitions, uniformly at random."""
        if not self.memory:
            raise ValidationError("Cannot sample from an empty replay buffer")
        size = min(batch_size, len(self.memory))
        return [self.memory[i] for i in self.rng.choice(len(self.memory), size=size, replace=False)]
