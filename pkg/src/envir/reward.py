from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.core.config import RewardSettings
from src.core.errors import ValidationError
from src.core.utils import as_index_tuple
from src.streams.generator import ShiftSpec


@dataclass(frozen=True)
class RewardConfig:
    """
    Weights and schedule of the causal reward.

    y_vec and w_vec are positive only on shifted streams. onset is None when the
    batch carries no shift window, in which case every step earns baseline_pre.
    scale multiplies every scheduled reward (1 unless scaled rewards are on).
    """

    y_vec: np.ndarray
    w_vec: np.ndarray
    penalty: float
    baseline_pre: float = 0.0
    baseline_post: float = 0.0
    onset: Optional[int] = None
    duration: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if self.penalty >= 0:
            raise ValidationError(f"penalty must be negative, got {self.penalty}")
        if np.any(self.y_vec < 0) or np.any(self.w_vec < 0):
            raise ValidationError("Reward weights must be non-negative")
        if self.y_vec.shape != self.w_vec.shape:
            raise ValidationError("y_vec and w_vec differ in length")
        if self.onset is not None and (self.onset < 1 or self.duration < 0):
            raise ValidationError(f"Invalid reward window onset={self.onset}, duration={self.duration}")

    @property
    def p(self) -> int:
        return self.y_vec.shape[0]

    @classmethod
    def for_shift(cls, p: int, spec: Optional[ShiftSpec], settings: RewardSettings) -> "RewardConfig":
        """Weights y_value / w_value on the shifted streams of spec; no window when spec is None or delta is 0."""
        y_vec, w_vec = np.zeros(p), np.zeros(p)
        onset, duration = None, 0
        if spec is not None and spec.delta > 0:
            shifted = list(spec.shifted_indices)
            y_vec[shifted] = settings.y_value
            w_vec[shifted] = settings.w_value
            onset, duration = spec.onset, spec.duration
        scale = 1.0
        if settings.scaled_reward:
            scale = 1.0 / (float(np.sum(y_vec + w_vec)) - settings.penalty)
        return cls(y_vec=y_vec, w_vec=w_vec, penalty=settings.penalty, baseline_pre=settings.baseline_pre,
                   baseline_post=settings.baseline_post, onset=onset, duration=duration, scale=scale)

    def bounds(self) -> Tuple[float, float]:
        """In-window range of the unscaled causal reward."""
        return self.penalty, float(np.sum(self.y_vec + self.w_vec))


def causal_reward(action: Sequence[int], truth_mask: np.ndarray, state_sel: np.ndarray, cfg: RewardConfig) -> float:
    """
    Instantaneous reward inside the anomaly window.

    The penalty when no currently shifted stream is selected, else
    sum_i a_i y_i + w_i s_i with a the action indicator and s the selection indicator.
    """
    chosen = list(as_index_tuple(action, cfg.p))
    truth_mask = np.asarray(truth_mask)
    if not np.any(truth_mask[chosen]):
        return float(cfg.penalty)
    a = np.zeros(cfg.p)
    a[chosen] = 1.0
    return float(a @ cfg.y_vec + np.asarray(state_sel, dtype=float) @ cfg.w_vec)


def reward_schedule(t: int, cfg: RewardConfig, r_t_fn: Callable[[], float]) -> float:
    """R_t: baseline_pre before onset, r_t_fn() inside [onset, onset + duration], baseline_post after."""
    if t < 1:
        raise ValidationError(f"Time steps start at 1, got {t}")
    if cfg.onset is None or t < cfg.onset:
        value = cfg.baseline_pre
    elif t <= cfg.onset + cfg.duration:
        value = r_t_fn()
    else:
        value = cfg.baseline_post
    return float(value * cfg.scale)
