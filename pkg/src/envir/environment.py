import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.config import MonitorConfig
from src.core.errors import ValidationError
from src.core.utils import as_index_tuple
from src.discovery.cpe import CpeMatrix
from src.envir.reward import RewardConfig, causal_reward, reward_schedule
from src.monitor.alarm import alarm_check
from src.monitor.state import (CausalState, assemble_state, causal_statistic, init_monitor, local_contributions,
                               update_monitor, update_staleness)
from src.streams.generator import StreamBatch


@dataclass(frozen=True)
class StepOutcome:
    """
    Result of one environment step.

    observation holds only the selected coordinates of X(t), in the order of
    the sorted action. statistic is the sum of the contributions over the
    selected streams, the quantity tested for an alarm.
    """

    t: int
    action: Tuple[int, ...]
    observation: np.ndarray
    reward: float
    causal_state: CausalState
    done: bool
    truth_mask: np.ndarray
    statistic: float
    alarm: bool


@dataclass(frozen=True)
class TraceRecord:
    t: int
    selected: Tuple[int, ...]
    reward: float
    lam_total: float
    alarm: bool


@dataclass
class EpisodeTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, outcome: StepOutcome) -> None:
        self.records.append(TraceRecord(t=outcome.t, selected=outcome.action, reward=outcome.reward,
                                        lam_total=outcome.statistic, alarm=outcome.alarm))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": [r.t for r in self.records],
            "selected": [" ".join(str(i) for i in r.selected) for r in self.records],
            "reward": [r.reward for r in self.records],
            "lam_total": [r.lam_total for r in self.records],
            "alarm": [int(r.alarm) for r in self.records],
        })

    def write_csv(self, path: str) -> None:
        try:
            self.to_frame().to_csv(path, index=False, float_format="%.17g")
        except OSError as e:
            raise ValidationError(f"Cannot write episode trace {path}: {e}")
        logging.info(f"Wrote episode trace with {len(self.records)} steps to {path}")


class MonitoringEnv:
    """
    Partially observed monitoring episode over one stream batch.

    Each step reveals the selected coordinates of the next row, runs the
    monitor update, rebuilds the 3 x p causal state and pays the scheduled
    causal reward. With causal=False the causal statistic row is zeroed.
    """

    def __init__(self, batch: StreamBatch, reward_cfg: RewardConfig, monitor_cfg: MonitorConfig,
                 cpe: CpeMatrix, m: int, causal: bool = True):
        """
        Initialise MonitoringEnv class.

        Args:
            batch (StreamBatch): Stream values of the episode.
            reward_cfg (RewardConfig): Reward weights and schedule.
            monitor_cfg (MonitorConfig): Decay, covariance scale and alarm level.
            cpe (CpeMatrix): Causal propagation effects used for the causal statistic.
            m (int): Number of streams observed per step.
            causal (bool): Whether the causal statistic enters the state.
        """
        if reward_cfg.p != batch.p:
            raise ValidationError(f"Reward config has p={reward_cfg.p}, stream batch has p={batch.p}")
        if not 1 <= m <= batch.p:
            raise ValidationError(f"m={m} out of range for p={batch.p}")
        self._batch = batch
        self.reward_cfg = reward_cfg
        self.monitor_cfg = monitor_cfg
        self.m = m
        self.causal = causal
        self.set_cpe(cpe)
        self.reset()

    @property
    def p(self) -> int:
        return self._batch.p

    @property
    def horizon(self) -> int:
        return self._batch.horizon

    def set_cpe(self, cpe: CpeMatrix) -> None:
        if cpe.p != self._batch.p:
            raise ValidationError(f"CPE has p={cpe.p}, stream batch has p={self._batch.p}")
        self.cpe = cpe

    def reset(self) -> CausalState:
        """Fresh monitor, zero staleness, clock at t = 1."""
        sigma = self.monitor_cfg.sigma_scale * np.eye(self.p)
        self.monitor = init_monitor(self.p, sigma, self.monitor_cfg.lam)
        self.staleness = np.zeros(self.p, dtype=int)
        self.t = 1
        self.trace = EpisodeTrace()
        self.state = assemble_state(np.zeros(self.p), np.zeros(self.p), self.staleness)
        return self.state

    @property
    def done(self) -> bool:
        return self.t > self.horizon

    def step(self, action: Sequence[int]) -> StepOutcome:
        if self.done:
            raise ValidationError(f"Episode is done after t={self.horizon}; call reset()")
        selected = as_index_tuple(action, self.p)
        if len(selected) != self.m:
            raise ValidationError(f"Action selects {len(selected)} streams, expected m={self.m}")
        t = self.t
        row = self._batch.row(t)
        revealed = np.full(self.p, np.nan)
        revealed[list(selected)] = row[list(selected)]

        self.monitor = update_monitor(self.monitor, revealed, selected)
        contributions = local_contributions(self.monitor)
        phi = causal_statistic(self.monitor, self.cpe) if self.causal else np.zeros(self.p)
        self.staleness = update_staleness(self.staleness, selected)
        self.state = assemble_state(contributions.per_var, phi, self.staleness)

        truth_mask = self._batch.truth_mask(t)
        indicator = np.zeros(self.p, dtype=int)
        indicator[list(selected)] = 1
        reward = reward_schedule(t, self.reward_cfg,
                                 lambda: causal_reward(selected, truth_mask, indicator, self.reward_cfg))

        statistic = float(contributions.per_var[list(selected)].sum())
        alarm = alarm_check(statistic, self.monitor_cfg.dof(self.p), self.monitor_cfg.zeta)
        self.t += 1
        outcome = StepOutcome(t=t, action=selected, observation=row[list(selected)].copy(), reward=reward,
                              causal_state=self.state, done=self.done, truth_mask=truth_mask,
                              statistic=statistic, alarm=alarm)
        self.trace.append(outcome)
        return outcome


def reset(stream_batch: StreamBatch, reward_cfg: RewardConfig, monitor_cfg: MonitorConfig, cpe: CpeMatrix,
          m: int, causal: bool = True) -> Tuple[MonitoringEnv, CausalState]:
    env = MonitoringEnv(stream_batch, reward_cfg, monitor_cfg, cpe, m, causal)
    return env, env.state


def step(env: MonitoringEnv, action: Sequence[int]) -> StepOutcome:
    return env.step(action)
