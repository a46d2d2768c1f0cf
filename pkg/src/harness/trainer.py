import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import ExperimentConfig
from src.core.cpe_source import CpeEstimate
from src.core.cpe_source_factory import CpeSourceFactory
from src.core.errors import NumericalError
from src.core.utils import derive_seed, make_rng
from src.discovery.cpe import CpeMatrix
from src.discovery.metrics import GraphMetrics
from src.envir.environment import MonitoringEnv
from src.envir.reward import RewardConfig
from src.monitor.state import CausalState, network_input
from src.qnet.loss import loss_and_grad
from src.qnet.network import (NetParams, SyncMode, clip_grad_norm, init_params, network_layout, predict, sgd_step,
                              sync_target)
from src.qnet.policy import boltzmann, sample_streams, select_top_m
from src.qnet.replay import ReplayBuffer, Transition
from src.streams.generator import ShiftSpec, generate_streams, simulate_in_control
from src.streams.graph import WeightedDag, assign_sem_weights, sample_er_dag


def ground_truth_dag(cfg: ExperimentConfig) -> WeightedDag:
    """The SEM shared by training and evaluation of one experiment."""
    graph = sample_er_dag(cfg.p, cfg.edge_prob, derive_seed(cfg.seed, "graph"))
    return assign_sem_weights(graph, cfg.weight_low, cfg.weight_high, derive_seed(cfg.seed, "weights"))


def greedy_action(params: NetParams, state: CausalState, m: int, squash: bool) -> Tuple[int, ...]:
    return select_top_m(predict(params, state.to_network_input(squash)), m)


def estimate_context_cpe(cfg: ExperimentConfig, dag: WeightedDag, selected: Sequence[int], source_seed: int,
                         context_seed: int) -> CpeEstimate:
    """Run the configured CPE source on a fresh in-control context window."""
    context = simulate_in_control(dag, cfg.discovery.context_window, cfg.noise_sigma, context_seed)
    source = CpeSourceFactory.from_config(cfg, source_seed)
    return source.estimate(context, selected, dag)


@dataclass
class RewardCurve:
    """Cumulative reward of every training episode."""

    values: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    def smoothed(self, window: int = 10) -> np.ndarray:
        """Trailing moving average; entry i covers episodes i .. i + window - 1."""
        if not self.values:
            return np.zeros(0)
        window = max(1, min(window, len(self.values)))
        return np.convolve(self.values, np.ones(window) / window, mode="valid")

    def tail_mean(self, episodes: int = 50) -> float:
        return float(np.mean(self.values[-episodes:]))

    def plateau_episode(self, fraction: float = 0.9, window: int = 10) -> Optional[int]:
        """
        First 0-based episode at which the smoothed reward covers fraction of
        the way from the smoothed minimum to the smoothed maximum.
        """
        smooth = self.smoothed(window)
        if smooth.size == 0:
            return None
        low, high = smooth.min(), smooth.max()
        reached = np.flatnonzero(smooth >= low + fraction * (high - low))
        return int(reached[0]) + len(self.values) - smooth.size


@dataclass
class TrainingResult:
    params: NetParams
    curve: RewardCurve
    losses: List[float]
    metrics: List[Optional[GraphMetrics]]


class CausalDQTrainer:
    """
    Trains the double Q-network on simulated monitoring episodes.

    Every episode draws a fresh stream batch with a shift at a random onset,
    refreshes the causal propagation effects, rolls out a Boltzmann policy
    and interleaves replay updates with the environment steps.
    """

    def __init__(self, cfg: ExperimentConfig):
        """
        Initialise CausalDQTrainer class.

        Args:
            cfg (ExperimentConfig): Validated experiment configuration.
        """
        self.cfg = cfg
        self.dag = ground_truth_dag(cfg)
        self.online = init_params(network_layout(cfg.p, cfg.net.hidden), derive_seed(cfg.seed, "init"))
        self.target = self.online.clone()
        self.replay = ReplayBuffer(cfg.net.replay_capacity, derive_seed(cfg.seed, "replay"))
        self.sync = SyncMode(cfg.net.sync_kind, cfg.net.sync_period, cfg.net.sync_rate)
        self.optimizer_steps = 0
        self.cpe = CpeMatrix.identity(cfg.p)
        self.cpe_metrics: Optional[GraphMetrics] = None

    def _refresh_cpe(self, episode: int, step: int, selected: Sequence[int]) -> None:
        if not self.cfg.causal:
            return
        estimate = estimate_context_cpe(
            self.cfg, self.dag, selected,
            source_seed=derive_seed(self.cfg.seed, "train-source", episode, step),
            context_seed=derive_seed(self.cfg.seed, "train-context", episode, step),
        )
        self.cpe = estimate.cpe
        self.cpe_metrics = estimate.metrics(self.dag.graph)

    def _update(self, episode: int, step: int, alpha_ent: float, tau: float) -> float:
        net = self.cfg.net
        batch = self.replay.sample(net.batch_size)
        try:
            result = loss_and_grad(self.online, self.target, batch, alpha_ent, tau, net.gamma, net.state_squash)
        except NumericalError as e:
            raise NumericalError(f"Episode {episode}, step {step}: {e}")
        grad, _ = clip_grad_norm(result.grad, net.grad_clip)
        self.online = sgd_step(self.online, grad, net.lr)
        if not self.online.all_finite():
            raise NumericalError(f"Episode {episode}, step {step}: parameters became non-finite")
        self.optimizer_steps += 1
        if self.sync.due(self.optimizer_steps):
            self.target = sync_target(self.online, self.target, self.sync)
        return result.loss

    def run_episode(self, episode: int) -> Tuple[float, Optional[float]]:
        """
        Roll out one training episode.

        Args:
            episode (int): 0-based episode index; seeds and schedules derive from it.

        Returns:
            tuple: Cumulative reward and mean loss (None when no update ran).
        """
        cfg, net = self.cfg, self.cfg.net
        rng = make_rng(cfg.seed, "episode", episode)
        onset = int(rng.integers(max(1, cfg.horizon // 4), max(1, cfg.horizon // 2) + 1))
        spec = ShiftSpec.first_k(cfg.k, cfg.pattern, cfg.delta_train, onset, cfg.horizon, cfg.noise_sigma)
        batch = generate_streams(self.dag, spec, cfg.horizon, derive_seed(cfg.seed, "train-streams", episode))
        tau = net.temperature(episode)
        alpha_ent = net.entropy_coefficient(episode) if cfg.causal else 0.0

        env = MonitoringEnv(batch, RewardConfig.for_shift(cfg.p, spec, cfg.reward), cfg.monitor, self.cpe, cfg.m,
                            causal=cfg.causal)
        state = env.state
        refresh = cfg.discovery.refresh_steps
        if cfg.discovery.cpe_refresh == "episode" or (cfg.discovery.cpe_refresh == "once" and episode == 0):
            self._refresh_cpe(episode, 0, greedy_action(self.online, state, cfg.m, net.state_squash))
            env.set_cpe(self.cpe)

        total, losses = 0.0, []
        for step in range(1, cfg.horizon + 1):
            q = predict(self.online, network_input(state.flatten(), net.state_squash))
            action = sample_streams(boltzmann(q, tau), cfg.m, rng)
            outcome = env.step(action)
            mask = outcome.truth_mask if cfg.causal else np.zeros(cfg.p, dtype=int)
            self.replay.push(Transition(state=state.flatten(), action=outcome.action, reward=outcome.reward,
                                        next_state=outcome.causal_state.flatten(), causal_mask=mask))
            total += outcome.reward
            state = outcome.causal_state
            if len(self.replay) >= max(net.warmup, 1):
                for _ in range(net.updates_per_step):
                    losses.append(self._update(episode, step, alpha_ent, tau))
            if refresh is not None and step % refresh == 0 and step < cfg.horizon:
                self._refresh_cpe(episode, step, outcome.action)
                env.set_cpe(self.cpe)
        return total, (float(np.mean(losses)) if losses else None)

    def train(self) -> TrainingResult:
        cfg = self.cfg
        curve, losses, metrics = RewardCurve(), [], []
        logging.info(f"Training {cfg.mode} agent: p={cfg.p}, m={cfg.m}, k={cfg.k}, "
                     f"delta={cfg.delta_train}, episodes={cfg.episodes}, cpe_source={cfg.cpe_source}")
        for episode in range(cfg.episodes):
            reward, loss = self.run_episode(episode)
            curve.values.append(reward)
            losses.append(loss)
            metrics.append(self.cpe_metrics)
            message = (f"Episode {episode + 1}/{cfg.episodes}: reward={reward:.3f}, "
                       f"tau={cfg.net.temperature(episode):.4f}, loss={'n/a' if loss is None else f'{loss:.5f}'}")
            if self.cpe_metrics is not None:
                gm = self.cpe_metrics
                message += f", shd={gm.shd}, tpr={gm.tpr:.3f}, fdr={'n/a' if gm.fdr is None else f'{gm.fdr:.3f}'}"
            logging.info(message)
        return TrainingResult(params=self.online, curve=curve, losses=losses, metrics=metrics)


def train(cfg: ExperimentConfig) -> TrainingResult:
    return CausalDQTrainer(cfg).train()
