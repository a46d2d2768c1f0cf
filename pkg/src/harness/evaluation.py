import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from src.core.config import ExperimentConfig
from src.core.errors import ValidationError
from src.core.utils import as_index_tuple, derive_seed, mean_and_stderr
from src.discovery.cpe import CpeMatrix
from src.envir.environment import MonitoringEnv
from src.envir.reward import RewardConfig
from src.harness.trainer import estimate_context_cpe, greedy_action, ground_truth_dag
from src.monitor.state import CausalState
from src.qnet.network import NetParams
from src.streams.generator import ShiftSpec, generate_streams


class GreedyPolicy:
    """Top-m streams of the trained network."""

    def __init__(self, params: NetParams, m: int, squash: bool = True):
        self.params = params
        self.m = m
        self.squash = squash

    def __call__(self, state: CausalState) -> Tuple[int, ...]:
        return greedy_action(self.params, state, self.m, self.squash)


class FixedPolicy:
    """The same streams at every step."""

    def __init__(self, streams: Sequence[int]):
        self.streams = tuple(streams)

    def __call__(self, state: CausalState) -> Tuple[int, ...]:
        return self.streams


@dataclass(frozen=True)
class AddReport:
    """
    Average detection delay over replications.

    per_rep holds the delays, censored at horizon; false_alarms flags the
    replications with an alarm before onset, or with any alarm when no shift
    was injected.
    """

    mean_add: float
    stderr: float
    replications: int
    per_rep: Tuple[int, ...]
    false_alarms: Tuple[bool, ...]

    @property
    def false_alarm_rate(self) -> float:
        return sum(self.false_alarms) / self.replications


def run_replication(policy, cfg: ExperimentConfig, index: int) -> Tuple[int, bool]:
    """
    One evaluation episode with a greedy rollout.

    Returns:
        tuple: (detection delay censored at horizon, false alarm flag).
    """
    dag = ground_truth_dag(cfg)
    onset = cfg.eval_onset
    spec = ShiftSpec.first_k(cfg.k, cfg.pattern, cfg.delta_test, onset, cfg.horizon, cfg.noise_sigma)
    batch = generate_streams(dag, spec, cfg.horizon, derive_seed(cfg.seed, "eval-streams", index))
    env = MonitoringEnv(batch, RewardConfig.for_shift(cfg.p, spec, cfg.reward), cfg.monitor,
                        CpeMatrix.identity(cfg.p), cfg.m, causal=cfg.causal)
    if cfg.causal:
        estimate = estimate_context_cpe(cfg, dag, policy(env.state),
                                        source_seed=derive_seed(cfg.seed, "eval-source", index),
                                        context_seed=derive_seed(cfg.seed, "eval-context", index))
        env.set_cpe(estimate.cpe)

    state = env.state
    shifted = cfg.delta_test > 0 and cfg.k > 0
    false_alarm = False
    delay = cfg.horizon
    for t in range(1, cfg.horizon + 1):
        outcome = env.step(as_index_tuple(policy(state), cfg.p))
        state = outcome.causal_state
        if not outcome.alarm:
            continue
        if not shifted or t < onset:
            false_alarm = True
            if not shifted:
                break
            continue
        delay = min(t - onset, cfg.horizon)
        break
    logging.info(f"Replication {index}: delay={delay}, false_alarm={false_alarm}")
    return delay, false_alarm


def _replication_worker(args) -> Tuple[int, bool]:
    policy, cfg, index = args
    return run_replication(policy, cfg, index)


def evaluate_add(params: Optional[NetParams], cfg: ExperimentConfig, replications: Optional[int] = None,
                 policy=None) -> AddReport:
    """
    Average detection delay of the greedy top-m policy.

    Replication i depends only on (cfg.seed, i), so results do not change
    with the worker count or the number of replications.

    Args:
        params (NetParams): Trained online parameters; ignored when policy is given.
        cfg (ExperimentConfig): Experiment configuration (delta_test, eval_onset, workers, ...).
        replications (int): Number of replications; defaults to cfg.replications.
        policy: Callable mapping a CausalState to m stream indices, overriding the network.

    Returns:
        AddReport: Mean delay, its standard error and the false alarm flags.
    """
    replications = cfg.replications if replications is None else replications
    if replications < 1:
        raise ValidationError(f"replications must be positive, got {replications}")
    if policy is None:
        if params is None:
            raise ValidationError("evaluate_add needs trained parameters or a policy")
        policy = GreedyPolicy(params, cfg.m, cfg.net.state_squash)

    jobs = [(policy, cfg, index) for index in range(replications)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_replication_worker, jobs))
    else:
        results = [_replication_worker(job) for job in jobs]

    delays = tuple(delay for delay, _ in results)
    mean_add, stderr = mean_and_stderr(delays)
    report = AddReport(mean_add=mean_add, stderr=stderr, replications=replications, per_rep=delays,
                       false_alarms=tuple(flag for _, flag in results))
    logging.info(f"Evaluated {cfg.mode} policy over {replications} replications at delta={cfg.delta_test}: "
                 f"ADD={report.mean_add:.2f} ({report.stderr:.2f}), false alarm rate={report.false_alarm_rate:.3f}")
    return report
