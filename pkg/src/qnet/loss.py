from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from src.core.errors import NumericalError, ValidationError
from src.monitor.state import network_input
from src.qnet.network import DTYPE, NetParams, forward
from src.qnet.policy import select_top_m
from src.qnet.replay import Transition


@dataclass(frozen=True)
class LossResult:
    loss: float
    grad: NetParams
    td_error: float
    entropy: float


def td_target(r: float, gamma: float, q_next_best: float, h_c: float) -> float:
    """y = r + gamma * Q_target(s', a*) + H_c."""
    if not 0 <= gamma < 1:
        raise ValidationError(f"gamma must lie in [0, 1), got {gamma}")
    return r + gamma * q_next_best + h_c


def masked_entropy(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Row-wise -sum mask * pi ln pi for pi = softmax(logits), finite even where pi underflows to 0."""
    log_pi = torch.log_softmax(logits, dim=-1)
    return -(mask * log_pi.exp() * log_pi).sum(dim=-1)


def greedy_next_actions(online: NetParams, next_inputs: np.ndarray, m: int) -> np.ndarray:
    """a* = top-m of the online network at each next state, shape (batch, m)."""
    with torch.no_grad():
        q_online = forward(online, next_inputs).numpy()
    return np.array([select_top_m(row, m) for row in q_online], dtype=np.int64)


def _raise_non_finite(values: torch.Tensor, what: str) -> None:
    bad = ~torch.isfinite(values)
    if bool(bad.any()):
        index = int(torch.nonzero(bad)[0][0])
        raise NumericalError(f"Non-finite {what} at batch index {index}")


def loss_and_grad(online: NetParams, target: NetParams, batch: Sequence[Transition],
                  alpha_ent: float, tau: float, gamma: float, squash: bool = False) -> LossResult:
    """
    Causal-entropy regularised double-Q loss and its gradient w.r.t. the online network.

    loss = mean (y - Q(s, a))^2 - alpha_ent * mean H_c(pi_online(.|s))

    Q(s, a) is the mean of the m selected per-stream outputs. The target y uses
    a* from the online network, its value from the target network, and the
    causal entropy of the target network's Boltzmann policy at s'; it carries
    no gradient.

    Args:
        online (NetParams): Parameters being trained.
        target (NetParams): Frozen target parameters.
        batch (Sequence[Transition]): Non-empty list of transitions.
        alpha_ent (float): Causal entropy coefficient.
        tau (float): Boltzmann temperature.
        gamma (float): Discount factor.
        squash (bool): Whether network inputs use the squashed state transform.

    Returns:
        LossResult: Loss value, gradient (same shapes as online), mean TD error and mean entropy.
    """
    if not batch:
        raise ValidationError("loss_and_grad needs a non-empty batch")
    if tau <= 0:
        raise ValidationError(f"Temperature must be positive, got {tau}")
    if not 0 <= gamma < 1:
        raise ValidationError(f"gamma must lie in [0, 1), got {gamma}")

    states = network_input(np.stack([t.state for t in batch]), squash)
    next_states = network_input(np.stack([t.next_state for t in batch]), squash)
    actions = torch.as_tensor(np.array([t.action for t in batch], dtype=np.int64))
    rewards = torch.as_tensor(np.array([t.reward for t in batch], dtype=float), dtype=DTYPE)
    masks = torch.as_tensor(np.stack([t.causal_mask for t in batch]).astype(float), dtype=DTYPE)
    m = actions.shape[1]

    best = torch.as_tensor(greedy_next_actions(online, next_states, m))
    with torch.no_grad():
        q_target_next = forward(target, next_states)
        q_next_best = q_target_next.gather(1, best).mean(dim=1)
        h_next = masked_entropy(q_target_next / tau, masks)
        y = rewards + gamma * q_next_best + h_next
    _raise_non_finite(y, "TD target")

    leaves = [t.detach().clone().requires_grad_(True) for t in online.tensors()]
    q = forward(NetParams.from_tensors(leaves), states)
    q_sa = q.gather(1, actions).mean(dim=1)
    entropy = masked_entropy(q / tau, masks)
    _raise_non_finite(q_sa, "Q-value")
    _raise_non_finite(entropy, "causal entropy")

    td = y - q_sa
    loss = (td ** 2).mean() - alpha_ent * entropy.mean()
    grads = torch.autograd.grad(loss, leaves)
    for grad_tensor in grads:
        if not bool(torch.isfinite(grad_tensor).all()):
            raise NumericalError("Non-finite gradient for the batch")
    return LossResult(
        loss=float(loss.detach()),
        grad=NetParams.from_tensors([g.detach() for g in grads]),
        td_error=float(td.detach().abs().mean()),
        entropy=float(entropy.detach().mean()),
    )
