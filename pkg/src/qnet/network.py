import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch

from src.core.errors import ValidationError

DTYPE = torch.float64
CHECKPOINT_VERSION = 1

Layer = Tuple[torch.Tensor, torch.Tensor]


@dataclass
class NetParams:
    """
    Feedforward network parameters: (W, b) per layer with W of shape (out, in).

    Hidden layers use a rectifier; the output layer is linear with one unit per stream.
    """

    layers: List[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("A network needs at least one layer")
        for index, (w, b) in enumerate(self.layers):
            if w.dim() != 2 or b.shape != (w.shape[0],):
                raise ValidationError(f"Layer {index} has weight {tuple(w.shape)} and bias {tuple(b.shape)}")
            if index and w.shape[1] != self.layers[index - 1][0].shape[0]:
                raise ValidationError(f"Layer {index} input width does not match the previous layer")

    @property
    def layout(self) -> Tuple[int, ...]:
        return (self.layers[0][0].shape[1],) + tuple(w.shape[0] for w, _ in self.layers)

    @property
    def input_dim(self) -> int:
        return self.layout[0]

    @property
    def output_dim(self) -> int:
        return self.layout[-1]

    def tensors(self) -> List[torch.Tensor]:
        return [t for layer in self.layers for t in layer]

    @classmethod
    def from_tensors(cls, tensors: Sequence[torch.Tensor]) -> "NetParams":
        return cls([(tensors[i], tensors[i + 1]) for i in range(0, len(tensors), 2)])

    def clone(self) -> "NetParams":
        return NetParams.from_tensors([t.detach().clone() for t in self.tensors()])

    def all_finite(self) -> bool:
        return all(bool(torch.isfinite(t).all()) for t in self.tensors())


def init_params(layout: Sequence[int], seed: int) -> NetParams:
    """
    Uniform fan-in initialisation: every weight and bias in +/- 1/sqrt(fan_in).

    Args:
        layout (Sequence[int]): Widths from input to output, e.g. (3p, 256, 256, 256, p).
        seed (int): Seed of the initialiser.
    """
    if len(layout) < 2 or any(int(w) < 1 for w in layout):
        raise ValidationError(f"Invalid network layout {tuple(layout)}")
    generator = torch.Generator().manual_seed(int(seed))
    layers = []
    for fan_in, fan_out in zip(layout[:-1], layout[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        w = (torch.rand(fan_out, fan_in, generator=generator, dtype=DTYPE) * 2 - 1) * bound
        b = (torch.rand(fan_out, generator=generator, dtype=DTYPE) * 2 - 1) * bound
        layers.append((w, b))
    return NetParams(layers)


def network_layout(p: int, hidden: Sequence[int]) -> Tuple[int, ...]:
    return (3 * p, *hidden, p)


def forward(params: NetParams, state) -> torch.Tensor:
    """
    Per-stream Q-values for one input vector or a batch of rows.

    Args:
        params (NetParams): Network parameters.
        state: Input of length 3p, or a (batch, 3p) matrix.

    Returns:
        torch.Tensor: Length-p vector, or (batch, p) matrix.
    """
    h = torch.as_tensor(state, dtype=DTYPE)
    if h.shape[-1] != params.input_dim:
        raise ValidationError(f"State width {h.shape[-1]} does not match network input {params.input_dim}")
    last = len(params.layers) - 1
    for index, (w, b) in enumerate(params.layers):
        h = h @ w.T + b
        if index < last:
            h = torch.relu(h)
    return h


def predict(params: NetParams, state) -> np.ndarray:
    """forward() without gradient tracking, as a numpy array."""
    with torch.no_grad():
        return forward(params, state).numpy().copy()


def _check_shapes(a: NetParams, b: NetParams) -> None:
    if [t.shape for t in a.tensors()] != [t.shape for t in b.tensors()]:
        raise ValidationError(f"Parameter shapes differ: {a.layout} vs {b.layout}")


def sgd_step(params: NetParams, grad: NetParams, lr: float) -> NetParams:
    """theta <- theta - lr * grad."""
    if lr <= 0:
        raise ValidationError(f"Learning rate must be positive, got {lr}")
    _check_shapes(params, grad)
    with torch.no_grad():
        return NetParams.from_tensors([p - lr * g for p, g in zip(params.tensors(), grad.tensors())])


def clip_grad_norm(grad: NetParams, max_norm: float) -> Tuple[NetParams, float]:
    """Rescale grad so its global L2 norm is at most max_norm; 0 disables clipping."""
    tensors = grad.tensors()
    with torch.no_grad():
        total = float(torch.linalg.vector_norm(torch.stack([torch.linalg.vector_norm(t) for t in tensors])))
        if max_norm <= 0 or total <= max_norm:
            return grad, total
        scale = max_norm / (total + 1e-12)
        return NetParams.from_tensors([t * scale for t in tensors]), total


@dataclass(frozen=True)
class SyncMode:
    """Target update rule: hard copy every period steps, or Polyak averaging each step."""

    kind: str = "hard"
    period: int = 100
    rate: float = 0.01

    def __post_init__(self):
        if self.kind not in ("hard", "polyak"):
            raise ValidationError(f"Unknown sync kind '{self.kind}'")
        if self.period < 1 or not 0.0 <= self.rate <= 1.0:
            raise ValidationError(f"Invalid sync period {self.period} or rate {self.rate}")

    def due(self, step: int) -> bool:
        return self.kind == "polyak" or step % self.period == 0


def sync_target(online: NetParams, target: NetParams, mode: SyncMode) -> NetParams:
    _check_shapes(online, target)
    if mode.kind == "hard":
        return online.clone()
    with torch.no_grad():
        return NetParams.from_tensors([
            (1.0 - mode.rate) * t + mode.rate * o for o, t in zip(online.tensors(), target.tensors())
        ])


def save_checkpoint(path: str, params: NetParams) -> None:
    """Versioned .npz: the layer layout plus raw float64 arrays W0, b0, W1, ..."""
    arrays = {"format_version": np.array(CHECKPOINT_VERSION), "layout": np.array(params.layout, dtype=np.int64)}
    for index, (w, b) in enumerate(params.layers):
        arrays[f"W{index}"] = w.detach().numpy()
        arrays[f"b{index}"] = b.detach().numpy()
    try:
        with open(path, "wb") as handle:
            np.savez(handle, **arrays)
    except OSError as e:
        raise ValidationError(f"Cannot write checkpoint {path}: {e}")
    logging.info(f"Saved checkpoint with layout {params.layout} to {path}")


def load_checkpoint(path: str) -> NetParams:
    try:
        with np.load(path) as data:
            version = int(data["format_version"])
            if version != CHECKPOINT_VERSION:
                raise ValidationError(f"Unsupported checkpoint version {version} in {path}")
            layout = tuple(int(v) for v in data["layout"])
            layers = []
            for index in range(len(layout) - 1):
                w = torch.from_numpy(np.array(data[f"W{index}"], dtype=np.float64))
                b = torch.from_numpy(np.array(data[f"b{index}"], dtype=np.float64))
                layers.append((w, b))
    except (OSError, KeyError, ValueError) as e:
        raise ValidationError(f"Cannot read checkpoint {path}: {e}")
    params = NetParams(layers)
    if params.layout != layout:
        raise ValidationError(f"Checkpoint {path} arrays do not match its layout {layout}")
    return params
