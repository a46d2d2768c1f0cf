import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.errors import ValidationError
from src.streams.graph import WeightedDag


class ShiftPattern(enum.Enum):
    ALL_POSITIVE = "a"
    ALTERNATING = "b"


@dataclass(frozen=True)
class ShiftSpec:
    """
    A mean shift injected into the exogenous terms of some streams.

    Times are 1-based: the shift is active for onset <= t <= onset + duration.
    """

    shifted_indices: Tuple[int, ...]
    pattern: ShiftPattern
    delta: float
    onset: int
    duration: int
    noise_sigma: float = 0.0

    @classmethod
    def first_k(cls, k: int, pattern, delta: float, onset: int, horizon: int,
                noise_sigma: float = 0.0, duration: Optional[int] = None) -> "ShiftSpec":
        """Shift streams 0..k-1; duration defaults to horizon - onset."""
        return cls(
            shifted_indices=tuple(range(k)),
            pattern=ShiftPattern(pattern) if not isinstance(pattern, ShiftPattern) else pattern,
            delta=float(delta),
            onset=int(onset),
            duration=int(horizon - onset if duration is None else duration),
            noise_sigma=float(noise_sigma),
        )

    def validate(self, p: int, horizon: int) -> None:
        if len(set(self.shifted_indices)) != len(self.shifted_indices):
            raise ValidationError(f"Duplicate shifted indices {self.shifted_indices}")
        if len(self.shifted_indices) > p or any(not 0 <= i < p for i in self.shifted_indices):
            raise ValidationError(f"Shifted indices {self.shifted_indices} invalid for p={p}")
        if self.delta < 0:
            raise ValidationError(f"delta must be non-negative, got {self.delta}")
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if self.onset < 1 or self.duration < 0 or self.onset + self.duration > horizon:
            raise ValidationError(
                f"Shift window [{self.onset}, {self.onset + self.duration}] does not fit horizon {horizon}"
            )

    def active(self, t: int) -> bool:
        return self.onset <= t <= self.onset + self.duration


def shift_vector(spec: ShiftSpec, p: int) -> np.ndarray:
    """Exogenous shift mu_c: +delta on every shifted stream, or alternating +/-delta."""
    mu = np.zeros(p)
    for position, index in enumerate(sorted(spec.shifted_indices)):
        sign = 1.0
        if spec.pattern is ShiftPattern.ALTERNATING and position % 2 == 1:
            sign = -1.0
        mu[index] = sign * spec.delta
    return mu


@dataclass(frozen=True)
class StreamBatch:
    """
    A horizon x p matrix of stream values, row t-1 holding time t.

    dag and spec are None for ingested data.
    """

    horizon: int
    values: np.ndarray
    dag: Optional[WeightedDag] = None
    spec: Optional[ShiftSpec] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.horizon:
            raise ValidationError(f"values shape {values.shape} does not match horizon {self.horizon}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Stream values contain non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def row(self, t: int) -> np.ndarray:
        return self.values[t - 1]

    def truth_mask(self, t: int) -> np.ndarray:
        """Indicator of the streams whose mean is shifted at time t."""
        mask = np.zeros(self.p, dtype=int)
        if self.spec is not None and self.spec.delta > 0 and self.spec.active(t):
            mask[list(self.spec.shifted_indices)] = 1
        return mask


def _propagate(dag: WeightedDag, exogenous: np.ndarray) -> np.ndarray:
    # X = X W + E  =>  X (I - W) = E
    system = np.eye(dag.p) - dag.weights
    return np.linalg.solve(system.T, exogenous.T).T


def _check_weights(dag: WeightedDag) -> None:
    if not np.all(np.isfinite(dag.weights)):
        raise ValidationError("SEM weights contain non-finite entries")


def generate_streams(dag: WeightedDag, spec: ShiftSpec, horizon: int, seed: int) -> StreamBatch:
    """
    Simulate horizon steps of the linear-Gaussian SEM with an injected mean shift.

    The shift vector is added to the exogenous terms while the shift is active,
    so it propagates to the causal descendants of the shifted streams.

    Args:
        dag (WeightedDag): Ground-truth structural model.
        spec (ShiftSpec): Shift to inject.
        horizon (int): Number of time steps.
        seed (int): Seed of the sampler.

    Returns:
        StreamBatch: Simulated values with their ground truth attached.
    """
    _check_weights(dag)
    spec.validate(dag.p, horizon)
    rng = np.random.default_rng(seed)
    exogenous = rng.standard_normal((horizon, dag.p))
    noise = rng.standard_normal((horizon, dag.p))
    mu = shift_vector(spec, dag.p)
    start = spec.onset - 1
    stop = spec.onset + spec.duration
    exogenous[start:stop] += mu
    values = _propagate(dag, exogenous) + spec.noise_sigma * noise
    return StreamBatch(horizon=horizon, values=values, dag=dag, spec=spec)


def simulate_in_control(dag: WeightedDag, rows: int, noise_sigma: float, seed: int) -> np.ndarray:
    """Shift-free rows of the SEM, used as a discovery context window."""
    _check_weights(dag)
    if rows < 1:
        raise ValidationError(f"rows must be positive, got {rows}")
    rng = np.random.default_rng(seed)
    exogenous = rng.standard_normal((rows, dag.p))
    noise = rng.standard_normal((rows, dag.p))
    return _propagate(dag, exogenous) + noise_sigma * noise


