from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.core.errors import NumericalError, ValidationError
from src.core.utils import as_index_tuple
from src.discovery.cpe import CpeMatrix

_SINGULAR_COND = 1e12


@dataclass(frozen=True)
class MonitorState:
    """
    Decayed Bayesian posterior over the stream means.

    Attributes:
        mu (np.ndarray): Posterior mean mu_n.
        precision (np.ndarray): Posterior precision V_n^-1.
        lam (float): Time-decay parameter in [0, 1).
        sigma (np.ndarray): Observation covariance.
        step (int): Number of updates applied.
    """

    mu: np.ndarray
    precision: np.ndarray
    lam: float
    sigma: np.ndarray
    step: int = 0

    @property
    def p(self) -> int:
        return self.mu.shape[0]

    @property
    def sigma_inv(self) -> np.ndarray:
        return np.linalg.inv(self.sigma)


@dataclass(frozen=True)
class Contributions:
    total: float
    per_var: np.ndarray


def init_monitor(p: int, sigma: np.ndarray, lam: float) -> MonitorState:
    """Base state: mu = 0, precision = I, step 0."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (p, p):
        raise ValidationError(f"sigma shape {sigma.shape} does not match p={p}")
    if not np.allclose(sigma, sigma.T) or np.linalg.eigvalsh((sigma + sigma.T) / 2).min() <= 0:
        raise ValidationError("sigma must be symmetric positive definite")
    if not 0 <= lam < 1:
        raise ValidationError(f"lambda must lie in [0, 1), got {lam}")
    return MonitorState(mu=np.zeros(p), precision=np.eye(p), lam=float(lam), sigma=sigma, step=0)


def update_monitor(state: MonitorState, x: np.ndarray, selected: Sequence[int]) -> MonitorState:
    """
    One partial-observation update of the decayed posterior.

    Only x[selected] is read; the other entries may hold anything, NaN included.
    With S the selected streams:
        P_n  = (1 - lam) P_{n-1} + E_S' Sigma_S^-1 E_S
        mu_n = P_n^-1 [(1 - lam) P_{n-1} mu_{n-1} + E_S' Sigma_S^-1 x_S]

    Args:
        state (MonitorState): Posterior after n - 1 steps.
        x (np.ndarray): Observation vector of length p.
        selected (Sequence[int]): Observed streams, at least one.

    Returns:
        MonitorState: Posterior after n steps.
    """
    sel = list(as_index_tuple(selected, state.p))
    if not sel:
        raise ValidationError("update_monitor needs at least one selected stream")
    x = np.asarray(x, dtype=float)
    if x.shape != (state.p,):
        raise ValidationError(f"Observation length {x.shape} does not match p={state.p}")
    x_sel = x[sel]
    if not np.all(np.isfinite(x_sel)):
        raise ValidationError(f"Non-finite observation on selected streams {sel}")

    sigma_sel = state.sigma[np.ix_(sel, sel)]
    if np.linalg.cond(sigma_sel) > _SINGULAR_COND:
        raise NumericalError(f"Singular restricted covariance on streams {sel}")
    info = np.linalg.inv(sigma_sel)
    info = (info + info.T) / 2

    decay = 1.0 - state.lam
    precision = decay * state.precision
    precision[np.ix_(sel, sel)] += info
    rhs = decay * state.precision @ state.mu
    rhs[sel] += info @ x_sel
    mu = np.linalg.solve(precision, rhs)
    return MonitorState(mu=mu, precision=precision, lam=state.lam, sigma=state.sigma, step=state.step + 1)


def local_contributions(state: MonitorState) -> Contributions:
    """Per-stream contributions mu_i * (P mu)_i and their sum mu' P mu."""
    xi = state.precision @ state.mu
    per_var = state.mu * xi
    return Contributions(total=float(state.mu @ xi), per_var=per_var)


def causal_statistic(state: MonitorState, cpe: CpeMatrix) -> np.ndarray:
    """phi_i = mu_i^2 eta_ii + sum_{j != i} mu_i eta_ij mu_j."""
    if cpe.p != state.p:
        raise ValidationError(f"CPE has p={cpe.p}, monitor has p={state.p}")
    return state.mu * (cpe.eta @ state.mu)


def update_staleness(y: np.ndarray, selected: Sequence[int]) -> np.ndarray:
    y = np.asarray(y)
    if np.any(y < 0):
        raise ValidationError("Staleness counters must be non-negative")
    out = y.astype(int) + 1
    out[list(as_index_tuple(selected, y.shape[0]))] = 0
    return out


@dataclass(frozen=True)
class CausalState:
    """The 3 x p network input: contributions, causal statistics, staleness."""

    lam_row: np.ndarray
    phi_row: np.ndarray
    y_row: np.ndarray

    @property
    def p(self) -> int:
        return self.lam_row.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.vstack([self.lam_row, self.phi_row, self.y_row.astype(float)])

    def flatten(self) -> np.ndarray:
        """Row-major vector of length 3p."""
        return self.as_matrix().reshape(-1)

    @classmethod
    def from_flat(cls, flat: np.ndarray) -> "CausalState":
        flat = np.asarray(flat, dtype=float)
        if flat.ndim != 1 or flat.shape[0] % 3:
            raise ValidationError(f"A flat causal state has length 3p, got {flat.shape}")
        lam_row, phi_row, y_row = flat.reshape(3, -1)
        return cls(lam_row=lam_row.copy(), phi_row=phi_row.copy(), y_row=y_row.astype(int))

    def to_network_input(self, squash: bool = True) -> np.ndarray:
        return network_input(self.flatten(), squash)


def network_input(flat: np.ndarray, squash: bool = True) -> np.ndarray:
    """
    Network input from one flat state or a (batch, 3p) matrix of them. With
    squash, the statistic rows go through sign(v) log(1 + |v|) and the
    staleness row through Y / (1 + Y); without it the flat layout is used as is.
    """
    flat = np.asarray(flat, dtype=float)
    if not squash:
        return flat
    p = flat.shape[-1] // 3
    stats_part = flat[..., :2 * p]
    y = flat[..., 2 * p:]
    return np.concatenate([np.sign(stats_part) * np.log1p(np.abs(stats_part)), y / (1.0 + y)], axis=-1)


def assemble_state(lam_row: np.ndarray, phi_row: np.ndarray, y_row: np.ndarray) -> CausalState:
    lam_row, phi_row, y_row = (np.asarray(r) for r in (lam_row, phi_row, y_row))
    if not lam_row.ndim == phi_row.ndim == y_row.ndim == 1:
        raise ValidationError("Causal state rows must be vectors")
    if not lam_row.shape == phi_row.shape == y_row.shape:
        raise ValidationError(
            f"Causal state rows differ in length: {lam_row.shape[0]}, {phi_row.shape[0]}, {y_row.shape[0]}"
        )
    return CausalState(lam_row=lam_row.astype(float), phi_row=phi_row.astype(float), y_row=y_row.astype(int))
