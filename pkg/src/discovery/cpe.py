import logging
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from src.core.errors import ValidationError
from src.discovery.pc import Cpdag
from src.streams.graph import CausalGraph

ETA_CAP = 1.0 - 1e-6
RIDGE = 1e-6


@dataclass(frozen=True)
class CpeMatrix:
    """
    Causal propagation effects: eta[i, j] is how strongly a shift in stream i
    reaches stream j, 1 on the diagonal and in [0, 1) elsewhere.
    """

    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim != 2 or eta.shape[0] != eta.shape[1]:
            raise ValidationError(f"CPE matrix must be square, got shape {eta.shape}")
        if not np.allclose(np.diag(eta), 1.0):
            raise ValidationError("CPE diagonal must be 1")
        off = eta[~np.eye(eta.shape[0], dtype=bool)]
        if np.any(off < 0) or np.any(off >= 1):
            raise ValidationError("Off-diagonal CPE entries must lie in [0, 1)")
        object.__setattr__(self, "eta", eta)

    @property
    def p(self) -> int:
        return self.eta.shape[0]

    @classmethod
    def identity(cls, p: int) -> "CpeMatrix":
        return cls(np.eye(p))

    def embed(self, indices: Sequence[int], p: int) -> "CpeMatrix":
        """Place this matrix on the given streams of a p-stream identity."""
        indices = list(indices)
        if len(indices) != self.p:
            raise ValidationError(f"Cannot embed a {self.p}-stream CPE on {len(indices)} indices")
        eta = np.eye(p)
        eta[np.ix_(indices, indices)] = self.eta
        return CpeMatrix(eta)

    def support(self) -> Cpdag:
        """Directed graph of the nonzero off-diagonal effects."""
        directed = (self.eta > 0) & ~np.eye(self.p, dtype=bool)
        return Cpdag(p=self.p, directed=directed, undirected=np.zeros_like(directed))


def _standardize(data: np.ndarray) -> np.ndarray:
    centered = data - data.mean(axis=0)
    scale = centered.std(axis=0)
    scale[scale == 0] = 1.0
    return centered / scale


def _regress(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    n = design.shape[0]
    if np.linalg.matrix_rank(design) < design.shape[1]:
        logging.debug(f"Rank-deficient parent design with {design.shape[1]} columns, using ridge")
        gram = design.T @ design / n + RIDGE * np.eye(design.shape[1])
        return np.linalg.solve(gram, design.T @ target / n)
    return np.linalg.lstsq(design, target, rcond=None)[0]


def path_coefficients(data: np.ndarray, dag: CausalGraph) -> np.ndarray:
    """Standardized least-squares coefficient of every edge of dag."""
    z = _standardize(np.asarray(data, dtype=float))
    coef = np.zeros((dag.p, dag.p))
    for j in range(dag.p):
        parents = dag.parents(j)
        if parents.size:
            coef[parents, j] = _regress(z[:, parents], z[:, j])
    return coef


def total_effect_cpe(coef: np.ndarray, dag: CausalGraph) -> CpeMatrix:
    """eta from path coefficients: |(I - B)^-1 - I| restricted to reachable pairs, clamped."""
    p = dag.p
    total = np.linalg.inv(np.eye(p) - coef) - np.eye(p)
    reach = np.zeros((p, p), dtype=bool)
    for i, j in nx.transitive_closure_dag(dag.to_networkx()).edges():
        reach[i, j] = True
    eta = np.clip(np.abs(total) * reach, 0.0, ETA_CAP)
    np.fill_diagonal(eta, 1.0)
    return CpeMatrix(eta)


def estimate_cpe(data: np.ndarray, graph: Cpdag) -> CpeMatrix:
    """
    Estimate causal propagation effects on a discovered graph.

    Undirected edges are resolved with Cpdag.to_dag(); each node is regressed on
    its parents over standardized data, and eta[i, j] is the absolute sum over
    directed paths i ~> j of the products of path coefficients.

    Args:
        data (np.ndarray): n x p sample matrix.
        graph (Cpdag): Graph over the same p variables.

    Returns:
        CpeMatrix: Identity for an empty graph.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != graph.p:
        raise ValidationError(f"Data shape {data.shape} does not match a {graph.p}-variable graph")
    dag = graph.to_dag()
    return total_effect_cpe(path_coefficients(data, dag), dag)
