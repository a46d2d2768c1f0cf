from dataclasses import dataclass
from typing import List, Tuple

import networkx as nx
import numpy as np

from src.core.errors import ValidationError


@dataclass(frozen=True)
class CausalGraph:
    """
    A DAG over p streams.

    Attributes:
        p (int): Number of variables.
        adjacency (np.ndarray): p x p boolean matrix, entry (i, j) true iff i -> j.
        topo_order (np.ndarray): Position of each variable in a topological order,
            so an edge i -> j requires topo_order[i] < topo_order[j].
    """

    p: int
    adjacency: np.ndarray
    topo_order: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        order = np.asarray(self.topo_order, dtype=int)
        if adj.shape != (self.p, self.p):
            raise ValidationError(f"Adjacency shape {adj.shape} does not match p={self.p}")
        if sorted(order.tolist()) != list(range(self.p)):
            raise ValidationError("topo_order must be a permutation of 0..p-1")
        if np.any(np.diag(adj)):
            raise ValidationError("Self-loops are not allowed")
        src, dst = np.nonzero(adj)
        if np.any(order[src] >= order[dst]):
            raise ValidationError("Edges must follow the topological order")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "topo_order", order)

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> "CausalGraph":
        """Build a graph from an adjacency matrix, deriving a topological order."""
        adj = np.asarray(adjacency, dtype=bool)
        p = adj.shape[0]
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(p))
        digraph.add_edges_from(zip(*np.nonzero(adj)))
        if not nx.is_directed_acyclic_graph(digraph):
            raise ValidationError("Adjacency matrix contains a directed cycle")
        order = np.empty(p, dtype=int)
        for position, node in enumerate(nx.lexicographical_topological_sort(digraph)):
            order[node] = position
        return cls(p=p, adjacency=adj, topo_order=order)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[:, j])

    def to_networkx(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(self.p))
        digraph.add_edges_from(self.edges())
        return digraph

    def to_cpdag(self):
        """The graph as a fully directed Cpdag (no undirected edges)."""
        from src.discovery.pc import Cpdag

        return Cpdag(
            p=self.p,
            directed=self.adjacency.copy(),
            undirected=np.zeros((self.p, self.p), dtype=bool),
        )


@dataclass(frozen=True)
class WeightedDag:
    """A CausalGraph with linear SEM coefficients (weights[i, j] for i -> j)."""

    graph: CausalGraph
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.graph.p, self.graph.p):
            raise ValidationError(f"Weight shape {w.shape} does not match p={self.graph.p}")
        if np.any((w != 0) & ~self.graph.adjacency):
            raise ValidationError("Weights must be zero where the graph has no edge")
        object.__setattr__(self, "weights", w)

    @property
    def p(self) -> int:
        return self.graph.p

    def total_effects(self) -> np.ndarray:
        """Sum over directed paths of coefficient products, (I - W)^-1 - I."""
        eye = np.eye(self.p)
        return np.linalg.inv(eye - self.weights) - eye


def sample_er_dag(p: int, edge_prob: float, seed: int) -> CausalGraph:
    """
    Sample an Erdos-Renyi DAG under a random topological order.

    Every pair (i, j) with rho(i) < rho(j) becomes the edge i -> j independently
    with probability edge_prob.

    Args:
        p (int): Number of variables.
        edge_prob (float): Inclusion probability in [0, 1].
        seed (int): Seed of the sampler.

    Returns:
        CausalGraph: The sampled graph.
    """
    if p < 1:
        raise ValidationError(f"p must be at least 1, got {p}")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValidationError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    rho = rng.permutation(p)
    admissible = rho[:, None] < rho[None, :]
    adjacency = admissible & (rng.random((p, p)) < edge_prob)
    return CausalGraph(p=p, adjacency=adjacency, topo_order=rho)


def assign_sem_weights(graph: CausalGraph, low: float, high: float, seed: int) -> WeightedDag:
    """Draw |w| uniformly from [low, high] with a random sign for every edge."""
    if not 0 < low <= high:
        raise ValidationError(f"Need 0 < low <= high, got low={low}, high={high}")
    rng = np.random.default_rng(seed)
    magnitude = rng.uniform(low, high, size=(graph.p, graph.p))
    sign = np.where(rng.random((graph.p, graph.p)) < 0.5, -1.0, 1.0)
    weights = np.where(graph.adjacency, sign * magnitude, 0.0)
    return WeightedDag(graph=graph, weights=weights)
