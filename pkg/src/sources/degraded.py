import itertools
import math
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from src.core.cpe_source import CpeEstimate, CpeSource
from src.core.errors import ValidationError
from src.discovery.cpe import CpeMatrix, estimate_cpe, total_effect_cpe
from src.discovery.pc import Cpdag
from src.streams.graph import CausalGraph, WeightedDag


def _require_truth(truth: Optional[WeightedDag], kind: str) -> WeightedDag:
    if truth is None:
        raise ValidationError(f"The {kind} CPE source needs the true graph")
    return truth


def _add_acyclic(dag: nx.DiGraph, a: int, b: int) -> bool:
    if dag.has_edge(a, b) or dag.has_edge(b, a) or nx.has_path(dag, b, a):
        return False
    dag.add_edge(a, b)
    return True


def _to_cpdag(dag: nx.DiGraph, p: int) -> Cpdag:
    directed = np.zeros((p, p), dtype=bool)
    for a, b in dag.edges():
        directed[a, b] = True
    return Cpdag(p=p, directed=directed, undirected=np.zeros((p, p), dtype=bool))


class NoGraphSource(CpeSource):
    """No edges recovered: the identity CPE, so Phi reduces to mu squared."""

    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        p = context.shape[1]
        return CpeEstimate(cpe=CpeMatrix.identity(p), cpdag=Cpdag.empty(p), indices=tuple(range(p)))


class LowQualitySource(CpeSource):
    """
    A corrupted copy of the true graph.

    Each true edge survives with probability keep_fraction and a survivor is
    reversed with probability 1/2; spurious edges are then added until false
    edges make up false_fraction of the prediction. Coefficients are fitted on
    the context window.
    """

    def __init__(self, keep_fraction: float = 0.2, false_fraction: float = 0.85, seed: int = 0):
        self.keep_fraction = keep_fraction
        self.false_fraction = false_fraction
        self.rng = np.random.default_rng(seed)

    def corrupt(self, truth: CausalGraph) -> Cpdag:
        p = truth.p
        dag = nx.DiGraph()
        dag.add_nodes_from(range(p))
        correct = reversed_count = 0
        for a, b in truth.edges():
            if self.rng.random() >= self.keep_fraction:
                continue
            if self.rng.random() < 0.5:
                reversed_count += _add_acyclic(dag, b, a)
            else:
                correct += _add_acyclic(dag, a, b)

        wanted = (self.false_fraction * (correct + reversed_count) - reversed_count) / (1.0 - self.false_fraction)
        to_add = max(0, math.ceil(wanted - 1e-9))
        candidates = [(a, b) for a, b in itertools.permutations(range(p), 2)
                      if not truth.adjacency[a, b] and not truth.adjacency[b, a]]
        for index in self.rng.permutation(len(candidates)):
            if to_add == 0:
                break
            a, b = candidates[index]
            if _add_acyclic(dag, a, b):
                to_add -= 1
        return _to_cpdag(dag, p)

    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        truth = _require_truth(truth, "low_quality")
        cpdag = self.corrupt(truth.graph)
        return CpeEstimate(cpe=estimate_cpe(context, cpdag), cpdag=cpdag, indices=tuple(range(truth.p)))


class AdversarialSource(CpeSource):
    """
    A wrong graph: as many edges as the truth, all between pairs the truth
    leaves non-adjacent, with a constant path coefficient instead of fitted ones.
    """

    def __init__(self, adversarial_strength: float = 0.8, seed: int = 0):
        self.strength = adversarial_strength
        self.rng = np.random.default_rng(seed)

    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        truth = _require_truth(truth, "adversarial")
        p = truth.p
        order = self.rng.permutation(p)
        candidates = [(a, b) for a, b in itertools.permutations(range(p), 2)
                      if order[a] < order[b] and not truth.graph.adjacency[a, b] and not truth.graph.adjacency[b, a]]
        n_edges = min(truth.graph.n_edges, len(candidates))
        adjacency = np.zeros((p, p), dtype=bool)
        for index in self.rng.choice(len(candidates), size=n_edges, replace=False):
            a, b = candidates[index]
            adjacency[a, b] = True
        graph = CausalGraph(p=p, adjacency=adjacency, topo_order=order)
        cpe = total_effect_cpe(self.strength * adjacency.astype(float), graph)
        cpdag = Cpdag(p=p, directed=adjacency, undirected=np.zeros((p, p), dtype=bool))
        return CpeEstimate(cpe=cpe, cpdag=cpdag, indices=tuple(range(p)))
