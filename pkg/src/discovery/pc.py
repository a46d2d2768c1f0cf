import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np

from src.core.errors import ValidationError
from src.discovery.ci_tests import FisherZ
from src.streams.graph import CausalGraph

Pair = Tuple[int, int]


def _pair(i: int, j: int) -> Pair:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Cpdag:
    """
    Partially directed graph: directed[i, j] means i -> j, undirected is symmetric.
    """

    p: int
    directed: np.ndarray
    undirected: np.ndarray

    def __post_init__(self):
        directed = np.asarray(self.directed, dtype=bool)
        undirected = np.asarray(self.undirected, dtype=bool)
        if directed.shape != (self.p, self.p) or undirected.shape != (self.p, self.p):
            raise ValidationError(f"Cpdag matrices must be {self.p} x {self.p}")
        if not np.array_equal(undirected, undirected.T):
            raise ValidationError("Undirected part must be symmetric")
        if np.any(np.diag(directed)) or np.any(np.diag(undirected)):
            raise ValidationError("Cpdag has a self-loop")
        if np.any(directed & (undirected | directed.T)):
            raise ValidationError("A pair is both directed and undirected, or directed both ways")
        if not nx.is_directed_acyclic_graph(_digraph(directed)):
            raise ValidationError("Directed part of the Cpdag has a cycle")
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    @classmethod
    def empty(cls, p: int) -> "Cpdag":
        return cls(p=p, directed=np.zeros((p, p), dtype=bool), undirected=np.zeros((p, p), dtype=bool))

    @property
    def adjacency(self) -> np.ndarray:
        """Symmetric adjacency, regardless of orientation."""
        return self.directed | self.directed.T | self.undirected

    @property
    def n_edges(self) -> int:
        return int(self.directed.sum() + np.triu(self.undirected).sum())

    def directed_edges(self) -> List[Pair]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.directed))]

    def undirected_edges(self) -> List[Pair]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(self.undirected)))]

    def to_dag(self) -> CausalGraph:
        """
        Resolve undirected edges in ascending (i, j) order: i -> j unless that
        closes a directed cycle, in which case j -> i.
        """
        dag = _digraph(self.directed)
        for i, j in self.undirected_edges():
            if nx.has_path(dag, j, i):
                dag.add_edge(j, i)
            else:
                dag.add_edge(i, j)
        adjacency = np.zeros((self.p, self.p), dtype=bool)
        for i, j in dag.edges():
            adjacency[i, j] = True
        return CausalGraph.from_adjacency(adjacency)


def _digraph(directed: np.ndarray) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(directed.shape[0]))
    graph.add_edges_from(zip(*np.nonzero(directed)))
    return graph


@dataclass
class Skeleton:
    adjacency: np.ndarray
    sepsets: Dict[Pair, Tuple[int, ...]] = field(default_factory=dict)

    def sepset(self, i: int, j: int) -> Tuple[int, ...]:
        return self.sepsets.get(_pair(i, j), ())


def discover_skeleton(data: np.ndarray, alpha_sig: float, max_cond: int) -> Skeleton:
    """
    PC-stable skeleton search.

    Starting from the complete graph, for conditioning sizes 0..max_cond remove
    i - j when some subset of the current neighbours of i (or of j) separates
    them. Neighbour sets are frozen per level, so removals take effect only
    between levels and the result does not depend on the visiting order.

    Args:
        data (np.ndarray): n x p sample matrix, n >= 10.
        alpha_sig (float): Significance level of each test.
        max_cond (int): Largest conditioning set size.

    Returns:
        Skeleton: Symmetric adjacency and the separating set of every removed pair.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 10:
        raise ValidationError(f"Skeleton discovery needs at least 10 rows, got shape {data.shape}")
    tester = FisherZ(data)
    p = data.shape[1]
    adjacency = ~np.eye(p, dtype=bool)
    sepsets: Dict[Pair, Tuple[int, ...]] = {}

    for level in range(max_cond + 1):
        if level + 3 >= data.shape[0]:
            break
        frozen = adjacency.copy()
        removals = []
        testable = False
        for i, j in itertools.combinations(range(p), 2):
            if not frozen[i, j]:
                continue
            for x, y in ((i, j), (j, i)):
                neighbours = [k for k in np.flatnonzero(frozen[x]) if k != y]
                if len(neighbours) < level:
                    continue
                testable = True
                separated = None
                for cond in itertools.combinations(neighbours, level):
                    if tester.test(i, j, cond, alpha_sig).independent:
                        separated = tuple(int(c) for c in cond)
                        break
                if separated is not None:
                    removals.append((i, j, separated))
                    break
        for i, j, cond in removals:
            adjacency[i, j] = adjacency[j, i] = False
            sepsets[(i, j)] = cond
        if not testable:
            break

    logging.debug(f"Skeleton search kept {int(np.triu(adjacency).sum())} of {p * (p - 1) // 2} pairs")
    return Skeleton(adjacency=adjacency, sepsets=sepsets)


class _Orienter:
    """Mutable working copy of a partially directed graph."""

    def __init__(self, skeleton: np.ndarray):
        self.p = skeleton.shape[0]
        self.undirected = skeleton.copy()
        self.directed = np.zeros_like(skeleton)
        self.dag = nx.DiGraph()
        self.dag.add_nodes_from(range(self.p))

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.undirected[a, b] or self.directed[a, b] or self.directed[b, a])

    def orient(self, a: int, b: int) -> bool:
        """Turn a - b into a -> b unless that closes a directed cycle."""
        if not self.undirected[a, b] or nx.has_path(self.dag, b, a):
            return False
        self.undirected[a, b] = self.undirected[b, a] = False
        self.directed[a, b] = True
        self.dag.add_edge(a, b)
        return True

    def rule1(self) -> bool:
        # a -> b - c, a and c non-adjacent  =>  b -> c
        changed = False
        for a, b in zip(*np.nonzero(self.directed)):
            for c in np.flatnonzero(self.undirected[b]):
                if c != a and not self.adjacent(a, c):
                    changed |= self.orient(int(b), int(c))
        return changed

    def rule2(self) -> bool:
        # a -> b -> c and a - c  =>  a -> c
        changed = False
        for a, c in zip(*np.nonzero(np.triu(self.undirected))):
            for x, y in ((a, c), (c, a)):
                if np.any(self.directed[x] & self.directed[:, y]):
                    changed |= self.orient(int(x), int(y))
                    break
        return changed

    def rule3(self) -> bool:
        # a - c -> b, a - d -> b, a - b, c and d non-adjacent  =>  a -> b
        changed = False
        for a, b in zip(*np.nonzero(self.undirected)):
            if not self.undirected[a, b]:
                continue
            candidates = np.flatnonzero(self.undirected[a] & self.directed[:, b])
            for c, d in itertools.combinations(candidates, 2):
                if not self.adjacent(c, d):
                    changed |= self.orient(int(a), int(b))
                    break
        return changed


def orient_edges(skeleton: np.ndarray, sepsets: Dict[Pair, Tuple[int, ...]]) -> Cpdag:
    """
    Orient a skeleton: unshielded colliders first, then Meek rules 1-3 to a fixpoint.

    Args:
        skeleton (np.ndarray): Symmetric boolean adjacency.
        sepsets (dict): Separating set of every non-adjacent pair, keyed (min, max).

    Returns:
        Cpdag: The oriented graph; edges no rule orients stay undirected.
    """
    skeleton = np.asarray(skeleton, dtype=bool)
    if not np.array_equal(skeleton, skeleton.T):
        raise ValidationError("Skeleton must be symmetric")
    skeleton = skeleton & ~np.eye(skeleton.shape[0], dtype=bool)
    work = _Orienter(skeleton)

    for k in range(work.p):
        neighbours = np.flatnonzero(skeleton[k])
        for i, j in itertools.combinations(neighbours, 2):
            if skeleton[i, j] or k in sepsets.get(_pair(int(i), int(j)), ()):
                continue
            for parent in (int(i), int(j)):
                # an already reversed edge means a conflicting collider; keep the first
                work.orient(parent, k)

    while work.rule1() | work.rule2() | work.rule3():
        pass

    return Cpdag(p=work.p, directed=work.directed, undirected=work.undirected)
