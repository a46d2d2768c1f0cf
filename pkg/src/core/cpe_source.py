from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.discovery.cpe import CpeMatrix
from src.discovery.metrics import GraphMetrics, graph_metrics
from src.discovery.pc import Cpdag
from src.streams.graph import CausalGraph, WeightedDag


@dataclass(frozen=True)
class CpeEstimate:
    """A full p x p CPE plus the graph it came from, over the listed streams."""

    cpe: CpeMatrix
    cpdag: Optional[Cpdag]
    indices: Tuple[int, ...]

    def metrics(self, truth: CausalGraph) -> Optional[GraphMetrics]:
        """Score the graph against the truth restricted to the same streams."""
        if self.cpdag is None:
            return None
        idx = list(self.indices)
        sub_truth = CausalGraph.from_adjacency(truth.adjacency[np.ix_(idx, idx)])
        return graph_metrics(self.cpdag, sub_truth)


class CpeSource(ABC):
    """Abstract base class for the providers of causal propagation effects."""

    @abstractmethod
    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        """Abstract method to produce a CPE from a context window of in-control rows."""
        pass
