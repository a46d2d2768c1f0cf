import logging
from typing import Optional, Sequence

import numpy as np

from src.core.cpe_source import CpeEstimate, CpeSource
from src.core.errors import NumericalError
from src.discovery.cpe import CpeMatrix, estimate_cpe
from src.discovery.pc import Cpdag, discover_skeleton, orient_edges
from src.streams.graph import WeightedDag


class DiscoveredSource(CpeSource):
    """CPE from a PC search on the context window."""

    def __init__(self, alpha_sig: float = 0.05, max_cond: int = 3, discovery_scope: str = "selected"):
        """
        Initialise DiscoveredSource class.

        Args:
            alpha_sig (float): Significance level of the conditional independence tests.
            max_cond (int): Largest conditioning set size.
            discovery_scope (str): "selected" to search only the selected streams, "all" for every stream.
        """
        self.alpha_sig = alpha_sig
        self.max_cond = max_cond
        self.discovery_scope = discovery_scope

    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        p = context.shape[1]
        indices = tuple(range(p)) if self.discovery_scope == "all" else tuple(sorted(selected))
        window = context[:, list(indices)]
        try:
            skeleton = discover_skeleton(window, self.alpha_sig, self.max_cond)
            cpdag = orient_edges(skeleton.adjacency, skeleton.sepsets)
            local = estimate_cpe(window, cpdag)
        except NumericalError as e:
            logging.warning(f"Discovery on streams {list(indices)} failed ({e}); using the identity CPE")
            return CpeEstimate(cpe=CpeMatrix.identity(p), cpdag=Cpdag.empty(len(indices)), indices=indices)
        return CpeEstimate(cpe=local.embed(indices, p), cpdag=cpdag, indices=indices)
