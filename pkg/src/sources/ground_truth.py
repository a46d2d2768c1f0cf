from typing import Optional, Sequence

import numpy as np

from src.core.cpe_source import CpeEstimate, CpeSource
from src.core.errors import ValidationError
from src.discovery.cpe import estimate_cpe
from src.streams.graph import WeightedDag


class GroundTruthSource(CpeSource):
    """CPE on the true graph over every stream, coefficients fitted on the context window."""

    def estimate(self, context: np.ndarray, selected: Sequence[int],
                 truth: Optional[WeightedDag] = None) -> CpeEstimate:
        if truth is None:
            raise ValidationError("The ground_truth CPE source needs the true graph")
        cpdag = truth.graph.to_cpdag()
        return CpeEstimate(cpe=estimate_cpe(context, cpdag), cpdag=cpdag, indices=tuple(range(truth.p)))
