from dataclasses import dataclass
from typing import Optional, Tuple

from src.core.errors import ValidationError
from src.discovery.pc import Cpdag
from src.streams.graph import CausalGraph


@dataclass(frozen=True)
class GraphMetrics:
    """SHD, TPR and FDR of an estimated graph. fdr is None when 0/0."""

    shd: int
    tpr: float
    fdr: Optional[float]
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    @property
    def fdr_defined(self) -> bool:
        return self.fdr is not None

    def as_tuple(self) -> Tuple[int, float, Optional[float]]:
        return self.shd, self.tpr, self.fdr


def graph_metrics(estimated: Cpdag, truth: CausalGraph) -> GraphMetrics:
    """
    Score an estimated graph against the true DAG.

    An undirected estimated edge over a true edge counts as recovered and adds
    nothing to SHD. A reversed edge adds 1 to SHD and is a false discovery;
    missing and extra edges add 1 each.
    """
    if estimated.p != truth.p:
        raise ValidationError(f"Dimension mismatch: estimated p={estimated.p}, truth p={truth.p}")
    true_adj = truth.adjacency
    shd = tp = fp = fn = 0
    for i in range(truth.p):
        for j in range(i + 1, truth.p):
            true_ij, true_ji = bool(true_adj[i, j]), bool(true_adj[j, i])
            est_ij, est_ji = bool(estimated.directed[i, j]), bool(estimated.directed[j, i])
            est_und = bool(estimated.undirected[i, j])
            predicted = est_ij or est_ji or est_und
            if not (true_ij or true_ji):
                if predicted:
                    shd += 1
                    fp += 1
                continue
            if not predicted:
                shd += 1
                fn += 1
            elif est_und or (true_ij and est_ij) or (true_ji and est_ji):
                tp += 1
            else:
                shd += 1
                fp += 1
                fn += 1

    n_true = tp + fn
    tpr = tp / n_true if n_true else 1.0
    if tp + fp:
        fdr: Optional[float] = fp / (tp + fp)
    else:
        fdr = 0.0 if n_true == 0 else None
    return GraphMetrics(shd=shd, tpr=tpr, fdr=fdr, true_positives=tp, false_positives=fp, false_negatives=fn)
