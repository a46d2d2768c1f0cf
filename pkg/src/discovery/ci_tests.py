from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from src.core.errors import NumericalError, ValidationError

_CUT = 1.0 - 1e-12
_SINGULAR_COND = 1e12


@dataclass(frozen=True)
class CiResult:
    p_value: float
    independent: bool


class FisherZ:
    """
    Fisher-z conditional independence test over one data matrix.

    The covariance is computed once; each test takes a Schur complement of the
    covariance block over {i, j} and the conditioning set.
    """

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"Expected an n x p matrix, got shape {data.shape}")
        self.n, self.p = data.shape
        self.cov = np.cov(data, rowvar=False).reshape(self.p, self.p)

    def partial_correlation(self, i: int, j: int, cond: Sequence[int]) -> float:
        cond = list(cond)
        ab = self.cov[np.ix_([i, j], [i, j])]
        if cond:
            ss = self.cov[np.ix_(cond, cond)]
            if np.linalg.cond(ss) > _SINGULAR_COND:
                raise NumericalError(f"Singular conditioning covariance for set {sorted(int(c) for c in cond)}")
            a_s = self.cov[np.ix_([i, j], cond)]
            ab = ab - a_s @ np.linalg.solve(ss, a_s.T)
        if ab[0, 0] <= 0 or ab[1, 1] <= 0:
            # i or j is determined by the conditioning set
            return 0.0
        r = ab[0, 1] / np.sqrt(ab[0, 0] * ab[1, 1])
        return float(np.clip(r, -_CUT, _CUT))

    def test(self, i: int, j: int, cond: Sequence[int], alpha_sig: float) -> CiResult:
        cond = list(cond)
        if i == j:
            raise ValidationError("fisher_z_test needs two distinct variables")
        if i in cond or j in cond:
            raise ValidationError(f"Tested variables {i}, {j} must not be in the conditioning set {cond}")
        if self.n <= len(cond) + 3:
            raise ValidationError(f"Need n > |cond| + 3, got n={self.n}, |cond|={len(cond)}")
        r = self.partial_correlation(i, j, cond)
        z = np.arctanh(r) * np.sqrt(self.n - len(cond) - 3)
        p_value = float(2.0 * stats.norm.sf(abs(z)))
        return CiResult(p_value=p_value, independent=p_value >= alpha_sig)


def fisher_z_test(data: np.ndarray, i: int, j: int, cond: Sequence[int], alpha_sig: float) -> CiResult:
    """
    Test X_i independent of X_j given X_cond with Fisher's z transform.

    Args:
        data (np.ndarray): n x p sample matrix.
        i (int): First variable.
        j (int): Second variable.
        cond (Sequence[int]): Conditioning set.
        alpha_sig (float): Significance level; independence is accepted when p >= alpha_sig.

    Returns:
        CiResult: Two-sided p-value and the independence decision.
    """
    return FisherZ(data).test(i, j, cond, alpha_sig)
