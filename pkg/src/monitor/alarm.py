from functools import lru_cache

import numpy as np
from scipy import special, stats

from src.core.errors import ValidationError

NEWTON_STEPS = 20


@lru_cache(maxsize=256)
def chi2_quantile(dof: int, prob: float) -> float:
    """
    Chi-square quantile: Wilson-Hilferty cube approximation refined by Newton
    steps on the regularized lower incomplete gamma function.
    """
    if dof < 1:
        raise ValidationError(f"dof must be positive, got {dof}")
    if not 0 < prob < 1:
        raise ValidationError(f"prob must lie in (0, 1), got {prob}")
    k = float(dof)
    z = stats.norm.ppf(prob)
    x = k * (1.0 - 2.0 / (9.0 * k) + z * np.sqrt(2.0 / (9.0 * k))) ** 3
    x = max(x, 1e-8)
    for _ in range(NEWTON_STEPS):
        cdf = special.gammainc(k / 2.0, x / 2.0)
        log_pdf = (k / 2.0 - 1.0) * np.log(x) - x / 2.0 - (k / 2.0) * np.log(2.0) - special.gammaln(k / 2.0)
        step = (cdf - prob) / np.exp(log_pdf)
        x = max(x - step, 1e-8)
        if abs(step) <= 1e-12 * x:
            break
    return float(x)


def alarm_check(lam_selected_sum: float, p: int, zeta: float) -> bool:
    """True iff the statistic exceeds the (1 - zeta) chi-square quantile with p dof."""
    if not 0 < zeta < 1:
        raise ValidationError(f"zeta must lie in (0, 1), got {zeta}")
    return bool(lam_selected_sum > chi2_quantile(int(p), 1.0 - zeta))
