"""Two-sample statistics used by the phase comparison: Welch's t-test and
Cohen's d."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import stdtr

from .errors import DomainError


def student_t_cdf(x: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` >= 1 degrees of freedom."""
    if df < 1.0:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    return float(stdtr(df, x))


def welch_t_test(a, b) -> tuple[float, float, float]:
    """Welch's unequal-variance t-test.

    Returns (t, df, p) with the Welch-Satterthwaite degrees of freedom and a
    two-sided p-value. Degenerate zero-variance samples fall back to the
    pooled df, with t = 0 when the means agree and +/-inf otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DomainError("welch_t_test needs at least 2 observations per sample")
    na, nb = len(a), len(b)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    sea, seb = va / na, vb / nb
    se2 = sea + seb
    diff = a.mean() - b.mean()
    if se2 == 0.0:
        df = float(na + nb - 2)
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        t = float(diff / math.sqrt(se2))
        df = float(se2**2 / (sea**2 / (na - 1) + seb**2 / (nb - 1)))
    if math.isinf(t):
        p = 0.0
    else:
        p = 2.0 * student_t_cdf(-abs(t), max(df, 1.0))
    return t, df, p


def cohens_d(a, b) -> float:
    """Standardized mean difference using the pooled standard deviation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DomainError("cohens_d needs at least 2 observations per sample")
    na, nb = len(a), len(b)
    pooled = math.sqrt(((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2))
    diff = a.mean() - b.mean()
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return float(diff / pooled)
