"""Closed testing over the K comparison hypotheses.

The intersection hypothesis for a subset I of comparisons is tested with
``max_{k in I} D_k`` against the equicoordinate critical value of the
``|I|``-dimensional principal submatrix of rho.  A hypothesis is rejected by
the closed procedure when every superset's local test rejects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .inference import DEFAULT_ALPHA, ScoredStudy, critical_value, submax_test
from .mvn import DEFAULT_TARGET_ERROR, validate_correlation

MAX_K = 20


@dataclass(frozen=True)
class ClosedTestResult:
    labels: tuple
    subsets: tuple          # index tuples, sorted by size then lexicographically
    d: np.ndarray           # max deviate within each subset
    kappa: np.ndarray       # critical value for each subset
    local_reject: np.ndarray
    closed_reject: np.ndarray
    alpha: float

    @property
    def K(self) -> int:
        return len(self.labels)

    def singleton_rejections(self) -> np.ndarray:
        """closed_reject for each single comparison, in comparison order."""
        out = np.zeros(self.K, dtype=bool)
        for s, flag in zip(self.subsets, self.closed_reject):
            if len(s) == 1:
                out[s[0]] = flag
        return out

    def lookup(self, subset) -> int:
        return self.subsets.index(tuple(sorted(subset)))


def _all_subsets(K):
    subsets = []
    for mask in range(1, 1 << K):
        subsets.append(tuple(k for k in range(K) if mask >> k & 1))
    subsets.sort(key=lambda s: (len(s), s))
    return subsets


def subset_critical_values(rho, alpha: float = DEFAULT_ALPHA, seed: int = 0,
                           target_error: float = DEFAULT_TARGET_ERROR) -> dict:
    """Critical value for every nonempty subset of comparisons.

    Identical principal submatrices are solved once.
    """
    rho = validate_correlation(rho)
    K = rho.shape[0]
    if K > MAX_K:
        raise ValidationError(f"closed testing enumerates 2^K subsets; K={K} exceeds {MAX_K}")
    memo = {}
    out = {}
    for s in _all_subsets(K):
        sub = rho[np.ix_(s, s)]
        token = np.round(sub, 12).tobytes()
        if token not in memo:
            memo[token] = critical_value(sub, alpha, seed=seed, target_error=target_error)
        out[s] = memo[token]
    return out


def closed_test(deviates, rho, alpha: float = DEFAULT_ALPHA, seed: int = 0,
                target_error: float = DEFAULT_TARGET_ERROR, labels=None,
                kappas: dict | None = None) -> ClosedTestResult:
    """Closed testing of all subset hypotheses from one vector of deviates.

    ``kappas`` may carry the output of ``subset_critical_values`` for the
    same ``rho`` and ``alpha``, to reuse it across deviate vectors.
    """
    D = np.asarray(deviates, dtype=float).ravel()
    rho = validate_correlation(rho)
    K = D.size
    if rho.shape != (K, K):
        raise ValidationError("deviates and correlation matrix dimensions disagree")
    labels = tuple(labels) if labels is not None else tuple(str(k + 1) for k in range(K))
    if kappas is None:
        kappas = subset_critical_values(rho, alpha, seed, target_error)
    subsets = tuple(_all_subsets(K))
    d = np.array([D[list(s)].max() for s in subsets])
    kap = np.array([kappas[s] for s in subsets])
    local = d >= kap

    by_mask = {}
    for s, flag in zip(subsets, local):
        by_mask[sum(1 << k for k in s)] = bool(flag)
    closed_mask = {}
    full = (1 << K) - 1
    for mask in range(full, 0, -1):
        ok = by_mask[mask]
        if ok:
            for k in range(K):
                if not mask >> k & 1 and not closed_mask[mask | (1 << k)]:
                    ok = False
                    break
        closed_mask[mask] = ok
    closed = np.array([closed_mask[sum(1 << k for k in s)] for s in subsets])
    return ClosedTestResult(labels, subsets, d, kap, local, closed, float(alpha))


def closed_test_study(study: ScoredStudy, gamma: float, alpha: float = DEFAULT_ALPHA,
                      seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR):
    """Run the maximum-deviate test at ``gamma`` and close it over subsets."""
    res = submax_test(study, gamma, alpha, seed, target_error)
    return res, closed_test(res.D, res.rho, alpha, seed, target_error, labels=res.labels)
