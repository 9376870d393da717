"""Worst-case moments of group statistics under the Gamma sensitivity model.

Within one matched set the treatment probabilities may differ by at most a
factor of Gamma in odds.  For each set, the expectation of the treated score
is maximised by giving odds Gamma to the ``a`` largest scores and odds 1 to
the rest, for some cut ``a``; among maximising cuts the largest variance is
kept.  Group moments are sums over independent sets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, ValidationError
from .mvn import std_normal_cdf
from .scoring import ScoreSet

# relative tolerance for treating two candidate means as tied
_MEAN_TIE_RTOL = 1e-12
REGULARITY_SHARE = 0.5


@dataclass(frozen=True)
class GammaBounds:
    gamma: float
    mu: np.ndarray
    nu: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return np.diag(self.nu)


def _check_gamma(gamma):
    if not np.isfinite(gamma) or gamma < 1.0:
        raise ValidationError(f"gamma must be a finite number >= 1, got {gamma!r}")


def pair_bounds(pair_scores, gamma: float) -> tuple[float, float]:
    """Worst-case mean and variance of a signed-rank-type statistic.

    ``pair_scores`` holds the nonnegative score of each pair (the partner
    scores 0).  With ``p = gamma / (1 + gamma)`` the bounds are
    ``p * sum(q)`` and ``p * (1 - p) * sum(q**2)``.
    """
    _check_gamma(gamma)
    q = np.asarray(pair_scores, dtype=float)
    if np.any(q < 0):
        raise ValidationError("pair scores must be nonnegative")
    p = gamma / (1.0 + gamma)
    return float(p * q.sum()), float(p * (1.0 - p) * (q * q).sum())


def set_bounds_separable(set_scores, gamma: float) -> tuple[float, float]:
    """Worst-case (mean, variance) of the treated unit's score in one set.

    Parameters
    ----------
    set_scores : array_like
        Scores of the n >= 2 units in the set.
    gamma : float
        Sensitivity parameter, at least 1.

    Returns
    -------
    (mu, sigma2) : tuple of float
        Maximum expectation, and the maximum variance among the cuts that
        attain it (ties resolved toward fewer units with odds gamma).
    """
    _check_gamma(gamma)
    q = np.sort(np.asarray(set_scores, dtype=float).ravel())[::-1]
    n = q.size
    if n < 2:
        raise ValidationError("a matched set needs at least two units")
    best_mu, best_var = -np.inf, -np.inf
    tol = _MEAN_TIE_RTOL * max(1.0, float(np.abs(q).max()))
    for a in range(1, n):
        w = np.ones(n)
        w[:a] = gamma
        p = w / w.sum()
        mu = float(p @ q)
        var = float(p @ (q - mu) ** 2)
        if mu > best_mu + tol:
            best_mu, best_var = mu, var
        elif mu >= best_mu - tol and var > best_var:
            best_mu, best_var = max(best_mu, mu), var
    return best_mu, max(best_var, 0.0)


def _pair_moments(pairs: np.ndarray, gamma: float):
    hi = pairs.max(axis=1)
    lo = pairs.min(axis=1)
    span = hi - lo
    p = gamma / (1.0 + gamma)
    return float((lo + p * span).sum()), float(p * (1.0 - p) * (span * span).sum())


def _warn_if_dominated(ranges, g):
    total = ranges.sum()
    if ranges.size > 1 and total > 0 and ranges.max() > REGULARITY_SHARE * total:
        warnings.warn(
            f"group {g}: one matched set carries more than half of the score range; "
            "the normal approximation may be poor",
            stacklevel=3,
        )


def group_bounds(scores: ScoreSet, gamma: float) -> GammaBounds:
    """Worst-case (mu, nu) for every group statistic at ``gamma``."""
    _check_gamma(gamma)
    G = len(scores.groups)
    mu = np.zeros(G)
    nu = np.zeros(G)
    for g, gs in enumerate(scores.groups):
        pairs = gs.pair_array()
        if pairs is not None:
            mu[g], nu[g] = _pair_moments(pairs, gamma)
            _warn_if_dominated(np.ptp(pairs, axis=1), g)
            continue
        for q in gs.scores:
            m, v = set_bounds_separable(q, gamma)
            mu[g] += m
            nu[g] += v
        _warn_if_dominated(np.array([np.ptp(q) for q in gs.scores]), g)
    return GammaBounds(float(gamma), mu, nu)


def pvalue_upper_bound(T: float, mu_total: float, nu_total: float, *, with_flag: bool = False):
    """Normal-approximation upper bound on the one-sided P-value.

    When ``T < mu_total`` the bound exceeds 0.5 and is returned anyway; pass
    ``with_flag=True`` to also get whether T lies in the rejection regime.
    """
    if nu_total < 0:
        raise ValidationError("variance must be nonnegative")
    if nu_total == 0:
        if T != mu_total:
            raise NumericalError("degenerate variance: statistic differs from its bound")
        p = 0.5
    else:
        p = float(std_normal_cdf(-(T - mu_total) / np.sqrt(nu_total)))
    if with_flag:
        return p, bool(T >= mu_total)
    return p
