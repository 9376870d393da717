"""Large-sample power of sensitivity analyses in a favorable situation.

The favorable situation has a treatment effect and no unmeasured bias.  In
the balanced design every one of the ``G = 2^L`` groups holds ``I_bar``
matched pairs whose treated-minus-control differences are Normal(zeta_g, 1),
and the group statistic is Wilcoxon's signed-rank statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bounds import GammaBounds
from .exceptions import ValidationError
from .inference import DEFAULT_ALPHA, critical_value, joint_moments
from .mvn import (
    DEFAULT_TARGET_ERROR,
    bvn_cdf,
    mvn_rectangle,
    std_normal_cdf,
    std_normal_quantile,
    validate_correlation,
)
from .study import ComparisonMatrix, balanced_comparison_matrix

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class FavorableAlternative:
    """Per-group effects ``zeta`` (length 2^L) with ``I_bar`` pairs per group."""

    L: int
    zeta: np.ndarray
    I_bar: int

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float).ravel()
        if self.L < 0:
            raise ValidationError("L must be nonnegative")
        if zeta.size != 2 ** self.L:
            raise ValidationError(f"need {2 ** self.L} group effects, got {zeta.size}")
        if not np.all(np.isfinite(zeta)):
            raise ValidationError("effects must be finite")
        if self.I_bar < 1:
            raise ValidationError("I_bar must be at least 1")
        object.__setattr__(self, "zeta", zeta)

    @classmethod
    def balanced(cls, L: int, zeta0: float, zeta1: float, I_bar: int) -> "FavorableAlternative":
        """Only the first covariate modifies the effect: zeta0 at level 0, zeta1 at level 1."""
        if L < 1:
            return cls(L, np.array([zeta0]), I_bar)
        G = 2 ** L
        first = np.array([(g >> (L - 1)) & 1 for g in range(G)])
        return cls(L, np.where(first == 0, zeta0, zeta1), I_bar)

    @property
    def G(self) -> int:
        return 2 ** self.L

    def comparisons(self) -> ComparisonMatrix:
        return balanced_comparison_matrix(self.L)


@dataclass(frozen=True)
class AlternativeMoments:
    mu_star: np.ndarray
    nu_star: np.ndarray
    theta_star: np.ndarray
    sd_star: np.ndarray
    rho_star: np.ndarray


def signed_rank_probabilities(zeta: float) -> tuple[float, float, float, float]:
    """p1..p4 for Normal(zeta, 1) pair differences Y.

    p1 = P(Y1 > 0), p2 = P(Y1 + Y2 > 0), p3 = P(Y1 > 0, Y1 + Y2 > 0),
    p4 = P(Y1 + Y2 > 0, Y1 + Y3 > 0).  The last two are bivariate normal
    orthants with correlations 1/sqrt(2) and 1/2.
    """
    p1 = std_normal_cdf(zeta)
    p2 = std_normal_cdf(zeta * _SQRT2)
    p3 = bvn_cdf(zeta, zeta * _SQRT2, 1.0 / _SQRT2)
    p4 = bvn_cdf(zeta * _SQRT2, zeta * _SQRT2, 0.5)
    return p1, p2, p3, p4


def wilcoxon_alternative_moments(zeta: float, I: int) -> tuple[float, float]:
    """Mean and variance of the signed-rank statistic of I iid Normal(zeta, 1) differences.

    Uses the Walsh-average form ``T = sum_{i <= j} 1(Y_i + Y_j > 0)``.
    """
    if I < 1:
        raise ValidationError("I must be at least 1")
    p1, p2, p3, p4 = signed_rank_probabilities(zeta)
    n = float(I)
    mean = n * p1 + n * (n - 1) / 2 * p2
    var = (n * p1 * (1 - p1)
           + n * (n - 1) / 2 * p2 * (1 - p2)
           + 2 * n * (n - 1) * (p3 - p1 * p2)
           + n * (n - 1) * (n - 2) * (p4 - p2 * p2))
    return float(mean), float(max(var, 0.0))


def null_signed_rank_bounds(I: int, gamma: float) -> tuple[float, float]:
    """Worst-case moments for untied ranks 1..I at ``gamma``."""
    p = gamma / (1.0 + gamma)
    n = float(I)
    return p * n * (n + 1) / 2, p * (1 - p) * n * (n + 1) * (2 * n + 1) / 6


def null_bounds(alt: FavorableAlternative, gamma: float) -> GammaBounds:
    if gamma < 1:
        raise ValidationError("gamma must be >= 1")
    mu, nu = null_signed_rank_bounds(alt.I_bar, gamma)
    return GammaBounds(float(gamma), np.full(alt.G, mu), np.full(alt.G, nu))


def alternative_moments(alt: FavorableAlternative) -> AlternativeMoments:
    C = alt.comparisons().matrix
    mom = np.array([wilcoxon_alternative_moments(z, alt.I_bar) for z in alt.zeta])
    mu_star, nu_star = mom[:, 0], mom[:, 1]
    theta = C @ mu_star
    sigma = (C * nu_star) @ C.T
    sd = np.sqrt(np.diag(sigma))
    rho = sigma / np.outer(sd, sd)
    np.fill_diagonal(rho, 1.0)
    return AlternativeMoments(mu_star, nu_star, theta, sd, rho)


def oracle_row(alt: FavorableAlternative) -> int:
    """Comparison with the largest average effect; ties go to the larger row."""
    C = alt.comparisons().matrix
    mean_zeta = (C @ alt.zeta) / C.sum(axis=1)
    best = -np.inf, -np.inf
    row = 0
    for k in range(C.shape[0]):
        cand = (round(float(mean_zeta[k]), 12), float(C[k].sum()))
        if cand > best:
            best, row = cand, k
    return row


def power_submax(alt: FavorableAlternative, gamma: float, alpha: float = DEFAULT_ALPHA,
                 seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR) -> float:
    """Approximate power of the maximum-deviate sensitivity analysis."""
    cmat = alt.comparisons()
    jm = joint_moments(null_bounds(alt, gamma), cmat)
    kappa = critical_value(jm.rho, alpha, seed=seed, target_error=target_error)
    am = alternative_moments(alt)
    upper = (jm.theta - am.theta_star + kappa * jm.sd) / am.sd_star
    if cmat.K == 1:
        return float(std_normal_cdf(-upper[0]))
    prob = mvn_rectangle(np.full(cmat.K, -np.inf), upper, validate_correlation(am.rho_star),
                         seed=seed, target_error=target_error)
    return float(min(1.0, max(0.0, 1.0 - prob.value)))


def power_single(alt: FavorableAlternative, k: int, gamma: float,
                 alpha: float = DEFAULT_ALPHA) -> float:
    """Approximate power of the test that uses comparison ``k`` alone."""
    cmat = alt.comparisons()
    if not 0 <= k < cmat.K:
        raise ValidationError(f"comparison index {k} out of range for K={cmat.K}")
    jm = joint_moments(null_bounds(alt, gamma), cmat)
    am = alternative_moments(alt)
    z = std_normal_quantile(1.0 - alpha)
    thr = (jm.theta[k] - am.theta_star[k] + z * jm.sd[k]) / am.sd_star[k]
    return float(std_normal_cdf(-thr))


def power_oracle(alt: FavorableAlternative, gamma: float, alpha: float = DEFAULT_ALPHA) -> float:
    return power_single(alt, oracle_row(alt), gamma, alpha)


def design_sensitivity(weights, zeta) -> float:
    """Limiting Gamma for a comparison summing signed-rank statistics.

    With ``qbar`` the weighted average of ``P(Y1 + Y2 > 0)`` over the groups,
    the worst-case mean share ``Gamma / (1 + Gamma)`` meets ``qbar`` at
    ``qbar / (1 - qbar)``.  Returns ``inf`` when ``qbar`` reaches 1.
    """
    c = np.asarray(weights, dtype=float).ravel()
    z = np.broadcast_to(np.asarray(zeta, dtype=float), c.shape)
    if np.any(c < 0) or not c.any():
        raise ValidationError("weights must be nonnegative and not all zero")
    p2 = std_normal_cdf(z * _SQRT2)
    qbar = float((c * p2).sum() / c.sum())
    if qbar >= 1.0:
        return math.inf
    return qbar / (1.0 - qbar)


def design_sensitivity_numeric(weights, zeta, I: int) -> float:
    """Gamma solving sum c mu*_g = sum c mu_Gamma,g at finite ``I`` pairs per group."""
    c = np.asarray(weights, dtype=float).ravel()
    z = np.broadcast_to(np.asarray(zeta, dtype=float), c.shape)
    target = sum(ci * wilcoxon_alternative_moments(zi, I)[0] for ci, zi in zip(c, z) if ci)
    ranks_total = I * (I + 1) / 2 * c.sum()

    def gap(g):
        return g / (1 + g) * ranks_total - target

    if gap(1.0) >= 0:
        return 1.0
    hi = 2.0
    while gap(hi) < 0:
        hi *= 2
        if hi > 1e12:
            return math.inf
    return float(optimize.brentq(gap, 1.0, hi, xtol=1e-12))


def amplify_check(delta: float, lam: float) -> float:
    """Gamma implied by a (Delta, Lambda) pair: (Delta Lambda + 1) / (Delta + Lambda)."""
    if delta < 1 or lam < 1:
        raise ValidationError("Delta and Lambda must be at least 1")
    return (delta * lam + 1.0) / (delta + lam)


def amplify(gamma: float, deltas=None) -> np.ndarray:
    """Lambda values pairing with each Delta > gamma to give ``gamma``.

    Returns an array of shape (n, 2) holding (Delta, Lambda) rows.
    """
    if gamma < 1:
        raise ValidationError("gamma must be >= 1")
    if deltas is None:
        deltas = gamma + np.array([0.25, 0.5, 1.0, 2.0, 4.0, 8.0]) * max(gamma - 1.0, 0.25)
    d = np.atleast_1d(np.asarray(deltas, dtype=float))
    if np.any(d <= gamma):
        raise ValidationError(f"every Delta must exceed gamma={gamma}")
    lam = (d * gamma - 1.0) / (d - gamma)
    return np.column_stack([d, lam])


def power_row(alt: FavorableAlternative, gamma: float, alpha: float = DEFAULT_ALPHA,
              seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR) -> dict:
    """Submax, oracle and overall-statistic power for one table cell."""
    return {
        "submax": power_submax(alt, gamma, alpha, seed, target_error),
        "oracle": power_oracle(alt, gamma, alpha),
        "pooled": power_single(alt, 0, gamma, alpha),
    }
