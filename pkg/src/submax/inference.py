"""The maximum-deviate test over the overall and subgroup comparisons.

Each comparison k adds up the group statistics it selects,
``S_k = sum_g c_gk T_g``.  Under the worst-case treatment assignment at a
given Gamma the standardized deviates ``D_k = (S_k - theta_k) / sigma_k`` are
jointly normal with correlation ``rho``.  The test rejects when their maximum
reaches the equicoordinate critical value of that normal.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .bounds import GammaBounds, group_bounds
from .exceptions import NumericalError, ValidationError
from .mvn import (
    DEFAULT_TARGET_ERROR,
    equicoordinate_quantile,
    mvn_upper_quadrant_below,
    std_normal_cdf,
    std_normal_quantile,
)
from .scoring import GroupStatistics, ScoreSet, group_statistics, score_study
from .study import (
    ComparisonMatrix,
    CovariateSpec,
    GroupedStudy,
    MatchedSet,
    build_comparison_matrix,
    group_study,
)

DEFAULT_ALPHA = 0.05


def default_gamma_grid() -> np.ndarray:
    """1.00, 1.05, ..., 3.00."""
    return np.round(np.arange(1.0, 3.0 + 1e-9, 0.05), 2)


@dataclass(frozen=True)
class ScoredStudy:
    """A grouped, scored study ready for testing."""

    grouped: GroupedStudy
    comparisons: ComparisonMatrix
    scores: ScoreSet
    stats: GroupStatistics

    @classmethod
    def from_sets(cls, sets: Sequence[MatchedSet], spec: CovariateSpec,
                  method: str | None = None) -> "ScoredStudy":
        grouped = group_study(sets, spec)
        cmat = build_comparison_matrix(grouped)
        scores = score_study(grouped, method)
        return cls(grouped, cmat, scores, group_statistics(scores, grouped))

    def negated(self) -> "ScoredStudy":
        """The same study scored in the opposite direction."""
        scores = self.scores.negated()
        return ScoredStudy(self.grouped, self.comparisons, scores,
                           group_statistics(scores, self.grouped))

    @property
    def labels(self) -> tuple:
        return self.comparisons.labels

    def sample_sizes(self) -> np.ndarray:
        return self.comparisons.sample_sizes(self.grouped.group_sizes())


@dataclass(frozen=True)
class JointMoments:
    theta: np.ndarray
    sigma: np.ndarray
    sd: np.ndarray
    rho: np.ndarray


@dataclass(frozen=True)
class SubmaxResult:
    gamma: float
    alpha: float
    labels: tuple
    sample_sizes: np.ndarray
    S: np.ndarray
    theta: np.ndarray
    sd: np.ndarray
    D: np.ndarray
    d_max: float
    kappa: float
    p_value: float
    p_error: float
    rho: np.ndarray = field(repr=False)

    @property
    def exceeds(self) -> np.ndarray:
        """Per-comparison flag D_k >= kappa."""
        return self.D >= self.kappa

    @property
    def reject(self) -> bool:
        return bool(self.d_max >= self.kappa)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.D))


def comparison_statistics(stats, cmat: ComparisonMatrix) -> np.ndarray:
    """S = C T."""
    T = stats.T if isinstance(stats, GroupStatistics) else np.asarray(stats, dtype=float)
    if T.shape != (cmat.G,):
        raise ValidationError(f"{T.shape[0]} group statistics for {cmat.G} comparison columns")
    return cmat.matrix @ T


def joint_moments(bounds: GammaBounds, cmat: ComparisonMatrix,
                  allow_degenerate: bool = False) -> JointMoments:
    """theta = C mu, Sigma = C V C^T and the implied correlation matrix.

    Comparisons with zero variance raise unless ``allow_degenerate``; then
    they get ``sd = 0`` and an identity row in ``rho``.
    """
    mu, nu = np.asarray(bounds.mu), np.asarray(bounds.nu)
    if mu.shape != (cmat.G,) or nu.shape != (cmat.G,):
        raise ValidationError("bounds and comparison matrix have different group counts")
    if np.any(nu < 0):
        raise ValidationError("group variances must be nonnegative")
    C = cmat.matrix
    theta = C @ mu
    sigma = (C * nu) @ C.T
    var = np.diag(sigma)
    degenerate = ~(var > 0)
    if degenerate.any() and not allow_degenerate:
        names = [cmat.labels[k] for k in np.flatnonzero(degenerate)]
        raise NumericalError(f"comparison(s) with zero variance: {', '.join(names)}")
    sd = np.sqrt(np.where(degenerate, 0.0, var))
    scale = np.where(degenerate, 1.0, sd)
    rho = sigma / np.outer(scale, scale)
    rho[degenerate, :] = 0.0
    rho[:, degenerate] = 0.0
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    return JointMoments(theta, sigma, sd, rho)


def critical_value(rho, alpha: float, seed: int = 0,
                   target_error: float = DEFAULT_TARGET_ERROR) -> float:
    """kappa with Pr(max_k D_k < kappa) = 1 - alpha under N(0, rho)."""
    _check_alpha(alpha)
    rho = np.atleast_2d(rho)
    if rho.shape[0] == 1:
        return std_normal_quantile(1.0 - alpha)
    return equicoordinate_quantile(rho, 1.0 - alpha, seed=seed, target_error=target_error)


def max_pvalue(d_max: float, rho, seed: int = 0,
               target_error: float = DEFAULT_TARGET_ERROR) -> tuple[float, float]:
    """Pr(max_k D_k >= d_max) under N(0, rho), with its standard error."""
    rho = np.atleast_2d(rho)
    if rho.shape[0] == 1:
        return float(std_normal_cdf(-d_max)), 0.0
    est = mvn_upper_quadrant_below(d_max, rho, seed=seed, target_error=target_error)
    return float(min(1.0, max(0.0, 1.0 - est.value))), est.error


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")


def submax_test(study: ScoredStudy, gamma: float, alpha: float = DEFAULT_ALPHA,
                seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR) -> SubmaxResult:
    """Worst-case maximum-deviate test at sensitivity parameter ``gamma``."""
    _check_alpha(alpha)
    bounds = group_bounds(study.scores, gamma)
    jm = joint_moments(bounds, study.comparisons, allow_degenerate=True)
    S = comparison_statistics(study.stats, study.comparisons)
    # a zero-variance comparison whose statistic sits at its bound has deviate 0
    live = jm.sd > 0
    dead = np.flatnonzero(~live)
    off = [study.labels[k] for k in dead if not np.isclose(S[k], jm.theta[k], rtol=1e-12, atol=1e-9)]
    if off:
        raise NumericalError(f"zero-variance comparison(s) away from their bound: {', '.join(off)}")
    D = np.zeros(len(S))
    D[live] = (S[live] - jm.theta[live]) / jm.sd[live]
    d_max = float(D.max())
    if live.any():
        sub = jm.rho[np.ix_(live, live)]
        kappa = critical_value(sub, alpha, seed=seed, target_error=target_error)
        p, p_err = max_pvalue(d_max, sub, seed=seed, target_error=target_error)
    else:
        kappa = std_normal_quantile(1.0 - alpha)
        p, p_err = 0.5, 0.0
    return SubmaxResult(
        gamma=float(gamma), alpha=float(alpha), labels=study.labels,
        sample_sizes=study.sample_sizes(), S=S, theta=jm.theta, sd=jm.sd, D=D,
        d_max=d_max, kappa=float(kappa), p_value=p, p_error=p_err, rho=jm.rho,
    )


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    changepoint: float | None
    next_gamma: float | None

    @property
    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.rows])


def _changepoint(rows):
    """Largest gamma with a rejection, and the next row's gamma."""
    idx = [i for i, r in enumerate(rows) if r.reject]
    if not idx:
        return None, (rows[0].gamma if rows else None)
    i = idx[-1]
    nxt = rows[i + 1].gamma if i + 1 < len(rows) else None
    return rows[i].gamma, nxt


def sensitivity_sweep(study: ScoredStudy, gamma_grid=None, alpha: float = DEFAULT_ALPHA,
                      seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR,
                      bisect: bool = False, resolution: float = 0.01) -> SweepResult:
    """Run the test along a grid of gammas and report where rejection stops.

    With ``bisect=True`` the interval between the last rejecting grid point
    and its successor is refined by bisection on a ``resolution`` lattice; the
    refined rows are merged into the table.
    """
    grid = default_gamma_grid() if gamma_grid is None else np.asarray(gamma_grid, dtype=float)
    if grid.size == 0:
        raise ValidationError("gamma grid is empty")
    if np.any(grid < 1.0) or np.any(np.diff(grid) <= 0):
        raise ValidationError("gamma grid must be increasing with every value >= 1")
    cache = {}

    def run(g):
        g = float(g)
        if g not in cache:
            cache[g] = submax_test(study, g, alpha, seed, target_error)
        return cache[g]

    rows = [run(g) for g in grid]
    lo, hi = _changepoint(rows)
    if bisect and lo is not None and hi is not None:
        a = int(round(lo / resolution))
        b = int(round(hi / resolution))
        while b - a > 1:
            mid = (a + b) // 2
            if run(round(mid * resolution, 10)).reject:
                a = mid
            else:
                b = mid
        rows = [cache[g] for g in sorted(cache)]
        lo, hi = round(a * resolution, 10), round(b * resolution, 10)
    return SweepResult(tuple(rows), lo, hi)


@dataclass(frozen=True)
class TwoSidedResult:
    positive: SubmaxResult
    negative: SubmaxResult

    @property
    def reject(self) -> bool:
        return self.positive.reject or self.negative.reject

    def directions(self) -> list:
        """Per comparison: '+', '-', '+/-' or '' for no rejection."""
        out = []
        for up, down in zip(self.positive.exceeds, self.negative.exceeds):
            out.append({(True, False): "+", (False, True): "-",
                        (True, True): "+/-"}.get((bool(up), bool(down)), ""))
        return out


def two_sided_test(study: ScoredStudy, gamma: float, alpha: float = DEFAULT_ALPHA,
                   seed: int = 0, target_error: float = DEFAULT_TARGET_ERROR) -> TwoSidedResult:
    """The one-sided test run in both directions at level alpha / 2 each."""
    _check_alpha(alpha)
    half = alpha / 2.0
    pos = submax_test(study, gamma, half, seed, target_error)
    neg = submax_test(study.negated(), gamma, half, seed, target_error)
    return TwoSidedResult(pos, neg)


def single_statistic_bound(study: ScoredStudy, gamma: float) -> tuple[float, float]:
    """Deviate and P-value bound for the overall statistic alone."""
    bounds = group_bounds(study.scores, gamma)
    T = study.stats.total
    mu, nu = float(bounds.mu.sum()), float(bounds.nu.sum())
    if nu <= 0:
        raise NumericalError("overall statistic has zero variance")
    dev = (T - mu) / math.sqrt(nu)
    return dev, float(std_normal_cdf(-dev))
