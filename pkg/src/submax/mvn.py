"""Univariate and multivariate normal probabilities.

Rectangle probabilities of ``N_K(0, rho)`` are computed by Genz's sequential
conditioning with variable prioritisation, integrated with a randomly
shifted Richtmyer lattice.  Each estimate carries a standard error from the
spread of the independent shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from . import _kernels
from .exceptions import NumericalError, ValidationError

__all__ = [
    "ProbEstimate",
    "std_normal_cdf",
    "std_normal_quantile",
    "bvn_cdf",
    "validate_correlation",
    "mvn_rectangle",
    "mvn_upper_quadrant_below",
    "equicoordinate_quantile",
    "DEFAULT_TARGET_ERROR",
    "SWEEP_TARGET_ERROR",
]

DEFAULT_TARGET_ERROR = 5e-5
SWEEP_TARGET_ERROR = 5e-4
N_SHIFTS = 12
MAX_POINTS_PER_SHIFT = 1 << 17
QUANTILE_XTOL = 1e-6

_PSD_TOL = 1e-8
_MERGE_TOL = 1e-10
_SINGULAR_TOL = 1e-10
_OWNER_TOL = 1e-7


@dataclass(frozen=True)
class ProbEstimate:
    """A probability with its estimated Monte Carlo standard error."""

    value: float
    error: float
    samples_used: int

    def __float__(self) -> float:
        return self.value


def std_normal_cdf(x):
    """Standard normal CDF, accepting scalars or arrays."""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise ValidationError(f"normal quantile needs 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def bvn_cdf(h: float, k: float, rho: float) -> float:
    """Pr(X < h, Y < k) for a standard bivariate normal with correlation rho.

    Uses Owen's T function, so the result is deterministic to near machine
    precision.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValidationError(f"correlation must lie in [-1, 1], got {rho}")
    if np.isneginf(h) or np.isneginf(k):
        return 0.0
    if np.isposinf(h):
        return std_normal_cdf(k)
    if np.isposinf(k):
        return std_normal_cdf(h)
    if rho >= 1.0 - 1e-15:
        return std_normal_cdf(min(h, k))
    if rho <= -1.0 + 1e-15:
        return max(0.0, std_normal_cdf(h) - std_normal_cdf(-k))
    if h == 0.0 and k == 0.0:
        return 0.25 + np.arcsin(rho) / (2.0 * np.pi)
    s = np.sqrt(1.0 - rho * rho)
    # nudge an exact zero; the Owen's T argument may then be infinite, its limit
    hh = h if h != 0.0 else 1e-300 * (1.0 if k > 0 else -1.0)
    kk = k if k != 0.0 else 1e-300 * (1.0 if h > 0 else -1.0)
    with np.errstate(over="ignore", divide="ignore"):
        a_h = (kk - rho * hh) / (hh * s)
        a_k = (hh - rho * kk) / (kk * s)
    # both arguments are nonzero here; compare signs (the product can underflow)
    beta = 0.0 if (hh > 0) == (kk > 0) else 0.5
    val = (0.5 * special.ndtr(hh) + 0.5 * special.ndtr(kk)
           - special.owens_t(hh, a_h) - special.owens_t(kk, a_k) - beta)
    return float(min(1.0, max(0.0, val)))


def validate_correlation(rho) -> np.ndarray:
    """Check symmetry, unit diagonal and positive semidefiniteness."""
    r = np.atleast_2d(np.asarray(rho, dtype=float))
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValidationError(f"correlation matrix must be square, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("correlation matrix has non-finite entries")
    if not np.allclose(r, r.T, atol=1e-10):
        raise ValidationError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(r), 1.0, atol=1e-10):
        raise ValidationError("correlation matrix must have a unit diagonal")
    if r.shape[0] > 1 and np.linalg.eigvalsh(r).min() < -_PSD_TOL:
        raise NumericalError("correlation matrix is not positive semidefinite")
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


# ---------------------------------------------------------------------------
# problem reduction and variable ordering


def _reduce(lower, upper, rho):
    """Drop unconstrained coordinates and merge perfectly correlated ones.

    Returns ``(lower, upper, rho)`` or ``None`` when the rectangle is empty.
    """
    lower = lower.copy()
    upper = upper.copy()
    keep = list(range(len(lower)))
    i = 0
    while i < len(keep):
        a = keep[i]
        j = i + 1
        while j < len(keep):
            b = keep[j]
            r = rho[a, b]
            if r >= 1.0 - _MERGE_TOL:
                lower[a] = max(lower[a], lower[b])
                upper[a] = min(upper[a], upper[b])
                keep.pop(j)
            elif r <= -1.0 + _MERGE_TOL:
                lower[a] = max(lower[a], -upper[b])
                upper[a] = min(upper[a], -lower[b])
                keep.pop(j)
            else:
                j += 1
        i += 1
    idx = np.array(keep, dtype=int)
    lower, upper = lower[idx], upper[idx]
    if np.any(lower >= upper):
        return None
    active = ~(np.isneginf(lower) & np.isposinf(upper))
    idx2 = np.flatnonzero(active)
    sub = rho[np.ix_(idx[idx2], idx[idx2])]
    return lower[idx2], upper[idx2], sub


def _truncated_mean(a, b):
    pa, pb = special.ndtr(a), special.ndtr(b)
    mass = pb - pa
    if mass < 1e-300:
        if np.isfinite(a) and np.isfinite(b):
            return 0.5 * (a + b)
        return a if np.isfinite(a) else b
    return (_pdf(a) - _pdf(b)) / mass


def _pdf(x):
    if np.isinf(x):
        return 0.0
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _plan(lower, upper, rho):
    """Pivoted Cholesky with Genz-Bretz prioritisation.

    Returns ``(perm, chol, rows, ptr)``: ``rho[perm][:, perm] ~ chol chol^T``,
    with the constraint rows grouped by the latent variable that each one
    bounds (see ``_kernels.genz_integrand``).
    """
    m = len(lower)
    a = lower.copy()
    b = upper.copy()
    c = rho.copy()
    chol = np.zeros((m, m))
    perm = np.arange(m)
    y = np.zeros(m)
    rank = m
    for i in range(m):
        best, best_p = -1, np.inf
        for j in range(i, m):
            var = c[j, j] - chol[j, :i] @ chol[j, :i]
            if var <= _SINGULAR_TOL:
                continue
            sd = np.sqrt(var)
            s = chol[j, :i] @ y[:i]
            p = special.ndtr((b[j] - s) / sd) - special.ndtr((a[j] - s) / sd)
            if p < best_p:
                best, best_p = j, p
        if best < 0:
            rank = i
            break
        if best != i:
            for arr in (a, b, perm):
                arr[[i, best]] = arr[[best, i]]
            c[[i, best], :] = c[[best, i], :]
            c[:, [i, best]] = c[:, [best, i]]
            chol[[i, best], :] = chol[[best, i], :]
        var = c[i, i] - chol[i, :i] @ chol[i, :i]
        chol[i, i] = np.sqrt(var)
        for k in range(i + 1, m):
            chol[k, i] = (c[k, i] - chol[k, :i] @ chol[i, :i]) / chol[i, i]
        s = chol[i, :i] @ y[:i]
        y[i] = _truncated_mean((a[i] - s) / chol[i, i], (b[i] - s) / chol[i, i])
    chol[:, rank:] = 0.0
    owner = np.empty(m, dtype=np.int64)
    for i in range(m):
        if i < rank:
            owner[i] = i
        else:
            nz = np.flatnonzero(np.abs(chol[i, :rank]) > _OWNER_TOL)
            if nz.size == 0:
                raise NumericalError("degenerate row in correlation matrix")
            owner[i] = nz[-1]
            chol[i, owner[i] + 1:] = 0.0
    rows = np.argsort(owner, kind="stable")
    ptr = np.searchsorted(owner[rows], np.arange(rank + 1))
    return perm, chol, rows, ptr


# ---------------------------------------------------------------------------
# randomized lattice integration

_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
                    61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127,
                    131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
                    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257])


def _lattice(n, dim, shift):
    """Shifted Richtmyer lattice, periodised with the tent transform."""
    if dim == 0:
        return np.empty((n, 0))
    if dim > len(_PRIMES):
        raise ValidationError(f"dimension {dim + 1} exceeds the supported maximum")
    gen = np.sqrt(_PRIMES[:dim].astype(float))
    k = np.arange(1, n + 1, dtype=float)[:, None]
    x = np.modf(k * gen + shift)[0]
    return np.abs(2.0 * x - 1.0)


class _Integrator:
    """Fixed-ordering integrator so repeated evaluations share random numbers."""

    def __init__(self, rho, lower, upper, seed):
        self.rho = rho
        self.perm, self.chol, self.rows, self.ptr = _plan(lower, upper, rho)
        self.dim = len(self.ptr) - 2
        rng = np.random.default_rng(seed)
        self.shifts = rng.random((N_SHIFTS, max(self.dim, 1)))[:, : self.dim]
        self.n = 0
        self._points = None

    def points(self, n):
        if n != self.n:
            self._points = [_lattice(n, self.dim, s) for s in self.shifts]
            self.n = n
        return self._points

    def estimate(self, lower, upper, n) -> tuple[float, float]:
        lo, up = lower[self.perm], upper[self.perm]
        if self.dim == 0:
            w = np.zeros((1, 0))
            val = _kernels.genz_integrand(self.chol, lo, up, self.rows, self.ptr, w)[0]
            return float(val), 0.0
        means = np.array([
            _kernels.genz_integrand(self.chol, lo, up, self.rows, self.ptr, w).mean()
            for w in self.points(n)
        ])
        return float(means.mean()), float(means.std(ddof=1) / np.sqrt(len(means)))

    def adaptive(self, lower, upper, target_error, n_start=256):
        n = max(n_start, self.n)
        while True:
            val, err = self.estimate(lower, upper, n)
            if err <= target_error or n >= MAX_POINTS_PER_SHIFT:
                return val, err, n
            n = min(2 * n, MAX_POINTS_PER_SHIFT)


def _clip_prob(x):
    return float(min(1.0, max(0.0, x)))


def _bvn_rectangle(lo, up, r) -> float:
    """Two-dimensional rectangle by inclusion-exclusion on exact orthants."""
    val = (bvn_cdf(up[0], up[1], r) - bvn_cdf(lo[0], up[1], r)
           - bvn_cdf(up[0], lo[1], r) + bvn_cdf(lo[0], lo[1], r))
    return _clip_prob(val)


def mvn_rectangle(lower, upper, rho, seed: int = 0,
                  target_error: float = DEFAULT_TARGET_ERROR) -> ProbEstimate:
    """Pr(lower < X < upper) for X ~ N_K(0, rho).

    Bounds may be infinite.  Deterministic for a given seed.
    """
    rho = validate_correlation(rho)
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != upper.shape or lower.shape[0] != rho.shape[0]:
        raise ValidationError("bounds and correlation matrix dimensions disagree")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise ValidationError("bounds must not be NaN")
    if target_error <= 0:
        raise ValidationError("target_error must be positive")
    reduced = _reduce(lower, upper, rho)
    if reduced is None:
        return ProbEstimate(0.0, 0.0, 0)
    lo, up, sub = reduced
    m = len(lo)
    if m == 0:
        return ProbEstimate(1.0, 0.0, 0)
    if m == 1:
        return ProbEstimate(_clip_prob(special.ndtr(up[0]) - special.ndtr(lo[0])), 0.0, 0)
    if m == 2:
        return ProbEstimate(_bvn_rectangle(lo, up, sub[0, 1]), 0.0, 0)
    integ = _Integrator(sub, lo, up, seed)
    val, err, n = integ.adaptive(lo, up, target_error)
    if err > target_error:
        raise NumericalError(
            f"rectangle probability error {err:.2e} above target {target_error:.2e}"
        )
    return ProbEstimate(_clip_prob(val), err, n * N_SHIFTS)


def mvn_upper_quadrant_below(kappa: float, rho, seed: int = 0,
                             target_error: float = DEFAULT_TARGET_ERROR) -> ProbEstimate:
    """Pr(X_k < kappa for every k), X ~ N_K(0, rho)."""
    k = np.atleast_2d(rho).shape[0]
    return mvn_rectangle(np.full(k, -np.inf), np.full(k, float(kappa)), rho,
                         seed=seed, target_error=target_error)


def equicoordinate_quantile(rho, prob: float, seed: int = 0,
                            target_error: float = DEFAULT_TARGET_ERROR) -> float:
    """Common threshold kappa with Pr(max_k X_k < kappa) = prob.

    The search is bracketed between the single-coordinate bound
    ``Phi^-1(prob)`` and the Bonferroni bound ``Phi^-1(1 - (1 - prob)/K)``, and
    every evaluation reuses one set of lattice points so the target function
    is smooth in kappa.
    """
    rho = validate_correlation(rho)
    if not 0.0 < prob < 1.0:
        raise ValidationError(f"prob must lie in (0, 1), got {prob}")
    k = rho.shape[0]
    lo_k = std_normal_quantile(prob)
    hi_k = std_normal_quantile(1.0 - (1.0 - prob) / k)
    if k == 1 or hi_k - lo_k < QUANTILE_XTOL:
        return lo_k
    lower = np.full(k, -np.inf)
    reduced = _reduce(lower, np.full(k, hi_k), rho)
    lo_r, up_r, sub = reduced
    m = len(lo_r)
    if m == 1:
        return lo_k
    if m == 2:
        r = sub[0, 1]
        return float(optimize.brentq(lambda x: bvn_cdf(x, x, r) - prob, lo_k, hi_k,
                                     xtol=QUANTILE_XTOL))
    integ = _Integrator(sub, lo_r, up_r, seed)
    start = 0.5 * (lo_k + hi_k)
    ones = np.ones(m)
    lo_m = np.full(m, -np.inf)
    _, err, n = integ.adaptive(lo_m, start * ones, target_error)
    if err > target_error:
        raise NumericalError("could not reach the requested quadrant accuracy")

    def gap(x):
        return integ.estimate(lo_m, x * ones, n)[0] - prob

    g_lo, g_hi = gap(lo_k), gap(hi_k)
    # the bracket is exact in theory; QMC error can push an endpoint across
    while g_lo > 0:
        lo_k -= 0.05
        g_lo = gap(lo_k)
    while g_hi < 0:
        hi_k += 0.05
        g_hi = gap(hi_k)
    if g_lo == 0.0:
        return lo_k
    if g_hi == 0.0:
        return hi_k
    return float(optimize.brentq(gap, lo_k, hi_k, xtol=QUANTILE_XTOL))
