"""Hot numeric loops, with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``SUBMAX_DISABLE_NUMBA`` is
unset (or set to ``0``/``false``).  Both paths are always importable so tests
and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy import special
from scipy.stats import rankdata

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None


def _env_disabled() -> bool:
    flag = os.environ.get("SUBMAX_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def _maybe_njit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


# ---------------------------------------------------------------------------
# scalar normal helpers (numba-compatible)

_SQRT1_2 = 0.7071067811865476


@_maybe_njit
def _phi_cdf(x):
    return 0.5 * math.erfc(-x * _SQRT1_2)


@_maybe_njit
def _phi_inv(p):
    # Wichura (1988) AS241, about 1e-16 relative accuracy.
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


# ---------------------------------------------------------------------------
# Genz sequential-conditioning integrand
#
# chol   : (m, m) lower-triangular factor of the permuted correlation matrix,
#          X = chol @ Y with Y iid standard normal; only the first ``rank``
#          columns are used.
# lower, upper : (m,) bounds on X, may be +-inf.
# rows, ptr    : constraint rows grouped by the latent variable they bound;
#          rows[ptr[r]:ptr[r + 1]] are the rows whose last nonzero column is r.
#          A deterministic (singular) row thus tightens the interval of the
#          last latent variable it depends on.
# w      : (n, rank - 1) uniform points in [0, 1).
# Returns the integrand value for each of the n points.


def _genz_numpy(chol, lower, upper, rows, ptr, w):
    n = w.shape[0]
    rank = ptr.shape[0] - 1
    y = np.zeros((n, rank))
    f = np.ones(n)
    for r in range(rank):
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        for t in range(ptr[r], ptr[r + 1]):
            i = rows[t]
            s = y[:, :r] @ chol[i, :r]
            c = chol[i, r]
            with np.errstate(invalid="ignore"):
                x1 = (lower[i] - s) / c
                x2 = (upper[i] - s) / c
            if c > 0:
                lo = np.maximum(lo, x1)
                hi = np.minimum(hi, x2)
            else:
                lo = np.maximum(lo, x2)
                hi = np.minimum(hi, x1)
        d = special.ndtr(lo)
        e = special.ndtr(hi)
        f = f * np.maximum(e - d, 0.0)
        if r < rank - 1:
            u = d + w[:, r] * (e - d)
            y[:, r] = special.ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    return f


def _genz_python(chol, lower, upper, rows, ptr, w):
    n = w.shape[0]
    rank = ptr.shape[0] - 1
    out = np.empty(n)
    y = np.zeros(rank)
    for k in range(n):
        f = 1.0
        for r in range(rank):
            lo = -np.inf
            hi = np.inf
            for t in range(ptr[r], ptr[r + 1]):
                i = rows[t]
                s = 0.0
                for j in range(r):
                    s += chol[i, j] * y[j]
                c = chol[i, r]
                x1 = (lower[i] - s) / c
                x2 = (upper[i] - s) / c
                if c > 0.0:
                    if x1 > lo:
                        lo = x1
                    if x2 < hi:
                        hi = x2
                else:
                    if x2 > lo:
                        lo = x2
                    if x1 < hi:
                        hi = x1
            if lo >= hi:
                f = 0.0
                break
            d = _phi_cdf(lo)
            e = _phi_cdf(hi)
            f *= e - d
            if f == 0.0:
                break
            if r < rank - 1:
                u = d + w[k, r] * (e - d)
                if u < 1e-300:
                    u = 1e-300
                elif u > 1.0 - 1e-16:
                    u = 1.0 - 1e-16
                y[r] = _phi_inv(u)
        out[k] = f
    return out


_genz_numba = _maybe_njit(_genz_python)


def genz_integrand(chol, lower, upper, rows, ptr, w, use_numba=None):
    """Evaluate the sequential-conditioning integrand at ``w``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    chol = np.ascontiguousarray(chol, dtype=np.float64)
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    ptr = np.ascontiguousarray(ptr, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if use_numba and HAVE_NUMBA:
        return _genz_numba(chol, lower, upper, rows, ptr, w)
    return _genz_numpy(chol, lower, upper, rows, ptr, w)


# ---------------------------------------------------------------------------
# Signed-rank sums over a batch of groups of pair differences
#
# diffs : (r, n) pair differences, one row per group replicate.
# Returns (r,) Wilcoxon signed-rank statistics: sum of the average ranks of
# |diff| (nonzero only) over the positive differences.


def _signed_rank_numpy(diffs):
    diffs = np.asarray(diffs, dtype=np.float64)
    absd = np.abs(diffs)
    nonzero = absd > 0
    # zero differences are ranked below everything else and then discarded
    ranks = rankdata(np.where(nonzero, absd, -1.0), axis=-1)
    nzero = (~nonzero).sum(axis=-1, keepdims=True)
    ranks = ranks - nzero
    return np.where(diffs > 0, ranks, 0.0).sum(axis=-1)


def _signed_rank_python(diffs):
    r, n = diffs.shape
    out = np.zeros(r)
    for row in range(r):
        absd = np.abs(diffs[row])
        order = np.argsort(absd)
        k = 0
        while k < n and absd[order[k]] == 0.0:
            k += 1
        nz = k
        total = 0.0
        while k < n:
            j = k
            while j + 1 < n and absd[order[j + 1]] == absd[order[k]]:
                j += 1
            rank = 0.5 * (k + j) + 1.0 - nz
            for t in range(k, j + 1):
                if diffs[row, order[t]] > 0.0:
                    total += rank
            k = j + 1
        out[row] = total
    return out


_signed_rank_numba = _maybe_njit(_signed_rank_python)


def signed_rank_sums(diffs, use_numba=None):
    """Signed-rank statistic for each row of ``diffs``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    diffs = np.ascontiguousarray(np.atleast_2d(diffs), dtype=np.float64)
    if use_numba and HAVE_NUMBA:
        return _signed_rank_numba(diffs)
    return _signed_rank_numpy(diffs)
