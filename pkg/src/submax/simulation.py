"""Seeded Monte Carlo power study for the balanced matched-pairs design.

Each replication draws ``I_bar`` Normal(zeta_g, 1) pair differences in every
group, computes the signed-rank statistic per group and runs three one-sided
sensitivity tests at each Gamma:

* ``submax``  - maximum deviate against the equicoordinate critical value,
* ``oracle``  - the single comparison with the largest true effect,
* ``pooled``  - the overall comparison alone.

Replication ``r`` draws from its own stream seeded by ``(seed, r)``, so any
subset of replications can be reproduced in isolation.
"""

from __future__ import annotations

import configparser
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from . import _kernels
from .bounds import GammaBounds, pair_bounds
from .exceptions import ValidationError
from .inference import DEFAULT_ALPHA, critical_value, joint_moments
from .mvn import DEFAULT_TARGET_ERROR, std_normal_quantile
from .power import FavorableAlternative, null_bounds, oracle_row, power_row

METHODS = ("submax", "oracle", "pooled")


@dataclass(frozen=True)
class SimConfig:
    L: int
    zeta0: float
    zeta1: float
    I_bar: int
    gammas: tuple = (1.0,)
    alpha: float = DEFAULT_ALPHA
    replications: int = 10_000
    seed: int = 0
    methods: tuple = METHODS
    recompute_kappa: bool = False
    batch: int = 250
    target_error: float = DEFAULT_TARGET_ERROR

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in np.atleast_1d(self.gammas)))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")
        if not self.gammas or min(self.gammas) < 1:
            raise ValidationError("gammas must be nonempty and each >= 1")
        if self.L < 0 or self.I_bar < 1:
            raise ValidationError("need L >= 0 and I_bar >= 1")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValidationError(f"unknown method(s) {sorted(bad)}; choose from {METHODS}")

    def alternative(self) -> FavorableAlternative:
        return FavorableAlternative.balanced(self.L, self.zeta0, self.zeta1, self.I_bar)


@dataclass(frozen=True)
class SimCell:
    gamma: float
    method: str
    count: int
    replications: int

    @property
    def proportion(self) -> float:
        return self.count / self.replications

    @property
    def se(self) -> float:
        p = self.proportion
        return float(np.sqrt(p * (1 - p) / self.replications))


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    cells: tuple
    runtime: float = field(compare=False)

    def cell(self, gamma: float, method: str) -> SimCell:
        for c in self.cells:
            if np.isclose(c.gamma, gamma) and c.method == method:
                return c
        raise KeyError((gamma, method))

    def count(self, gamma: float, method: str) -> int:
        return self.cell(gamma, method).count


def load_config(path) -> SimConfig:
    """Read a ``[simulation]`` section of an INI-style key = value file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValidationError(f"cannot read config file {path}")
    if "simulation" not in parser:
        raise ValidationError("config file needs a [simulation] section")
    sec = parser["simulation"]
    known = {"L", "zeta0", "zeta1", "I_bar", "gammas", "alpha", "replications", "seed",
             "methods", "recompute_kappa", "batch", "target_error"}
    lower = {k.lower(): k for k in known}
    extra = [k for k in sec if k.lower() not in lower]
    if extra:
        raise ValidationError(f"unknown config key(s): {', '.join(extra)}")
    get = {lower[k.lower()]: v for k, v in sec.items()}
    try:
        kwargs = dict(
            L=int(get["L"]), zeta0=float(get["zeta0"]), zeta1=float(get["zeta1"]),
            I_bar=int(get["I_bar"]),
        )
    except KeyError as exc:
        raise ValidationError(f"config file missing key {exc.args[0]}") from None
    if "gammas" in get:
        kwargs["gammas"] = tuple(float(x) for x in get["gammas"].replace(",", " ").split())
    for key, conv in (("alpha", float), ("replications", int), ("seed", int),
                      ("batch", int), ("target_error", float)):
        if key in get:
            kwargs[key] = conv(get[key])
    if "methods" in get:
        kwargs["methods"] = tuple(get["methods"].replace(",", " ").split())
    if "recompute_kappa" in get:
        kwargs["recompute_kappa"] = sec.getboolean(
            next(k for k in sec if k.lower() == "recompute_kappa"))
    return SimConfig(**kwargs)


def draw_differences(config: SimConfig, start: int, stop: int) -> np.ndarray:
    """Pair differences for replications ``start..stop-1``, shape (n, G, I_bar)."""
    zeta = config.alternative().zeta
    out = np.empty((stop - start, zeta.size, config.I_bar))
    for j, r in enumerate(range(start, stop)):
        rng = np.random.default_rng([config.seed, r])
        out[j] = rng.standard_normal((zeta.size, config.I_bar)) + zeta[:, None]
    return out


def _replication_moments(diffs, gamma):
    """Per-group worst-case moments from the observed ranks of one replication."""
    G = diffs.shape[0]
    mu = np.empty(G)
    nu = np.empty(G)
    for g in range(G):
        absd = np.abs(diffs[g])
        q = rankdata(absd[absd > 0])
        mu[g], nu[g] = pair_bounds(q, gamma)
    return GammaBounds(gamma, mu, nu)


def simulate(config: SimConfig) -> SimReport:
    """Count one-sided rejections per (gamma, method) over the replications."""
    t0 = time.perf_counter()
    alt = config.alternative()
    cmat = alt.comparisons()
    C = cmat.matrix
    orow = oracle_row(alt)
    z = std_normal_quantile(1.0 - config.alpha)
    fixed = []
    for g in config.gammas:
        jm = joint_moments(null_bounds(alt, g), cmat)
        kappa = critical_value(jm.rho, config.alpha, seed=config.seed,
                               target_error=config.target_error)
        fixed.append((jm, kappa))
    counts = {(g, m): 0 for g in config.gammas for m in config.methods}
    R = config.replications
    for start in range(0, R, config.batch):
        stop = min(R, start + config.batch)
        diffs = draw_differences(config, start, stop)
        n, G, I = diffs.shape
        T = _kernels.signed_rank_sums(diffs.reshape(n * G, I)).reshape(n, G)
        S = T @ C.T
        for gi, g in enumerate(config.gammas):
            if config.recompute_kappa:
                D = np.empty_like(S)
                kappas = np.empty(n)
                for j in range(n):
                    jm = joint_moments(_replication_moments(diffs[j], g), cmat)
                    D[j] = (S[j] - jm.theta) / jm.sd
                    kappas[j] = critical_value(jm.rho, config.alpha, seed=config.seed,
                                               target_error=config.target_error)
            else:
                jm, kappa = fixed[gi]
                D = (S - jm.theta) / jm.sd
                kappas = np.full(n, kappa)
            if "submax" in config.methods:
                counts[(g, "submax")] += int((D.max(axis=1) >= kappas).sum())
            if "oracle" in config.methods:
                counts[(g, "oracle")] += int((D[:, orow] >= z).sum())
            if "pooled" in config.methods:
                counts[(g, "pooled")] += int((D[:, 0] >= z).sum())
    cells = tuple(SimCell(g, m, counts[(g, m)], R) for g in config.gammas for m in config.methods)
    return SimReport(config, cells, time.perf_counter() - t0)


@dataclass(frozen=True)
class Discrepancy:
    gamma: float
    method: str
    simulated: float
    theoretical: float
    se: float
    flagged: bool

    @property
    def difference(self) -> float:
        return abs(self.simulated - self.theoretical)


def compare_to_theory(report: SimReport, theory: dict | None = None,
                      mvn_tolerance: float = 0.005) -> list:
    """Simulated vs. analytic power for every cell of ``report``.

    ``theory`` maps ``(gamma, method)`` to a power; when omitted it is computed
    from the analytic approximation.  A cell is flagged when the gap exceeds
    ``3 * (binomial SE + mvn_tolerance)``.
    """
    if not report.cells:
        raise ValidationError("simulation report has no cells")
    cfg = report.config
    if theory is None:
        theory = {}
        alt = cfg.alternative()
        for g in cfg.gammas:
            row = power_row(alt, g, cfg.alpha, cfg.seed, cfg.target_error)
            for m in cfg.methods:
                theory[(g, m)] = row[m]
    out = []
    for c in report.cells:
        key = (c.gamma, c.method)
        if key not in theory:
            raise ValidationError(f"no theoretical value for gamma={c.gamma}, method={c.method}")
        th = float(theory[key])
        se = float(np.sqrt(max(th * (1 - th), 0.0) / c.replications))
        flagged = abs(c.proportion - th) > 3 * (se + mvn_tolerance)
        out.append(Discrepancy(c.gamma, c.method, c.proportion, th, se, flagged))
    return out


def with_replications(config: SimConfig, replications: int) -> SimConfig:
    return replace(config, replications=replications)
