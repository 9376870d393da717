import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from submax.study import CovariateSpec, MatchedSet, Survival, Unit

settings.register_profile(
    "submax", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("submax")


def make_pairs(diffs, covariates=None, names=None):
    """Matched pairs with treated outcome ``d`` and control outcome 0."""
    diffs = np.asarray(diffs, dtype=float)
    covariates = np.zeros((diffs.size, 0), dtype=int) if covariates is None else np.asarray(covariates)
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
    sets = []
    for i, (d, cov) in enumerate(zip(diffs, covariates)):
        cov = tuple(int(c) for c in cov)
        sets.append(MatchedSet(i, (Unit(f"{i}t", True, float(d), cov),
                                   Unit(f"{i}c", False, 0.0, cov))))
    return sets, CovariateSpec(names)


def make_survival_pairs(t_treated, e_treated, t_control, e_control, covariates=None):
    n = len(t_treated)
    covariates = np.zeros((n, 0), dtype=int) if covariates is None else np.asarray(covariates)
    sets = []
    for i in range(n):
        cov = tuple(int(c) for c in covariates[i])
        sets.append(MatchedSet(i, (
            Unit(f"{i}t", True, Survival(float(t_treated[i]), bool(e_treated[i])), cov),
            Unit(f"{i}c", False, Survival(float(t_control[i]), bool(e_control[i])), cov),
        )))
    names = tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
    return sets, CovariateSpec(names)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# ---------------------------------------------------------------- acceptance lines

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    def log(criterion, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{status}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
