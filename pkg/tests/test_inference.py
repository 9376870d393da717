import numpy as np
import pytest

from submax.bounds import GammaBounds
from submax.exceptions import NumericalError, ValidationError
from submax.inference import (
    ScoredStudy,
    critical_value,
    default_gamma_grid,
    joint_moments,
    max_pvalue,
    sensitivity_sweep,
    single_statistic_bound,
    submax_test,
    two_sided_test,
)
from submax.mvn import std_normal_quantile
from submax.study import balanced_comparison_matrix

from conftest import make_pairs

pytestmark = pytest.mark.filterwarnings("ignore:signed-rank statistics")


def _study(rng, n=200, effect=(0.5, 0.5), L=2, zero=False):
    cov = rng.integers(0, 2, (n, L))
    zeta = np.where(cov[:, 0] == 1, effect[1], effect[0]) if L else np.full(n, effect[0])
    d = np.zeros(n) if zero else rng.normal(zeta)
    sets, spec = make_pairs(d, cov if L else None)
    return ScoredStudy.from_sets(sets, spec)


def test_balanced_correlations_l3():
    cm = balanced_comparison_matrix(3)
    b = GammaBounds(1.5, np.full(8, 10.0), np.full(8, 3.0))
    rho = joint_moments(b, cm).rho
    np.testing.assert_allclose(rho[0, 1:], 1 / np.sqrt(2), atol=1e-9)
    for ell in range(3):
        assert rho[2 * ell + 1, 2 * ell + 2] == pytest.approx(0.0, abs=1e-12)
    for a in range(1, 7):
        for b_ in range(1, 7):
            if (a - 1) // 2 != (b_ - 1) // 2:
                assert rho[a, b_] == pytest.approx(0.5, abs=1e-12)


def test_zero_variance_named():
    cm = balanced_comparison_matrix(1)
    with pytest.raises(NumericalError, match="x1=1"):
        joint_moments(GammaBounds(1.0, np.ones(2), np.array([1.0, 0.0])), cm)


def test_kappa_depends_only_on_rho():
    cm = balanced_comparison_matrix(2)
    nu = np.array([1.0, 2.0, 3.0, 4.0])
    r1 = joint_moments(GammaBounds(1.0, np.zeros(4), nu), cm).rho
    r2 = joint_moments(GammaBounds(1.0, np.zeros(4), 7.3 * nu), cm).rho
    assert critical_value(r1, 0.05) == pytest.approx(critical_value(r2, 0.05), abs=1e-4)


def test_single_comparison_reduces_to_normal_bound(rng):
    study = _study(rng, L=0)
    res = submax_test(study, 1.3)
    assert res.kappa == pytest.approx(std_normal_quantile(0.95))
    dev, p = single_statistic_bound(study, 1.3)
    assert res.D[0] == pytest.approx(dev)
    assert res.p_value == pytest.approx(p)


def test_submax_structure(rng):
    study = _study(rng, effect=(0.1, 0.6))
    res = submax_test(study, 1.2)
    assert res.d_max >= res.D[0]
    assert res.d_max == res.D.max()
    assert res.reject == (res.d_max >= res.kappa)
    assert np.array_equal(res.exceeds, res.D >= res.kappa)
    assert res.kappa == pytest.approx(critical_value(res.rho, 0.05), abs=1e-12)
    assert 0 <= res.p_value <= 1


def test_pvalue_at_kappa_is_alpha(rng):
    study = _study(rng)
    res = submax_test(study, 1.0)
    p, err = max_pvalue(res.kappa, res.rho)
    assert p == pytest.approx(0.05, abs=2 * 5e-5 + 1e-4)


def test_deviates_nonincreasing_in_gamma(rng):
    study = _study(rng, n=300)
    D = np.array([submax_test(study, g).D for g in (1.0, 1.2, 1.5, 2.0, 3.0)])
    assert np.all(np.diff(D, axis=0) <= 1e-12)


def test_null_data_never_rejects(rng):
    study = _study(rng, zero=True)
    sw = sensitivity_sweep(study, [1.0, 1.5, 2.0])
    assert sw.changepoint is None
    assert all(not r.reject and r.p_value == 0.5 for r in sw.rows)


def test_sweep_changepoint_and_bisect(rng):
    study = _study(rng, n=400, effect=(0.2, 0.5))
    grid = default_gamma_grid()
    sw = sensitivity_sweep(study, grid)
    assert sw.changepoint is not None and sw.next_gamma is not None
    assert sw.next_gamma == pytest.approx(sw.changepoint + 0.05)
    fine = sensitivity_sweep(study, grid, bisect=True)
    assert sw.changepoint <= fine.changepoint < sw.next_gamma
    assert fine.next_gamma == pytest.approx(fine.changepoint + 0.01)
    by_g = {round(r.gamma, 10): r.reject for r in fine.rows}
    assert by_g[round(fine.changepoint, 10)] and not by_g[round(fine.next_gamma, 10)]
    single = sensitivity_sweep(study, [1.0])
    assert len(single.rows) == 1 and single.rows[0].gamma == 1.0


def test_sweep_validation(rng):
    study = _study(rng, n=50)
    with pytest.raises(ValidationError):
        sensitivity_sweep(study, [])
    with pytest.raises(ValidationError):
        sensitivity_sweep(study, [1.5, 1.2])
    with pytest.raises(ValidationError):
        submax_test(study, 1.0, alpha=1.5)


def test_two_sided_null_and_opposite_effects(rng):
    null = two_sided_test(_study(rng, effect=(0.0, 0.0), zero=True), 1.0)
    assert not null.reject
    strong = two_sided_test(_study(rng, n=300, effect=(1.0, 1.0)), 1.0)
    assert strong.positive.exceeds[0] and not strong.negative.reject
    mixed = two_sided_test(_study(rng, n=400, effect=(-1.0, 1.0)), 1.0)
    dirs = mixed.directions()
    assert mixed.positive.reject and mixed.negative.reject
    assert dirs[2] == "+" and dirs[1] == "-"
    assert mixed.positive.alpha == 0.025


def test_negation_flips_statistics(rng):
    study = _study(rng)
    a = submax_test(study, 1.0)
    b = submax_test(study.negated(), 1.0)
    np.testing.assert_allclose(a.D, -b.D, atol=1e-9)
