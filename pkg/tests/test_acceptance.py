"""Acceptance criteria, one test and one printed PASS/FAIL line per criterion.

Criterion 10 needs the NHANES matched-pairs data, supplied as a long-format
CSV through ``SUBMAX_NHANES_CSV``; it is skipped otherwise.
"""

import os
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from submax.bounds import GammaBounds, pair_bounds, set_bounds_separable
from submax.closed import closed_test, subset_critical_values
from submax.inference import ScoredStudy, joint_moments, sensitivity_sweep, submax_test
from submax.mvn import (
    DEFAULT_TARGET_ERROR,
    equicoordinate_quantile,
    mvn_rectangle,
    mvn_upper_quadrant_below,
    std_normal_cdf,
)
from submax.power import FavorableAlternative, amplify_check, design_sensitivity, power_row
from submax.simulation import METHODS, SimConfig, simulate
from submax.study import CovariateSpec, balanced_comparison_matrix

from oracles import bvn_quadrature, exhaustive_set_bounds, signed_rank_enumeration
from reference_values import DESIGNS, ANALYTIC_POWER, SIMULATED_COUNTS


def test_ac01_analytic_power(acceptance_log):
    t0 = time.perf_counter()
    worst, cells = 0.0, 0
    for zeta, rows in ANALYTIC_POWER.items():
        for gamma, published in rows.items():
            for (L, I), want in zip(DESIGNS, published):
                got = power_row(FavorableAlternative.balanced(L, *zeta, I), gamma)
                for m, w in zip(METHODS, want):
                    worst = max(worst, abs(got[m] - w))
                    cells += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.015 and elapsed < 120
    acceptance_log("AC1 analytic power grid",
                   ok, f"{cells} values, worst |diff| {worst:.4f} (tol 0.015), {elapsed:.1f}s (limit 120s)")
    assert ok


def test_ac02_design_sensitivity(acceptance_log):
    vals = {
        "zeta=0.5": (design_sensitivity([1], [0.5]), 3.17),
        "zeta=0.6 subgroup": (design_sensitivity([1], [0.6]), 4.05),
        "(0.6,0.4) pooled": (design_sensitivity([1, 1], [0.6, 0.4]), 3.13),
    }
    ok = all(abs(g - w) <= 0.01 for g, w in vals.values())
    acceptance_log("AC2 design sensitivity", ok,
                   ", ".join(f"{k} {g:.4f} vs {w}" for k, (g, w) in vals.items()) + " (tol 0.01)")
    assert ok


def _simulated_cells(reps, tol_fn):
    results = []
    for zeta, rows in SIMULATED_COUNTS.items():
        gammas = tuple(rows)
        for li, (L, I) in enumerate(DESIGNS):
            rep = simulate(SimConfig(L, *zeta, I, gammas=gammas, replications=reps, seed=20170601))
            for gamma, counts in rows.items():
                for mi, m in enumerate(METHODS):
                    p_pub = counts[3 * li + mi] / 10_000
                    p_sim = rep.count(gamma, m) / reps
                    tol = tol_fn(p_pub)
                    results.append((zeta, L, gamma, m, p_pub, p_sim, abs(p_sim - p_pub) <= tol))
    return results


def test_ac03_simulated_power(acceptance_log):
    t0 = time.perf_counter()
    reps = 10_000
    res = _simulated_cells(reps, lambda p: 3 * np.sqrt(p * (1 - p) / reps) + 0.005)
    elapsed = time.perf_counter() - t0
    bad = [r for r in res if not r[-1]]
    situations = {r[0] for r in res}
    ok = not bad and len(res) >= 12 and len(situations) == 5 and elapsed < 1800
    worst = max(res, key=lambda r: abs(r[5] - r[4]))
    acceptance_log("AC3 simulated power grid (10,000 reps)", ok,
                   f"{len(res) - len(bad)}/{len(res)} cells within 3 SE + 0.5% across {len(situations)} situations; "
                   f"largest gap {abs(worst[5] - worst[4]):.4f} at zeta={worst[0]}, L={worst[1]}, "
                   f"gamma={worst[2]}, {worst[3]}; {elapsed:.0f}s")
    assert ok, bad


def test_ac03_simulated_power_smoke(acceptance_log):
    t0 = time.perf_counter()
    reps = 2_000
    res = _simulated_cells(reps, lambda p: 4 * np.sqrt(p * (1 - p) / reps) + 0.01)
    elapsed = time.perf_counter() - t0
    bad = [r for r in res if not r[-1]]
    ok = not bad and elapsed < 300
    acceptance_log("AC3 simulated power smoke (2,000 reps)", ok,
                   f"{len(res) - len(bad)}/{len(res)} cells within 4 SE + 1%; {elapsed:.0f}s (limit 300s)")
    assert ok, bad


def test_ac04_amplification(acceptance_log):
    g = amplify_check(3, 3.504)
    ok = abs(g - 1.77) <= 0.005
    acceptance_log("AC4 amplification", ok, f"amplify_check(3, 3.504) = {g:.5f} (want 1.77 +- 0.005)")
    assert ok


def test_ac05_balanced_correlations(acceptance_log):
    rho = joint_moments(GammaBounds(2.0, np.zeros(8), np.full(8, 4.2)), balanced_comparison_matrix(3)).rho
    overall = rho[0, 1:]
    comp = [rho[2 * l + 1, 2 * l + 2] for l in range(3)]
    cross = [rho[a, b] for a in range(1, 7) for b in range(1, 7) if (a - 1) // 2 != (b - 1) // 2]
    e1 = np.abs(overall - 0.7071067811865476).max()
    e2 = np.abs(comp).max()
    e3 = np.abs(np.array(cross) - 0.5).max()
    ok = e1 <= 1e-9 and e2 <= 1e-9 and e3 <= 1e-9 and abs(overall[0] - 0.7071) < 1e-4
    acceptance_log("AC5 balanced correlation structure", ok,
                   f"overall-subgroup {overall[0]:.6f} (max err {e1:.1e}); complementary max |r| {e2:.1e}; "
                   f"cross-modifier max err {e3:.1e}")
    assert ok


def test_ac06_bounds_oracles(acceptance_log):
    t0 = time.perf_counter()
    errs = {"separable": 0.0, "pairs": 0.0}

    @settings(max_examples=300, deadline=None)
    @given(arrays(np.float64, st.integers(2, 4), elements=st.floats(-10, 10)),
           st.sampled_from([1.0, 1.5, 2.0, 5.0]))
    def separable(q, gamma):
        mu, var = set_bounds_separable(q, gamma)
        emu, evar = exhaustive_set_bounds(q, gamma)
        err = max(abs(mu - emu), abs(var - evar))
        errs["separable"] = max(errs["separable"], err)
        assert err <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.integers(1, 10), elements=st.integers(0, 10).map(float)))
    def pairs(q):
        mu, nu = pair_bounds(q, 1.0)
        emu, evar = signed_rank_enumeration(q)
        err = max(abs(mu - emu), abs(nu - evar))
        errs["pairs"] = max(errs["pairs"], err)
        assert err <= 1e-9

    try:
        separable()
        pairs()
        ok = True
    except AssertionError:
        ok = False
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60
    acceptance_log("AC6 gamma-bounds oracle equivalence", ok,
                   f"separable vs exhaustive max err {errs['separable']:.1e} (tol 1e-12); "
                   f"pair bounds vs 2^I enumeration max err {errs['pairs']:.1e}; {elapsed:.1f}s")
    assert ok


def test_ac07_mvn_numerics(acceptance_log):
    diag_err = 0.0
    for K in (2, 4, 7, 11):
        x = np.linspace(-1.0, 2.5, K)
        diag_err = max(diag_err, abs(mvn_rectangle(np.full(K, -np.inf), x, np.eye(K)).value
                                     - np.prod(std_normal_cdf(x))))
    inv_err = 0.0
    for K, r in ((3, 0.5), (7, 0.4), (11, 0.7)):
        rho = np.full((K, K), r) + (1 - r) * np.eye(K)
        kappa = equicoordinate_quantile(rho, 0.95, seed=1)
        inv_err = max(inv_err, abs(mvn_upper_quadrant_below(kappa, rho, seed=2).value - 0.95))
    bvn_err = 0.0
    for r in (-0.9, -0.5, 0.0, 0.3, 0.707, 0.95):
        for lo, hi in (((-np.inf, -np.inf), (0.5, 1.5)), ((-1.0, -0.2), (1.0, 2.0)), ((0.3, -np.inf), (np.inf, 0.0))):
            lo, hi = np.array(lo), np.array(hi)
            got = mvn_rectangle(lo, hi, [[1, r], [r, 1]]).value
            bvn_err = max(bvn_err, abs(got - bvn_quadrature(lo, hi, r)))
    ok = diag_err <= 1e-6 and inv_err <= 2 * DEFAULT_TARGET_ERROR and bvn_err <= 1e-4
    acceptance_log("AC7 MVN numerics", ok,
                   f"diagonal err {diag_err:.1e} (tol 1e-6); quantile inversion err {inv_err:.1e} "
                   f"(tol {2 * DEFAULT_TARGET_ERROR:.0e}); bivariate vs quadrature err {bvn_err:.1e} (tol 1e-4)")
    assert ok


def test_ac08_closed_testing(acceptance_log):
    rho = joint_moments(GammaBounds(1.0, np.zeros(8), np.ones(8)), balanced_comparison_matrix(3)).rho
    kap = subset_critical_values(rho, 0.05)
    viol = 0
    pairs = 0
    for a, ka in kap.items():
        for b, kb in kap.items():
            if set(a) < set(b):
                pairs += 1
                viol += ka > kb + 1e-4
    single = np.array([kap[(k,)] for k in range(7)])
    rng = np.random.default_rng(8)
    closure_bad = 0
    for _ in range(200):
        ct = closed_test(rng.normal(1.5, 1.2, 7), rho, kappas=kap)
        sets = [frozenset(s) for s in ct.subsets]
        for s, c in zip(sets, ct.closed_reject):
            expect = all(ct.local_reject[j] for j, t in enumerate(sets) if t >= s)
            closure_bad += c != expect
    ok = viol == 0 and np.all(np.abs(single - 1.6449) <= 1e-3) and closure_bad == 0
    acceptance_log("AC8 closed-testing structure", ok,
                   f"{pairs} nested subset pairs, {viol} monotonicity violations; singleton kappa "
                   f"{single.min():.4f}..{single.max():.4f}; {closure_bad} closure inconsistencies in 200 draws")
    assert ok


def test_ac09_size_control(acceptance_log):
    rates = []
    for L, I in DESIGNS:
        rep = simulate(SimConfig(L, 0.0, 0.0, I, gammas=(1.0,), replications=10_000, seed=77,
                                 methods=("submax",)))
        rates.append(rep.cell(1.0, "submax").proportion)
    ok = all(0.040 <= r <= 0.062 for r in rates)
    acceptance_log("AC9 size control", ok,
                   f"null rejection rate L=1 {rates[0]:.4f}, L=5 {rates[1]:.4f} (want [0.040, 0.062])")
    assert ok


NHANES_DEVIATES_GAMMA1 = (6.29, 3.82, 5.19, 4.84, 4.03, 3.92, 4.96)


def test_ac10_nhanes(acceptance_log):
    path = os.environ.get("SUBMAX_NHANES_CSV")
    if not path:
        acceptance_log("AC10 NHANES deviates and changepoint", None, "SUBMAX_NHANES_CSV not set; optional data-dependent check skipped")
        pytest.skip("NHANES data not supplied")
    from submax.cli import read_matched_sets

    names = tuple(os.environ.get("SUBMAX_NHANES_COVARIATES", "male,smoker,poor").split(","))
    spec = CovariateSpec(names)
    study = ScoredStudy.from_sets(read_matched_sets(path, names), spec)
    res = submax_test(study, 1.0)
    dev_err = float(np.abs(res.D - np.array(NHANES_DEVIATES_GAMMA1)).max())
    sw = sensitivity_sweep(study, [1.0, 1.2, 1.4, 1.6, 1.7, 1.77, 1.78])
    fine = sensitivity_sweep(study, np.round(np.arange(1.70, 1.851, 0.01), 2))
    cp = fine.changepoint
    ok = dev_err <= 0.02 and cp is not None and 1.77 <= cp <= 1.78
    acceptance_log("AC10 NHANES deviates and changepoint", ok,
                   f"gamma=1 deviates {np.round(res.D, 2).tolist()} (max err {dev_err:.3f}, tol 0.02); "
                   f"changepoint {cp} (want in [1.77, 1.78]); coarse-grid changepoint {sw.changepoint}")
    assert ok
