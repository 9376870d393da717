import numpy as np
import pytest

from submax.exceptions import ValidationError
from submax.simulation import (
    SimConfig,
    SimReport,
    compare_to_theory,
    draw_differences,
    load_config,
    simulate,
)


def test_reproducible_and_stream_per_replication():
    cfg = SimConfig(1, 0.5, 0.3, 40, gammas=(1.0, 1.5), replications=60, seed=11, batch=7)
    a, b = simulate(cfg), simulate(cfg)
    assert a.cells == b.cells
    full = draw_differences(cfg, 0, 60)
    part = draw_differences(cfg, 25, 31)
    np.testing.assert_array_equal(full[25:31], part)


def test_batch_size_does_not_change_counts():
    base = SimConfig(1, 0.4, 0.2, 30, gammas=(1.0, 2.0), replications=50, seed=3)
    a = simulate(base)
    b = simulate(SimConfig(1, 0.4, 0.2, 30, gammas=(1.0, 2.0), replications=50, seed=3, batch=1))
    assert a.cells == b.cells


def test_single_replication_counts():
    rep = simulate(SimConfig(2, 0.3, 0.3, 20, gammas=(1.0, 1.2), replications=1))
    assert all(c.count in (0, 1) for c in rep.cells)
    assert all(c.count <= c.replications for c in rep.cells)


def test_seed_independence():
    cfg = dict(L=1, zeta0=0.2, zeta1=0.2, I_bar=60, gammas=(1.2,), replications=1500)
    a = simulate(SimConfig(**cfg, seed=1)).cell(1.2, "submax")
    b = simulate(SimConfig(**cfg, seed=2)).cell(1.2, "submax")
    se = np.sqrt(a.se ** 2 + b.se ** 2)
    assert abs(a.proportion - b.proportion) <= 6 * se


def test_recomputed_kappa_agrees_with_fixed():
    kw = dict(L=1, zeta0=0.4, zeta1=0.1, I_bar=50, gammas=(1.0, 1.8), replications=40, seed=9)
    fixed = simulate(SimConfig(**kw))
    redo = simulate(SimConfig(**kw, recompute_kappa=True, target_error=5e-4))
    assert fixed.cells == redo.cells


def test_power_monotone_in_gamma():
    gammas = (1.0, 1.5, 2.0, 2.5, 3.0)
    rep = simulate(SimConfig(1, 0.5, 0.3, 80, gammas=gammas, replications=400, seed=4))
    for m in ("submax", "oracle", "pooled"):
        props = [rep.cell(g, m) for g in gammas]
        for lo, hi in zip(props[1:], props[:-1]):
            assert lo.proportion <= hi.proportion + 2 * max(hi.se, lo.se, 1e-12)


def test_compare_to_theory_flags_nothing_on_matching_design():
    rep = simulate(SimConfig(1, 0.6, 0.4, 300, gammas=(2.0, 2.5), replications=500, seed=2))
    disc = compare_to_theory(rep)
    assert len(disc) == 6 and not any(d.flagged for d in disc)
    with pytest.raises(ValidationError):
        compare_to_theory(rep, theory={(2.0, "submax"): 0.5})
    with pytest.raises(ValidationError):
        compare_to_theory(SimReport(rep.config, (), 0.0))


def test_config_validation_and_file(tmp_path):
    with pytest.raises(ValidationError):
        SimConfig(1, 0, 0, 10, replications=0)
    with pytest.raises(ValidationError):
        SimConfig(1, 0, 0, 10, gammas=(0.9,))
    with pytest.raises(ValidationError):
        SimConfig(1, 0, 0, 10, methods=("cart",))
    path = tmp_path / "sim.ini"
    path.write_text("[simulation]\nL = 5\nzeta0 = 0.6\nzeta1 = 0.4\nI_bar = 63\n"
                    "gammas = 2.8, 3.0\nreplications = 200\nseed = 7\nmethods = submax pooled\n")
    cfg = load_config(path)
    assert cfg == SimConfig(5, 0.6, 0.4, 63, gammas=(2.8, 3.0), replications=200, seed=7,
                            methods=("submax", "pooled"))
    path.write_text("[simulation]\nL = 1\nzeta0 = 0\n")
    with pytest.raises(ValidationError, match="zeta1"):
        load_config(path)
    path.write_text("[simulation]\nL = 1\nzeta0 = 0\nzeta1 = 0\nI_bar = 4\nbogus = 1\n")
    with pytest.raises(ValidationError, match="bogus"):
        load_config(path)
