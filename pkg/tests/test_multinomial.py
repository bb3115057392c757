"""Multinomial cells: Zipf models, filtering, restricted bootstrap, experiment."""
import json
import math

import numpy as np
import pytest
from scipy import stats

import maxboot.maxstat as ms
from maxboot._streams import MULTIPLIER, stream
from maxboot.maxstat import bootstrap_draws, empirical_quantile
from maxboot.multinomial import (
    CellCounts,
    CellFilterRule,
    MultinomialExperimentConfig,
    MultinomialModel,
    _count_sstar,
    min_eig_lower_bound,
    restricted_bootstrap_sci,
    run_multinomial_experiment,
    sample_counts,
    select_cells,
    select_tau_restricted,
    zipf_model,
)


def _indicator_matrix(counts: CellCounts, kept: np.ndarray) -> np.ndarray:
    """Cell-sorted indicator rows restricted to the kept columns."""
    X = np.zeros((counts.n, kept.size))
    row = 0
    for col, j in enumerate(kept):
        lo = int(counts.counts[:j].sum())
        X[lo:lo + counts.counts[j], col] = 1.0
    return X


# ---------------------------------------------------------------------------
# models


def test_zipf_two_cells():
    m = zipf_model(2, 1.0)
    assert np.allclose(m.pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-15)
    assert zipf_model(1, 1.5).pi[0] == 1.0


def test_zipf_scale_bound():
    # probability vectors force the sorted scales under j^{-1/2}
    m = zipf_model(1000, 1.0)
    sig = np.sort(m.sigma)[::-1]
    j = np.arange(1, 1001)
    assert np.all(sig <= j ** -0.5 + 1e-12)


def test_zipf_validation_and_roundtrip():
    with pytest.raises(ValueError):
        zipf_model(0, 1.0)
    with pytest.raises(ValueError):
        zipf_model(5, 0.9)
    m = zipf_model(7, 1.3)
    back = MultinomialModel.from_dict(m.to_dict())
    assert np.array_equal(back.pi, m.pi)
    exp = MultinomialModel(pi=np.array([0.25, 0.75]))
    back2 = MultinomialModel.from_dict(exp.to_dict())
    assert np.array_equal(back2.pi, exp.pi)
    with pytest.raises(ValueError):
        MultinomialModel(pi=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        MultinomialModel(pi=np.array([1.2, -0.2]))
    with pytest.raises(ValueError):
        MultinomialModel.from_dict({"kind": "dirichlet"})


def test_sigma_formula():
    m = MultinomialModel(pi=np.array([0.5, 0.3, 0.2]))
    assert np.allclose(m.sigma, np.sqrt([0.25, 0.21, 0.16]), atol=1e-15)


# ---------------------------------------------------------------------------
# sampling


def test_sample_counts_point_mass():
    m = MultinomialModel(pi=np.array([1.0, 0.0, 0.0]))
    c = sample_counts(m, 25, seed=0)
    assert np.array_equal(c.counts, [25, 0, 0])


def test_sample_counts_deterministic():
    m = zipf_model(10, 1.0)
    assert np.array_equal(sample_counts(m, 100, seed=4).counts,
                          sample_counts(m, 100, seed=4).counts)
    assert not np.array_equal(sample_counts(m, 100, seed=4).counts,
                              sample_counts(m, 100, seed=5).counts)


def test_sample_counts_large_n_marginals():
    m = zipf_model(50, 1.0)
    n = 1_000_000
    c = sample_counts(m, n, seed=2)
    se = np.sqrt(m.pi * (1.0 - m.pi) / n)
    within = np.abs(c.pi_hat - m.pi) <= 3.0 * se
    assert within.mean() >= 0.99


def test_sample_counts_goodness_of_fit():
    m = MultinomialModel(pi=np.array([0.4, 0.3, 0.2, 0.1]))
    passed = sum(
        stats.chisquare(sample_counts(m, 2000, seed=seed).counts, 2000 * m.pi).pvalue > 0.01
        for seed in range(10)
    )
    assert passed >= 9


def test_cell_counts_validation():
    with pytest.raises(ValueError):
        CellCounts(counts=np.array([3, 4]), n=8)
    with pytest.raises(ValueError):
        CellCounts(counts=np.array([-1, 9]), n=8)
    with pytest.raises(ValueError):
        sample_counts(zipf_model(3, 1.0), 0, seed=0)


# ---------------------------------------------------------------------------
# cell filtering


def test_select_cells_point_mass_theoretical():
    c = CellCounts(counts=np.array([50, 0, 0]), n=50)
    assert select_cells(c, CellFilterRule.theoretical()).tolist() == [0]


def test_select_cells_min_count_boundary():
    c = CellCounts(counts=np.array([4, 5, 91]), n=100)
    kept = select_cells(c, CellFilterRule.min_count(5))
    assert 0 not in kept and 1 in kept


def test_select_cells_theoretical_boundary_n100():
    # threshold sqrt(log(100)/100) ~ 0.2146, so 22 observations qualify and 21 do not
    c = CellCounts(counts=np.array([21, 22, 57]), n=100)
    kept = select_cells(c, CellFilterRule.theoretical())
    assert 0 not in kept and 1 in kept


def test_select_cells_validation():
    c = CellCounts(counts=np.array([1]), n=1)
    with pytest.raises(ValueError):
        select_cells(c, CellFilterRule.min_count(1))
    with pytest.raises(ValueError):
        CellFilterRule.min_count(0)
    with pytest.raises(ValueError):
        CellFilterRule(kind="theoretical", threshold=3)
    with pytest.raises(ValueError):
        CellFilterRule(kind="quantile")
    rule = CellFilterRule.from_dict({"kind": "min_count", "threshold": 7})
    assert rule.threshold == 7


# ---------------------------------------------------------------------------
# restricted bootstrap


def test_restricted_sci_single_cell_contains_estimate():
    c = CellCounts(counts=np.array([70, 20, 10]), n=100)
    sci = restricted_bootstrap_sci(c, CellFilterRule.min_count(50), 0.8, 400, 0.05, seed=1)
    assert sci.indices.tolist() == [0]
    assert sci.lo[0] < 0.7 < sci.hi[0]


def test_restricted_sci_empty_set():
    c = CellCounts(counts=np.array([3, 3, 2]), n=8)
    sci = restricted_bootstrap_sci(c, CellFilterRule.min_count(5), 0.8, 100, 0.05, seed=1)
    assert sci.empty
    assert bool(sci.covers(np.empty(0))) is True


def test_sigma_hat_identity_between_forms():
    # 1/n-normalized indicator-column variance equals pi_hat(1 - pi_hat);
    # the identity is even bitwise when n is a power of two
    for n, seed, exact in ((16, 3, True), (32, 8, True), (100, 5, False)):
        c = sample_counts(zipf_model(6, 1.0), n, seed=seed)
        kept = np.flatnonzero(c.counts >= 1)
        X = _indicator_matrix(c, kept)
        pi = c.counts[kept] / n
        formula = np.sqrt(pi * (1.0 - pi))
        Xc = X - X.mean(axis=0)
        matrix = np.sqrt(np.diag(Xc.T @ Xc / n))
        if exact:
            assert np.array_equal(formula, matrix)
        else:
            assert np.abs(formula - matrix).max() < 1e-15


def test_count_form_matches_matrix_form():
    # same multiplier stream, same statistic: the count-form accumulation and the
    # dense-matrix bootstrap agree to floating-point association error
    c = sample_counts(zipf_model(6, 1.0), 16, seed=3)
    kept = np.flatnonzero(c.counts >= 1)
    X = _indicator_matrix(c, kept)
    tau, B, seed = 0.7, 9, 5

    s_count = np.concatenate(list(_count_sstar(c, kept, B, seed)), axis=0)
    xi = stream(seed, MULTIPLIER).standard_normal((B, 16))
    s_mat = xi @ (X - X.mean(axis=0)) / math.sqrt(16)
    assert np.abs(s_count - s_mat).max() < 1e-12

    bd = bootstrap_draws(X, tau, B, seed)
    pi = c.counts[kept] / 16
    lows, highs = ms._standardize_extremes(s_count, np.sqrt(pi * (1.0 - pi)), tau)
    assert np.abs(lows - bd.lows).max() < 1e-12
    assert np.abs(highs - bd.highs).max() < 1e-12

    sci = restricted_bootstrap_sci(c, CellFilterRule.min_count(1), tau, B, 0.05, seed)
    assert sci.q_lo == pytest.approx(empirical_quantile(bd.lows, 0.025), abs=1e-12)
    assert sci.q_hi == pytest.approx(empirical_quantile(bd.highs, 0.975), abs=1e-12)


def test_restricted_sci_validation():
    c = CellCounts(counts=np.array([10, 6]), n=16)
    with pytest.raises(ValueError):
        restricted_bootstrap_sci(c, CellFilterRule.min_count(1), 1.2, 10, 0.05, seed=0)
    with pytest.raises(ValueError):
        restricted_bootstrap_sci(c, CellFilterRule.min_count(1), 0.5, 0, 0.05, seed=0)
    with pytest.raises(ValueError):
        restricted_bootstrap_sci(c, CellFilterRule.min_count(1), 0.5, 10, 0.0, seed=0)


def test_select_tau_restricted_winner_consistent():
    c = sample_counts(zipf_model(20, 1.0), 200, seed=7)
    grid = (0.0, 0.4, 0.8, 1.0)
    tau_star, sci = select_tau_restricted(c, CellFilterRule.min_count(5), grid, 300, 0.05, seed=9)
    assert tau_star in grid
    direct = restricted_bootstrap_sci(c, CellFilterRule.min_count(5), tau_star, 300, 0.05, seed=9)
    assert np.array_equal(sci.lo, direct.lo)
    assert np.array_equal(sci.hi, direct.hi)
    widths = {}
    for t in grid:
        s = restricted_bootstrap_sci(c, CellFilterRule.min_count(5), t, 300, 0.05, seed=9)
        widths[t] = s.widths.mean()
    assert min(widths, key=widths.get) == tau_star


def test_select_tau_restricted_empty_set():
    c = CellCounts(counts=np.array([3, 3, 2]), n=8)
    tau_star, sci = select_tau_restricted(c, CellFilterRule.min_count(5), (0.5, 1.0), 50, 0.05, seed=0)
    assert math.isnan(tau_star)
    assert sci.empty


def test_select_tau_restricted_validation():
    c = CellCounts(counts=np.array([10, 6]), n=16)
    with pytest.raises(ValueError):
        select_tau_restricted(c, CellFilterRule.min_count(1), (), 10, 0.05, seed=0)
    with pytest.raises(ValueError):
        select_tau_restricted(c, CellFilterRule.min_count(1), (0.5, 1.5), 10, 0.05, seed=0)


# ---------------------------------------------------------------------------
# eigenvalue bound


def test_min_eig_bound_pinned_values():
    m = MultinomialModel(pi=np.array([0.5, 0.3, 0.2]))
    bound = min_eig_lower_bound(m, 2)
    assert bound == pytest.approx(0.06, abs=1e-15)
    cov = np.array([[0.25, -0.15], [-0.15, 0.21]])
    assert np.linalg.eigvalsh(cov).min() >= bound
    uniform = MultinomialModel(pi=np.full(4, 0.25))
    assert min_eig_lower_bound(uniform, 2) == pytest.approx(0.125, abs=1e-15)


def test_min_eig_bound_never_exceeds_truth():
    rng = np.random.default_rng(42)
    for _ in range(200):
        p = int(rng.integers(3, 16))
        w = rng.gamma(1.0, 1.0, p)
        m = MultinomialModel(pi=w / w.sum())
        k = int(rng.integers(1, p))
        top = np.sort(m.pi)[::-1][:k]
        cov = np.diag(top) - np.outer(top, top)
        assert min_eig_lower_bound(m, k) <= np.linalg.eigvalsh(cov).min() + 1e-12


def test_min_eig_bound_validation():
    m = MultinomialModel(pi=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        min_eig_lower_bound(m, 2)
    with pytest.raises(ValueError):
        min_eig_lower_bound(m, 0)


# ---------------------------------------------------------------------------
# experiment harness


def test_experiment_point_mass_full_coverage():
    m = MultinomialModel(pi=np.array([1.0, 0.0, 0.0]))
    cfg = MultinomialExperimentConfig(model=m, n=30, B=50, n_sims=8, seed=1)
    rep = run_multinomial_experiment(cfg)
    assert rep.coverage == 1.0
    assert rep.mean_selected_cells == 1.0


def test_experiment_deterministic_and_data_seeds_shared():
    m = zipf_model(30, 1.0)
    cfg = MultinomialExperimentConfig(model=m, n=100, B=60, n_sims=6, seed=3)
    a = run_multinomial_experiment(cfg)
    b = run_multinomial_experiment(cfg)
    assert a.rows == b.rows
    # changing only the tau grid must not change the simulated datasets
    fixed = MultinomialExperimentConfig(model=m, n=100, B=60, n_sims=6, seed=3,
                                        tau_grid=(1.0,))
    c = run_multinomial_experiment(fixed)
    assert [r[2] for r in c.rows] == [r[2] for r in a.rows]
    assert set(c.selected_tau_histogram) == {1.0}


def test_experiment_report_write(tmp_path):
    cfg = MultinomialExperimentConfig(model=zipf_model(10, 1.0), n=50, B=40,
                                      n_sims=5, seed=2)
    rep = run_multinomial_experiment(cfg)
    rep.write(tmp_path)
    lines = (tmp_path / "per_sim.csv").read_text().splitlines()
    assert lines[0] == "sim_id,covered,j_hat_size,selected_tau,cell_covered_frac"
    assert len(lines) == 6
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["n_sims"] == 5
    assert data["config"]["model"]["kind"] == "zipf"


def test_experiment_config_roundtrip():
    cfg = MultinomialExperimentConfig(model=zipf_model(10, 1.2), n=50, B=40,
                                      n_sims=5, seed=2,
                                      rule=CellFilterRule.theoretical())
    back = MultinomialExperimentConfig.from_dict(cfg.to_dict())
    assert back.model.zipf_eta == 1.2
    assert back.rule == cfg.rule
    assert back.tau_grid == cfg.tau_grid
    with pytest.raises(ValueError):
        MultinomialExperimentConfig(model=zipf_model(4, 1.0), n=1)
