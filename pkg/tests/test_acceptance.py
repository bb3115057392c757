"""Acceptance runs: the coverage, error-rate, power, and rate claims this
package commits to, each at its stated settings and tolerance.

One test per numbered claim (the error-rate claim has one test per sample
size).  Every test prints its measured quantities, so a failure line carries
the observed value next to the expected window.  The whole module is a long
run, roughly fifteen minutes on one core, dominated by the two rate studies
and the six 1000-run coverage experiments.
"""
import json
import math

import numpy as np
import pytest

from maxboot._streams import MULTIPLIER, stream
from maxboot.cli import main as cli_main
from maxboot.fda import (
    FdaExperimentConfig,
    MeanParams,
    beta_cdf,
    matern_cov,
    run_fda_experiment,
)
from maxboot.maxstat import bootstrap_draws, column_stats, empirical_quantile
from maxboot.model import CovarianceModel, generate_sample, matrix_sqrt, schur_horn_check
from maxboot.multinomial import (
    CellFilterRule,
    MultinomialExperimentConfig,
    MultinomialModel,
    _count_sstar,
    min_eig_lower_bound,
    restricted_bootstrap_sci,
    run_multinomial_experiment,
    sample_counts,
    zipf_model,
)
from maxboot.rates import RateStudyConfig, ks_two_sample, run_rate_study
from maxboot.sci import build_sci


# ---------------------------------------------------------------------------
# shared experiment runs (seed 0, plus 1 and 2 where batches are required)


def _mn_config(n: int, seed: int, tau_grid=None) -> MultinomialExperimentConfig:
    kwargs = {} if tau_grid is None else {"tau_grid": tau_grid}
    return MultinomialExperimentConfig(
        model=zipf_model(1000, 1.0), n=n, B=500, rho=0.05,
        rule=CellFilterRule.min_count(5), n_sims=1000, seed=seed, **kwargs)


@pytest.fixture(scope="module")
def mn_selected():
    """Selected-tau coverage runs at n=500 for three independent batch seeds."""
    return {seed: run_multinomial_experiment(_mn_config(500, seed)) for seed in (0, 1, 2)}


@pytest.fixture(scope="module")
def mn_fixed():
    """Matching tau=1 runs; same data seeds per batch, only the grid differs."""
    return {seed: run_multinomial_experiment(_mn_config(500, seed, tau_grid=(1.0,)))
            for seed in (0, 1, 2)}


def _fda_null_rate(n: int, n_sims: int) -> float:
    cfg = FdaExperimentConfig(n=n, n_sims=n_sims, seed=0)
    return run_fda_experiment(cfg).rejection_rate


# ---------------------------------------------------------------------------
# 1 & 2: multinomial simultaneous coverage


def test_criterion_1_multinomial_coverage_n500(mn_selected):
    rep = mn_selected[0]
    print(f"criterion 1: coverage={rep.coverage:.3f} (se={rep.se:.3f}) "
          f"window=[0.917, 0.957], mean selected cells={rep.mean_selected_cells:.1f}")
    assert 0.917 <= rep.coverage <= 0.957, (
        f"simultaneous coverage {rep.coverage:.3f} outside [0.917, 0.957]")


def test_criterion_2_multinomial_coverage_n1000():
    rep = run_multinomial_experiment(_mn_config(1000, 0))
    print(f"criterion 2: coverage={rep.coverage:.3f} (se={rep.se:.3f}) "
          f"window=[0.924, 0.964]")
    assert 0.924 <= rep.coverage <= 0.964, (
        f"simultaneous coverage {rep.coverage:.3f} outside [0.924, 0.964]")


# ---------------------------------------------------------------------------
# 3: scale selection should beat full standardization


def test_criterion_3_selection_beats_full_standardization(mn_selected, mn_fixed):
    wins = 0
    for seed in (0, 1, 2):
        sel, fixed = mn_selected[seed].coverage, mn_fixed[seed].coverage
        wins += sel > fixed
        print(f"criterion 3, batch {seed}: selected={sel:.3f} tau1={fixed:.3f} "
              f"win={sel > fixed}")
    assert wins >= 2, (
        f"selected-tau coverage beat tau=1 in only {wins}/3 batches; "
        "both sit at the nominal level here, see notes/decisions.md in the "
        "workspace root for the analysis")


# ---------------------------------------------------------------------------
# 4: functional null rejection rates


def test_criterion_4a_fda_type_i_error_n50():
    rate = _fda_null_rate(50, 1000)
    print(f"criterion 4a: null rejection at n=50 is {rate:.3f}, window=[0.047, 0.087]")
    assert 0.047 <= rate <= 0.087, (
        f"null rejection rate {rate:.3f} outside [0.047, 0.087]; the measured "
        "exceedance is analyzed in notes/decisions.md")


def test_criterion_4b_fda_type_i_error_n200():
    rate = _fda_null_rate(200, 1000)
    print(f"criterion 4b: null rejection at n=200 is {rate:.3f}, window=[0.037, 0.077]")
    assert 0.037 <= rate <= 0.077, (
        f"null rejection rate {rate:.3f} outside [0.037, 0.077]")


# ---------------------------------------------------------------------------
# 5: power ramps


def test_criterion_5_fda_power_monotone():
    n_sims = 200

    def rate(params: MeanParams) -> float:
        cfg = FdaExperimentConfig(n=50, n_sims=n_sims, seed=0, alternative=params)
        return run_fda_experiment(cfg).rejection_rate

    null_rate = rate(MeanParams())
    ramps = {
        "warp": [null_rate, rate(MeanParams(warp=0.02)), rate(MeanParams(warp=0.04))],
        "scale": [null_rate, rate(MeanParams(scale=0.05)), rate(MeanParams(scale=0.1))],
        "shift": [null_rate, rate(MeanParams(shift=0.03)), rate(MeanParams(shift=0.06))],
    }
    for name, powers in ramps.items():
        print(f"criterion 5, {name}: powers={['%.3f' % v for v in powers]}")
        inversions = []
        for a, b in zip(powers, powers[1:]):
            if b < a:
                se = math.sqrt(a * (1 - a) / n_sims + b * (1 - b) / n_sims)
                inversions.append((a - b, 2 * se))
        assert len(inversions) <= 1, f"{name} ramp has {len(inversions)} inversions"
        for gap, bound in inversions:
            assert gap <= bound, f"{name} ramp inverts by {gap:.3f} > 2 s.e. = {bound:.3f}"


# ---------------------------------------------------------------------------
# 6: convergence-rate contrast


def test_criterion_6_rate_contrast():
    common = dict(ns=(100, 200, 400, 800), ref_draws=20000, outer_reps=50,
                  B=2000, seed=0, noise="symmetric-exponential")
    main = run_rate_study(RateStudyConfig(
        model=CovarianceModel.power(500, 1.0, 0.7), tau=0.8, **common))
    flat = run_rate_study(RateStudyConfig(
        model=CovarianceModel.power(500, 1.0, 0.0), tau=1.0, **common))
    print(f"criterion 6: decay-config slope={main.fit.slope:.3f} "
          f"(r2={main.fit.r2:.2f}), flat-config slope={flat.fit.slope:.3f} "
          f"(r2={flat.fit.r2:.2f})")
    print(f"criterion 6: per-n medians decay={[r['dk_boot_median'] for r in main.per_n]} "
          f"flat={[r['dk_boot_median'] for r in flat.per_n]}")
    assert main.fit.slope <= -0.35, (
        f"decay-config slope {main.fit.slope:.3f} above -0.35")
    assert main.fit.slope <= flat.fit.slope - 0.05, (
        f"decay-config slope {main.fit.slope:.3f} is not steeper than the flat "
        f"config ({flat.fit.slope:.3f}) by 0.05; both clauses are analyzed in "
        "notes/decisions.md")


# ---------------------------------------------------------------------------
# 7: oracle and property suite


def _check_schur_horn_suite():
    rng = np.random.default_rng(0)
    for _ in range(500):
        d = int(rng.integers(2, 12))
        A = rng.standard_normal((d, d))
        A = (A + A.T) / 2.0
        s = float(rng.uniform(1.0, 3.0))
        r = float(rng.uniform(0.1, 0.9 * s))
        res = schur_horn_check(A, r, s)
        assert res.holds, f"majorization inequality violated: {res}"


def _check_min_eig_suite():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = int(rng.integers(3, 16))
        w = rng.gamma(1.0, 1.0, p)
        model = MultinomialModel(pi=w / w.sum())
        k = int(rng.integers(1, p))
        top = np.sort(model.pi)[::-1][:k]
        cov = np.diag(top) - np.outer(top, top)
        brute = float(np.linalg.eigvalsh(cov).min())
        assert min_eig_lower_bound(model, k) <= brute + 1e-12


def _check_multiplier_vs_direct():
    model = CovarianceModel.power(25, 1.0, 0.5)
    X = generate_sample(0.0, model, 60, seed=17)
    tau, B = 0.8, 10_000
    boot = bootstrap_draws(X, tau, B, seed=23)
    stats = column_stats(X)
    root = matrix_sqrt(stats.cov_hat)
    z = np.random.default_rng(71).standard_normal((B, 25)) @ root
    direct = (z / stats.sigma_hat ** tau).max(axis=1)
    dk = ks_two_sample(boot.highs, direct)
    print(f"criterion 7: multiplier-vs-direct KS at B=10^4 is {dk:.4f} (< 0.02)")
    assert dk < 0.02


def _check_count_vs_matrix():
    counts = sample_counts(zipf_model(6, 1.0), 16, seed=3)
    kept = np.flatnonzero(counts.counts >= 1)
    X = np.zeros((16, kept.size))
    for col, j in enumerate(kept):
        lo = int(counts.counts[:j].sum())
        X[lo:lo + counts.counts[j], col] = 1.0
    B, tau, seed = 64, 0.7, 5
    s_count = np.concatenate(list(_count_sstar(counts, kept, B, seed)), axis=0)
    xi = stream(seed, MULTIPLIER).standard_normal((B, 16))
    s_mat = xi @ (X - X.mean(axis=0)) / 4.0
    assert np.abs(s_count - s_mat).max() < 1e-12
    sci = restricted_bootstrap_sci(counts, CellFilterRule.min_count(1), tau, B, 0.05, seed)
    bd = bootstrap_draws(X, tau, B, seed)
    assert sci.q_lo == pytest.approx(empirical_quantile(bd.lows, 0.025), abs=1e-12)
    assert sci.q_hi == pytest.approx(empirical_quantile(bd.highs, 0.975), abs=1e-12)


def _check_special_functions():
    ts = np.linspace(0.0, 1.0, 101)
    for t in ts:
        assert abs(matern_cov(t, t, 0.1) - 1.0 / 16.0) < 1e-10
    for d in np.linspace(0.0, 2.0, 81):
        assert abs(matern_cov(0.0, d, 0.5) - math.exp(-d) / 16.0) < 1e-10
    assert np.abs(beta_cdf(ts, 2.0, 2.0) - (3.0 * ts**2 - 2.0 * ts**3)).max() < 1e-12


def _check_quantiles_and_nesting():
    draws = np.random.default_rng(5).standard_normal(400)
    qs = [empirical_quantile(draws, q) for q in np.linspace(0.01, 0.99, 33)]
    assert all(a <= b for a, b in zip(qs, qs[1:]))
    X = generate_sample(0.0, CovarianceModel.power(8, 1.0, 0.3), 50, seed=9)
    wide = build_sci(X, 0.8, 400, 0.01, seed=2)
    mid = build_sci(X, 0.8, 400, 0.05, seed=2)
    narrow = build_sci(X, 0.8, 400, 0.20, seed=2)
    assert np.all(wide.lo <= mid.lo) and np.all(mid.lo <= narrow.lo)
    assert np.all(narrow.hi <= mid.hi) and np.all(mid.hi <= wide.hi)


def _check_thread_invariance(tmp_path):
    def run(cmd, cfg, sub, threads):
        cfg_path = tmp_path / f"{sub}.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / sub / f"t{threads}"
        rc = cli_main([cmd, "--config", str(cfg_path), "--out", str(out),
                       "--seed", "9", "--threads", str(threads)])
        assert rc == 0, f"{cmd} exited {rc}"
        return {f.name: f.read_bytes() for f in sorted(out.iterdir())
                if f.name != "manifest.json"}

    gauss_gen = {"kind": "gaussian", "n": 20,
                 "model": {"p": 5, "sigma": {"kind": "power", "c": 1.0, "alpha": 0.5}}}
    data_dir = tmp_path / "gen" / "t1"
    cases = [
        ("gen-data", gauss_gen, "gen"),
        ("gen-data", {"kind": "multinomial", "n": 80,
                      "model": {"kind": "zipf", "p": 10, "eta": 1.0}}, "genm"),
        ("sci", {"data": str(data_dir / "data.csv"), "B": 100, "rho": 0.05,
                 "tau_grid": [0.0, 0.5, 1.0]}, "sci"),
        ("fda-experiment", {"n": 12, "p": 8, "B": 30, "n_sims": 5,
                            "grid_size": 21, "target_resolution": 64}, "fda"),
        ("multinomial-experiment", {"model": {"kind": "zipf", "p": 10, "eta": 1.0},
                                    "n": 50, "B": 30, "n_sims": 5}, "mn"),
        ("rate-study", {"model": {"p": 5, "sigma": {"kind": "power", "c": 1.0, "alpha": 0.5}},
                        "ns": [20, 40], "tau": 0.8, "ref_draws": 200, "outer_reps": 3,
                        "B": 20, "noise": "gaussian"}, "rate"),
    ]
    for cmd, cfg, sub in cases:
        one = run(cmd, cfg, sub, 1)
        two = run(cmd, cfg, sub, 2)
        assert one == two, f"{cmd} artifacts differ between --threads 1 and 2"


def test_criterion_7_oracle_suite(tmp_path):
    _check_schur_horn_suite()
    _check_min_eig_suite()
    _check_multiplier_vs_direct()
    _check_count_vs_matrix()
    _check_special_functions()
    _check_quantiles_and_nesting()
    _check_thread_invariance(tmp_path)
    print("criterion 7: majorization (500), eigen bound (200), multiplier-vs-direct, "
          "count-vs-matrix, special functions, quantile/nesting, thread invariance all hold")
