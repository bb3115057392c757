"""Monte Carlo rate lab: how fast do the Gaussian and bootstrap approximations converge?

For a covariance model with decaying scales, the Kolmogorov distance between
the law of the max statistic M and (a) its Gaussian counterpart or (b) the
conditional bootstrap law is estimated by nested Monte Carlo: an outer
reference population of M values from fresh datasets, compared against draw
populations by the exact two-sample KS statistic.  Fitting log d_K against
log n across sample sizes gives an empirical rate exponent.

All estimates carry an MC noise floor of order 1/sqrt(ref_draws); distances
near the floor flatten the fitted slope, so the floor is reported next to
every fit rather than being extrapolated away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._ioutil import dump_json, write_csv
from ._streams import (
    OUTER_BOOT,
    OUTER_DATA,
    RATE_LEVEL,
    REF_POP,
    check_seed,
    derive_seed,
)
from .maxstat import PartialStdConfig, _standardize_extremes, bootstrap_draws, empirical_quantile, gaussian_max_draws
from .model import NOISE_KINDS, CovarianceModel, generate_sample

__all__ = [
    "ks_two_sample",
    "DkSummary",
    "estimate_dk_gaussian",
    "estimate_dk_bootstrap",
    "RateFit",
    "fit_rate",
    "RateStudyConfig",
    "RateStudyResult",
    "run_rate_study",
]

_MAX_TASKS = 64


def ks_two_sample(a, b) -> float:
    """Exact sup-difference of two empirical CDFs.

    The supremum of a difference of step functions is attained at a jump
    point, so evaluating both ECDFs at every sample point is exact.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


def _check_noise(noise: str) -> str:
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
    return noise


def _ref_task(args) -> np.ndarray:
    model, mu, tau, n, noise, seed, ids = args
    sigma = model.sigma
    out = np.empty(len(ids))
    root_n = math.sqrt(n)
    for k, i in enumerate(ids):
        X = generate_sample(mu, model, n, noise=noise, seed=derive_seed(seed, REF_POP, i))
        s = root_n * (X.rows.mean(axis=0) - mu)
        _, highs = _standardize_extremes(s[None, :], sigma, tau)
        out[k] = highs[0]
    return out


def _reference_population(model: CovarianceModel, mu: float, tau: float, n: int,
                          ref_draws: int, seed: int, noise: str, map_fn=map) -> np.ndarray:
    """ref_draws independent M values, each from a fresh size-n dataset.

    Standardization uses the model's true scales.  Dataset seeds derive from
    the draw index, so the population is identical for any task partition.
    """
    ids = range(ref_draws)
    n_tasks = min(ref_draws, _MAX_TASKS)
    chunks = [(model, float(mu), float(tau), int(n), noise, seed, list(ids[t::n_tasks]))
              for t in range(n_tasks)]
    parts = list(map_fn(_ref_task, chunks))
    out = np.empty(ref_draws)
    for t, part in enumerate(parts):
        out[t::n_tasks] = part
    return out


def estimate_dk_gaussian(model: CovarianceModel, mu: float, tau: float, n: int,
                         ref_draws: int, seed: int, noise: str = "gaussian",
                         map_fn=map) -> float:
    """KS distance between the sampled law of M and its Gaussian counterpart.

    Both populations have ref_draws points, so the MC resolution is of order
    1/sqrt(ref_draws); with Gaussian noise M and the counterpart agree in law
    and the estimate sits at that floor.
    """
    seed = check_seed(seed)
    _check_noise(noise)
    if int(ref_draws) < 1:
        raise ValueError("ref_draws must be >= 1")
    ref = _reference_population(model, mu, tau, n, int(ref_draws), seed, noise, map_fn)
    gauss = gaussian_max_draws(model, PartialStdConfig(tau=tau), int(ref_draws), seed)
    return ks_two_sample(ref, gauss)


@dataclass(frozen=True)
class DkSummary:
    """Distribution of conditional bootstrap distances over dataset realizations."""

    median: float
    q90: float
    values: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "DkSummary":
        return cls(median=empirical_quantile(values, 0.5),
                   q90=empirical_quantile(values, 0.9),
                   values=np.asarray(values, dtype=np.float64))


def _boot_task(args) -> list:
    model, mu, tau, n, B, noise, seed, ref, reps = args
    out = []
    for r in reps:
        X = generate_sample(mu, model, n, noise=noise, seed=derive_seed(seed, OUTER_DATA, r))
        draws = bootstrap_draws(X, tau, B, derive_seed(seed, OUTER_BOOT, r))
        out.append((r, ks_two_sample(ref, draws.highs)))
    return out


def _bootstrap_dks(model, mu, tau, n, outer_reps, B, seed, noise, ref, map_fn) -> np.ndarray:
    n_tasks = min(outer_reps, _MAX_TASKS)
    chunks = [(model, float(mu), float(tau), int(n), int(B), noise, seed, ref,
               range(t, outer_reps, n_tasks)) for t in range(n_tasks)]
    pairs = [pair for chunk in map_fn(_boot_task, chunks) for pair in chunk]
    pairs.sort(key=lambda x: x[0])
    return np.array([d for _, d in pairs])


def estimate_dk_bootstrap(model: CovarianceModel, mu: float, tau: float, n: int,
                          ref_draws: int, outer_reps: int, B: int, seed: int,
                          noise: str = "gaussian", map_fn=map) -> DkSummary:
    """Distribution over X of the KS distance between L(M) and the bootstrap law M*|X.

    One shared reference population of M values (size ref_draws, true-scale
    standardization) is compared against B bootstrap draws from each of
    outer_reps fresh datasets.
    """
    seed = check_seed(seed)
    _check_noise(noise)
    if int(outer_reps) < 1:
        raise ValueError("outer_reps must be >= 1")
    ref = _reference_population(model, mu, tau, n, int(ref_draws), seed, noise, map_fn)
    values = _bootstrap_dks(model, mu, tau, int(n), int(outer_reps), int(B), seed, noise, ref, map_fn)
    return DkSummary.from_values(values)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log d_K on log n."""

    slope: float
    intercept: float
    r2: float
    floored: bool = False


def fit_rate(ns, dks, floor: float | None = None) -> RateFit:
    """Log-log slope of distance against sample size.

    Nonpositive distances cannot be logged; when a floor is supplied they are
    replaced by it (and the fit flagged), otherwise they are an error.  A
    constant response gives slope 0 with r2 = 1 by convention.
    """
    ns = np.asarray(ns, dtype=np.float64).ravel()
    dks = np.asarray(dks, dtype=np.float64).ravel()
    if ns.size != dks.size or ns.size < 2:
        raise ValueError("need equally many ns and dks, at least 2 points")
    if np.any(ns <= 0):
        raise ValueError("sample sizes must be positive")
    floored = False
    if np.any(dks <= 0):
        if floor is None:
            raise ValueError("nonpositive distances require a floor")
        dks = np.maximum(dks, float(floor))
        floored = True
    x = np.log(ns)
    y = np.log(dks)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(coef[0]), intercept=float(coef[1]), r2=r2, floored=floored)


@dataclass(frozen=True)
class RateStudyConfig:
    """One rate study: a fixed model probed across increasing sample sizes.

    The reference population dominates the MC noise, hence the requirement
    ref_draws >= 10 * B.  Noise defaults to symmetric-exponential so the
    Gaussian approximation is not an exact identity.
    """

    model: CovarianceModel
    ns: tuple
    tau: float
    mu: float = 0.0
    ref_draws: int = 20000
    outer_reps: int = 50
    B: int = 2000
    seed: int = 0
    noise: str = "symmetric-exponential"

    def __post_init__(self):
        ns = tuple(int(v) for v in self.ns)
        if len(ns) < 2 or any(v < 2 for v in ns):
            raise ValueError("ns must contain at least two sample sizes, all >= 2")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("ns must be strictly increasing")
        object.__setattr__(self, "ns", ns)
        if not 0.0 <= float(self.tau) <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if int(self.ref_draws) < 10 * int(self.B):
            raise ValueError("ref_draws must be at least 10 * B")
        _check_noise(self.noise)
        check_seed(self.seed)

    @property
    def floor(self) -> float:
        return 1.0 / (2.0 * self.ref_draws)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "ns": [int(v) for v in self.ns],
            "tau": float(self.tau),
            "mu": float(self.mu),
            "ref_draws": int(self.ref_draws),
            "outer_reps": int(self.outer_reps),
            "B": int(self.B),
            "seed": int(self.seed),
            "noise": self.noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateStudyConfig":
        d = dict(d)
        d["model"] = CovarianceModel.from_dict(d["model"])
        d["ns"] = tuple(int(v) for v in d["ns"])
        return cls(**d)


@dataclass(frozen=True)
class RateStudyResult:
    """Per-n distances plus the log-log fit of the median bootstrap distance."""

    per_n: list
    fit: RateFit
    gauss_fit: RateFit
    floor: float
    config: RateStudyConfig

    def to_json_dict(self) -> dict:
        return {
            "per_n": self.per_n,
            "fit": {"slope": self.fit.slope, "intercept": self.fit.intercept,
                    "r2": self.fit.r2, "floored": self.fit.floored},
            "gauss_fit": {"slope": self.gauss_fit.slope, "intercept": self.gauss_fit.intercept,
                          "r2": self.gauss_fit.r2, "floored": self.gauss_fit.floored},
            "noise_floor": self.floor,
            "config": self.config.to_dict(),
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        rows = [(r["n"], r["dk_gauss"], r["dk_boot_median"], r["dk_boot_q90"]) for r in self.per_n]
        write_csv(out / "rates.csv", ("n", "dk_gauss", "dk_boot_median", "dk_boot_q90"), rows)
        dump_json(out / "rates.json", self.to_json_dict())


def run_rate_study(cfg: RateStudyConfig, map_fn=map) -> RateStudyResult:
    """Estimate both distances at every n and fit the decay of the medians.

    The reference population at each n is built once and shared between the
    Gaussian and bootstrap comparisons; its seed derives from (seed, n), so
    the per-n results match standalone estimate_dk_* calls with that seed.
    """
    per_n = []
    medians = []
    gauss_dks = []
    for n in cfg.ns:
        level_seed = derive_seed(cfg.seed, RATE_LEVEL, n)
        ref = _reference_population(cfg.model, cfg.mu, cfg.tau, n, cfg.ref_draws,
                                    level_seed, cfg.noise, map_fn)
        gauss = gaussian_max_draws(cfg.model, PartialStdConfig(tau=cfg.tau),
                                   cfg.ref_draws, level_seed)
        dk_gauss = ks_two_sample(ref, gauss)
        values = _bootstrap_dks(cfg.model, cfg.mu, cfg.tau, n, cfg.outer_reps, cfg.B,
                                level_seed, cfg.noise, ref, map_fn)
        summary = DkSummary.from_values(values)
        per_n.append({"n": int(n), "dk_gauss": dk_gauss,
                      "dk_boot_median": summary.median, "dk_boot_q90": summary.q90})
        medians.append(summary.median)
        gauss_dks.append(dk_gauss)
    fit = fit_rate(cfg.ns, medians, floor=cfg.floor)
    gauss_fit = fit_rate(cfg.ns, gauss_dks, floor=cfg.floor)
    return RateStudyResult(per_n=per_n, fit=fit, gauss_fit=gauss_fit, floor=cfg.floor, config=cfg)
