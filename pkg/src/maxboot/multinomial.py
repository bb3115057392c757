"""Multinomial cell inference: Zipf models, cell filtering, and the restricted bootstrap.

Cell proportions are Bernoulli means with variance pi_j(1 - pi_j), so a
Zipf-type probability vector automatically carries variance decay.  Inference
restricts to cells with enough observations (the random set J-hat) and
bootstraps the max/min statistics over that set in count form: multipliers
are accumulated per cell through one cumulative sum, never materializing an
n x p indicator matrix.

Trials are kept in cell-sorted order (all cell-1 trials first, then cell 2,
and so on).  The count-form bootstrap consumes its multiplier stream in that
order, which makes it interchangeable with the matrix-form bootstrap applied
to indicator rows sorted the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._ioutil import dump_json, write_csv
from ._streams import MULTIPLIER, SIM_BOOT, SIM_DATA, TRIAL_UNIFORMS, check_seed, derive_seed, stream
from .maxstat import _BLOCK_ELEMS, _standardize_extremes
from .sci import SciSet, _assemble, _check_rho, _quantile_pair

__all__ = [
    "MultinomialModel",
    "CellCounts",
    "CellFilterRule",
    "zipf_model",
    "sample_counts",
    "select_cells",
    "restricted_bootstrap_sci",
    "select_tau_restricted",
    "min_eig_lower_bound",
    "MultinomialExperimentConfig",
    "MultinomialReport",
    "run_multinomial_experiment",
]

_MAX_TASKS = 64


@dataclass(frozen=True)
class MultinomialModel:
    """A probability vector over p cells; zipf_eta records Zipf provenance."""

    pi: np.ndarray
    zipf_eta: float | None = None

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        if pi.ndim != 1 or pi.size < 1:
            raise ValueError("pi must be a nonempty vector")
        if np.any(pi < 0) or not np.all(np.isfinite(pi)):
            raise ValueError("pi entries must be finite and nonnegative")
        if abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError(f"pi must sum to 1 within 1e-12, got {pi.sum()!r}")
        object.__setattr__(self, "pi", pi)

    @property
    def p(self) -> int:
        return self.pi.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        """Per-cell standard deviations sqrt(pi_j (1 - pi_j))."""
        return np.sqrt(self.pi * (1.0 - self.pi))

    def to_dict(self) -> dict:
        if self.zipf_eta is not None:
            return {"kind": "zipf", "p": self.p, "eta": float(self.zipf_eta)}
        return {"kind": "explicit", "pi": [float(x) for x in self.pi]}

    @classmethod
    def from_dict(cls, d: dict) -> "MultinomialModel":
        kind = d.get("kind")
        if kind == "zipf":
            return zipf_model(int(d["p"]), float(d["eta"]))
        if kind == "explicit":
            return cls(pi=np.asarray(d["pi"], dtype=np.float64))
        raise ValueError(f"unknown multinomial model kind: {kind!r}")


def zipf_model(p: int, eta: float) -> MultinomialModel:
    """pi_j proportional to j**(-eta); eta >= 1."""
    p = int(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    eta = float(eta)
    if eta < 1.0:
        raise ValueError(f"eta must be >= 1, got {eta}")
    raw = np.arange(1, p + 1, dtype=np.float64) ** (-eta)
    return MultinomialModel(pi=raw / raw.sum(), zipf_eta=eta)


@dataclass(frozen=True)
class CellCounts:
    """Tally of n categorical trials over p cells."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a nonempty vector")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        n = int(self.n)
        if counts.sum() != n:
            raise ValueError(f"counts sum to {counts.sum()}, expected n={n}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", n)

    @property
    def p(self) -> int:
        return self.counts.shape[0]

    @property
    def pi_hat(self) -> np.ndarray:
        return self.counts / self.n

    def to_csv(self, path) -> None:
        write_csv(path, ("j", "count"), zip(range(1, self.p + 1), self.counts))


@dataclass(frozen=True)
class CellFilterRule:
    """Which cells enter inference: the theoretical threshold or a minimum count."""

    kind: str
    threshold: int | None = None

    def __post_init__(self):
        if self.kind not in ("theoretical", "min_count"):
            raise ValueError(f"unknown filter rule kind: {self.kind!r}")
        if self.kind == "min_count":
            if self.threshold is None or int(self.threshold) < 1:
                raise ValueError("min_count requires an integer threshold >= 1")
            object.__setattr__(self, "threshold", int(self.threshold))
        elif self.threshold is not None:
            raise ValueError("theoretical rule takes no threshold")

    @classmethod
    def theoretical(cls) -> "CellFilterRule":
        return cls(kind="theoretical")

    @classmethod
    def min_count(cls, threshold: int = 5) -> "CellFilterRule":
        return cls(kind="min_count", threshold=threshold)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.threshold is not None:
            d["threshold"] = self.threshold
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CellFilterRule":
        return cls(kind=d["kind"], threshold=d.get("threshold"))


def sample_counts(model: MultinomialModel, n: int, seed: int) -> CellCounts:
    """Tally n categorical trials, one inverse-CDF lookup per uniform draw."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = check_seed(seed)
    u = stream(seed, TRIAL_UNIFORMS).random(n)
    cum = np.cumsum(model.pi)
    idx = np.searchsorted(cum, u, side="right")
    # u can only reach past the last edge through float shortfall of the cumsum
    idx = np.minimum(idx, model.p - 1)
    return CellCounts(counts=np.bincount(idx, minlength=model.p), n=n)


def select_cells(counts: CellCounts, rule: CellFilterRule) -> np.ndarray:
    """0-based indices of the cells admitted to inference (possibly empty)."""
    if counts.n < 2:
        raise ValueError("cell selection requires n >= 2")
    if rule.kind == "theoretical":
        cutoff = math.sqrt(math.log(counts.n) / counts.n)
        return np.flatnonzero(counts.pi_hat >= cutoff)
    return np.flatnonzero(counts.counts >= rule.threshold)


def _count_sstar(counts: CellCounts, kept: np.ndarray, B: int, seed: int):
    """Yield (block, kept) arrays of bootstrap sums S* in count form.

    One multiplier per trial, trials in cell-sorted order; per-cell sums come
    from a cumulative sum, and the centering term reuses the grand total.
    """
    n = counts.n
    edges = np.concatenate(([0], np.cumsum(counts.counts)))
    lo_idx = edges[kept]
    hi_idx = edges[kept + 1]
    pi_kept = counts.counts[kept] / n
    gen = stream(seed, MULTIPLIER)
    scale = 1.0 / math.sqrt(n)
    block = max(1, _BLOCK_ELEMS // n)
    done = 0
    while done < B:
        bk = min(block, B - done)
        xi = gen.standard_normal((bk, n))
        csum = np.concatenate([np.zeros((bk, 1)), np.cumsum(xi, axis=1)], axis=1)
        seg = csum[:, hi_idx] - csum[:, lo_idx]
        yield (seg - csum[:, n:n + 1] * pi_kept) * scale
        done += bk


def _validate_boot_args(tau: float, B: int, rho: float, seed: int) -> tuple[float, int, float, int]:
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    B = int(B)
    if B < 1:
        raise ValueError("B must be >= 1")
    return tau, B, _check_rho(rho), check_seed(seed)


def _empty_sci(n: int, tau: float, rho: float, B: int, seed: int) -> SciSet:
    empty = np.empty(0)
    return SciSet(lo=empty, hi=empty, center=empty, sigma_hat=empty,
                  indices=np.empty(0, dtype=np.int64), n=int(n), tau=tau, rho=rho,
                  q_lo=math.nan, q_hi=math.nan, B=int(B), seed=int(seed),
                  quantile_warning=bool(B < 20.0 / rho))


def restricted_bootstrap_sci(counts: CellCounts, rule: CellFilterRule, tau: float,
                             B: int, rho: float, seed: int) -> SciSet:
    """SCI for the cell probabilities over the selected set, bootstrapped in count form.

    Scales are the Bernoulli estimates sqrt(pi_hat (1 - pi_hat)).  An empty
    selected set yields an empty SciSet (its ``empty`` flag is the degeneracy
    signal, and its coverage is vacuous).
    """
    tau, B, rho, seed = _validate_boot_args(tau, B, rho, seed)
    kept = select_cells(counts, rule)
    if kept.size == 0:
        return _empty_sci(counts.n, tau, rho, B, seed)
    pi_kept = counts.counts[kept] / counts.n
    sigma_kept = np.sqrt(pi_kept * (1.0 - pi_kept))
    lows = np.empty(B)
    highs = np.empty(B)
    done = 0
    for s_star in _count_sstar(counts, kept, B, seed):
        bk = s_star.shape[0]
        lows[done:done + bk], highs[done:done + bk] = _standardize_extremes(s_star, sigma_kept, tau)
        done += bk
    q_lo, q_hi = _quantile_pair(lows, highs, rho)
    return _assemble(pi_kept, sigma_kept, counts.n, tau, rho, q_lo, q_hi, B, seed, indices=kept)


def select_tau_restricted(counts: CellCounts, rule: CellFilterRule, grid, B: int,
                          rho: float, seed: int) -> tuple[float, SciSet]:
    """Minimum-mean-width tau over the grid for the restricted SCI.

    Shares one multiplier draw set across the grid (ties then break exactly
    to the smallest tau), so the winner equals restricted_bootstrap_sci at
    tau_star with the same seed.  Empty selected set -> (nan, empty SciSet).
    """
    rho = _check_rho(rho)
    B = int(B)
    if B < 1:
        raise ValueError("B must be >= 1")
    seed = check_seed(seed)
    taus = np.asarray(grid, dtype=np.float64).ravel()
    if taus.size == 0:
        raise ValueError("tau grid must be nonempty")
    if not np.all((taus >= 0.0) & (taus <= 1.0)):
        raise ValueError("tau grid values must lie in [0, 1]")

    kept = select_cells(counts, rule)
    if kept.size == 0:
        return math.nan, _empty_sci(counts.n, float(taus.min()), rho, B, seed)
    pi_kept = counts.counts[kept] / counts.n
    sigma_kept = np.sqrt(pi_kept * (1.0 - pi_kept))
    s_star = np.concatenate(list(_count_sstar(counts, kept, B, seed)), axis=0)
    sqrt_n = math.sqrt(counts.n)

    best = None
    for tau in sorted(float(t) for t in set(taus.tolist())):
        lows, highs = _standardize_extremes(s_star, sigma_kept, tau)
        q_lo, q_hi = _quantile_pair(lows, highs, rho)
        mean_width = (q_hi - q_lo) * float(np.mean(sigma_kept ** tau)) / sqrt_n
        if best is None or mean_width < best[0]:
            best = (mean_width, tau, q_lo, q_hi)

    _, tau_star, q_lo, q_hi = best
    sci = _assemble(pi_kept, sigma_kept, counts.n, tau_star, rho, q_lo, q_hi, B, seed, indices=kept)
    return tau_star, sci


def min_eig_lower_bound(model: MultinomialModel, k: int) -> float:
    """Gershgorin-type lower bound on the smallest eigenvalue of the top-k cell covariance.

    With probabilities sorted in decreasing order, the covariance of the
    leading k indicator coordinates has min eigenvalue at least
    pi_(k) * (1 - sum_{j<=k} pi_(j)); k must be strictly less than p so the
    residual mass is positive.
    """
    k = int(k)
    if not 1 <= k < model.p:
        raise ValueError(f"k must satisfy 1 <= k < p={model.p}, got {k}")
    top = np.sort(model.pi)[::-1][:k]
    return float(top[k - 1] * (1.0 - top.sum()))


@dataclass(frozen=True)
class MultinomialExperimentConfig:
    """Monte Carlo coverage study over the random selected-cell set."""

    model: MultinomialModel
    n: int
    B: int = 500
    rho: float = 0.05
    tau_grid: tuple = tuple(np.round(np.linspace(0.0, 1.0, 11), 1))
    rule: CellFilterRule = CellFilterRule.min_count(5)
    n_sims: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError("n must be >= 2")
        if int(self.n_sims) < 1:
            raise ValueError("n_sims must be >= 1")
        _check_rho(self.rho)
        check_seed(self.seed)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "n": int(self.n), "B": int(self.B), "rho": float(self.rho),
            "tau_grid": [float(t) for t in self.tau_grid],
            "rule": self.rule.to_dict(),
            "n_sims": int(self.n_sims), "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MultinomialExperimentConfig":
        d = dict(d)
        d["model"] = MultinomialModel.from_dict(d["model"])
        if "rule" in d:
            d["rule"] = CellFilterRule.from_dict(d["rule"])
        if "tau_grid" in d:
            d["tau_grid"] = tuple(float(t) for t in d["tau_grid"])
        return cls(**d)


@dataclass(frozen=True)
class MultinomialReport:
    """Simultaneous coverage over the random cell set, with per-sim detail rows."""

    coverage: float
    se: float
    n_sims: int
    selected_tau_histogram: dict
    mean_selected_cells: float
    empty_sets: int
    rows: list
    config: MultinomialExperimentConfig

    def to_json_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "se": self.se,
            "n_sims": self.n_sims,
            "selected_tau_histogram": {str(k): v for k, v in sorted(self.selected_tau_histogram.items())},
            "mean_selected_cells": self.mean_selected_cells,
            "empty_sets": self.empty_sets,
            "config": self.config.to_dict(),
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_csv(out / "per_sim.csv",
                  ("sim_id", "covered", "j_hat_size", "selected_tau", "cell_covered_frac"),
                  self.rows)
        dump_json(out / "report.json", self.to_json_dict())


def _multinomial_task(args) -> list:
    cfg, sim_ids = args
    out = []
    for i in sim_ids:
        counts = sample_counts(cfg.model, cfg.n, derive_seed(cfg.seed, SIM_DATA, i))
        boot_seed = derive_seed(cfg.seed, SIM_BOOT, i)
        tau_star, sci = select_tau_restricted(
            counts, cfg.rule, cfg.tau_grid, cfg.B, cfg.rho, boot_seed)
        if sci.empty:
            out.append((i + 1, True, 0, math.nan, math.nan))
            continue
        inside = sci.contains(cfg.model.pi[sci.indices])
        out.append((i + 1, bool(np.all(inside)), sci.size, tau_star, float(np.mean(inside))))
    return out


def run_multinomial_experiment(cfg: MultinomialExperimentConfig, map_fn=map) -> MultinomialReport:
    """Coverage of the restricted SCI over n_sims resampled datasets.

    Data seeds derive from the simulation index only, so runs differing in
    tau_grid (say, selection vs fixed tau = 1) see identical datasets.
    Coverage is simultaneous over the selected set; an empty set counts as
    covered (vacuously) and is tallied separately.
    """
    n_tasks = min(cfg.n_sims, _MAX_TASKS)
    chunks = [(cfg, range(t, cfg.n_sims, n_tasks)) for t in range(n_tasks)]
    rows = [row for chunk in map_fn(_multinomial_task, chunks) for row in chunk]
    rows.sort(key=lambda r: r[0])

    covered = sum(1 for r in rows if r[1])
    rate = covered / cfg.n_sims
    hist: dict = {}
    for r in rows:
        if math.isfinite(r[3]):
            hist[r[3]] = hist.get(r[3], 0) + 1
    return MultinomialReport(
        coverage=rate,
        se=math.sqrt(rate * (1.0 - rate) / cfg.n_sims),
        n_sims=cfg.n_sims,
        selected_tau_histogram=hist,
        mean_selected_cells=float(np.mean([r[2] for r in rows])),
        empty_sets=sum(1 for r in rows if r[2] == 0),
        rows=rows,
        config=cfg,
    )
