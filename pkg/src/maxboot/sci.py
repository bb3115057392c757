"""Simultaneous confidence intervals from bootstrap quantiles.

An SCI set at level ``1 - rho`` pairs the ``rho/2`` quantile of the
bootstrapped min statistic with the ``1 - rho/2`` quantile of the
bootstrapped max statistic:

    I_j = [mean_j - q_hi * sigma_j**tau / sqrt(n),
           mean_j - q_lo * sigma_j**tau / sqrt(n)]

The exponent tau can be fixed or chosen from a grid by minimizing the mean
interval width.  Grid selection reuses one shared set of multiplier draws,
rescaled per tau: with equal scales every tau then produces bitwise equal
widths and the tie-break (smallest tau) applies exactly, and the returned
set is identical to build_sci at the selected tau with the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._ioutil import dump_json, write_csv
from ._streams import check_seed
from .maxstat import (
    _column_mean_sigma,
    _multiplier_sstar,
    _standardize_extremes,
    bootstrap_draws,
    empirical_quantile,
)
from .model import as_sample

__all__ = ["SciSet", "MeanTestResult", "build_sci", "select_tau", "test_mean"]

# Below this many draws per tail the empirical quantile is unreliable; the
# resulting set carries a warning flag rather than failing.
QUANTILE_RELIABLE_FACTOR = 20.0


@dataclass(frozen=True)
class SciSet:
    """Simultaneous confidence intervals, possibly over a subset of coordinates.

    ``indices`` holds the 0-based positions of the covered coordinates in the
    original vector (the identity for an unrestricted set).  An empty set is
    legal and represents vacuous coverage.
    """

    lo: np.ndarray
    hi: np.ndarray
    center: np.ndarray
    sigma_hat: np.ndarray
    indices: np.ndarray
    n: int
    tau: float
    rho: float
    q_lo: float
    q_hi: float
    B: int
    seed: int
    quantile_warning: bool = False

    def __post_init__(self):
        for name in ("lo", "hi", "center", "sigma_hat"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be a 1-d vector")
            object.__setattr__(self, name, arr)
        idx = np.asarray(self.indices, dtype=np.int64)
        sizes = {self.lo.size, self.hi.size, self.center.size, self.sigma_hat.size, idx.size}
        if len(sizes) != 1:
            raise ValueError("interval fields must have equal length")
        object.__setattr__(self, "indices", idx)
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")

    @property
    def size(self) -> int:
        return self.lo.shape[0]

    @property
    def empty(self) -> bool:
        return self.size == 0

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, target) -> np.ndarray:
        """Coordinatewise membership of target (aligned with this set's indices)."""
        t = np.broadcast_to(np.asarray(target, dtype=np.float64), self.lo.shape)
        return (self.lo <= t) & (t <= self.hi)

    def covers(self, target) -> bool:
        """Simultaneous coverage; vacuously true for an empty set."""
        return bool(np.all(self.contains(target)))

    def to_csv(self, path) -> None:
        rows = zip(self.indices + 1, self.lo, self.hi, self.sigma_hat, self.widths)
        write_csv(path, ("j", "lo", "hi", "sigma_hat", "width"), rows)

    def report(self) -> dict:
        def _num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "tau": float(self.tau),
            "rho": float(self.rho),
            "B": int(self.B),
            "seed": int(self.seed),
            "q_lo": _num(self.q_lo),
            "q_hi": _num(self.q_hi),
            "n": int(self.n),
            "coords": int(self.size),
            "mean_width": _num(np.mean(self.widths)) if self.size else None,
            "empty": self.empty,
            "quantile_warning": bool(self.quantile_warning),
        }

    def write_report(self, path) -> None:
        dump_json(path, self.report())


@dataclass(frozen=True)
class MeanTestResult:
    reject: bool
    sci: SciSet
    offending: np.ndarray


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return rho


def _quantile_pair(lows: np.ndarray, highs: np.ndarray, rho: float) -> tuple[float, float]:
    return empirical_quantile(lows, rho / 2.0), empirical_quantile(highs, 1.0 - rho / 2.0)


def _assemble(mean, sigma_hat, n, tau, rho, q_lo, q_hi, B, seed, indices=None) -> SciSet:
    scale = sigma_hat ** tau / math.sqrt(n)
    if indices is None:
        indices = np.arange(mean.shape[0])
    return SciSet(
        lo=mean - q_hi * scale,
        hi=mean - q_lo * scale,
        center=mean,
        sigma_hat=sigma_hat,
        indices=indices,
        n=int(n),
        tau=float(tau),
        rho=float(rho),
        q_lo=float(q_lo),
        q_hi=float(q_hi),
        B=int(B),
        seed=int(seed),
        quantile_warning=bool(B < QUANTILE_RELIABLE_FACTOR / rho),
    )


def build_sci(X, tau: float, B: int, rho: float, seed: int) -> SciSet:
    """Level 1 - rho simultaneous intervals from B multiplier-bootstrap draws."""
    X = as_sample(X)
    if X.n < 2:
        raise ValueError("SCI construction requires n >= 2")
    rho = _check_rho(rho)
    draws = bootstrap_draws(X, tau, B, seed)
    mean, sigma_hat = _column_mean_sigma(X.rows)
    q_lo, q_hi = _quantile_pair(draws.lows, draws.highs, rho)
    return _assemble(mean, sigma_hat, X.n, draws.tau, rho, q_lo, q_hi, draws.B, draws.seed)


def select_tau(X, grid, B: int, rho: float, seed: int) -> tuple[float, SciSet]:
    """Pick the grid tau minimizing mean interval width; ties go to the smallest tau.

    All grid values are evaluated against one shared multiplier draw set, so
    the winner's SciSet coincides with build_sci(X, tau_star, B, rho, seed).
    """
    X = as_sample(X)
    if X.n < 2:
        raise ValueError("SCI construction requires n >= 2")
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

    mean, sigma_hat = _column_mean_sigma(X.rows)
    s_star = np.concatenate(list(_multiplier_sstar(X, B, seed)), axis=0)
    sqrt_n = math.sqrt(X.n)

    best = None
    for tau in sorted(float(t) for t in set(taus.tolist())):
        lows, highs = _standardize_extremes(s_star, sigma_hat, tau)
        q_lo, q_hi = _quantile_pair(lows, highs, rho)
        mean_width = (q_hi - q_lo) * float(np.mean(sigma_hat ** tau)) / sqrt_n
        if best is None or mean_width < best[0]:
            best = (mean_width, tau, q_lo, q_hi)

    _, tau_star, q_lo, q_hi = best
    sci = _assemble(mean, sigma_hat, X.n, tau_star, rho, q_lo, q_hi, B, seed)
    return tau_star, sci


def test_mean(X, mu0, tau: float, B: int, rho: float, seed: int) -> MeanTestResult:
    """Reject the mean value mu0 when some coordinate falls outside the SCI."""
    sci = build_sci(X, tau, B, rho, seed)
    mu0 = np.broadcast_to(np.asarray(mu0, dtype=np.float64), sci.lo.shape)
    inside = sci.contains(mu0)
    offending = np.flatnonzero(~inside)
    return MeanTestResult(reject=offending.size > 0, sci=sci, offending=offending)
