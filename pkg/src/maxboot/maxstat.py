"""Partially standardized max/min statistics and the Gaussian multiplier bootstrap.

The statistic for a null mean ``mu0`` is ``S_j = sqrt(n) * (mean_j - mu0_j)``
divided by ``sigma_j**tau``.  ``tau = 0`` leaves the coordinates raw,
``tau = 1`` fully studentizes, anything in between interpolates.  Whenever a
reference scale is exactly zero the standardized coordinate is defined to be
zero rather than NaN; this module applies that convention everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._ioutil import write_csv
from ._streams import GAUSS_COUNTERPART, MULTIPLIER, check_seed, stream
from .model import DEGENERATE_REL_TOL, CovarianceModel, SampleMatrix, as_sample

__all__ = [
    "ColumnStats",
    "PartialStdConfig",
    "BootstrapDraws",
    "column_stats",
    "max_min_stat",
    "bootstrap_draws",
    "gaussian_max_draws",
    "empirical_quantile",
]

# Cap on the element count of any temporary block (multiplier matrices and
# raw draw blocks); keeps peak memory near 30 MB regardless of B.
_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class ColumnStats:
    """Column moments of a sample: mean, scale estimates, and covariance.

    ``cov_hat`` uses the 1/n normalization, so ``sigma_hat[j]**2`` equals
    ``cov_hat[j, j]`` exactly.
    """

    mean: np.ndarray
    sigma_hat: np.ndarray
    cov_hat: np.ndarray

    @property
    def p(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class PartialStdConfig:
    """Standardization exponent plus the scale vector it applies to.

    ``sigma = None`` means "estimate from the data" (use ``sigma_hat``);
    a vector pins the reference scales, e.g. to the model truth.
    """

    tau: float
    sigma: np.ndarray | None = None

    def __post_init__(self):
        tau = float(self.tau)
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        object.__setattr__(self, "tau", tau)
        if self.sigma is not None:
            sig = np.asarray(self.sigma, dtype=np.float64)
            if sig.ndim != 1:
                raise ValueError("sigma must be a 1-d vector")
            if not np.all(np.isfinite(sig)) or np.any(sig < 0):
                raise ValueError("sigma entries must be finite and nonnegative")
            object.__setattr__(self, "sigma", sig)

    def resolve_sigma(self, sigma_hat: np.ndarray) -> np.ndarray:
        if self.sigma is None:
            return sigma_hat
        if self.sigma.shape != sigma_hat.shape:
            raise ValueError(
                f"sigma has length {self.sigma.shape[0]}, data has p={sigma_hat.shape[0]}"
            )
        return self.sigma


@dataclass(frozen=True)
class BootstrapDraws:
    """B multiplier-bootstrap replicates of the min and max statistics."""

    lows: np.ndarray
    highs: np.ndarray
    tau: float
    seed: int

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=np.float64)
        highs = np.asarray(self.highs, dtype=np.float64)
        if lows.ndim != 1 or lows.shape != highs.shape or lows.shape[0] < 1:
            raise ValueError("lows and highs must be equal-length vectors with B >= 1")
        if not (np.all(np.isfinite(lows)) and np.all(np.isfinite(highs))):
            raise ValueError("bootstrap draws must be finite")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def B(self) -> int:
        return self.lows.shape[0]

    def to_csv(self, path) -> None:
        """Write (b, L_star, M_star) rows plus a JSON sidecar with the seed.

        The sidecar lands next to the CSV with a ``.json`` suffix so a saved
        draw file is always reproducible.
        """
        path = Path(path)
        rows = zip(range(1, self.B + 1), self.lows, self.highs)
        write_csv(path, ("b", "L_star", "M_star"), rows)
        sidecar = {"seed": int(self.seed), "tau": float(self.tau), "B": int(self.B)}
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "BootstrapDraws":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(lows=data[:, 1], highs=data[:, 2], tau=meta["tau"], seed=meta["seed"])


def _column_mean_sigma(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # diagonal of the 1/n covariance without forming the p x p matrix
    mean = rows.mean(axis=0)
    var = np.mean((rows - mean) ** 2, axis=0)
    return mean, np.sqrt(var)


def _degenerate_mask(sigma: np.ndarray) -> np.ndarray:
    top = float(sigma.max(initial=0.0))
    return sigma <= DEGENERATE_REL_TOL * top if top > 0 else np.ones(sigma.shape, dtype=bool)


def _standardize_extremes(vals: np.ndarray, sigma: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Min and max over coordinates of vals / sigma**tau, zeroing degenerate columns.

    ``vals`` is (B, p); returns (lows, highs) of length B.
    """
    if tau == 0.0:
        out = vals
    else:
        dead = _degenerate_mask(sigma)
        denom = np.where(dead, 1.0, sigma) ** tau
        out = vals / denom
        if dead.any():
            out[:, dead] = 0.0
    return out.min(axis=1), out.max(axis=1)


def column_stats(X) -> ColumnStats:
    """Mean vector, per-column scales, and the 1/n sample covariance."""
    X = as_sample(X)
    rows = X.rows
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / X.n
    cov = (cov + cov.T) / 2.0
    return ColumnStats(mean=mean, sigma_hat=np.sqrt(np.diag(cov).clip(min=0.0)), cov_hat=cov)


def max_min_stat(X, mu0, cfg: PartialStdConfig) -> tuple[float, float]:
    """(L, M): min and max of the partially standardized mean deviations.

    Coordinates whose reference scale is zero are defined to contribute 0
    when ``tau > 0``; if every scale is zero the statistic is degenerate and
    a ValueError is raised.
    """
    X = as_sample(X)
    mean, sigma_hat = _column_mean_sigma(X.rows)
    mu0 = np.broadcast_to(np.asarray(mu0, dtype=np.float64), mean.shape)
    sigma = cfg.resolve_sigma(sigma_hat)
    s = math.sqrt(X.n) * (mean - mu0)
    if cfg.tau > 0.0 and not np.any(sigma > 0):
        raise ValueError("all reference scales are zero: statistic is degenerate for tau > 0")
    lows, highs = _standardize_extremes(s[None, :], sigma, cfg.tau)
    return float(lows[0]), float(highs[0])


def _multiplier_sstar(X: SampleMatrix, B: int, seed: int):
    """Yield blocks of S* = Xi @ centered / sqrt(n) from the multiplier stream.

    Multipliers are drawn row-major from one sequential stream, so any block
    size produces bitwise identical rows; callers may concatenate blocks or
    reduce them in place without affecting determinism.
    """
    centered = X.rows - X.rows.mean(axis=0)
    n = X.n
    gen = stream(seed, MULTIPLIER)
    block = max(1, _BLOCK_ELEMS // max(n, X.p))
    scale = 1.0 / math.sqrt(n)
    done = 0
    while done < B:
        bk = min(block, B - done)
        xi = gen.standard_normal((bk, n))
        yield (xi @ centered) * scale
        done += bk


def bootstrap_draws(X, tau: float, B: int, seed: int) -> BootstrapDraws:
    """Gaussian-multiplier bootstrap of (L, M): S* = (1/sqrt(n)) sum_i xi_i (X_i - mean).

    Conditionally on the data, S* ~ N(0, cov_hat).  Standardization always
    uses the estimated sigma_hat; draws are deterministic in (X, tau, B, seed)
    and independent of any thread count.
    """
    X = as_sample(X)
    if X.n < 2:
        raise ValueError("bootstrap requires n >= 2")
    B = int(B)
    if B < 1:
        raise ValueError("B must be >= 1")
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    seed = check_seed(seed)
    _, sigma_hat = _column_mean_sigma(X.rows)
    lows = np.empty(B)
    highs = np.empty(B)
    done = 0
    for s_star in _multiplier_sstar(X, B, seed):
        bk = s_star.shape[0]
        lows[done:done + bk], highs[done:done + bk] = _standardize_extremes(s_star, sigma_hat, tau)
        done += bk
    return BootstrapDraws(lows=lows, highs=highs, tau=tau, seed=seed)


def gaussian_max_draws(model: CovarianceModel, cfg: PartialStdConfig, B: int, seed: int) -> np.ndarray:
    """B draws of the Gaussian counterpart max_j S_j / sigma_j**tau, S ~ N(0, Sigma)."""
    B = int(B)
    if B < 1:
        raise ValueError("B must be >= 1")
    seed = check_seed(seed)
    sigma_ref = cfg.resolve_sigma(model.sigma)
    gen = stream(seed, GAUSS_COUNTERPART)
    p = model.p
    root = None if model.is_diagonal else model.sqrt()
    block = max(1, _BLOCK_ELEMS // p)
    out = np.empty(B)
    done = 0
    while done < B:
        bk = min(block, B - done)
        z = gen.standard_normal((bk, p))
        s = z * model.sigma if root is None else z @ root
        _, out[done:done + bk] = _standardize_extremes(s, sigma_ref, cfg.tau)
        done += bk
    return out


def empirical_quantile(samples, q: float) -> float:
    """The ceil(q*B)-th order statistic, clamped to [1, B]."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    a = np.asarray(samples, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("samples must be nonempty")
    k = min(max(math.ceil(q * a.size), 1), a.size)
    return float(np.partition(a, k - 1)[k - 1])
