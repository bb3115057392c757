"""Covariance models, synthetic data generation, and structural diagnostics.

The data-generating process throughout the package is X_i = mu + A z_i with
A the symmetric square root of Sigma = D_sigma R D_sigma, R a correlation
matrix from one of the stock families, and z_i a vector of i.i.d. standardized
noise coordinates. This module owns the constructors for R and Sigma, the
sampler, and the diagnostics used to describe a model's variance-decay and
correlation structure (sorted sigma profile, fitted decay exponent, effective
rank, weak-l_r norms, and the Schur-Horn diagonal inequality).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from ._ioutil import fmt17
from . import _streams

__all__ = [
    "NotPsdError",
    "CorrelationSpec",
    "CovarianceModel",
    "SampleMatrix",
    "DecayDiagnostics",
    "SchurHornCheck",
    "NOISE_KINDS",
    "build_correlation",
    "matrix_sqrt",
    "generate_sample",
    "power_sigma",
    "weak_lr_norm",
    "effective_rank",
    "theory_indices",
    "decay_diagnostics",
    "schur_horn_check",
]

# Relative eigenvalue clip tolerance: eigenvalues in [-eps, 0) with
# eps = PSD_CLIP_REL * ||S||_op are treated as rounding noise and clipped to 0.
PSD_CLIP_REL = 1e-10

# sigma_hat entries below this times the largest sigma_hat count as zero.
DEGENERATE_REL_TOL = 1e-12

NOISE_KINDS = ("gaussian", "scaled-uniform", "symmetric-exponential")

_SQRT3 = math.sqrt(3.0)
_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)  # unit-variance Laplace

_CORR_KINDS = ("identity", "autoregressive", "algebraic", "banded", "multinomial", "explicit")


class NotPsdError(ArithmeticError):
    """A matrix required to be positive semidefinite is not, beyond clip tolerance."""


# ---------------------------------------------------------------------------
# correlation families


@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    """One of the stock correlation families, or an explicit matrix.

    Use the classmethod constructors; parameter validity is checked eagerly,
    dimension compatibility when a matrix is realized.
    """

    kind: str
    rho0: float | None = None
    gamma: float | None = None
    c0: float | None = None
    pi: tuple[float, ...] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _CORR_KINDS:
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if self.kind == "autoregressive":
            if self.rho0 is None or not 0.0 < self.rho0 < 1.0:
                raise ValueError(f"autoregressive rho0 must lie in (0, 1), got {self.rho0}")
        elif self.kind == "algebraic":
            if self.gamma is None or self.gamma < 2.0:
                raise ValueError(f"algebraic gamma must be >= 2, got {self.gamma}")
        elif self.kind == "banded":
            if self.c0 is None or self.c0 <= 0.0:
                raise ValueError(f"banded c0 must be positive, got {self.c0}")
        elif self.kind == "multinomial":
            if self.pi is None:
                raise ValueError("multinomial correlation needs a probability vector")
            pi = np.asarray(self.pi, dtype=np.float64)
            _validate_probability_vector(pi)
            if pi.size > 1 and pi.max() >= 1.0:
                raise ValueError("multinomial correlation needs every pi_j < 1 when p > 1")
            object.__setattr__(self, "pi", tuple(float(x) for x in pi))
        elif self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit correlation needs a matrix")
            m = np.asarray(self.matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"explicit correlation matrix must be square, got shape {m.shape}")
            scale = max(1.0, float(np.abs(m).max()))
            if np.abs(m - m.T).max() > 1e-8 * scale:
                raise ValueError("explicit correlation matrix is not symmetric")
            if np.abs(np.diag(m) - 1.0).max() > 1e-8:
                raise ValueError("explicit correlation matrix must have unit diagonal")
            if np.abs(m).max() > 1.0 + 1e-8:
                raise ValueError("correlation entries must lie in [-1, 1]")
            object.__setattr__(self, "matrix", m)

    # constructors -----------------------------------------------------
    @classmethod
    def identity(cls) -> "CorrelationSpec":
        return cls("identity")

    @classmethod
    def autoregressive(cls, rho0: float) -> "CorrelationSpec":
        return cls("autoregressive", rho0=float(rho0))

    @classmethod
    def algebraic(cls, gamma: float) -> "CorrelationSpec":
        return cls("algebraic", gamma=float(gamma))

    @classmethod
    def banded(cls, c0: float) -> "CorrelationSpec":
        return cls("banded", c0=float(c0))

    @classmethod
    def multinomial(cls, pi) -> "CorrelationSpec":
        return cls("multinomial", pi=tuple(np.asarray(pi, dtype=np.float64)))

    @classmethod
    def explicit(cls, matrix) -> "CorrelationSpec":
        return cls("explicit", matrix=np.asarray(matrix, dtype=np.float64))

    # serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "autoregressive":
            d["rho0"] = self.rho0
        elif self.kind == "algebraic":
            d["gamma"] = self.gamma
        elif self.kind == "banded":
            d["c0"] = self.c0
        elif self.kind == "multinomial":
            d["pi"] = list(self.pi)
        elif self.kind == "explicit":
            d["matrix"] = self.matrix.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CorrelationSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ValueError("correlation description must be an object with a 'kind' field")
        kind = d["kind"]
        known = {"kind", "rho0", "gamma", "c0", "pi", "matrix"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown correlation fields: {sorted(extra)}")
        if kind == "identity":
            return cls.identity()
        if kind == "autoregressive":
            return cls.autoregressive(_require(d, "rho0"))
        if kind == "algebraic":
            return cls.algebraic(_require(d, "gamma"))
        if kind == "banded":
            return cls.banded(_require(d, "c0"))
        if kind == "multinomial":
            return cls.multinomial(_require(d, "pi"))
        if kind == "explicit":
            return cls.explicit(_require(d, "matrix"))
        raise ValueError(f"unknown correlation kind {kind!r}")


def _require(d: dict, key: str):
    if key not in d:
        raise ValueError(f"correlation kind {d.get('kind')!r} needs field {key!r}")
    return d[key]


def _validate_probability_vector(pi: np.ndarray) -> None:
    if pi.ndim != 1 or pi.size < 1:
        raise ValueError("probability vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(pi)) or pi.min() < 0.0:
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(float(pi.sum()) - 1.0) > 1e-12:
        raise ValueError(f"probabilities must sum to 1 within 1e-12, got {pi.sum()!r}")


def build_correlation(spec: CorrelationSpec, p: int) -> np.ndarray:
    """Realize the p x p correlation matrix R for a CorrelationSpec.

    Always symmetric with unit diagonal. The autoregressive and banded
    families are positive semidefinite for every valid parameter; the
    algebraic family is diagonally dominant for gamma >= 2; the multinomial
    family is the correlation matrix of multinomial indicator coordinates.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if spec.kind == "identity":
        return np.eye(p)
    dist = np.abs(np.subtract.outer(np.arange(p), np.arange(p))).astype(np.float64)
    if spec.kind == "autoregressive":
        return spec.rho0 ** dist
    if spec.kind == "algebraic":
        R = np.eye(p)
        off = dist > 0
        R[off] = 1.0 / (4.0 * dist[off] ** spec.gamma)
        return R
    if spec.kind == "banded":
        return np.maximum(1.0 - dist / spec.c0, 0.0)
    if spec.kind == "multinomial":
        pi = np.asarray(spec.pi, dtype=np.float64)
        if pi.size != p:
            raise ValueError(f"multinomial pi has length {pi.size}, expected p={p}")
        if p == 1:
            return np.ones((1, 1))
        q = np.sqrt(pi / (1.0 - pi))
        R = -np.outer(q, q)
        np.fill_diagonal(R, 1.0)
        return R
    if spec.kind == "explicit":
        if spec.matrix.shape[0] != p:
            raise ValueError(f"explicit matrix has dimension {spec.matrix.shape[0]}, expected p={p}")
        return spec.matrix.copy()
    raise ValueError(f"unknown correlation kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# covariance model and sampling


def power_sigma(p: int, c: float, alpha: float) -> np.ndarray:
    """Standard-deviation profile sigma_j = c * j^(-alpha), j = 1..p."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if c <= 0.0:
        raise ValueError(f"profile constant c must be positive, got {c}")
    return c * np.arange(1, p + 1, dtype=np.float64) ** (-float(alpha))


@dataclass(eq=False)
class CovarianceModel:
    """Sigma = D_sigma R D_sigma with a cached symmetric square root."""

    sigma: np.ndarray
    corr: CorrelationSpec = field(default_factory=CorrelationSpec.identity)
    sigma_rule: tuple[float, float] | None = None  # (c, alpha) when built from a power profile
    _sqrt: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.ndim != 1 or sigma.size < 1:
            raise ValueError("sigma must be a nonempty vector")
        if not np.all(np.isfinite(sigma)) or sigma.min() <= 0.0:
            raise ValueError("sigma entries must be finite and strictly positive")
        self.sigma = sigma
        # surface dimension mismatches at construction, not first use
        if self.corr.kind == "multinomial" and len(self.corr.pi) != sigma.size:
            raise ValueError("multinomial correlation dimension does not match sigma")
        if self.corr.kind == "explicit" and self.corr.matrix.shape[0] != sigma.size:
            raise ValueError("explicit correlation dimension does not match sigma")

    @property
    def p(self) -> int:
        return self.sigma.size

    @property
    def is_diagonal(self) -> bool:
        return self.corr.kind == "identity"

    def correlation(self) -> np.ndarray:
        return build_correlation(self.corr, self.p)

    def covariance(self) -> np.ndarray:
        return self.correlation() * np.outer(self.sigma, self.sigma)

    def sqrt(self) -> np.ndarray:
        """Symmetric square root of Sigma, cached after the first call."""
        if self._sqrt is None:
            if self.is_diagonal:
                self._sqrt = np.diag(self.sigma)
            else:
                self._sqrt = matrix_sqrt(self.covariance())
        return self._sqrt

    @classmethod
    def power(cls, p: int, c: float, alpha: float,
              corr: CorrelationSpec | None = None) -> "CovarianceModel":
        return cls(power_sigma(p, c, alpha), corr or CorrelationSpec.identity(),
                   sigma_rule=(float(c), float(alpha)))

    # serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.sigma_rule is not None:
            sigma: object = {"kind": "power", "c": self.sigma_rule[0], "alpha": self.sigma_rule[1]}
        else:
            sigma = self.sigma.tolist()
        return {"p": self.p, "corr": self.corr.to_dict(), "sigma": sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceModel":
        if not isinstance(d, dict):
            raise ValueError("model description must be a JSON object")
        extra = set(d) - {"p", "corr", "sigma"}
        if extra:
            raise ValueError(f"unknown model fields: {sorted(extra)}")
        if "p" not in d or "sigma" not in d:
            raise ValueError("model description needs 'p' and 'sigma'")
        p = d["p"]
        if not isinstance(p, int) or p < 1:
            raise ValueError(f"model p must be a positive integer, got {p!r}")
        corr = CorrelationSpec.from_dict(d.get("corr", {"kind": "identity"}))
        sig = d["sigma"]
        if isinstance(sig, dict):
            if sig.get("kind") != "power" or not {"c", "alpha"} <= set(sig):
                raise ValueError("sigma rule must be {'kind': 'power', 'c': ..., 'alpha': ...}")
            return cls.power(p, float(sig["c"]), float(sig["alpha"]), corr)
        sigma = np.asarray(sig, dtype=np.float64)
        if sigma.size != p:
            raise ValueError(f"sigma has length {sigma.size}, expected p={p}")
        return cls(sigma, corr)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """An n x p matrix of observations, one row per observation."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError(f"sample must be a 2-d array, got ndim={rows.ndim}")
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"sample must be at least 1 x 1, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("sample entries must all be finite")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    def __array__(self, dtype=None, copy=None):
        arr = self.rows
        if dtype is not None and arr.dtype != np.dtype(dtype):
            arr = arr.astype(dtype)
        elif copy:
            arr = arr.copy()
        return arr

    # CSV round trip: header row holds the 1-based column indices.
    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(str(j) for j in range(1, self.p + 1)) + "\n")
            for row in self.rows:
                fh.write(",".join(fmt17(x) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SampleMatrix":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if len(lines) < 2:
            raise ValueError(f"{path}: expected a header row and at least one data row")
        header = lines[0].split(",")
        try:
            idx = [int(tok) for tok in header]
        except ValueError as exc:
            raise ValueError(f"{path}: header must hold integer column indices") from exc
        if idx != list(range(1, len(idx) + 1)):
            raise ValueError(f"{path}: header must be the column indices 1..p")
        try:
            rows = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}: malformed numeric row") from exc
        if rows.shape[1] != len(idx):
            raise ValueError(f"{path}: row width does not match header")
        return cls(rows)


def as_sample(X) -> SampleMatrix:
    """Coerce an array-like into a SampleMatrix (no copy when already one)."""
    return X if isinstance(X, SampleMatrix) else SampleMatrix(np.asarray(X))


def _standard_noise(gen: np.random.Generator, kind: str, shape) -> np.ndarray:
    """i.i.d. noise with mean 0 and variance 1 per coordinate."""
    if kind == "gaussian":
        return gen.standard_normal(shape)
    if kind == "scaled-uniform":
        return gen.uniform(-_SQRT3, _SQRT3, shape)
    if kind == "symmetric-exponential":
        return gen.laplace(0.0, _LAPLACE_SCALE, shape)
    raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")


def generate_sample(mu, model: CovarianceModel, n: int, noise: str = "gaussian",
                    seed: int = 0) -> SampleMatrix:
    """Draw n observations X_i = mu + Sigma^(1/2) z_i.

    Parameters
    ----------
    mu : scalar or (p,) array
        Mean vector; a scalar is broadcast to every coordinate.
    model : CovarianceModel
    n : int
        Sample size, >= 1.
    noise : str
        One of ``gaussian``, ``scaled-uniform``, ``symmetric-exponential``;
        each is standardized to unit variance.
    seed : int
        Same (mu, model, n, noise, seed) always reproduces the same matrix.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p = model.p
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim == 0:
        mu = np.full(p, float(mu))
    if mu.shape != (p,):
        raise ValueError(f"mu has shape {mu.shape}, expected ({p},)")
    gen = _streams.stream(seed, _streams.SAMPLE_NOISE)
    Z = _standard_noise(gen, noise, (n, p))
    if model.is_diagonal:
        X = mu + Z * model.sigma
    else:
        X = mu + Z @ model.sqrt()
    return SampleMatrix(X)


# ---------------------------------------------------------------------------
# linear algebra


def _check_symmetric(S) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix entries must be finite")
    scale = float(np.abs(S).max())
    if scale > 0.0 and float(np.abs(S - S.T).max()) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    return S


def matrix_sqrt(S) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-eps, 0) with eps = 1e-10 * ||S||_op are clipped to 0;
    anything more negative raises NotPsdError.
    """
    S = _check_symmetric(S)
    w, V = np.linalg.eigh((S + S.T) / 2.0)
    opnorm = float(np.abs(w).max()) if w.size else 0.0
    eps = PSD_CLIP_REL * opnorm
    if w.min() < -eps:
        raise NotPsdError(
            f"matrix is not PSD: min eigenvalue {w.min():.3e} < -{eps:.3e}")
    A = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return (A + A.T) / 2.0


def weak_lr_norm(v, r: float) -> float:
    """Weak-l_r norm max_j j^(1/r) |v|_(j) over the sorted absolute entries."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("weak_lr_norm needs a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    mags = np.sort(np.abs(v))[::-1]
    j = np.arange(1, v.size + 1, dtype=np.float64)
    return float(np.max(j ** (1.0 / r) * mags))


def effective_rank(S) -> float:
    """tr(S) / ||S||_op for a nonzero PSD matrix."""
    S = _check_symmetric(S)
    w = np.linalg.eigvalsh((S + S.T) / 2.0)
    opnorm = float(np.abs(w).max())
    if opnorm == 0.0:
        raise ValueError("effective rank of the zero matrix is undefined")
    if w.min() < -PSD_CLIP_REL * opnorm:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    return float(np.sum(np.clip(w, 0.0, None)) / w.max())


def theory_indices(n: int, p: int, a: float = 0.25) -> tuple[int, int]:
    """Index cutoffs (ell_n, k_n) used by the structural diagnostics.

    ell_n = ceil(min(max(1, log(n)^3), p)) and
    k_n = ceil(min(max(ell_n, n^(1/log(n)^a)), p)), natural log throughout.
    Nondecreasing in n for fixed p, and always 1 <= ell_n <= k_n <= p.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError(f"p must be an integer >= 1, got {p!r}")
    if not 0.0 < a < 0.5:
        raise ValueError(f"a must lie in (0, 1/2), got {a}")
    logn = math.log(n)
    ell = math.ceil(min(max(1.0, logn ** 3), float(p)))
    k = math.ceil(min(max(float(ell), n ** (1.0 / logn ** a)), float(p)))
    return int(ell), int(k)


# ---------------------------------------------------------------------------
# decay and correlation diagnostics


@dataclass(frozen=True, eq=False)
class DecayDiagnostics:
    """Variance-decay and correlation structure summary.

    ``alpha_hat`` is the negative OLS slope of log sigma_(j) on log j over
    j = 2..p; a constant profile sets it to 0 and flags ``degenerate_profile``.
    The correlation checks look at the ell x ell block R(ell) built from the
    coordinates with the ell largest standard deviations: the largest signed
    off-diagonal entry, the sum of positive off-diagonal entries above the
    diagonal, and whether the entrywise-clipped R+ is PSD.
    """

    sorted_sigma: np.ndarray
    alpha_hat: float
    degenerate_profile: bool
    effective_rank: float
    ell_n: int
    k_n: int
    max_offdiag: float
    positive_offdiag_sum: float
    r_plus_psd: bool

    def to_dict(self) -> dict:
        return {
            "sorted_sigma": self.sorted_sigma.tolist(),
            "alpha_hat": self.alpha_hat,
            "degenerate_profile": self.degenerate_profile,
            "effective_rank": self.effective_rank,
            "ell_n": self.ell_n,
            "k_n": self.k_n,
            "corr_checks": {
                "max_offdiag_R_ell": self.max_offdiag,
                "positive_offdiag_sum": self.positive_offdiag_sum,
                "r_plus_psd": self.r_plus_psd,
            },
        }


def _fit_decay_exponent(sorted_sigma: np.ndarray) -> tuple[float, bool]:
    # OLS of log sigma_(j) on log j for j in {2..p}; j=1 excluded to reduce
    # the top coordinate's leverage. Zero entries cannot enter the log fit.
    p = sorted_sigma.size
    j = np.arange(2, p + 1, dtype=np.float64)
    tail = sorted_sigma[1:]
    keep = tail > 0.0
    dropped_zeros = bool(np.any(~keep))
    j, tail = j[keep], tail[keep]
    if j.size < 2:
        return 0.0, True
    logs = np.log(tail)
    if float(logs.max() - logs.min()) == 0.0:
        return 0.0, True
    slope = np.polyfit(np.log(j), logs, 1)[0]
    return float(-slope), dropped_zeros


def decay_diagnostics(obj, ell_choice: int | None = None, n: int | None = None,
                      a: float = 0.25) -> DecayDiagnostics:
    """Diagnostics for a CovarianceModel or a SampleMatrix.

    For a SampleMatrix the profile and correlation come from the 1/n-normalized
    sample covariance; ``n`` is taken from the data. For a model, pass ``n`` if
    the theory indices should be computed; otherwise ell_n defaults to
    ``ell_choice`` (or p) and k_n to p. ``ell_choice`` overrides the block size
    used for the correlation checks.
    """
    if isinstance(obj, SampleMatrix):
        if obj.n < 2:
            raise ValueError("diagnostics on data need n >= 2")
        n_eff = obj.n
        mean = obj.rows.mean(axis=0)
        Xc = obj.rows - mean
        cov = Xc.T @ Xc / obj.n  # 1/n normalization
        sigma = np.sqrt(np.diag(cov))
        denom = np.outer(sigma, sigma)
        R = np.divide(cov, denom, out=np.zeros_like(cov), where=denom > 0.0)
        np.fill_diagonal(R, 1.0)
        Sigma = cov
    elif isinstance(obj, CovarianceModel):
        n_eff = n
        sigma = obj.sigma
        R = obj.correlation()
        Sigma = R * np.outer(sigma, sigma)
    else:
        raise ValueError(
            f"expected CovarianceModel or SampleMatrix, got {type(obj).__name__}")

    p = sigma.size
    if n_eff is not None:
        ell_n, k_n = theory_indices(int(n_eff), p, a)
    else:
        ell_n, k_n = (ell_choice if ell_choice is not None else p), p

    ell = ell_choice if ell_choice is not None else ell_n
    if not 1 <= ell <= p:
        raise ValueError(f"ell_choice must lie in [1, p], got {ell}")

    order = np.argsort(-sigma, kind="stable")
    sorted_sigma = sigma[order]
    alpha_hat, degenerate = _fit_decay_exponent(sorted_sigma)

    top = order[:ell]
    Rb = R[np.ix_(top, top)]
    off = ~np.eye(ell, dtype=bool)
    max_offdiag = float(Rb[off].max()) if ell > 1 else 0.0
    upper = np.triu(Rb, k=1)
    positive_sum = float(np.clip(upper, 0.0, None).sum())
    r_plus = np.maximum(Rb, 0.0)
    wplus = np.linalg.eigvalsh((r_plus + r_plus.T) / 2.0)
    tol = PSD_CLIP_REL * float(np.abs(wplus).max()) if wplus.size else 0.0
    r_plus_psd = bool(wplus.min() >= -tol)

    return DecayDiagnostics(
        sorted_sigma=sorted_sigma,
        alpha_hat=alpha_hat,
        degenerate_profile=degenerate,
        effective_rank=effective_rank(Sigma),
        ell_n=int(ell_n),
        k_n=int(k_n),
        max_offdiag=max_offdiag,
        positive_offdiag_sum=positive_sum,
        r_plus_psd=r_plus_psd,
    )


# ---------------------------------------------------------------------------
# Schur-Horn diagonal inequality


@lru_cache(maxsize=128)
def _zeta_truncated(x: float) -> float:
    # Riemann zeta by direct series over k <= 1e6 plus the integral tail bound
    # N^(1-x)/(x-1); adequate (and slightly conservative) for x > 1.001.
    if x <= 1.001:
        raise ValueError(f"zeta argument must exceed 1.001, got {x}")
    N = 1_000_000
    k = np.arange(1, N + 1, dtype=np.float64)
    return float(np.sum(k ** (-x)) + N ** (1.0 - x) / (x - 1.0))


@dataclass(frozen=True)
class SchurHornCheck:
    lhs: float
    rhs: float
    holds: bool


def schur_horn_check(A, r: float, s: float) -> SchurHornCheck:
    """Check the weak-norm diagonal majorization inequality for symmetric A.

    lhs = ||diag(A)||_{w,s} and rhs = zeta(s/r)^(1/s) ||lambda(A)||_{w,r};
    the inequality lhs <= rhs holds for every symmetric matrix, so ``holds``
    doubles as a self-test of the eigen and norm plumbing.
    """
    if not (0.0 < r < s):
        raise ValueError(f"need 0 < r < s, got r={r}, s={s}")
    if s < 1.0:
        raise ValueError(f"need s >= 1, got s={s}")
    A = _check_symmetric(A)
    lhs = weak_lr_norm(np.diag(A), s)
    lam = np.linalg.eigvalsh((A + A.T) / 2.0)
    rhs = _zeta_truncated(float(s) / float(r)) ** (1.0 / s) * weak_lr_norm(lam, r)
    return SchurHornCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs))
