"""Gaussian-design, well-specified logistic data.

The covariance is diagonal in the canonical basis, so a covariance model is
just its eigenvalue sequence. Features are drawn as ``x = sqrt(lambda) * z``
and labels from ``Pr(y = 1 | x) = sigmoid(x @ w_star)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "CovarianceModel",
    "TrueParameter",
    "Dataset",
    "SpectrumSpec",
    "build_spectrum",
    "resort_indices",
    "make_true_parameter",
    "split_parameter",
    "sample_dataset",
    "sigma_norm",
    "source_capacity_coeffs",
    "make_rng",
    "ROW_CHUNK",
]

# Rows per independent random stream; fixed so that output never depends on
# how the rows are later scheduled.
ROW_CHUNK = 256


@dataclass(frozen=True)
class CovarianceModel:
    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    def tail_trace(self, k: int) -> float:
        """Spectral mass beyond the first ``k`` eigenvalues."""
        return float(self.eigenvalues[k:].sum())


@dataclass(frozen=True)
class TrueParameter:
    """Coordinates of ``w_star`` in the eigenbasis, with the resorted index."""

    coeffs: np.ndarray
    pi: np.ndarray
    sigma_norm: float

    @property
    def dim(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2:
            raise ValueError("features must be an n x d matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must have one entry per feature row")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be exactly +1 or -1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SpectrumSpec:
    """How to build the eigenvalues.

    ``kind`` is one of ``"power_law"`` (``lambda_i = i**-a``), ``"identity"``,
    ``"explicit"`` (``values`` passed through) or ``"spiked"`` (``k`` unit
    eigenvalues followed by a flat tail of total mass ``tail_trace``).
    Setting ``b`` switches on source-capacity mode, which requires
    ``a > 1`` and ``b > 1``.
    """

    kind: str = "power_law"
    a: float | None = None
    b: float | None = None
    values: Sequence[float] | None = None
    k: int | None = None
    tail_trace: float = 1.0
    scale: float = 1.0

    @property
    def source_capacity(self) -> bool:
        return self.b is not None


def build_spectrum(spec: SpectrumSpec, d: int) -> CovarianceModel:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    if spec.source_capacity:
        if spec.kind != "power_law":
            raise ValueError("source-capacity mode needs a power_law spectrum")
        if spec.a is None or spec.a <= 1 or spec.b <= 1:
            raise ValueError(
                "source-capacity mode needs a > 1 and b > 1; with a <= 1 the "
                "trace of the covariance diverges as d grows")
    if spec.kind == "power_law":
        if spec.a is None or spec.a <= 0:
            raise ValueError("power_law spectrum needs a > 0")
        lam = np.arange(1, d + 1, dtype=float) ** (-float(spec.a))
    elif spec.kind == "identity":
        lam = np.ones(d)
    elif spec.kind == "explicit":
        if spec.values is None or len(spec.values) != d:
            raise ValueError("explicit spectrum must list exactly d values")
        lam = np.asarray(spec.values, dtype=float)
    elif spec.kind == "spiked":
        k = spec.k
        if k is None or not 0 <= k <= d:
            raise ValueError("spiked spectrum needs 0 <= k <= d")
        lam = np.ones(d)
        if d > k:
            lam[k:] = spec.tail_trace / (d - k)
            if lam[k] > 1.0:
                raise ValueError("spiked tail eigenvalue exceeds the head")
    else:
        raise ValueError(f"unknown spectrum kind {spec.kind!r}")
    return CovarianceModel(spec.scale * lam)


def source_capacity_coeffs(cov: CovarianceModel, b: float) -> np.ndarray:
    """Coefficients with ``lambda_i * w_i**2 = i**-b`` (nonnegative signs)."""
    if b <= 1:
        raise ValueError("source exponent b must exceed 1")
    i = np.arange(1, cov.dim + 1, dtype=float)
    lam = cov.eigenvalues
    out = np.zeros(cov.dim)
    pos = lam > 0
    out[pos] = np.sqrt(i[pos] ** (-b) / lam[pos])
    return out


def _check_len(v, cov):
    v = np.asarray(v, dtype=float)
    if v.shape != (cov.dim,):
        raise ValueError(f"expected a vector of length {cov.dim}, got shape {v.shape}")
    return v


def resort_indices(cov: CovarianceModel, coeffs) -> np.ndarray:
    """Order indices by decreasing ``lambda_i * coeffs_i**2``.

    Ties go to the lowest original index. Returned indices are 0-based.
    """
    c = _check_len(coeffs, cov)
    energy = cov.eigenvalues * c ** 2
    return np.argsort(-energy, kind="stable")


def sigma_norm(w, cov: CovarianceModel) -> float:
    w = _check_len(w, cov)
    return float(np.sqrt(np.sum(cov.eigenvalues * w ** 2)))


def make_true_parameter(cov: CovarianceModel, coeffs) -> TrueParameter:
    c = _check_len(coeffs, cov).copy()
    c.setflags(write=False)
    return TrueParameter(c, resort_indices(cov, c), sigma_norm(c, cov))


def split_parameter(param: TrueParameter, k: int):
    """Head ``w*_{0:k}`` and tail ``w*_{k:inf}`` along the resorted index."""
    d = param.dim
    if int(k) != k or not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, {d}], got {k!r}")
    head = np.zeros(d)
    idx = param.pi[: int(k)]
    head[idx] = param.coeffs[idx]
    tail = param.coeffs - head
    tail[idx] = 0.0
    return head, tail


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def sample_dataset(cov: CovarianceModel, param: TrueParameter, n: int,
                   seed: int) -> Dataset:
    """Draw ``n`` samples; each block of ``ROW_CHUNK`` rows has its own stream."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if param.dim != cov.dim:
        raise ValueError("parameter and covariance dimensions differ")
    n = int(n)
    d = cov.dim
    root = np.sqrt(cov.eigenvalues)
    X = np.empty((n, d))
    y = np.empty(n)
    for chunk, start in enumerate(range(0, n, ROW_CHUNK)):
        stop = min(start + ROW_CHUNK, n)
        rng = make_rng(seed, chunk)
        z = rng.standard_normal((stop - start, d))
        u = rng.random(stop - start)
        X[start:stop] = z * root
        p = expit(X[start:stop] @ param.coeffs)
        y[start:stop] = np.where(u < p, 1.0, -1.0)
    return Dataset(X, y, int(seed))
