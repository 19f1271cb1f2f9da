"""Population logistic risk, zero-one error and calibration error.

Under a Gaussian design the pair ``(a, b) = (x @ w, x @ w_star)`` is a
centered bivariate Gaussian, so every population functional reduces to a
two-dimensional integral. The integrals are taken over whitened coordinates
``(h1, h2)`` with

    a = s_w * h1,
    b = s_star * (rho * h1 + sqrt(1 - rho**2) * h2),

where ``rho`` is the correlation. The ``h1`` axis carries the features whose
width shrinks like ``1 / s_w`` (the kink of the logistic loss and the jump
of ``sigmoid`` as GD diverges), so it uses composite Gauss-Legendre panels
with breakpoints at multiples of ``1 / s_w``. The ``h2`` axis is smooth and
uses Gauss-Hermite of the grid's order.

Zero-one error integrates the classifier sign out analytically, leaving a
one-dimensional integral over ``b`` on the half line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, ndtr

from .data_model import CovarianceModel, make_rng

__all__ = [
    "JointSummary",
    "QuadratureGrid",
    "RiskTriple",
    "MonteCarloRisks",
    "joint_summary",
    "make_grid",
    "default_grid",
    "population_logistic_risk",
    "excess_logistic_risk",
    "population_zero_one_error",
    "calibration_error",
    "excess_zero_one_from_angle",
    "bayes_zero_one",
    "bayes_risks",
    "population_risks",
    "monte_carlo_risks",
]

MIN_ORDER = 8
DEFAULT_ORDER = 96
# Standard-normal mass beyond this is below 1e-36.
_CUTOFF = 13.0
_PANEL_ORDER = 24


@dataclass(frozen=True)
class JointSummary:
    s_w: float
    s_star: float
    c: float
    theta: float | None

    @property
    def degenerate(self) -> bool:
        return self.theta is None

    @property
    def rho(self) -> float:
        """Correlation of ``(a, b)``; 0 when either variance vanishes."""
        if self.theta is None:
            return 0.0
        return float(np.clip(self.c / (self.s_w * self.s_star), -1.0, 1.0))


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Hermite rule for ``E f(g)`` with ``g ~ N(0, 1)``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class RiskTriple:
    logistic: float
    zero_one: float
    calibration: float

    def as_tuple(self):
        return (self.logistic, self.zero_one, self.calibration)


@dataclass(frozen=True)
class MonteCarloRisks:
    estimate: RiskTriple
    stderr: RiskTriple
    n_samples: int
    seed: int


def make_grid(order: int = DEFAULT_ORDER) -> QuadratureGrid:
    if order < MIN_ORDER:
        raise ValueError(
            f"quadrature order {order} is too low for the risk integrands; "
            f"use at least {MIN_ORDER}")
    x, w = np.polynomial.hermite.hermgauss(int(order))
    nodes = math.sqrt(2.0) * x
    weights = w / math.sqrt(math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(int(order), nodes, weights)


@lru_cache(maxsize=8)
def _cached_grid(order):
    return make_grid(order)


def default_grid() -> QuadratureGrid:
    return _cached_grid(DEFAULT_ORDER)


def _grid(grid):
    return default_grid() if grid is None else grid


@lru_cache(maxsize=4)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def _half_line_rule(scales=()):
    """Nodes and weights for ``int_0^inf phi(g) f(g) dg``.

    Panels are refined near zero at every supplied length scale.
    """
    breaks = {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, _CUTOFF}
    for s in scales:
        if s > 0 and np.isfinite(s):
            for m in (0.125, 0.5, 2.0, 8.0, 32.0):
                if m / s < _CUTOFF:
                    breaks.add(m / s)
    edges = np.array(sorted(breaks))
    x, w = _legendre(_PANEL_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    weights = weights * np.exp(-0.5 * nodes ** 2) / math.sqrt(2.0 * math.pi)
    return nodes, weights


def _full_line_rule(scales=()):
    g, w = _half_line_rule(scales)
    return np.concatenate([-g[::-1], g]), np.concatenate([w[::-1], w])


def joint_summary(w, w_star, cov: CovarianceModel) -> JointSummary:
    lam = cov.eigenvalues
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w.shape != lam.shape or w_star.shape != lam.shape:
        raise ValueError("w, w_star and the covariance must share dimension")
    s_w = float(np.sqrt(np.sum(lam * w * w)))
    s_star = float(np.sqrt(np.sum(lam * w_star * w_star)))
    c = float(np.sum(lam * w * w_star))
    theta = None
    if s_w > 0 and s_star > 0:
        theta = float(np.arccos(np.clip(c / (s_w * s_star), -1.0, 1.0)))
    return JointSummary(s_w, s_star, c, theta)


def _pair_nodes(summary: JointSummary, grid: QuadratureGrid):
    """Quadrature nodes ``(a, b)`` and weights on the whitened 2-d grid."""
    rho = summary.rho
    h1, w1 = _full_line_rule((summary.s_w, summary.s_star * abs(rho)))
    h2, w2 = grid.nodes, grid.weights
    b = summary.s_star * (rho * h1[:, None]
                          + math.sqrt(max(0.0, 1.0 - rho * rho)) * h2[None, :])
    a = np.broadcast_to(summary.s_w * h1[:, None], b.shape)
    return a, b, w1[:, None] * w2[None, :]


def _softplus_neg(t):
    # logistic loss ln(1 + exp(-t))
    return np.logaddexp(0.0, -t)


def population_logistic_risk(summary: JointSummary, grid=None) -> float:
    a, b, wt = _pair_nodes(summary, _grid(grid))
    pb = expit(b)
    f = pb * _softplus_neg(a) + (1.0 - pb) * _softplus_neg(-a)
    return float(np.sum(wt * f))


def excess_logistic_risk(summary: JointSummary, grid=None) -> float:
    """``R(w) - R(w_star)`` as the expected Bernoulli KL divergence."""
    a, b, wt = _pair_nodes(summary, _grid(grid))
    pb = expit(b)
    f = (pb * (_softplus_neg(a) - _softplus_neg(b))
         + (1.0 - pb) * (_softplus_neg(-a) - _softplus_neg(-b)))
    return float(np.sum(wt * f))


def calibration_error(summary: JointSummary, grid=None) -> float:
    a, b, wt = _pair_nodes(summary, _grid(grid))
    return float(np.sum(wt * (expit(a) - expit(b)) ** 2))


def bayes_zero_one(s_star: float) -> float:
    """``E min(p*, 1 - p*)``; equals 1 when ``w_star = 0`` (ties count as errors)."""
    if s_star <= 0:
        return 1.0
    g, w = _half_line_rule((s_star,))
    return float(2.0 * np.sum(w * expit(-s_star * g)))


def excess_zero_one_from_angle(theta: float, s_star: float, grid=None) -> float:
    """Excess zero-one error of any ``w`` at Sigma-angle ``theta`` from ``w_star``.

    Computes ``E |2 sigmoid(b) - 1| 1{a b <= 0}`` with the conditional law of
    ``a`` given ``b`` integrated out exactly, so the result does not depend on
    the norm of ``w``.
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    if s_star < 0:
        raise ValueError("s_star must be nonnegative")
    if s_star == 0 or theta == 0.0:
        return 0.0
    rho = math.cos(theta)
    sin = math.sin(theta)
    sharp = sin / abs(rho) if rho != 0 else np.inf
    g, w = _half_line_rule((s_star, 1.0 / sharp if np.isfinite(sharp) else 0.0))
    if sin == 0.0:
        cond = np.ones_like(g) if rho < 0 else np.zeros_like(g)
    else:
        cond = ndtr(-rho * g / sin)
    return float(2.0 * np.sum(w * np.tanh(0.5 * s_star * g) * cond))


def population_zero_one_error(summary: JointSummary, grid=None) -> float:
    if summary.s_w == 0:
        return 1.0
    if summary.s_star == 0:
        return 0.5
    return bayes_zero_one(summary.s_star) + excess_zero_one_from_angle(
        summary.theta, summary.s_star, grid)


def bayes_risks(w_star, cov: CovarianceModel, grid=None):
    """(Bayes logistic risk, Bayes zero-one error), both attained at ``w_star``."""
    s = joint_summary(w_star, w_star, cov)
    return population_logistic_risk(s, grid), population_zero_one_error(s, grid)


def population_risks(w, w_star, cov: CovarianceModel, grid=None) -> RiskTriple:
    s = joint_summary(w, w_star, cov)
    return RiskTriple(population_logistic_risk(s, grid),
                      population_zero_one_error(s, grid),
                      calibration_error(s, grid))


_MC_CHUNK = 1 << 16


def monte_carlo_risks(w, w_star, cov: CovarianceModel, N: int,
                      seed: int) -> MonteCarloRisks:
    """Plain Monte Carlo with fresh labels; independent of the quadrature path."""
    if N < 1000:
        raise ValueError("Monte Carlo budget must be at least 1000 draws")
    lam = cov.eigenvalues
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    C = np.array([[np.sum(lam * w * w), np.sum(lam * w * w_star)],
                  [np.sum(lam * w * w_star), np.sum(lam * w_star * w_star)]])
    evals, evecs = np.linalg.eigh(C)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    sums = np.zeros(3)
    sq = np.zeros(3)
    done = 0
    chunk = 0
    while done < N:
        m = min(_MC_CHUNK, N - done)
        rng = make_rng(seed, chunk)
        z = rng.standard_normal((m, 2))
        u = rng.random(m)
        ab = z @ root.T
        a, b = ab[:, 0], ab[:, 1]
        y = np.where(u < expit(b), 1.0, -1.0)
        vals = np.stack([_softplus_neg(y * a),
                         (y * a <= 0).astype(float),
                         (expit(a) - expit(b)) ** 2])
        sums += vals.sum(axis=1)
        sq += (vals ** 2).sum(axis=1)
        done += m
        chunk += 1
    mean = sums / N
    var = np.clip(sq / N - mean ** 2, 0.0, None) * N / (N - 1)
    se = np.sqrt(var / N)
    return MonteCarloRisks(RiskTriple(*mean), RiskTriple(*se), int(N), int(seed))
