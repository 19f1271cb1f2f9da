"""Separability certificates, the hard-margin dual and the support-vector condition.

The dual of ``max_{|w|=1} min_i y_i x_i @ w`` is

    max_beta  -1/2 beta @ X X^T @ beta + beta @ y   s.t.  y_i beta_i >= 0.

Working in ``alpha_i = y_i beta_i >= 0`` turns the constraint set into the
nonnegative orthant, which cyclic coordinate ascent handles with one clipped
1-d maximization per coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .data_model import Dataset

__all__ = [
    "DualSolution",
    "SeparabilityReport",
    "InseparableError",
    "check_separability",
    "solve_max_margin_dual",
    "dual_kkt_residual",
    "support_rank_condition",
    "numerical_rank",
    "directional_gap",
    "interpolation_check",
    "ols_interpolator",
]


class InseparableError(ValueError):
    """The data admit no separating hyperplane through the origin."""


@dataclass(frozen=True)
class DualSolution:
    beta: np.ndarray
    w_primal: np.ndarray
    gamma: float
    w_tilde: np.ndarray
    support: np.ndarray
    kkt_residual: float
    sweeps: int
    support_threshold: float


@dataclass(frozen=True)
class SeparabilityReport:
    separable: bool
    # unit separating vector, or convex weights alpha with sum alpha_i y_i x_i = 0
    certificate: np.ndarray
    method: str
    min_margin: float | None = None
    diagnostic: str = ""


def ols_interpolator(data: Dataset) -> np.ndarray:
    """Minimum-norm solution of ``X w = y``: ``X^T (X X^T)^{-1} y``."""
    X = data.features
    K = X @ X.T
    return X.T @ np.linalg.solve(K, data.labels)


def numerical_rank(A, rank_tol: float = 1e-8) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def _witness(data: Dataset):
    """Convex weights with ``sum_i alpha_i y_i x_i = 0``, or None if none exist."""
    Z = data.labels[:, None] * data.features
    n = data.n
    A_eq = np.vstack([Z.T, np.ones((1, n))])
    b_eq = np.concatenate([np.zeros(data.d), [1.0]])
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n,
                  method="highs")
    if res.status == 0:
        return res.x
    return None


def check_separability(data: Dataset, cond_tol: float = 1e-10) -> SeparabilityReport:
    if data.n == 0:
        raise ValueError("empty dataset")
    X, y = data.features, data.labels
    if data.n == 1:
        v = y[0] * X[0]
        nv = np.linalg.norm(v)
        if nv == 0:
            return SeparabilityReport(False, np.ones(1), "single-zero-point",
                                      diagnostic="the only feature vector is zero")
        return SeparabilityReport(True, v / nv, "single-point", float(nv))
    diag = ""
    if data.n <= data.d:
        s = np.linalg.svd(X, compute_uv=False)
        if s[-1] > cond_tol ** 0.5 * s[0]:
            w = ols_interpolator(data)
            if np.allclose(X @ w, y, atol=1e-8):
                v = w / np.linalg.norm(w)
                return SeparabilityReport(True, v, "ols",
                                          float(np.min(y * (X @ v))))
            diag = "OLS residual too large; Gram matrix ill-conditioned"
        else:
            diag = "Gram matrix numerically singular"
    alpha = _witness(data)
    if alpha is not None and np.linalg.norm(
            (y[:, None] * X).T @ alpha) <= 1e-9 * max(1.0, np.abs(X).max()):
        return SeparabilityReport(False, alpha, "lp-witness", diagnostic=diag)
    sol = solve_max_margin_dual(data)
    return SeparabilityReport(True, sol.w_tilde, "dual", sol.gamma, diag)


def dual_kkt_residual(alpha, Q) -> float:
    """Projected-gradient norm of the dual in ``alpha`` coordinates."""
    g = 1.0 - Q @ alpha
    r = np.where(alpha > 0, np.abs(g), np.maximum(g, 0.0))
    return float(np.max(r)) if r.size else 0.0


def _polish(alpha, Q, tol):
    """Solve the equality system on the current support exactly."""
    for _ in range(50):
        S = alpha > 0
        if not S.any():
            return alpha
        a_S = np.linalg.lstsq(Q[np.ix_(S, S)], np.ones(S.sum()), rcond=None)[0]
        if np.any(a_S <= 0):
            return alpha
        new = np.zeros_like(alpha)
        new[S] = a_S
        g = 1.0 - Q @ new
        out = ~S & (g > tol)
        if not out.any():
            return new
        # a violated coordinate must join the support; let ascent handle it
        return alpha
    return alpha


def solve_max_margin_dual(data: Dataset, tol: float = 1e-8, max_sweeps: int = 200000,
                          init=None, support_rel: float = 1e-6) -> DualSolution:
    """Cyclic coordinate ascent on the hard-margin dual.

    Iterates until the projected-gradient residual drops below ``tol``; the
    support set is then polished by solving ``Q_SS alpha_S = 1`` directly.
    Raises :class:`InseparableError` when the dual objective diverges.
    """
    X, y = data.features, data.labels
    n = data.n
    Z = y[:, None] * X
    Q = Z @ Z.T
    diag = np.diag(Q).copy()
    if np.any(diag <= 0):
        raise InseparableError("a zero feature vector cannot be separated")
    alpha = np.zeros(n) if init is None else np.maximum(np.asarray(init, float), 0.0)
    Qa = Q @ alpha
    scale = float(np.max(diag))
    sweeps = 0
    res = dual_kkt_residual(alpha, Q)
    while sweeps < max_sweeps:
        for i in range(n):
            new = max(0.0, alpha[i] + (1.0 - Qa[i]) / diag[i])
            delta = new - alpha[i]
            if delta != 0.0:
                alpha[i] = new
                Qa += delta * Q[:, i]
        sweeps += 1
        if sweeps % 10 == 0 or n <= 50:
            Qa = Q @ alpha
            res = dual_kkt_residual(alpha, Q)
            if res <= tol:
                break
            if res <= 1e-4:
                polished = _polish(alpha, Q, tol)
                r2 = dual_kkt_residual(polished, Q)
                if r2 <= tol:
                    alpha, res = polished, r2
                    break
        if alpha.sum() * scale > 1e12:
            raise InseparableError("dual objective diverges; data are not separable")
    polished = _polish(alpha, Q, tol)
    r2 = dual_kkt_residual(polished, Q)
    if r2 <= res:
        alpha, res = polished, r2
    beta = y * alpha
    w = X.T @ beta
    nw = float(np.linalg.norm(w))
    if nw == 0:
        raise InseparableError("dual solution is zero")
    w_tilde = w / nw
    gamma = float(np.min(y * (X @ w_tilde)))
    if gamma <= 0:
        raise InseparableError("recovered direction does not separate the data")
    thr = support_rel * float(alpha.max())
    support = np.nonzero(alpha > thr)[0]
    return DualSolution(beta, w, gamma, w_tilde, support, res, sweeps, thr)


def support_rank_condition(data: Dataset, dual: DualSolution,
                           rank_tol: float = 1e-8) -> bool:
    """Whether the support vectors span the same space as all feature vectors."""
    assert dual.support.size > 0, "a dual optimum always has a support vector"
    X = data.features
    return numerical_rank(X[dual.support], rank_tol) == numerical_rank(X, rank_tol)


def directional_gap(trace, w_tilde) -> tuple[np.ndarray, np.ndarray]:
    """``(t, |w_t/|w_t| - w_tilde|)`` over recorded nonzero iterates."""
    keep = trace.w_norm > 0
    W = trace.iterates[keep] / trace.w_norm[keep, None]
    return trace.t[keep], np.linalg.norm(W - np.asarray(w_tilde)[None, :], axis=1)


def interpolation_check(w, data: Dataset):
    w = np.asarray(w, dtype=float)
    if w.shape != (data.d,):
        raise ValueError("dimension mismatch")
    m = float(np.min(data.labels * (data.features @ w)))
    return m > 0, m
