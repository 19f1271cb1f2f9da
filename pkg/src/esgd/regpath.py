"""The l2-regularization path and its comparison with the GD path."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data_model import Dataset
from .gd_engine import GDTrace, empirical_risk

__all__ = [
    "RegPoint",
    "PathComparison",
    "NewtonFailure",
    "solve_l2_erm",
    "lambda_grid",
    "build_reg_path",
    "compare_paths",
    "min_distance_to_regpath",
]


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RegPoint:
    lam: float
    u: np.ndarray
    kkt_residual: float
    newton_iters: int

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.u))


@dataclass
class PathComparison:
    t: np.ndarray
    eta_t: np.ndarray
    lam: np.ndarray
    distance: np.ndarray
    cosine: np.ndarray
    norm_ratio: np.ndarray
    w_norm: np.ndarray
    u_norm: np.ndarray
    pairing_mode: str
    skipped: list = field(default_factory=list)

    def rows(self):
        for i in range(self.t.size):
            yield {
                "t": int(self.t[i]), "eta_t": float(self.eta_t[i]),
                "lambda": float(self.lam[i]), "distance": float(self.distance[i]),
                "cosine": float(self.cosine[i]), "norm_ratio": float(self.norm_ratio[i]),
                "pairing_mode": self.pairing_mode,
            }


def _objective(m, u, lam):
    return float(np.mean(np.logaddexp(0.0, -m))) + 0.5 * lam * float(u @ u)


def _newton_direction(X, y, s, g, lam):
    """Solve ``(X^T D X / n + lam I) p = g`` with ``D = s``."""
    n, d = X.shape
    if d <= n:
        H = (X.T * (s / n)) @ X
        H[np.diag_indices_from(H)] += lam
        return np.linalg.solve(H, g)
    # Woodbury in the n x n sample space; stable when some s_i underflow
    r = np.sqrt(s / n)
    B = X * r[:, None]
    K = B @ B.T
    K[np.diag_indices_from(K)] += lam
    return (g - B.T @ np.linalg.solve(K, B @ g)) / lam


def solve_l2_erm(data: Dataset, lam: float, tol: float = 1e-10, u0=None,
                 max_iter: int = 200) -> RegPoint:
    """Minimize ``L(u) + lam/2 |u|^2`` by damped Newton with Armijo backtracking."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    X, y = data.features, data.labels
    n = data.n
    u = np.zeros(data.d) if u0 is None else np.array(u0, dtype=float)
    m = y * (X @ u)
    f = _objective(m, u, lam)
    for it in range(max_iter + 1):
        c = expit(-m)
        g = -(X.T @ (y * c)) / n + lam * u
        res = float(np.linalg.norm(g))
        if res <= tol:
            return RegPoint(float(lam), u, res, it)
        if it == max_iter:
            break
        p = _newton_direction(X, y, c * (1.0 - c), g, lam)
        slope = float(g @ p)
        step = 1.0
        while True:
            u_new = u - step * p
            m_new = y * (X @ u_new)
            f_new = _objective(m_new, u_new, lam)
            if f_new <= f - 1e-4 * step * slope:
                break
            if step == 1.0 and f_new <= f + 1e-13 * abs(f):
                # objective flat to rounding: judge the full step by the gradient
                g_new = -(X.T @ (y * expit(-m_new))) / n + lam * u_new
                if np.linalg.norm(g_new) < 0.5 * res:
                    break
            if step < 1e-12:
                break
            step *= 0.5
        u, m, f = u_new, m_new, f_new
    raise NewtonFailure(
        f"Newton did not reach tol={tol:g} at lambda={lam:g}; last residual {res:g}")


def lambda_grid(lam_max: float = 1e3, lam_min: float = 1e-8, ratio: float = 1.1):
    """Geometric grid from ``lam_max`` down to ``lam_min`` (inclusive)."""
    if not (lam_max > lam_min > 0 and ratio > 1):
        raise ValueError("need lam_max > lam_min > 0 and ratio > 1")
    k = int(math.ceil(math.log(lam_max / lam_min) / math.log(ratio)))
    grid = lam_max * ratio ** (-np.arange(k + 1, dtype=float))
    grid[-1] = lam_min
    return grid


def _kkt_tol(tol, lam):
    # residual r moves the minimizer by at most r / lam
    return max(tol * min(1.0, lam), 1e-14)


def build_reg_path(data: Dataset, lambdas, tol: float = 1e-10):
    lams = np.asarray(lambdas, dtype=float)
    if np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ValueError("lambda grid must be positive and strictly decreasing")
    path = []
    u = None
    for lam in lams:
        pt = solve_l2_erm(data, lam, _kkt_tol(tol, lam), u0=u)
        path.append(pt)
        u = pt.u
    return path


def _pair_stats(w, u):
    nw, nu = float(np.linalg.norm(w)), float(np.linalg.norm(u))
    dist = float(np.linalg.norm(w - u))
    cos = float(w @ u) / (nw * nu) if nw > 0 and nu > 0 else float("nan")
    ratio = nw / nu if nu > 0 else float("nan")
    return dist, cos, ratio, nw, nu


def _match_coordinate(data, target, w_tilde, path, tol):
    """Bisect in ``log lam`` for ``<u_lam, w_tilde> = target`` (decreasing in lam)."""
    lams = np.array([p.lam for p in path])
    proj = np.array([float(p.u @ w_tilde) for p in path])
    above = np.nonzero(proj >= target)[0]
    if above.size == 0 or above[0] == 0:
        return None
    j = above[0]
    lo, hi = path[j], path[j - 1]  # lo.lam < hi.lam
    a, b = math.log(lo.lam), math.log(hi.lam)
    best = lo
    for _ in range(80):
        mid = 0.5 * (a + b)
        pt = solve_l2_erm(data, math.exp(mid), _kkt_tol(tol, math.exp(mid)), u0=best.u)
        if float(pt.u @ w_tilde) >= target:
            a, best = mid, pt
        else:
            b = mid
        if b - a < 1e-13:
            break
    return best


def compare_paths(trace: GDTrace, data: Dataset, mode: str = "lambda_of_t",
                  tol: float = 1e-10, w_tilde=None, path=None) -> PathComparison:
    """Pair each recorded GD iterate with a point on the regularization path.

    ``lambda_of_t`` uses ``lam = 1/(eta t)``. ``matched_norm`` picks the lam
    whose component along the max-margin direction ``w_tilde`` equals that of
    ``w_t``; it needs a precomputed decreasing ``path`` that brackets the
    targets (pairs outside the bracket are skipped and listed).
    """
    ts, lams, rows, skipped = [], [], [], []
    keep = trace.t > 0
    if mode == "lambda_of_t":
        u = None
        for t, w in zip(trace.t[keep], trace.iterates[keep]):
            lam = 1.0 / (trace.eta * t)
            pt = solve_l2_erm(data, lam, _kkt_tol(tol, lam), u0=u)
            u = pt.u
            ts.append(t)
            lams.append(lam)
            rows.append(_pair_stats(w, pt.u))
    elif mode == "matched_norm":
        if w_tilde is None or path is None:
            raise ValueError("matched_norm needs w_tilde and a regularization path")
        w_tilde = np.asarray(w_tilde, dtype=float)
        for t, w in zip(trace.t[keep], trace.iterates[keep]):
            pt = _match_coordinate(data, float(w @ w_tilde), w_tilde, path, tol)
            if pt is None:
                skipped.append((int(t), "bracket failure: target outside the path"))
                continue
            ts.append(t)
            lams.append(pt.lam)
            rows.append(_pair_stats(w, pt.u))
    else:
        raise ValueError(f"unknown pairing mode {mode!r}")
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    t_arr = np.array(ts, dtype=np.int64)
    return PathComparison(t_arr, trace.eta * t_arr, np.array(lams, dtype=float),
                          arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4],
                          mode, skipped)


def min_distance_to_regpath(w, data: Dataset, lambdas, tol: float = 1e-10, path=None):
    """``(lam*, min_lam |w - u_lam|, at_boundary)`` over the grid, refined by
    golden-section search in ``log lam`` between the neighbors of the best
    grid point."""
    lams = np.asarray(lambdas, dtype=float)
    if math.log10(lams.max() / lams.min()) < 6 - 1e-9:
        raise ValueError("lambda grid must span at least 6 decades")
    if path is None:
        path = build_reg_path(data, lams, tol)
    w = np.asarray(w, dtype=float)
    dists = np.array([np.linalg.norm(w - p.u) for p in path])
    j = int(np.argmin(dists))
    boundary = j == 0 or j == len(path) - 1
    if boundary:
        return float(path[j].lam), float(dists[j]), True
    cache = {}

    def dist(loglam):
        if loglam not in cache:
            lam = math.exp(loglam)
            pt = solve_l2_erm(data, lam, _kkt_tol(tol, lam), u0=path[j].u)
            cache[loglam] = float(np.linalg.norm(w - pt.u))
        return cache[loglam]

    a, b = math.log(path[j + 1].lam), math.log(path[j - 1].lam)
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(60):
        if dist(c) < dist(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
        if b - a < 1e-10:
            break
    x = 0.5 * (a + b)
    best = min((dists[j], math.log(path[j].lam)), (dist(x), x))
    return float(math.exp(best[1])), float(best[0]), False
