"""Fixed-stepsize gradient descent on the empirical logistic risk.

GD starts at zero and records iterates on a geometric schedule, plus the two
iterates bracketing every stopping event. Stopping rules only *mark* times;
the run continues to ``max_iters`` unless ``halt_on_stop`` is set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data_model import Dataset, TrueParameter, split_parameter

__all__ = [
    "GDConfig",
    "GDTrace",
    "StoppingRule",
    "DescentViolation",
    "empirical_risk",
    "empirical_gradient",
    "default_stepsize",
    "geometric_schedule",
    "run_gd",
    "oracle_stopping_time",
    "implicit_bias_residual",
    "UNRESOLVED",
]

UNRESOLVED = None
_LOSSES = ("logistic", "exponential")


class DescentViolation(RuntimeError):
    """The empirical risk went up although ``eta <= 1 / beta_hat``."""


def _check_dims(w, data):
    w = np.asarray(w, dtype=float)
    if data.n == 0:
        raise ValueError("empty dataset")
    if w.shape != (data.d,):
        raise ValueError(f"w has shape {w.shape}, data has dimension {data.d}")
    return w


def _risk_from_margins(m, loss="logistic", log_risk=False):
    if loss == "logistic":
        return float(np.mean(np.logaddexp(0.0, -m)))
    if log_risk:
        top = float(np.max(-m))
        return top + math.log(float(np.sum(np.exp(-m - top))) / m.size)
    return float(np.mean(np.exp(-m)))


def _dloss(m, loss="logistic", log_risk=False):
    """Per-sample weights ``c_i`` with gradient ``-(1/n) sum c_i y_i x_i``."""
    if loss == "logistic":
        return expit(-m)
    if log_risk:
        # softmax weights, rescaled so that the 1/n in the caller cancels
        e = np.exp(-m - np.max(-m))
        return e * (m.size / e.sum())
    return np.exp(-m)


def empirical_risk(w, data: Dataset) -> float:
    """Mean logistic loss; evaluated with ``logaddexp`` so large margins are exact."""
    w = _check_dims(w, data)
    return _risk_from_margins(data.labels * (data.features @ w))


def empirical_gradient(w, data: Dataset) -> np.ndarray:
    w = _check_dims(w, data)
    m = data.labels * (data.features @ w)
    return -(data.features.T @ (data.labels * expit(-m))) / data.n


def default_stepsize(data: Dataset, delta: float | None = None):
    """Stepsize from the Hessian bound ``||grad^2 L|| <= mean ||x_i||^2``.

    Returns ``(eta, beta_hat)`` with ``beta_hat = max(1, mean ||x_i||^2)`` and
    ``eta = 1 / beta_hat``. ``delta`` is accepted for interface parity with
    the theoretical stepsize but the empirical bound does not use it.
    """
    if data.n == 0:
        raise ValueError("empty dataset")
    beta_hat = max(1.0, float(np.mean(np.sum(data.features ** 2, axis=1))))
    return 1.0 / beta_hat, beta_hat


def geometric_schedule(max_iters: int, per_octave: int = 2) -> np.ndarray:
    """Recording times ``1, ..., max_iters`` spaced ``per_octave`` per doubling."""
    if max_iters < 1:
        return np.zeros(0, dtype=np.int64)
    k = np.arange(0, int(math.log2(max_iters) * per_octave) + 2)
    t = np.unique(np.round(2.0 ** (k / per_octave)).astype(np.int64))
    t = t[t <= max_iters]
    return np.unique(np.concatenate([t, [max_iters]]))


@dataclass(frozen=True)
class StoppingRule:
    """``cross_head`` (k), ``cross_star``, ``fixed_horizon`` (T) or ``grad_norm`` (eps)."""

    kind: str
    k: int | None = None
    value: float | None = None

    @property
    def rule_id(self) -> str:
        if self.kind == "cross_head":
            return f"cross_head({self.k})"
        if self.kind == "fixed_horizon":
            return f"fixed_horizon({int(self.value)})"
        if self.kind == "grad_norm":
            return f"grad_norm({self.value:g})"
        return self.kind

    @classmethod
    def cross_head(cls, k):
        return cls("cross_head", k=int(k))

    @classmethod
    def cross_star(cls):
        return cls("cross_star")

    @classmethod
    def fixed_horizon(cls, T):
        return cls("fixed_horizon", value=int(T))

    @classmethod
    def grad_norm(cls, eps):
        return cls("grad_norm", value=float(eps))

    def threshold(self, data, param=None):
        """Empirical-risk level that triggers a crossing rule."""
        if self.kind == "cross_head":
            if param is None:
                raise ValueError("cross_head needs the true parameter")
            if not 0 <= self.k <= param.dim:
                raise ValueError(f"cross_head k must lie in [0, {param.dim}]")
            head, _ = split_parameter(param, self.k)
            return empirical_risk(head, data)
        if self.kind == "cross_star":
            if param is None:
                raise ValueError("cross_star needs the true parameter")
            return empirical_risk(param.coeffs, data)
        return None


@dataclass(frozen=True)
class GDConfig:
    eta: float
    max_iters: int
    record_schedule: tuple | None = None
    loss: str = "logistic"
    # GD on ln(mean exp loss) instead of the mean; exponential loss only
    log_risk: bool = False
    check_descent: bool = True
    halt_on_stop: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("stepsize must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.loss not in _LOSSES:
            raise ValueError(f"loss must be one of {_LOSSES}")
        if self.log_risk and self.loss != "exponential":
            raise ValueError("log_risk is only defined for the exponential loss")
        if self.record_schedule is not None:
            s = np.asarray(self.record_schedule)
            if np.any(np.diff(s) <= 0):
                raise ValueError("record schedule must be strictly increasing")

    def schedule(self) -> np.ndarray:
        if self.record_schedule is None:
            return geometric_schedule(self.max_iters)
        s = np.asarray(self.record_schedule, dtype=np.int64)
        return s[(s >= 0) & (s <= self.max_iters)]


@dataclass(frozen=True)
class GDTrace:
    t: np.ndarray
    iterates: np.ndarray
    emp_risk: np.ndarray
    w_norm: np.ndarray
    grad_norm: np.ndarray
    stop_events: dict
    thresholds: dict
    eta: float
    beta_hat: float
    config: GDConfig
    data: Dataset = field(repr=False)
    comparator_residuals: dict = field(default_factory=dict)

    @property
    def eta_t(self) -> np.ndarray:
        return self.eta * self.t

    def index_of(self, t: int) -> int:
        i = np.searchsorted(self.t, t)
        if i >= self.t.size or self.t[i] != t:
            raise KeyError(f"iteration {t} was not recorded")
        return int(i)

    def iterate(self, t: int) -> np.ndarray:
        return self.iterates[self.index_of(t)]

    def risk_at(self, t: int) -> float:
        return float(self.emp_risk[self.index_of(t)])


def run_gd(data: Dataset, config: GDConfig, rules=(), param: TrueParameter | None = None,
           comparators=()) -> GDTrace:
    """Run ``w_{t+1} = w_t - eta * grad L(w_t)`` from ``w_0 = 0``.

    Each rule's first trigger time lands in ``stop_events`` (``None`` when it
    never fires). ``comparators`` is a list of ``(label, u)``; the implicit-bias
    residual of each is stored for every recorded ``t > 0``.
    """
    X, y = data.features, data.labels
    n, d = X.shape
    eta = float(config.eta)
    loss, log_risk = config.loss, config.log_risk
    _, beta_hat = default_stepsize(data)
    check = config.check_descent and loss == "logistic" and eta <= 1.0 / beta_hat

    thresholds = {r.rule_id: r.threshold(data, param) for r in rules}
    events = {r.rule_id: UNRESOLVED for r in rules}
    pending = list(rules)

    sched = set(int(s) for s in config.schedule())
    sched.add(0)
    rec_t, rec_w, rec_L, rec_g = [], [], [], []
    recorded = set()

    def record(t, w, L, g):
        if t in recorded:
            return
        recorded.add(t)
        rec_t.append(t)
        rec_w.append(w.copy())
        rec_L.append(L)
        rec_g.append(g)

    w = np.zeros(d)
    m = np.zeros(n)
    L = _risk_from_margins(m, loss, log_risk)
    prev = None  # (w, L, grad_norm) at t - 1
    for t in range(config.max_iters + 1):
        c = _dloss(m, loss, log_risk)
        grad = -(X.T @ (y * c)) / n
        gnorm = float(np.linalg.norm(grad))
        fired = []
        for r in pending:
            if r.kind in ("cross_head", "cross_star"):
                hit = L <= thresholds[r.rule_id]
            elif r.kind == "fixed_horizon":
                hit = t >= r.value
            else:
                hit = gnorm <= r.value
            if hit:
                fired.append(r)
        if fired:
            for r in fired:
                events[r.rule_id] = t
                pending.remove(r)
            if prev is not None:
                record(t - 1, *prev)
            record(t, w, L, gnorm)
        if t in sched:
            record(t, w, L, gnorm)
        if t == config.max_iters or (config.halt_on_stop and rules and not pending):
            record(t, w, L, gnorm)
            break
        prev = (w, L, gnorm)
        w = w - eta * grad
        m = y * (X @ w)
        L_new = _risk_from_margins(m, loss, log_risk)
        if check and L_new > L + 1e-12 * abs(L) + 1e-300:
            raise DescentViolation(
                f"empirical risk rose from {L!r} to {L_new!r} at step {t + 1}")
        L = L_new

    order = np.argsort(rec_t)
    t_arr = np.asarray(rec_t, dtype=np.int64)[order]
    W = np.asarray(rec_w)[order]
    trace = GDTrace(
        t=t_arr,
        iterates=W,
        emp_risk=np.asarray(rec_L)[order],
        w_norm=np.linalg.norm(W, axis=1),
        grad_norm=np.asarray(rec_g)[order],
        stop_events=events,
        thresholds=thresholds,
        eta=eta,
        beta_hat=beta_hat,
        config=config,
        data=data,
    )
    for label, u in comparators:
        trace.comparator_residuals[label] = np.array(
            [implicit_bias_residual(trace, u, int(s)) for s in t_arr if s > 0])
    return trace


def oracle_stopping_time(trace: GDTrace, threshold: float):
    """First recorded ``t`` with ``L(w_t) <= threshold``; ``None`` if never crossed.

    Exact as a crossing time when the rule was registered with ``run_gd``
    (both bracketing iterates are then recorded).
    """
    hit = np.nonzero(trace.emp_risk <= threshold)[0]
    if hit.size == 0:
        return UNRESOLVED
    return int(trace.t[hit[0]])


def implicit_bias_residual(trace: GDTrace, u, t: int) -> float:
    """``L(u) + |u|^2/(2 eta t) - |w_t - u|^2/(2 eta t) - L(w_t)``; nonnegative
    whenever ``eta`` is at most the inverse smoothness."""
    if t <= 0:
        raise ValueError("residual is defined for t > 0")
    if trace.config.loss != "logistic":
        raise ValueError("residual is implemented for the logistic loss only")
    u = np.asarray(u, dtype=float)
    w_t = trace.iterate(t)
    et2 = 2.0 * trace.eta * t
    return (empirical_risk(u, trace.data) + float(u @ u) / et2
            - float((w_t - u) @ (w_t - u)) / et2 - trace.risk_at(t))
