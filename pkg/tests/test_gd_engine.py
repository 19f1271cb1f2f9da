import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esgd.data_model import (
    Dataset,
    SpectrumSpec,
    build_spectrum,
    make_true_parameter,
    sample_dataset,
    split_parameter,
)
from esgd.gd_engine import (
    GDConfig,
    StoppingRule,
    default_stepsize,
    empirical_gradient,
    empirical_risk,
    geometric_schedule,
    implicit_bias_residual,
    oracle_stopping_time,
    run_gd,
)

LN2 = math.log(2.0)


def _softplus(z):
    # ln(1 + e^{-z}) without overflow, in plain floats
    return math.log1p(math.exp(-z)) if z > 0 else -z + math.log1p(math.exp(z))


def small_instance(n=30, d=12, seed=0, a=1.0, strength=2.0):
    cov = build_spectrum(SpectrumSpec("power_law", a=a), d)
    rng = np.random.default_rng(seed)
    param = make_true_parameter(cov, strength * rng.standard_normal(d))
    return cov, param, sample_dataset(cov, param, n, seed=seed)


class TestEmpiricalRisk:
    def test_zero(self):
        _, _, data = small_instance()
        assert empirical_risk(np.zeros(data.d), data) == pytest.approx(LN2, abs=1e-15)

    def test_saturated_tail(self):
        data = Dataset(np.array([[50.0]]), np.array([1.0]))
        v = empirical_risk(np.array([1.0]), data)
        assert 0.0 < v < 1e-20

    def test_against_compensated_sum(self):
        _, _, data = small_instance(seed=3)
        w = np.random.default_rng(1).standard_normal(data.d) * 3
        m = data.labels * (data.features @ w)
        oracle = math.fsum(_softplus(float(z)) for z in m) / data.n
        assert abs(empirical_risk(w, data) - oracle) <= 1e-13

    def test_dimension_check(self):
        _, _, data = small_instance()
        with pytest.raises(ValueError):
            empirical_risk(np.zeros(data.d + 1), data)


class TestEmpiricalGradient:
    def test_at_zero(self):
        _, _, data = small_instance()
        g = empirical_gradient(np.zeros(data.d), data)
        expected = -(data.features.T @ data.labels) / (2 * data.n)
        np.testing.assert_allclose(g, expected, rtol=1e-14, atol=1e-16)

    def test_saturated(self):
        x = np.array([[10.0, 0.0]])
        data = Dataset(x, np.array([1.0]))
        g = empirical_gradient(np.array([10.0, 0.0]), data)
        assert np.linalg.norm(g) < 1e-40 * np.linalg.norm(x)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.floats(0.1, 3.0))
    def test_finite_differences(self, seed, scale):
        _, _, data = small_instance(n=15, d=6, seed=seed % 1000)
        w = scale * np.random.default_rng(seed).standard_normal(data.d)
        g = empirical_gradient(w, data)
        h = 1e-5
        fd = np.array([(empirical_risk(w + h * e, data) - empirical_risk(w - h * e, data)) / (2 * h)
                       for e in np.eye(data.d)])
        assert np.linalg.norm(fd - g) <= 1e-6 * max(np.linalg.norm(g), 1e-3)


class TestStepsize:
    def test_single_sample(self):
        data = Dataset(np.array([[2.0, 0.0]]), np.array([1.0]))
        assert default_stepsize(data) == (0.25, 4.0)

    def test_floor(self):
        data = Dataset(np.zeros((3, 2)), np.ones(3))
        assert default_stepsize(data) == (1.0, 1.0)

    def test_concentrates_near_trace(self):
        cov = build_spectrum(SpectrumSpec("power_law", a=2.0), 2000)
        param = make_true_parameter(cov, np.zeros(2000))
        data = sample_dataset(cov, param, 1000, seed=0)
        _, beta = default_stepsize(data)
        assert beta == pytest.approx(cov.eigenvalues.sum(), rel=0.05)
        assert cov.eigenvalues.sum() == pytest.approx(math.pi ** 2 / 6, rel=1e-3)


class TestSchedule:
    def test_geometric(self):
        s = geometric_schedule(100, per_octave=1)
        np.testing.assert_array_equal(s, [1, 2, 4, 8, 16, 32, 64, 100])

    def test_empty(self):
        assert geometric_schedule(0).size == 0

    def test_config_rejects_unsorted(self):
        with pytest.raises(ValueError):
            GDConfig(eta=1.0, max_iters=10, record_schedule=(3, 2))


class TestOneSample:
    def setup_method(self):
        self.data = Dataset(np.array([[1.0, 0.0]]), np.array([1.0]))
        eta, _ = default_stepsize(self.data)
        self.trace = run_gd(self.data, GDConfig(eta=eta, max_iters=20000))

    def test_stays_on_axis(self):
        assert np.all(self.trace.iterates[:, 1] == 0.0)

    def test_risk_strictly_decreasing(self):
        assert np.all(np.diff(self.trace.emp_risk) < 0)

    def test_logarithmic_growth(self):
        # the scalar recurrence w <- w + eta*sigmoid(-w) tracks its flow
        # w(s) + e^{w(s)} = 1 + eta*s, integrated exactly with Newton
        for t, w in zip(self.trace.t[1:], self.trace.iterates[1:, 0]):
            c = 1.0 + self.trace.eta * t
            z = math.log(c)
            for _ in range(60):
                z -= (z + math.exp(z) - c) / (1 + math.exp(z))
            assert abs(w - z) <= 1.0
        assert self.trace.w_norm[-1] == pytest.approx(math.log(20000), abs=0.5)


class TestRun:
    def test_descent_on_random_instances(self):
        for seed in range(5):
            _, _, data = small_instance(seed=seed)
            eta, _ = default_stepsize(data)
            tr = run_gd(data, GDConfig(eta=eta, max_iters=2000))
            rel = np.diff(tr.emp_risk) / tr.emp_risk[:-1]
            assert np.all(rel <= 1e-12)

    def test_large_step_skips_descent_check(self):
        # risk may rise above the smoothness stepsize; that is not an error
        data = Dataset(np.full((3, 1), 3.0), np.array([1.0, 1.0, -1.0]))
        tr = run_gd(data, GDConfig(eta=50.0, max_iters=20,
                                   record_schedule=tuple(range(1, 21))))
        assert np.any(np.diff(tr.emp_risk) > 0)

    def test_stop_event_bracketed(self):
        cov, param, data = small_instance(n=40, d=80, seed=2)
        eta, _ = default_stepsize(data)
        rule = StoppingRule.cross_head(3)
        tr = run_gd(data, GDConfig(eta=eta, max_iters=5000), [rule], param)
        t = tr.stop_events[rule.rule_id]
        assert t is not None and t > 0
        thr = tr.thresholds[rule.rule_id]
        assert tr.risk_at(t) <= thr < tr.risk_at(t - 1)
        assert oracle_stopping_time(tr, thr) == t

    def test_norm_control_at_stop(self):
        for seed in range(4):
            cov, param, data = small_instance(n=50, d=120, seed=seed, a=1.5)
            eta, _ = default_stepsize(data)
            k = 4
            rule = StoppingRule.cross_head(k)
            tr = run_gd(data, GDConfig(eta=eta, max_iters=20000, halt_on_stop=True),
                        [rule], param)
            t = tr.stop_events[rule.rule_id]
            if t is None or t == 0:
                continue
            head, _ = split_parameter(param, k)
            w_prev = tr.iterate(t - 1)
            assert np.linalg.norm(w_prev - head) <= np.linalg.norm(head) + 1e-9

    def test_unresolved_rule_is_none(self):
        _, param, data = small_instance()
        tr = run_gd(data, GDConfig(eta=0.1, max_iters=3), [StoppingRule.grad_norm(1e-30)],
                    param)
        assert tr.stop_events["grad_norm(1e-30)"] is None

    def test_fixed_horizon_halts(self):
        _, _, data = small_instance()
        tr = run_gd(data, GDConfig(eta=0.1, max_iters=100, halt_on_stop=True),
                    [StoppingRule.fixed_horizon(7)])
        assert tr.t[-1] == 7

    def test_crossing_rule_needs_parameter(self):
        _, _, data = small_instance()
        with pytest.raises(ValueError):
            run_gd(data, GDConfig(eta=0.1, max_iters=3), [StoppingRule.cross_star()])

    def test_separable_norm_diverges(self):
        cov, param, data = small_instance(n=20, d=60, seed=6)
        eta, _ = default_stepsize(data)
        tr = run_gd(data, GDConfig(eta=eta, max_iters=50000))
        tail = tr.t >= 100
        assert np.all(np.diff(tr.w_norm[tail]) > 0)
        assert tr.grad_norm[-1] < 1e-3 * tr.grad_norm[0]
        assert tr.emp_risk[-1] < 1e-3


class TestOracleStopping:
    def setup_method(self):
        _, _, data = small_instance()
        eta, _ = default_stepsize(data)
        self.tr = run_gd(data, GDConfig(eta=eta, max_iters=20,
                                        record_schedule=tuple(range(1, 21))))

    def test_initial(self):
        assert oracle_stopping_time(self.tr, LN2) == 0

    def test_boundary_inclusive(self):
        assert oracle_stopping_time(self.tr, self.tr.risk_at(5)) == 5

    def test_never(self):
        assert oracle_stopping_time(self.tr, -1.0) is None


class TestImplicitBiasResidual:
    def setup_method(self):
        _, _, data = small_instance(seed=4)
        eta, _ = default_stepsize(data)
        self.tr = run_gd(data, GDConfig(eta=eta, max_iters=300))

    def test_self_comparator(self):
        t = 256
        w = self.tr.iterate(t)
        r = implicit_bias_residual(self.tr, w, t)
        assert r == pytest.approx(float(w @ w) / (2 * self.tr.eta * t), rel=1e-12)

    def test_zero_comparator(self):
        t = 128
        r = implicit_bias_residual(self.tr, np.zeros(self.tr.iterates.shape[1]), t)
        w = self.tr.iterate(t)
        expected = LN2 - float(w @ w) / (2 * self.tr.eta * t) - self.tr.risk_at(t)
        assert r == pytest.approx(expected, abs=1e-14)
        assert r >= -1e-9

    def test_rejects_t0(self):
        with pytest.raises(ValueError):
            implicit_bias_residual(self.tr, np.zeros(self.tr.iterates.shape[1]), 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(5, 60), st.integers(2, 80),
       st.floats(-2, 2))
def test_residual_nonnegative(seed, n, d, log_scale):
    cov = build_spectrum(SpectrumSpec("identity"), d)
    rng = np.random.default_rng(seed)
    param = make_true_parameter(cov, rng.standard_normal(d))
    data = sample_dataset(cov, param, n, seed=seed)
    eta, _ = default_stepsize(data)
    comps = [(f"u{i}", 10 ** log_scale * rng.standard_normal(d) / math.sqrt(d))
             for i in range(3)]
    tr = run_gd(data, GDConfig(eta=eta, max_iters=300), comparators=comps)
    for res in tr.comparator_residuals.values():
        assert np.all(res >= -1e-9)
