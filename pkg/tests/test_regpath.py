import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.special import expit

from esgd.data_model import (
    Dataset,
    SpectrumSpec,
    build_spectrum,
    make_true_parameter,
    sample_dataset,
)
from esgd.gd_engine import GDConfig, default_stepsize, empirical_gradient, empirical_risk, run_gd
from esgd.regpath import (
    build_reg_path,
    compare_paths,
    lambda_grid,
    min_distance_to_regpath,
    solve_l2_erm,
)

SQRT2 = math.sqrt(2.0)


def instance(n=20, d=40, seed=0, kind="identity"):
    cov = build_spectrum(SpectrumSpec(kind, a=1.0), d)
    rng = np.random.default_rng(seed)
    param = make_true_parameter(cov, rng.standard_normal(d))
    return sample_dataset(cov, param, n, seed=seed)


class TestSolve:
    def test_cancelling_pair_stays_at_zero(self):
        data = Dataset(np.array([[1.0, 2.0], [1.0, 2.0]]), np.array([1.0, -1.0]))
        for lam in (10.0, 1.0, 1e-3):
            assert np.all(solve_l2_erm(data, lam).u == 0.0)

    def test_one_dimensional_bisection(self):
        data = Dataset(np.array([[1.0]]), np.array([1.0]))
        u_ref = brentq(lambda u: expit(-u) - 0.1 * u, 0.0, 10.0, xtol=1e-15, rtol=1e-15)
        assert solve_l2_erm(data, 0.1).u[0] == pytest.approx(u_ref, abs=1e-10)

    @pytest.mark.parametrize("lam", [10.0, 0.3, 1e-4])
    def test_norm_bound(self, lam):
        data = instance(seed=1)
        u = solve_l2_erm(data, lam).u
        assert np.linalg.norm(u) <= np.linalg.norm(data.features, axis=1).max() / lam + 1e-12

    @pytest.mark.parametrize("lam", [1.0, 1e-2, 1e-6])
    def test_kkt_by_substitution(self, lam):
        data = instance(seed=2)
        pt = solve_l2_erm(data, lam, tol=1e-11)
        g = empirical_gradient(pt.u, data)
        assert np.linalg.norm(pt.u + g / lam) * lam <= 1e-10
        assert pt.kkt_residual <= 1e-11

    def test_underdetermined_and_overdetermined_agree_with_gradient(self):
        for n, d in ((60, 10), (10, 60)):
            data = instance(n=n, d=d, seed=3)
            pt = solve_l2_erm(data, 0.05)
            assert np.linalg.norm(empirical_gradient(pt.u, data) + 0.05 * pt.u) <= 1e-10

    def test_rejects_bad_lambda(self):
        with pytest.raises(ValueError):
            solve_l2_erm(instance(), 0.0)


class TestPath:
    def test_norms_monotone(self):
        path = build_reg_path(instance(seed=5), [10.0, 1.0, 0.1])
        norms = [p.norm for p in path]
        assert norms[0] <= norms[1] <= norms[2]

    def test_huge_lambda(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 5))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        data = Dataset(X, np.where(rng.random(10) < 0.5, -1.0, 1.0))
        assert build_reg_path(data, [1e6])[0].norm <= 1e-6

    def test_separable_risk_to_zero(self):
        data = instance(n=15, d=60, seed=6)
        path = build_reg_path(data, lambda_grid(1.0, 1e-8, 10.0))
        risks = [empirical_risk(p.u, data) for p in path]
        assert np.all(np.diff(risks) < 0)
        assert risks[-1] < 1e-3

    def test_continuity(self):
        data = instance(seed=7)
        path = build_reg_path(data, lambda_grid(10.0, 1e-4, 1.1))
        for p, q in zip(path[:-1], path[1:]):
            assert np.linalg.norm(p.u - q.u) <= q.norm

    def test_grid_must_decrease(self):
        with pytest.raises(ValueError):
            build_reg_path(instance(), [0.1, 1.0])

    def test_lambda_grid_endpoints(self):
        g = lambda_grid(1e3, 1e-8, 1.1)
        assert g[0] == 1e3 and g[-1] == 1e-8
        assert np.all(np.diff(g) < 0)


def _check_triple(cmp):
    assert np.all(cmp.cosine >= 1 / SQRT2 - 1e-8)
    assert np.all(cmp.norm_ratio >= SQRT2 / (1 + SQRT2) - 1e-8)
    assert np.all(cmp.norm_ratio <= SQRT2 / (SQRT2 - 1) + 1e-8)
    assert np.all(cmp.distance <= cmp.w_norm / SQRT2 + 1e-8)


class TestCompare:
    @pytest.mark.parametrize("n,d", [(30, 10), (15, 80)])
    def test_lambda_of_t_triple(self, n, d):
        data = instance(n=n, d=d, seed=8, kind="power_law")
        eta, _ = default_stepsize(data)
        tr = run_gd(data, GDConfig(eta=eta, max_iters=3000))
        cmp = compare_paths(tr, data)
        assert cmp.t.size == (tr.t > 0).sum()
        np.testing.assert_allclose(cmp.lam, 1 / (eta * cmp.t))
        _check_triple(cmp)

    def test_matched_norm_needs_direction(self):
        data = instance()
        tr = run_gd(data, GDConfig(eta=0.1, max_iters=10))
        with pytest.raises(ValueError):
            compare_paths(tr, data, mode="matched_norm")

    def test_unknown_mode(self):
        data = instance()
        tr = run_gd(data, GDConfig(eta=0.1, max_iters=10))
        with pytest.raises(ValueError):
            compare_paths(tr, data, mode="nearest")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 40), st.integers(2, 60), st.floats(-1, 1))
def test_triple_holds_for_any_instance(seed, n, d, log_scale):
    cov = build_spectrum(SpectrumSpec("identity"), d)
    rng = np.random.default_rng(seed)
    param = make_true_parameter(cov, rng.standard_normal(d))
    data = sample_dataset(cov, param, n, seed=seed)
    data = Dataset(data.features * 10 ** log_scale, data.labels)
    eta, _ = default_stepsize(data)
    tr = run_gd(data, GDConfig(eta=eta, max_iters=500))
    _check_triple(compare_paths(tr, data))


class TestMinDistance:
    def setup_method(self):
        self.data = instance(n=12, d=30, seed=9)
        self.grid = lambda_grid(10.0, 1e-5, 1.5)

    def test_on_path_point(self):
        path = build_reg_path(self.data, self.grid)
        target = path[10]
        lam, dist, edge = min_distance_to_regpath(target.u, self.data, self.grid, path=path)
        assert dist <= 1e-10
        assert not edge

    def test_origin(self):
        path = build_reg_path(self.data, self.grid)
        lam, dist, edge = min_distance_to_regpath(np.zeros(self.data.d), self.data, self.grid,
                                                  path=path)
        assert lam == self.grid[0] and edge
        assert dist <= path[0].norm + 1e-15

    def test_off_grid_refinement(self):
        lam0 = float(np.sqrt(self.grid[10] * self.grid[11]))
        u = solve_l2_erm(self.data, lam0).u
        lam, dist, _ = min_distance_to_regpath(u, self.data, self.grid)
        assert dist <= 1e-6
        assert lam == pytest.approx(lam0, rel=1e-3)

    def test_grid_span(self):
        with pytest.raises(ValueError, match="6 decades"):
            min_distance_to_regpath(np.zeros(self.data.d), self.data, lambda_grid(1.0, 1e-3))
