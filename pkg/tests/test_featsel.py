import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.linear_model import lasso_path as sk_lasso_path

from volscreen import featsel as fs
from volscreen import synthetic as sy
from volscreen.errors import AllConstant, NonConvergence


def orthonormal_design(n=200, p=10, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, p))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    X = Q * np.sqrt(n)  # X^T X = n I, zero-mean columns
    beta = rng.normal(0, 1.5, size=p)
    y = X @ beta + rng.normal(0, 0.5, size=n)
    return X, y - y.mean()


# -- filters -----------------------------------------------------------------

def test_drop_constant():
    X = np.column_stack([np.ones(5), np.arange(5.0), np.r_[1.0, 1.0, 1.0, 1.0, np.nextafter(1.0, 2)]])
    Xr, kept, removed = fs.drop_constant(X, ["one", "ramp", "almost"])
    assert kept == ["ramp", "almost"] and removed == ["one"]
    assert Xr.shape == (5, 2)


def test_all_constant():
    with pytest.raises(AllConstant):
        fs.drop_constant(np.ones((4, 3)), "abc")


def test_correlation_filter_duplicates_and_sign():
    rng = np.random.default_rng(1)
    x = rng.normal(size=1000)
    z = rng.normal(size=1000)
    X = np.column_stack([x, x, -x, z])
    _, kept, dropped = fs.correlation_filter(X, ["x", "dup", "neg", "z"])
    assert kept == ["x", "z"]
    assert [(a, b) for a, b, _ in dropped] == [("x", "dup"), ("x", "neg")]
    assert all(r2 == pytest.approx(1.0) for *_, r2 in dropped)


def test_independent_columns_survive():
    rng = np.random.default_rng(2)
    _, kept, _ = fs.correlation_filter(rng.normal(size=(1000, 2)), ["a", "b"])
    assert kept == ["a", "b"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_filters_are_order_stable(seed):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(40, 4))
    X = np.column_stack([base, base[:, :2] + 0.1 * rng.normal(size=(40, 2)), np.ones(40)])
    names = [f"c{j}" for j in range(X.shape[1])]
    a = fs.prune_features(X, names)
    b = fs.prune_features(X.copy(), list(names))
    assert a[1] == b[1]
    np.testing.assert_array_equal(a[0], b[0])


# -- lasso path --------------------------------------------------------------

def test_above_lambda_max_all_zero():
    X, y = orthonormal_design()
    lmax = fs.lambda_max(X, y)
    path = fs.lasso_path(X, y, [lmax, 2 * lmax])
    assert np.all(path.coefs == 0.0)


def test_orthonormal_soft_threshold_oracle():
    X, y = orthonormal_design()
    lambdas = fs.lambda_grid(X, y)
    path = fs.lasso_path(X, y, lambdas)
    z = X.T @ y / len(y)
    for k, lam in enumerate(lambdas):
        np.testing.assert_allclose(path.coefs[k], fs.soft_threshold(z, lam), atol=1e-6, rtol=0)


def test_orthonormal_active_set_monotone():
    X, y = orthonormal_design(seed=3)
    path = fs.lasso_path(X, y, fs.lambda_grid(X, y))
    sizes = [len(path.active(k)) for k in range(len(path.lambdas))]
    # lambdas descend, so active sets may only grow along the path
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_zero_lambda_is_ols():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 6))
    X -= X.mean(axis=0)
    y = X @ rng.normal(size=6) + rng.normal(size=80)
    y -= y.mean()
    path = fs.lasso_path(X, y, [1.0, 0.1, 0.0])
    ols = np.linalg.solve(X.T @ X, X.T @ y)
    np.testing.assert_allclose(path.coefs[-1], ols, atol=1e-6)


def test_matches_sklearn_on_correlated_design():
    rng = np.random.default_rng(5)
    n, p = 150, 12
    L = rng.normal(size=(p, p)) * 0.3 + np.eye(p)
    X = rng.normal(size=(n, p)) @ L
    X = (X - X.mean(0)) / X.std(0)
    y = X[:, 0] - 2 * X[:, 4] + rng.normal(size=n)
    y -= y.mean()
    lambdas = fs.lambda_grid(X, y, n=30, ratio=1e-2)
    ours = fs.lasso_path(X, y, lambdas, tol=1e-10).coefs
    _, ref, _ = sk_lasso_path(X, y, alphas=lambdas, tol=1e-12, max_iter=100_000)
    np.testing.assert_allclose(ours, ref.T, atol=1e-6)


def test_kkt_conditions_hold():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(100, 15))
    X = (X - X.mean(0)) / X.std(0)
    y = X[:, :3].sum(axis=1) + rng.normal(size=100)
    y -= y.mean()
    lambdas = fs.lambda_grid(X, y, n=20, ratio=1e-2)
    path = fs.lasso_path(X, y, lambdas, tol=1e-10)
    for k, lam in enumerate(lambdas):
        b = path.coefs[k]
        g = X.T @ (y - X @ b) / len(y)
        on = b != 0
        np.testing.assert_allclose(g[on], lam * np.sign(b[on]), atol=1e-7)
        assert np.all(np.abs(g[~on]) <= lam + 1e-7)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_objective_non_increasing_per_sweep(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 8))
    X[:, 1] = X[:, 0] + 0.2 * X[:, 1]
    X = (X - X.mean(0)) / X.std(0)
    y = X @ rng.normal(size=8) + rng.normal(size=60)
    y -= y.mean()
    hist = []
    fs.lasso_path(X, y, fs.lambda_grid(X, y, n=15, ratio=1e-3), history=hist)
    for (k0, v0), (k1, v1) in zip(hist, hist[1:]):
        if k0 == k1:
            assert v1 <= v0 + 1e-12 * max(1.0, abs(v0))


def test_non_convergence_raises_or_truncates():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 40))
    y = rng.normal(size=30)
    lambdas = fs.lambda_grid(X, y, n=10, ratio=1e-4)
    with pytest.raises(NonConvergence):
        fs.lasso_path(X, y, lambdas, max_sweeps=2)
    path = fs.lasso_path(X, y, lambdas, max_sweeps=2, truncate=True)
    k = path.n_converged
    assert k is not None and np.all(np.isnan(path.coefs[k:]))


# -- 1SE rule ----------------------------------------------------------------

def test_one_se_crafted_curve():
    mse = [5.0, 3.0, 2.0, 2.05, 4.0]
    se = [0.1] * 5
    ascending = [0.01, 0.1, 1.0, 10.0, 100.0]
    i_min, i_1se = fs.one_se_rule(ascending, mse, se)
    assert i_min == 2 and mse[i_1se] == 2.05
    # the same curve on a descending grid: the band's largest lambda is the minimum
    i_min, i_1se = fs.one_se_rule(ascending[::-1], mse, se)
    assert i_1se == 2


def test_one_se_zero_se_picks_argmin():
    assert fs.one_se_rule([3.0, 2.0, 1.0], [4.0, 1.0, 2.0], [0.0] * 3) == (1, 1)


@given(st.lists(st.tuples(st.floats(0.0, 10.0), st.floats(0.0, 1.0)), min_size=2, max_size=30))
def test_one_se_lambda_at_least_argmin(curve):
    lambdas = np.geomspace(10.0, 0.01, len(curve))
    mse, se = map(np.array, zip(*curve))
    i_min, i_1se = fs.one_se_rule(lambdas, mse, se)
    assert lambdas[i_1se] >= lambdas[i_min]
    assert mse[i_1se] <= mse[i_min] + se[i_min]


@pytest.mark.parametrize("seed", range(10))
def test_cv_recovers_true_features(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(500, 22))
    y = 2.0 * X[:, 1] - 1.5 * X[:, 3] + rng.normal(size=500)
    res = fs.lasso_cv_1se(X, y, folds=10, seed=seed)
    assert {"x1", "x3"} <= set(res.active)
    assert len(res.active) <= 6
    assert len(res.mse_mean) == len(res.mse_se) == len(res.lambdas)


def test_cv_too_few_rows():
    with pytest.raises(ValueError):
        fs.lasso_cv_1se(np.ones((5, 2)), np.ones(5), folds=10)


# -- union and selection -----------------------------------------------------

def test_outer_union():
    assert fs.outer_union([{"a", "b"}, {"b", "c"}, {"c"}]) == ["a", "b", "c"]
    with pytest.warns(RuntimeWarning):
        assert fs.outer_union([set(), set(), set()]) == []


def test_select_features_on_synthetic(tmp_path):
    ds = sy.feature_dataset(n_molecules=80, n_decoys=10, seed=1)
    res = fs.select_features(ds, seed=1)
    assert set(sy.TRUE_FEATURES) <= set(res.features)
    assert set(res.per_fold) == {"fold0", "fold1", "fold2"}
    fs.write_selection_report(tmp_path / "sel.csv", res)
    lines = (tmp_path / "sel.csv").read_text().splitlines()
    assert lines[0] == "feature,fold0,fold1,fold2,selected"
    assert len(lines) == 1 + len(res.pruned_names)


def test_selection_never_reads_holdout():
    ds = sy.feature_dataset(n_molecules=60, n_decoys=5, seed=2)
    base = fs.select_features(ds, seed=0)
    hold = ds.indices("holdout")
    ds.y[hold] = 1e6  # poison the holdout targets
    ds.features[hold] = np.random.default_rng(0).normal(size=ds.features[hold].shape) * 1e6
    again = fs.select_features(ds, seed=0)
    assert again.features == base.features
