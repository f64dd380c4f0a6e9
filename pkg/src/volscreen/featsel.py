"""Feature pruning and LASSO selection with the one-standard-error rule."""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AllConstant, NonConvergence

log = logging.getLogger(__name__)


def drop_constant(X, names):
    """Remove zero-range columns.  Returns ``(X_reduced, kept_names, removed_names)``."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    keep = np.ptp(X, axis=0) > 0
    if not keep.any():
        raise AllConstant("every column is constant")
    names = list(names)
    kept = [n for n, k in zip(names, keep) if k]
    removed = [n for n, k in zip(names, keep) if not k]
    return X[:, keep], kept, removed


def correlation_filter(X, names, r2_threshold: float = 0.5):
    """Greedy redundancy filter in column order.

    A column is dropped when its squared Pearson correlation with any
    already-kept column exceeds ``r2_threshold``; the earlier column wins.
    Returns ``(X_reduced, kept_names, dropped)`` where ``dropped`` holds
    ``(kept_name, dropped_name, r2)`` triples.
    """
    X = np.asarray(X, dtype=float)
    names = list(names)
    Z = X - X.mean(axis=0)
    Z /= np.sqrt((Z**2).sum(axis=0))
    R2 = (Z.T @ Z) ** 2
    kept: list[int] = []
    dropped = []
    for j in range(X.shape[1]):
        if kept:
            r2 = R2[j, kept]
            worst = int(np.argmax(r2))
            if r2[worst] > r2_threshold:
                dropped.append((names[kept[worst]], names[j], float(r2[worst])))
                continue
        kept.append(j)
    return X[:, kept], [names[j] for j in kept], dropped


def prune_features(X, names, r2_threshold: float = 0.5):
    """Constant filter followed by the correlation filter."""
    X1, names1, removed = drop_constant(X, names)
    X2, names2, dropped = correlation_filter(X1, names1, r2_threshold)
    return X2, names2, {"constant": removed, "correlated": dropped}


# ---------------------------------------------------------------------------
# LASSO
# ---------------------------------------------------------------------------

def soft_threshold(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def lambda_max(X, y) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.max(np.abs(X.T @ y)) / X.shape[0])


def lambda_grid(X, y, n: int = 100, ratio: float = 1e-4) -> np.ndarray:
    lmax = lambda_max(X, y)
    if lmax == 0:
        lmax = 1.0
    return np.geomspace(lmax, lmax * ratio, n)


def lasso_objective(X, y, beta, lam) -> float:
    r = y - X @ beta
    return float(r @ r / (2 * len(y)) + lam * np.abs(beta).sum())


@dataclass
class LassoPath:
    lambdas: np.ndarray
    coefs: np.ndarray  # (n_lambdas, p)
    sweeps: np.ndarray
    mse_mean: np.ndarray | None = None
    mse_se: np.ndarray | None = None
    n_converged: int | None = None  # set when the path was truncated

    def active(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.coefs[k] != 0)


def lasso_path(X, y, lambdas, tol: float = 1e-7, max_sweeps: int = 10_000, history=None,
               truncate: bool = False) -> LassoPath:
    """Cyclic coordinate descent for ``(1/2n)|y - Xb|^2 + lam |b|_1``.

    ``X`` should be standardized and ``y`` centered (no intercept is fitted).
    Solutions are warm-started down ``lambdas`` in the order given.  After
    each full sweep the stationarity equations are solved on the active set
    (kept only if no sign flips), otherwise up to 10 active-set sweeps run
    before the next full sweep.  A lambda is done when a full sweep changes
    no coefficient by ``tol`` or more.  If ``history`` is a list, the objective
    after every sweep is appended as ``(lambda_index, value)``.

    With ``truncate`` a lambda that fails to converge ends the path instead
    of raising: its row and all later rows of ``coefs`` are NaN.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    G = X.T @ X / n
    c = X.T @ y / n
    yy = float(y @ y) / n
    lambdas = np.asarray(lambdas, dtype=float)
    coefs = np.empty((len(lambdas), p))
    sweeps = np.zeros(len(lambdas), dtype=int)

    # plain floats in the inner loop; Gb tracks G @ beta incrementally
    diag = np.diag(G).tolist()
    cl = c.tolist()
    rows = [G[j].copy() for j in range(p)]
    beta = [0.0] * p
    Gb = np.zeros(p)

    def sweep(idx, lam):
        nonlocal Gb
        biggest = 0.0
        for j in idx:
            d = diag[j]
            if d == 0.0:
                continue
            old = beta[j]
            rho = cl[j] - Gb[j] + d * old
            if rho > lam:
                new = (rho - lam) / d
            elif rho < -lam:
                new = (rho + lam) / d
            else:
                new = 0.0
            if new != old:
                beta[j] = new
                Gb += (new - old) * rows[j]
                if abs(new - old) > biggest:
                    biggest = abs(new - old)
        return biggest

    def objective(lam):
        b = np.array(beta)
        return 0.5 * (yy - 2 * c @ b + b @ G @ b) + lam * np.abs(b).sum()

    everything = range(p)
    for k, lam in enumerate(lambdas):
        lam = float(lam)
        done = False
        count = 0
        while count < max_sweeps:
            Gb = G @ np.array(beta)  # clear accumulated rounding
            change = sweep(everything, lam)
            count += 1
            if history is not None:
                history.append((k, objective(lam)))
            if change < tol:
                done = True
                break
            active = [j for j in range(p) if beta[j] != 0.0]
            if active and _active_jump(G, c, beta, active, lam):
                continue
            for _ in range(min(10, max_sweeps - count)):
                change = sweep(active, lam)
                count += 1
                if history is not None:
                    history.append((k, objective(lam)))
                if change < tol:
                    break
        if not done:
            if not truncate:
                raise NonConvergence(f"coordinate descent did not converge at lambda={lam:g}")
            log.debug("path truncated at lambda %d of %d", k, len(lambdas))
            coefs[k:] = np.nan
            sweeps[k] = count
            return LassoPath(lambdas, coefs, sweeps, n_converged=k)
        coefs[k] = beta
        sweeps[k] = count
    return LassoPath(lambdas, coefs, sweeps)


def _active_jump(G, c, beta, active, lam) -> bool:
    """Solve the stationarity equations on the current active set and signs.

    Accepted only when every solved coefficient keeps its sign, in which case
    the objective cannot increase.  Full sweeps still decide convergence.
    """
    A = np.asarray(active)
    signs = np.sign([beta[j] for j in active])
    try:
        b = np.linalg.solve(G[np.ix_(A, A)], c[A] - lam * signs)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.sign(b) == signs):
        return False
    for j, v in zip(active, b.tolist()):
        beta[j] = v
    return True


def one_se_rule(lambdas, mse_mean, mse_se) -> tuple[int, int]:
    """Return ``(argmin_index, one_se_index)``.

    The 1SE choice is the largest lambda whose mean CV error is within one
    standard error (taken at the minimum) of the minimum error.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    mse_mean = np.asarray(mse_mean, dtype=float)
    mse_se = np.asarray(mse_se, dtype=float)
    i_min = int(np.argmin(mse_mean))
    band = mse_mean[i_min] + mse_se[i_min]
    ok = np.flatnonzero(mse_mean <= band)
    i_1se = int(ok[np.argmax(lambdas[ok])])
    return i_min, i_1se


def _standardize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd, mu, sd


@dataclass
class LassoCVResult:
    path: LassoPath  # full-data path down to the 1SE lambda
    lambdas: np.ndarray
    mse_mean: np.ndarray
    mse_se: np.ndarray
    index_min: int
    index_1se: int
    coef: np.ndarray  # standardized coefficients at the 1SE lambda
    active: list

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.index_min])

    @property
    def lambda_1se(self) -> float:
        return float(self.lambdas[self.index_1se])


def lasso_cv_1se(
    X,
    y,
    names: Sequence[str] | None = None,
    folds: int = 10,
    seed: int = 0,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    tol: float = 1e-7,
    groups=None,
) -> LassoCVResult:
    """K-fold CV over a shared lambda grid, then a 1SE refit on all rows.

    Standardization is recomputed on each inner training split.  The
    standard error is the sample standard deviation of the fold MSEs over
    ``sqrt(folds)``.  With ``groups`` the random fold assignment is made per
    group, so rows of one molecule never straddle a split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < folds:
        raise ValueError(f"{n} rows for {folds} folds")
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]

    Xs, _, _ = _standardize(X)
    yc = y - y.mean()
    lambdas = lambda_grid(Xs, yc, n_lambdas, ratio)

    rng = np.random.default_rng(seed)
    if groups is None:
        assign = rng.permutation(n) % folds
    else:
        uniq, inverse = np.unique(np.asarray(groups).astype(str), return_inverse=True)
        if len(uniq) < folds:
            raise ValueError(f"{len(uniq)} groups for {folds} folds")
        assign = (rng.permutation(len(uniq)) % folds)[inverse]
    mse = np.empty((folds, len(lambdas)))
    for f in range(folds):
        tr, va = assign != f, assign == f
        Xt, mu, sd = _standardize(X[tr])
        ym = y[tr].mean()
        # an ill-conditioned split may stall at tiny lambdas; those lambdas
        # then count as infinitely bad rather than aborting the selection
        path = lasso_path(Xt, y[tr] - ym, lambdas, tol=tol, truncate=True)
        pred = ((X[va] - mu) / sd) @ path.coefs.T + ym
        err = ((pred - y[va, None]) ** 2).mean(axis=0)
        mse[f] = np.where(np.isnan(err), np.inf, err)
    with np.errstate(invalid="ignore"):
        mse_mean = mse.mean(axis=0)
        mse_se = mse.std(axis=0, ddof=1) / np.sqrt(folds)
    i_min, i_1se = one_se_rule(lambdas, mse_mean, mse_se)

    full = lasso_path(Xs, yc, lambdas[: i_1se + 1], tol=tol)
    full.mse_mean, full.mse_se = mse_mean, mse_se
    coef = full.coefs[-1]
    active = [names[j] for j in np.flatnonzero(coef)]
    return LassoCVResult(full, lambdas, mse_mean, mse_se, i_min, i_1se, coef, active)


def outer_union(fold_active_sets: Iterable[Iterable[str]]) -> list:
    sets = [set(s) for s in fold_active_sets]
    out = sorted(set().union(*sets)) if sets else []
    if not out:
        warnings.warn("LASSO selected no features in any outer fold", RuntimeWarning, stacklevel=2)
    return out


@dataclass
class SelectionResult:
    features: list
    per_fold: dict  # fold label -> LassoCVResult
    pruned_names: list
    prune_report: dict

    def report_rows(self):
        folds = sorted(self.per_fold)
        rows = []
        for name in self.pruned_names:
            flags = [int(name in self.per_fold[f].active) for f in folds]
            rows.append([name, *flags, int(name in self.features)])
        return rows


def select_features(dataset, folds=("fold0", "fold1", "fold2"), r2_threshold: float = 0.5,
                    inner_folds: int = 10, seed: int = 0, grouped: bool = True) -> SelectionResult:
    """Prune, then union the 1SE LASSO active sets of the outer CV models.

    The outer model for fold ``f`` is trained on the other CV folds; pruning
    statistics use all CV-fold rows so the holdout partition is never read.
    Inner folds are drawn per molecule unless ``grouped`` is false.
    """
    train_idx = dataset.indices(*folds)
    X_all = dataset.features
    Xp, kept_names, report = prune_features(X_all[train_idx], dataset.feature_names, r2_threshold)
    cols = [dataset.feature_names.index(n) for n in kept_names]
    labels = dataset.labels
    per_fold = {}
    for k, f in enumerate(folds):
        others = [g for g in folds if g != f]
        idx = np.flatnonzero(np.isin(labels, others))
        res = lasso_cv_1se(X_all[np.ix_(idx, cols)], dataset.y[idx], kept_names,
                           folds=inner_folds, seed=seed + k,
                           groups=dataset.molecule_ids[idx] if grouped else None)
        log.info("outer fold %s: lambda_1se=%.4g, %d active", f, res.lambda_1se, len(res.active))
        per_fold[f] = res
    union = outer_union(r.active for r in per_fold.values())
    # keep the pruned column order rather than alphabetical
    ordered = [n for n in kept_names if n in union]
    return SelectionResult(ordered, per_fold, kept_names, report)


def write_selection_report(path, result: SelectionResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", *sorted(result.per_fold), "selected"])
        w.writerows(result.report_rows())
