"""Gaussian-process regression with explicit basis functions.

Kernels are stationary functions of a scaled distance ``r`` (one length
scale, or one per input dimension for the ``ard`` variants)::

    exponential         s2 * exp(-r)
    squaredexponential  s2 * exp(-r**2 / 2)
    matern32            s2 * (1 + sqrt(3) r) exp(-sqrt(3) r)
    matern52            s2 * (1 + sqrt(5) r + 5 r**2 / 3) exp(-sqrt(5) r)
    rationalquadratic   s2 * (1 + r**2 / (2 a)) ** -a

The mean function is ``H(x) @ beta`` where ``H`` is one of the bases
``none``, ``constant``, ``linear`` or ``pureQuadratic`` (constant, linear and
per-feature squares, no cross terms).  For a given set of kernel
hyperparameters ``beta`` is the generalized-least-squares estimate, so the
log marginal likelihood is a profile likelihood in the hyperparameters.
``beta`` is treated as known when computing predictive variances.

Hyperparameters are optimized in log space, on standardized inputs and
targets, with analytic gradients.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, lapack, solve_triangular
from scipy.optimize import minimize

from .errors import (
    DimensionMismatch,
    EmptyBackground,
    LengthMismatch,
    NonFinite,
    SingularKernel,
    TooManyFeatures,
    ZeroVariance,
)

FAMILIES = ("exponential", "squaredexponential", "matern32", "matern52", "rationalquadratic")
KERNELS = FAMILIES + tuple("ard" + f for f in FAMILIES)
BASES = ("none", "constant", "linear", "pureQuadratic")

NOISE_FLOOR = 1e-8
JITTER_LADDER = tuple(10.0**e for e in range(-10, -3))
_LOG2PI = math.log(2 * math.pi)

# log-space box for the optimizer (standardized units)
_BOUNDS = {
    "signal": (math.log(1e-3), math.log(1e3)),
    "length": (math.log(1e-3), math.log(1e4)),
    "alpha": (math.log(1e-3), math.log(1e3)),
    "noise": (0.5 * math.log(NOISE_FLOOR), math.log(1e2)),
}


@dataclass(frozen=True)
class KernelSpec:
    family: str
    ard: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @classmethod
    def from_name(cls, name: str) -> "KernelSpec":
        if name.startswith("ard"):
            return cls(name[3:], True)
        return cls(name, False)

    @property
    def name(self) -> str:
        return ("ard" if self.ard else "") + self.family

    def n_params(self, d: int) -> int:
        """Kernel hyperparameter count (signal, lengths, alpha)."""
        return 1 + (d if self.ard else 1) + (self.family == "rationalquadratic")


@dataclass
class Hyper:
    """Kernel hyperparameters in natural units."""

    signal_var: float
    length_scale: float | np.ndarray
    alpha: float = 1.0

    def to_theta(self, spec: KernelSpec, d: int, noise_var: float) -> np.ndarray:
        ls = np.atleast_1d(np.asarray(self.length_scale, dtype=float))
        if spec.ard:
            ls = np.broadcast_to(ls, (d,)) if ls.size == 1 else ls
            if ls.size != d:
                raise DimensionMismatch(f"{ls.size} length scales for {d} features")
        elif ls.size != 1:
            raise DimensionMismatch("isotropic kernel takes a single length scale")
        parts = [0.5 * math.log(self.signal_var), *np.log(ls)]
        if spec.family == "rationalquadratic":
            parts.append(math.log(self.alpha))
        parts.append(0.5 * math.log(noise_var))
        return np.array(parts, dtype=float)


def _unpack(spec: KernelSpec, theta: np.ndarray, d: int):
    sf2 = math.exp(2 * theta[0])
    nl = d if spec.ard else 1
    ls = np.exp(theta[1:1 + nl])
    alpha = math.exp(theta[1 + nl]) if spec.family == "rationalquadratic" else 1.0
    noise = math.exp(2 * theta[-1])
    return sf2, ls, alpha, noise


def _radial(family: str, r: np.ndarray, sf2: float, alpha: float):
    """Kernel value ``k(r)`` and ``g(r) = k'(r) / r`` (0 where r == 0 for exponential)."""
    if family == "exponential":
        k = sf2 * np.exp(-r)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(r > 0, -k / np.where(r > 0, r, 1.0), 0.0)
    elif family == "squaredexponential":
        k = sf2 * np.exp(-0.5 * r * r)
        g = -k
    elif family == "matern32":
        s = math.sqrt(3.0) * r
        e = np.exp(-s)
        k = sf2 * (1 + s) * e
        g = -3.0 * sf2 * e
    elif family == "matern52":
        s = math.sqrt(5.0) * r
        e = np.exp(-s)
        k = sf2 * (1 + s + s * s / 3.0) * e
        g = -(5.0 / 3.0) * sf2 * (1 + s) * e
    elif family == "rationalquadratic":
        base = 1 + r * r / (2 * alpha)
        k = sf2 * base**-alpha
        g = -sf2 * base ** (-alpha - 1)
    else:  # pragma: no cover
        raise ValueError(family)
    return k, g


def _sq_diffs(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape ``(d, n1, n2)``."""
    return (X1.T[:, :, None] - X2.T[:, None, :]) ** 2


def _scaled_r2(D2: np.ndarray, ls: np.ndarray) -> np.ndarray:
    if ls.size == 1:
        return D2.sum(axis=0) / ls[0] ** 2
    return np.tensordot(1.0 / ls**2, D2, axes=1)


def kernel_matrix(spec: KernelSpec, hyper: Hyper, X1, X2=None) -> np.ndarray:
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = X1 if X2 is None else np.atleast_2d(np.asarray(X2, dtype=float))
    if X1.shape[1] != X2.shape[1]:
        raise DimensionMismatch(f"{X1.shape[1]} vs {X2.shape[1]} features")
    d = X1.shape[1]
    theta = hyper.to_theta(spec, d, 1.0)
    sf2, ls, alpha, _ = _unpack(spec, theta, d)
    r = np.sqrt(_scaled_r2(_sq_diffs(X1, X2), ls))
    return _radial(spec.family, r, sf2, alpha)[0]


def kernel_eval(spec: KernelSpec, hyper: Hyper, x, x2) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise DimensionMismatch(f"{x.shape} vs {x2.shape}")
    return float(kernel_matrix(spec, hyper, x[None, :], x2[None, :])[0, 0])


def basis_matrix(kind: str, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if kind == "none":
        return np.zeros((n, 0))
    if kind == "constant":
        return np.ones((n, 1))
    if kind == "linear":
        return np.hstack([np.ones((n, 1)), X])
    if kind == "pureQuadratic":
        return np.hstack([np.ones((n, 1)), X, X**2])
    raise ValueError(f"unknown basis {kind!r}")


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------

@dataclass
class Standardizer:
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def fit(cls, X, y) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        xs = X.std(axis=0)
        ys = float(y.std())
        return cls(X.mean(axis=0), np.where(xs > 0, xs, 1.0), float(y.mean()), ys if ys > 0 else 1.0)

    @classmethod
    def identity(cls, d: int) -> "Standardizer":
        return cls(np.zeros(d), np.ones(d), 0.0, 1.0)

    def x(self, X):
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_std

    def y(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def y_inverse(self, z):
        return np.asarray(z, dtype=float) * self.y_std + self.y_mean

    def x_inverse(self, Z):
        return np.asarray(Z, dtype=float) * self.x_std + self.x_mean


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------

def _cholesky_with_jitter(K: np.ndarray):
    n = K.shape[0]
    for jitter in (0.0, *JITTER_LADDER):
        try:
            L = cholesky(K + jitter * np.eye(n) if jitter else K, lower=True, check_finite=False)
            if np.all(np.isfinite(L)):
                return L, jitter
        except np.linalg.LinAlgError:
            continue
    raise SingularKernel("Cholesky failed after jitter up to 1e-4")


@dataclass
class _Fit:
    lml: float
    grad: np.ndarray | None
    L: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    jitter: float


class _Problem:
    """Training data plus cached pairwise quantities for repeated LML calls."""

    def __init__(self, spec: KernelSpec, basis: str, X: np.ndarray, y: np.ndarray):
        self.spec = spec
        self.basis = basis
        self.X = X
        self.y = y
        self.n, self.d = X.shape
        self.H = basis_matrix(basis, X)
        self.D2 = _sq_diffs(X, X)

    def evaluate(self, theta: np.ndarray, with_grad: bool = True) -> _Fit:
        spec, n = self.spec, self.n
        sf2, ls, alpha_rq, noise = _unpack(spec, theta, self.d)
        if spec.ard:
            scaled = self.D2 / (ls**2)[:, None, None]
            r2 = scaled.sum(axis=0)
        else:
            r2 = self.D2.sum(axis=0) / ls[0] ** 2
        r = np.sqrt(r2)
        Kf, g = _radial(spec.family, r, sf2, alpha_rq)
        K = Kf + noise * np.eye(n)
        L, jitter = _cholesky_with_jitter(K)

        if self.H.shape[1]:
            KiH = cho_solve((L, True), self.H, check_finite=False)
            A = self.H.T @ KiH
            b = KiH.T @ self.y
            beta = np.linalg.lstsq(A, b, rcond=None)[0]
            resid = self.y - self.H @ beta
        else:
            beta = np.zeros(0)
            resid = self.y
        a = cho_solve((L, True), resid, check_finite=False)
        lml = -0.5 * float(resid @ a) - float(np.log(np.diag(L)).sum()) - 0.5 * n * _LOG2PI
        if not math.isfinite(lml):
            raise SingularKernel("non-finite log marginal likelihood")
        if not with_grad:
            return _Fit(lml, None, L, a, beta, jitter)

        Kinv, info = lapack.dpotri(L, lower=1)
        if info != 0:
            raise SingularKernel("could not invert the kernel matrix")
        Kinv = np.tril(Kinv)
        Kinv += np.tril(Kinv, -1).T
        W = np.outer(a, a)
        W -= Kinv
        grads = [float(np.vdot(W, Kf))]  # d/dlog(sf) = 0.5 * <W, 2 Kf>
        if spec.ard:
            for j in range(self.d):
                grads.append(-0.5 * float(np.vdot(W, g * scaled[j])))
        else:
            grads.append(-0.5 * float(np.vdot(W, g * r2)))
        if spec.family == "rationalquadratic":
            u = r2 / (2 * alpha_rq)
            dK = Kf * alpha_rq * (u / (1 + u) - np.log1p(u))
            grads.append(0.5 * float(np.vdot(W, dK)))
        grads.append(noise * float(np.trace(W)))
        return _Fit(lml, np.array(grads), L, a, beta, jitter)

    def bounds(self):
        nl = self.d if self.spec.ard else 1
        b = [_BOUNDS["signal"]] + [_BOUNDS["length"]] * nl
        if self.spec.family == "rationalquadratic":
            b.append(_BOUNDS["alpha"])
        b.append(_BOUNDS["noise"])
        return b

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        X = self.X
        if self.n > 500:
            X = X[np.sort(rng.choice(self.n, 500, replace=False))]
        iu = np.triu_indices(X.shape[0], 1)
        if self.spec.ard:
            ls = []
            for j in range(self.d):
                diffs = np.abs(X[:, j][:, None] - X[:, j][None, :])[iu]
                diffs = diffs[diffs > 0]
                ls.append(np.median(diffs) if diffs.size else 1.0)
            ls = np.array(ls)
        else:
            dist = np.sqrt(_sq_diffs(X, X).sum(axis=0))[iu]
            dist = dist[dist > 0]
            ls = np.array([np.median(dist) if dist.size else 1.0])
        vy = float(np.var(self.y)) or 1.0
        hyper = Hyper(vy, ls, 1.0)
        return hyper.to_theta(self.spec, self.d, max(0.1 * vy, NOISE_FLOOR))


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

@dataclass
class GprModel:
    kernel: KernelSpec
    basis: str
    theta: np.ndarray
    beta: np.ndarray
    scaler: Standardizer
    X: np.ndarray  # standardized training inputs
    y: np.ndarray  # standardized training targets
    L: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    lml: float
    jitter: float = 0.0
    data_hash: str = ""
    X_raw: np.ndarray | None = field(default=None, repr=False)
    y_raw: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def signal_var(self) -> float:
        return _unpack(self.kernel, self.theta, self.n_features)[0]

    @property
    def length_scale(self) -> np.ndarray:
        return _unpack(self.kernel, self.theta, self.n_features)[1]

    @property
    def rq_alpha(self) -> float:
        return _unpack(self.kernel, self.theta, self.n_features)[2]

    @property
    def noise_var(self) -> float:
        return _unpack(self.kernel, self.theta, self.n_features)[3]

    @property
    def hyper(self) -> Hyper:
        sf2, ls, a, _ = _unpack(self.kernel, self.theta, self.n_features)
        return Hyper(sf2, ls if self.kernel.ard else float(ls[0]), a)

    def predict(self, Xq, return_std: bool = True):
        """Posterior mean (and standard deviation) in original target units."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if Xq.shape[1] != self.n_features:
            raise DimensionMismatch(f"model has {self.n_features} features, got {Xq.shape[1]}")
        Z = self.scaler.x(Xq)
        sf2, ls, a, _ = _unpack(self.kernel, self.theta, self.n_features)
        r = np.sqrt(_scaled_r2(_sq_diffs(Z, self.X), ls))
        Ks = _radial(self.kernel.family, r, sf2, a)[0]
        mean = basis_matrix(self.basis, Z) @ self.beta + Ks @ self.alpha
        mean = self.scaler.y_inverse(mean)
        if not return_std:
            return mean
        v = solve_triangular(self.L, Ks.T, lower=True, check_finite=False)
        var = np.maximum(sf2 - (v * v).sum(axis=0), 0.0)
        return mean, np.sqrt(var) * self.scaler.y_std

    def __call__(self, Xq):
        return self.predict(Xq, return_std=False)

    # persistence -----------------------------------------------------
    def _raw(self):
        if self.X_raw is not None:
            return self.X_raw, self.y_raw
        return self.scaler.x_inverse(self.X), self.scaler.y_inverse(self.y)

    def to_record(self) -> dict:
        sf2, ls, a, noise = _unpack(self.kernel, self.theta, self.n_features)
        return {
            "format": "volscreen.gpr/1",
            "kernel": self.kernel.name,
            "basis": self.basis,
            "signal_var": sf2,
            "length_scale": ls.tolist(),
            "rq_alpha": a,
            "noise_var": noise,
            "theta": self.theta.tolist(),
            "beta": self.beta.tolist(),
            "x_mean": self.scaler.x_mean.tolist(),
            "x_std": self.scaler.x_std.tolist(),
            "y_mean": self.scaler.y_mean,
            "y_std": self.scaler.y_std,
            "log_marginal_likelihood": self.lml,
            "training_data_sha256": self.data_hash,
            "X_train": self._raw()[0].tolist(),
            "y_train": self._raw()[1].tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GprModel":
        X = np.asarray(rec["X_train"], dtype=float)
        y = np.asarray(rec["y_train"], dtype=float)
        digest = training_hash(X, y)
        if rec.get("training_data_sha256") and rec["training_data_sha256"] != digest:
            raise ValueError("training data does not match recorded hash")
        scaler = Standardizer(np.asarray(rec["x_mean"]), np.asarray(rec["x_std"]),
                              float(rec["y_mean"]), float(rec["y_std"]))
        return _assemble(KernelSpec.from_name(rec["kernel"]), rec["basis"],
                         np.asarray(rec["theta"], dtype=float), scaler, X, y)


def training_hash(X, y) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=float).tobytes())
    h.update(np.ascontiguousarray(y, dtype=float).tobytes())
    return h.hexdigest()


def save_model(path, model: GprModel) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_record(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> GprModel:
    with open(path) as fh:
        return GprModel.from_record(json.load(fh))


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{X.shape[0]} rows vs {y.shape[0]} targets")
    if X.shape[0] < 2:
        raise ValueError("need at least two training points")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFinite("training data contains NaN or inf")
    return X, y


def _assemble(spec, basis, theta, scaler, X_raw, y_raw) -> GprModel:
    X = scaler.x(X_raw)
    y = scaler.y(y_raw)
    fit = _Problem(spec, basis, X, y).evaluate(theta, with_grad=False)
    return GprModel(spec, basis, np.asarray(theta, dtype=float), fit.beta, scaler, X, y,
                    fit.L, fit.alpha, fit.lml, fit.jitter, training_hash(X_raw, y_raw),
                    np.array(X_raw, dtype=float), np.array(y_raw, dtype=float))


def fit_fixed(X, y, kernel: KernelSpec | str, basis: str, hyper: Hyper, noise_var: float,
              standardize: bool = False) -> GprModel:
    """Condition a GP on data with the given hyperparameters (no optimization).

    Hyperparameters are interpreted in standardized units when
    ``standardize`` is true, otherwise in the units of ``X`` and ``y``.
    """
    spec = KernelSpec.from_name(kernel) if isinstance(kernel, str) else kernel
    X, y = _check_xy(X, y)
    scaler = Standardizer.fit(X, y) if standardize else Standardizer.identity(X.shape[1])
    theta = hyper.to_theta(spec, X.shape[1], noise_var)
    return _assemble(spec, basis, theta, scaler, X, y)


def train(
    X,
    y,
    kernel: KernelSpec | str = "matern52",
    basis: str = "constant",
    seed: int = 0,
    restarts: int = 3,
    max_iter: int = 200,
    gtol: float = 1e-6,
    standardize: bool = True,
) -> GprModel:
    """Fit hyperparameters by maximizing the (profile) log marginal likelihood.

    The first start uses median pairwise distance for the length scale(s),
    the target variance for the signal and a tenth of it for the noise; the
    remaining ``restarts - 1`` starts perturb that point in log space with a
    generator seeded by ``seed``.  Each start runs L-BFGS-B with analytic
    gradients inside a fixed log-parameter box (the noise variance never
    drops below 1e-8).  The best start is kept.
    """
    spec = KernelSpec.from_name(kernel) if isinstance(kernel, str) else kernel
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    X, y = _check_xy(X, y)
    scaler = Standardizer.fit(X, y) if standardize else Standardizer.identity(X.shape[1])
    prob = _Problem(spec, basis, scaler.x(X), scaler.y(y))
    rng = np.random.default_rng(seed)
    bounds = prob.bounds()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    theta0 = np.clip(prob.initial_theta(rng), lo, hi)

    def objective(theta):
        try:
            fit = prob.evaluate(theta)
        except SingularKernel:
            return 1e25, np.zeros_like(theta)
        return -fit.lml, -fit.grad

    best_theta, best_val = None, math.inf
    for k in range(max(1, restarts)):
        start = theta0 if k == 0 else np.clip(theta0 + rng.normal(0.0, 1.0, theta0.size), lo, hi)
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_iter, "gtol": gtol})
        if res.fun < best_val and res.fun < 1e24:
            best_theta, best_val = res.x, float(res.fun)
    if best_theta is None:
        raise SingularKernel("every restart hit a singular kernel")
    return _assemble(spec, basis, best_theta, scaler, X, y)


def log_marginal_likelihood(model: GprModel) -> float:
    return model.lml


def lml_and_grad(model_or_problem, theta=None):
    """LML and its gradient w.r.t. the log-hyperparameters (standardized units)."""
    m = model_or_problem
    prob = _Problem(m.kernel, m.basis, m.X, m.y)
    fit = prob.evaluate(m.theta if theta is None else np.asarray(theta, dtype=float))
    return fit.lml, fit.grad


# ---------------------------------------------------------------------------
# metrics and attribution
# ---------------------------------------------------------------------------

def regression_metrics(y, yhat) -> dict:
    """R², RMSE, MAE and MAPE (%, skipping targets with ``|y| < 1e-9``)."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise LengthMismatch(f"{y.size} targets vs {yhat.size} predictions")
    if y.size < 2:
        raise LengthMismatch("need at least two values")
    err = y - yhat
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        raise ZeroVariance("targets have zero variance; R² undefined")
    mask = np.abs(y) >= 1e-9
    mape = float(100.0 * np.mean(np.abs(err[mask]) / np.abs(y[mask]))) if mask.any() else float("nan")
    return {
        "r2": 1.0 - float((err**2).sum()) / ss_tot,
        "rmse": float(np.sqrt(np.mean(err**2))),
        "mae": float(np.mean(np.abs(err))),
        "mape": mape,
    }


@dataclass
class ShapleyResult:
    values: np.ndarray
    base_value: float
    prediction: float


def shapley_values(model: Callable | GprModel, x, background, max_features: int = 10) -> ShapleyResult:
    """Exact interventional Shapley values by enumerating all coalitions.

    The value of coalition ``S`` is the mean prediction over background rows
    with the features in ``S`` replaced by those of ``x``.
    """
    f = model.predict if isinstance(model, GprModel) else model
    x = np.asarray(x, dtype=float).ravel()
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    if bg.shape[0] == 0:
        raise EmptyBackground("background sample is empty")
    d = x.size
    if d > max_features:
        raise TooManyFeatures(f"{d} features; exact enumeration is limited to {max_features}")
    if bg.shape[1] != d:
        raise DimensionMismatch(f"background has {bg.shape[1]} features, x has {d}")

    masks = np.array(list(itertools.product([False, True], repeat=d)), dtype=bool)[:, ::-1]
    # masks[i] bit j is set iff (i >> j) & 1
    m = bg.shape[0]
    Z = np.where(masks[:, None, :], x[None, None, :], bg[None, :, :]).reshape(-1, d)
    preds = np.asarray(_point_predict(f, Z), dtype=float).reshape(len(masks), m)
    value = preds.mean(axis=1)

    fact = [math.factorial(k) for k in range(d + 1)]
    phi = np.zeros(d)
    for s in range(len(masks)):
        size = int(masks[s].sum())
        for j in range(d):
            if masks[s, j]:
                continue
            w = fact[size] * fact[d - size - 1] / fact[d]
            phi[j] += w * (value[s | (1 << j)] - value[s])
    return ShapleyResult(phi, float(value[0]), float(value[-1]))


def _point_predict(f, Z):
    out = f(Z)
    if isinstance(out, tuple):
        out = out[0]
    return out
