"""Fingerprint distances, t-SNE embedding, DBSCAN clusters and medoids."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import chemgraph as cg
from .errors import LengthMismatch, PerplexityTooLarge, WidthMismatch
from .vapordata import fmt

NOISE = -1


@dataclass
class DistanceMatrix:
    values: np.ndarray
    metric: str

    def __len__(self):
        return self.values.shape[0]


def _bit_matrix(fps: Sequence[cg.Fingerprint]) -> np.ndarray:
    widths = {fp.nbits for fp in fps}
    if len(widths) > 1:
        raise WidthMismatch(f"mixed fingerprint widths {sorted(widths)}")
    return np.array([fp.bits for fp in fps], dtype=float)


def similarity_matrix(fps: Sequence[cg.Fingerprint], metric: str = "rogers_tanimoto") -> np.ndarray:
    """All pairwise similarities from bit counts (exact integer arithmetic in float64)."""
    if metric not in cg.METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    B = _bit_matrix(fps)
    if B.size == 0:
        return np.zeros((len(fps), len(fps)))
    nbits = B.shape[1]
    n11 = B @ B.T
    C = 1.0 - B
    n00 = C @ C.T
    mism = nbits - n11 - n00
    if metric == "rogers_tanimoto":
        S = (n11 + n00) / (n11 + n00 + 2 * mism)
    else:
        denom = n11 + mism
        S = np.divide(n11, denom, out=np.ones_like(n11), where=denom > 0)
    np.fill_diagonal(S, 1.0)
    return S


def distance_matrix(fps: Sequence[cg.Fingerprint], metric: str = "rogers_tanimoto") -> DistanceMatrix:
    D = 1.0 - similarity_matrix(fps, metric)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D, metric)


# ---------------------------------------------------------------------------
# t-SNE (exact gradients)
# ---------------------------------------------------------------------------

def _row_affinities(d2, perplexity, tol=1e-5, max_iter=50):
    """Conditional probabilities for one row of squared distances (self excluded)."""
    target = math.log(perplexity)
    beta, lo, hi = 1.0, -np.inf, np.inf
    d2 = d2 - d2.min()  # shift for stability; does not change the normalized row
    for _ in range(max_iter):
        w = np.exp(-d2 * beta)
        s = w.sum()
        p = w / s
        H = float(beta * (d2 * p).sum() + math.log(s))
        diff = H - target
        if abs(diff) < tol:
            break
        if diff > 0:
            lo = beta
            beta = beta * 2 if hi == np.inf else (beta + hi) / 2
        else:
            hi = beta
            beta = beta / 2 if lo == -np.inf else (beta + lo) / 2
    return p


def joint_probabilities(D, perplexity: float = 30.0) -> np.ndarray:
    D = np.asarray(getattr(D, "values", D), dtype=float)
    n = D.shape[0]
    P = np.zeros((n, n))
    D2 = D**2
    for i in range(n):
        idx = np.r_[0:i, i + 1:n]
        P[i, idx] = _row_affinities(D2[i, idx], perplexity)
    P = (P + P.T) / (2 * n)
    return np.maximum(P, 1e-12)


def _kl(P, num):
    Q = num / num.sum()
    Q = np.maximum(Q, 1e-12)
    mask = ~np.eye(len(P), dtype=bool)
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def tsne(D, perplexity: float = 30.0, seed: int = 0, iters: int = 1000, learning_rate: float = 200.0,
         exaggeration: float = 12.0, exaggeration_iters: int = 250, history: list | None = None) -> np.ndarray:
    """Embed a precomputed distance matrix in two dimensions.

    ``history`` (if a list) receives ``(iteration, KL)`` after every update,
    computed against the unexaggerated affinities.
    """
    D = np.asarray(getattr(D, "values", D), dtype=float)
    n = D.shape[0]
    if n <= 3 * perplexity:
        raise PerplexityTooLarge(f"perplexity {perplexity} needs more than {3 * perplexity:g} points, got {n}")
    P = joint_probabilities(D, perplexity)
    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    # Exact duplicates (identical distance rows) feel identical forces, so the
    # exact dynamics keep them together.  Snapping them to a representative
    # every step stops rounding noise from being amplified by the short-range
    # repulsion between coincident points.
    first = {}
    rep = np.array([first.setdefault(D[i].tobytes(), i) for i in range(n)])
    has_dups = len(first) < n
    Y = Y[rep]
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(iters):
        early = it < exaggeration_iters
        Pe = P * exaggeration if early else P
        momentum = 0.5 if early else 0.8
        sq = (Y**2).sum(axis=1)
        num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2 * Y @ Y.T)
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        W = (Pe - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        Y = Y + update
        if has_dups:
            Y, update, gains = Y[rep], update[rep], gains[rep]
        Y -= Y.mean(axis=0)
        if history is not None:
            sq = (Y**2).sum(axis=1)
            num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2 * Y @ Y.T)
            np.fill_diagonal(num, 0.0)
            history.append((it + 1, _kl(P, num)))
    return Y


# ---------------------------------------------------------------------------
# DBSCAN
# ---------------------------------------------------------------------------

def _neighborhoods(data, eps, precomputed):
    if precomputed:
        D = np.asarray(getattr(data, "values", data), dtype=float)
        return [np.flatnonzero(row <= eps) for row in D]
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    tree = cKDTree(X)
    return [np.array(sorted(nb), dtype=int) for nb in tree.query_ball_point(X, eps)]


def dbscan(data, eps: float, min_pts: int = 10, precomputed: bool = False) -> np.ndarray:
    """Classic DBSCAN.  Neighborhoods include the point itself.

    Clusters are numbered in the order their first core point appears in
    ascending index order; a border point joins the first cluster that
    reaches it.  Noise is labeled -1.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be at least 1")
    nbrs = _neighborhoods(data, eps, precomputed)
    n = len(nbrs)
    core = np.array([len(nb) >= min_pts for nb in nbrs], dtype=bool)
    labels = np.full(n, NOISE, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = [i]
        head = 0
        while head < len(queue):
            a = queue[head]
            head += 1
            if not core[a]:
                continue
            for b in nbrs[a]:
                if labels[b] == NOISE:
                    labels[b] = cluster
                    queue.append(b)
        cluster += 1
    return labels


def default_eps(coords, k: int = 10, q: float = 90.0) -> float:
    """``q``-th percentile of each point's distance to its ``k``-th nearest neighbour."""
    X = np.asarray(coords, dtype=float)
    k = min(k, len(X) - 1)
    if k < 1:
        return 1.0
    d, _ = cKDTree(X).query(X, k + 1)
    eps = float(np.percentile(d[:, k], q))
    return eps if eps > 0 else 1.0


def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters by first appearance so label sets can be compared."""
    labels = np.asarray(labels)
    mapping = {}
    out = np.full(len(labels), NOISE)
    for k, lab in enumerate(labels):
        if lab == NOISE:
            continue
        out[k] = mapping.setdefault(lab, len(mapping))
    return out


# ---------------------------------------------------------------------------
# medoids and statistics
# ---------------------------------------------------------------------------

def mean_similarities(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n == 1:
        return np.zeros(1)
    return (S.sum(axis=1) - np.diag(S)) / (n - 1)


def cluster_medoid(members, metric: str = "rogers_tanimoto") -> int:
    """Member with the highest mean similarity to the others (first on ties).

    ``members`` is a list of fingerprints or a square similarity matrix.
    """
    if isinstance(members, np.ndarray) and members.ndim == 2:
        S = members
    else:
        members = list(members)
        if not members:
            raise ValueError("empty cluster")
        S = similarity_matrix(members, metric)
    return int(np.argmax(mean_similarities(S)))


def cluster_stats(labels, values) -> dict:
    """``{label: {size, median, std}}`` over non-noise clusters (population std)."""
    labels = np.asarray(labels)
    values = np.asarray(values, dtype=float)
    if labels.shape != values.shape:
        raise LengthMismatch(f"{labels.shape} labels vs {values.shape} values")
    out = {}
    for lab in sorted(set(labels.tolist()) - {NOISE}):
        v = values[labels == lab]
        out[int(lab)] = {"size": int(v.size), "median": float(np.median(v)), "std": float(v.std())}
    return out


@dataclass
class ClusterResult:
    coords: np.ndarray
    labels: np.ndarray
    eps: float
    min_pts: int
    medoids: dict = field(default_factory=dict)  # label -> global index
    stats: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(set(self.labels.tolist()) - {NOISE})

    @property
    def n_noise(self) -> int:
        return int((self.labels == NOISE).sum())


def analyze(fps: Sequence[cg.Fingerprint], values=None, metric: str = "rogers_tanimoto",
            perplexity: float = 30.0, seed: int = 0, iters: int = 1000, eps: float | None = None,
            min_pts: int = 10, cluster_space: str = "embedding") -> ClusterResult:
    """Distance matrix, embedding, clustering, medoids and per-cluster statistics.

    ``cluster_space`` selects whether DBSCAN runs on the embedded coordinates
    (``"embedding"``) or on the fingerprint distances (``"distance"``).
    """
    S = similarity_matrix(fps, metric)
    D = 1.0 - S
    np.fill_diagonal(D, 0.0)
    coords = tsne(D, perplexity, seed, iters)
    if cluster_space == "embedding":
        eps = eps if eps is not None else default_eps(coords)
        labels = dbscan(coords, eps, min_pts)
    elif cluster_space == "distance":
        eps = eps if eps is not None else float(np.percentile(np.sort(D, axis=1)[:, min(10, len(D) - 1)], 90))
        labels = dbscan(D, eps, min_pts, precomputed=True)
    else:
        raise ValueError(f"unknown cluster space {cluster_space!r}")
    res = ClusterResult(coords, labels, float(eps), int(min_pts))
    for lab in sorted(set(labels.tolist()) - {NOISE}):
        idx = np.flatnonzero(labels == lab)
        res.medoids[int(lab)] = int(idx[cluster_medoid(S[np.ix_(idx, idx)])])
    if values is not None:
        res.stats = cluster_stats(labels, values)
    return res


EMBEDDING_HEADER = ["id", "x", "y", "cluster"]
SUMMARY_HEADER = ["cluster", "size", "medoid_id", "median_log10_vp_pa", "std_log10_vp_pa"]


def write_embedding(path, ids: Sequence[str], coords, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EMBEDDING_HEADER)
        for i, (x, y), lab in zip(ids, np.asarray(coords, dtype=float), labels):
            w.writerow([i, fmt(x), fmt(y), int(lab)])


def read_embedding(path):
    """Returns ``(ids, coords, labels)``."""
    ids, xy, labels = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EMBEDDING_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for d in reader:
            ids.append(d["id"])
            xy.append((float(d["x"]), float(d["y"])))
            labels.append(int(d["cluster"]))
    return ids, np.array(xy, dtype=float).reshape(-1, 2), np.array(labels, dtype=int)


def write_cluster_summary(path, result: ClusterResult, ids: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for lab in sorted(result.medoids):
            st = result.stats.get(lab)
            size = int((result.labels == lab).sum())
            w.writerow([lab, size, ids[result.medoids[lab]],
                        fmt(st["median"]) if st else "", fmt(st["std"]) if st else ""])


def read_cluster_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [dict(d) for d in reader]
