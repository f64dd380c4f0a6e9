"""Antoine-equation targets, chemistry filters, datasets and partitioning.

Antoine parameters follow the NIST WebBook convention::

    log10(P / bar) = A - B / (T / K + C)

Everything downstream works in ``log10(P / Pa)``, which is the bar value
shifted by +5.
"""
from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import chemgraph as cg
from .errors import (
    DegenerateRange,
    InsufficientPoints,
    NonConvergence,
    SingularTemperature,
    SmilesError,
    TooFewGroups,
    UnsupportedElement,
)

BAR_TO_PA_LOG10 = 5.0
PARTITIONS = ("fold0", "fold1", "fold2", "holdout")
CV_FOLDS = PARTITIONS[:3]
ALLOWED_CATEGORIES = frozenset(cg.CATEGORIES)


class ExtrapolationWarning(UserWarning):
    """Antoine evaluation outside the validated temperature range."""


@dataclass(frozen=True)
class AntoineParams:
    A: float
    B: float
    C: float
    t_min: float = -math.inf
    t_max: float = math.inf

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError(f"t_min ({self.t_min}) must be below t_max ({self.t_max})")
        if math.isfinite(self.t_min) and self.t_min + self.C <= 0:
            raise ValueError("T + C must stay positive over the validated range")

    def in_range(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        return (T >= self.t_min) & (T <= self.t_max)


@dataclass(frozen=True)
class AntoineRecord:
    id: str
    smiles: str
    params: AntoineParams


def antoine_vp(p: AntoineParams, T, warn: bool = True):
    """log10 vapor pressure in Pa at temperature(s) ``T`` (K)."""
    Tarr = np.asarray(T, dtype=float)
    denom = Tarr + p.C
    if np.any(np.abs(denom) < 1e-9):
        raise SingularTemperature(f"T + C vanishes (C={p.C})")
    if warn and not np.all(p.in_range(Tarr)):
        warnings.warn(
            f"temperature outside validated range [{p.t_min}, {p.t_max}] K",
            ExtrapolationWarning,
            stacklevel=2,
        )
    out = p.A - p.B / denom + BAR_TO_PA_LOG10
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class AntoineFit:
    params: AntoineParams
    sse: float
    iterations: int
    seed_C: float


def _linear_ab(T, z, C):
    # z = A - B * u with u = 1/(T + C)
    u = 1.0 / (T + C)
    M = np.column_stack([np.ones_like(u), -u])
    coef, *_ = np.linalg.lstsq(M, z, rcond=None)
    return coef[0], coef[1]


def _gauss_newton(T, z, A, B, C, tol, max_iter):
    def sse_of(A, B, C):
        d = T + C
        if np.any(d <= 0):
            return math.inf
        r = z - (A - B / d)
        return float(r @ r)

    sse = sse_of(A, B, C)
    for it in range(1, max_iter + 1):
        d = T + C
        r = z - (A - B / d)
        # Jacobian of the model A - B/(T+C)
        J = np.column_stack([np.ones_like(T), -1.0 / d, B / d**2])
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        t = 1.0
        while True:
            trial = sse_of(A + t * step[0], B + t * step[1], C + t * step[2])
            if trial <= sse or t < 1e-12:
                break
            t *= 0.5
        if trial > sse:
            return A, B, C, sse, it, abs(trial - sse) < tol
        A, B, C = A + t * step[0], B + t * step[1], C + t * step[2]
        change = sse - trial
        sse = trial
        if change < tol:
            return A, B, C, sse, it, True
    return A, B, C, sse, max_iter, False


def fit_antoine(
    points: Sequence[tuple[float, float]],
    exclude: Iterable[int] | None = None,
    seeds: Sequence[float] = (-150.0, -100.0, -50.0, 0.0, 50.0),
    tol: float = 1e-10,
    max_iter: int = 500,
) -> AntoineFit:
    """Least-squares Antoine fit to ``(T [K], log10 P [Pa])`` points.

    Each ``C`` seed gets a linear solve for ``A`` and ``B`` followed by damped
    Gauss-Newton on all three parameters; the lowest-SSE converged fit wins.
    ``exclude`` lists indices of points to leave out (e.g. outliers).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (T, log10 P) pairs")
    keep = np.ones(len(pts), dtype=bool)
    for k in exclude or ():
        keep[k] = False
    pts = pts[keep]
    if len(pts) < 3:
        raise InsufficientPoints(f"need at least 3 points, got {len(pts)}")
    T, z = pts[:, 0], pts[:, 1] - BAR_TO_PA_LOG10
    if len(np.unique(T)) < 3:
        raise InsufficientPoints("need at least 3 distinct temperatures")

    best = None
    for C0 in seeds:
        if np.any(T + C0 <= 0):
            continue
        A0, B0 = _linear_ab(T, z, C0)
        A, B, C, sse, it, ok = _gauss_newton(T, z, A0, B0, C0, tol, max_iter)
        if not ok:
            continue
        if best is None or sse < best.sse:
            best = AntoineFit(
                AntoineParams(float(A), float(B), float(C), float(T.min()), float(T.max())), sse, it, C0
            )
    if best is None:
        raise NonConvergence("no C seed reached the SSE tolerance")
    return best


# ---------------------------------------------------------------------------
# filtering
# ---------------------------------------------------------------------------

@dataclass
class FilterReport:
    kept_by_category: Counter = field(default_factory=Counter)
    rejected: list = field(default_factory=list)  # (id, reason, detail)

    @property
    def rejected_by_reason(self) -> Counter:
        return Counter(reason for _, reason, _ in self.rejected)


def composition_filter(records: Iterable[AntoineRecord], min_carbon: int = 6):
    """Keep C/H/O/F molecules with at least ``min_carbon`` carbons.

    Returns ``(kept, report)``.  Unparseable records are rejected with
    reason ``"parse"`` (or ``"element set"`` for foreign elements) without
    stopping the batch.
    """
    kept = []
    report = FilterReport()
    for rec in records:
        try:
            mol = cg.parse_smiles(rec.smiles)
        except UnsupportedElement as exc:
            report.rejected.append((rec.id, "element set", str(exc)))
            continue
        except (SmilesError, ValueError) as exc:
            report.rejected.append((rec.id, "parse", str(exc)))
            continue
        comp = cg.composition(mol)
        if comp.category not in ALLOWED_CATEGORIES:
            report.rejected.append((rec.id, "element set", comp.category))
        elif comp.counts["C"] < min_carbon:
            report.rejected.append((rec.id, "min-carbon", f"{comp.counts['C']} C"))
        else:
            kept.append(rec)
            report.kept_by_category[comp.category] += 1
    return kept, report


def consolidate_isomers(records: Iterable[AntoineRecord]):
    """Drop records whose canonical SMILES was already seen (first wins)."""
    seen = set()
    out = []
    for rec in records:
        key = cg.to_smiles(cg.parse_smiles(rec.smiles))
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def sample_temperatures(t_min: float, t_max: float, n: int = 20, min_sep: float = 2.0) -> np.ndarray:
    if not t_max > t_min:
        raise DegenerateRange(f"t_max ({t_max}) must exceed t_min ({t_min})")
    span = t_max - t_min
    if span < min_sep:
        raise DegenerateRange(f"range {span} K is narrower than {min_sep} K")
    if span / (n - 1) < min_sep:
        n = max(2, int(math.floor(span / min_sep + 1e-9)) + 1)
    return np.linspace(t_min, t_max, n)


@dataclass
class Dataset:
    """Instances of (molecule, temperature, log10 vp) plus optional features.

    ``features`` rows align with instances; ``partition`` maps molecule ids to
    a partition label.
    """

    molecule_ids: np.ndarray
    temperatures: np.ndarray
    y: np.ndarray
    features: np.ndarray | None = None
    feature_names: list = field(default_factory=list)
    partition: dict = field(default_factory=dict)

    def __post_init__(self):
        self.molecule_ids = np.asarray(self.molecule_ids, dtype=object)
        self.temperatures = np.asarray(self.temperatures, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=float)
            if self.features.shape != (len(self.y), len(self.feature_names)):
                raise ValueError("feature matrix does not match instances/names")

    def __len__(self):
        return len(self.y)

    @property
    def molecules(self) -> list:
        """Unique molecule ids in first-appearance order."""
        return list(dict.fromkeys(self.molecule_ids.tolist()))

    @property
    def labels(self) -> np.ndarray:
        return np.array([self.partition.get(m, "") for m in self.molecule_ids], dtype=object)

    def indices(self, *parts: str) -> np.ndarray:
        lab = self.labels
        return np.flatnonzero(np.isin(lab, list(parts)))

    def columns(self, names: Sequence[str]) -> np.ndarray:
        lookup = {n: k for k, n in enumerate(self.feature_names)}
        return self.features[:, [lookup[n] for n in names]]

    def with_features(self, X, names) -> "Dataset":
        return Dataset(self.molecule_ids, self.temperatures, self.y, X, list(names), dict(self.partition))


def build_variable_dataset(records: Iterable[AntoineRecord], n: int = 20, min_sep: float = 2.0) -> Dataset:
    ids, temps, ys = [], [], []
    for rec in records:
        p = rec.params
        Ts = sample_temperatures(p.t_min, p.t_max, n, min_sep)
        ids.extend([rec.id] * len(Ts))
        temps.extend(Ts)
        ys.extend(np.atleast_1d(antoine_vp(p, Ts, warn=False)))
    return Dataset(ids, temps, ys)


def build_fixed_dataset(records: Iterable[AntoineRecord], T: float = 387.0):
    """One instance per molecule at ``T``; returns ``(dataset, skipped_ids)``."""
    ids, ys, skipped = [], [], []
    for rec in records:
        if rec.params.t_min <= T <= rec.params.t_max:
            ids.append(rec.id)
            ys.append(antoine_vp(rec.params, T, warn=False))
        else:
            skipped.append(rec.id)
    return Dataset(ids, [T] * len(ids), ys), skipped


TEMPERATURE_FEATURE = "temperature_K"
DESCRIPTOR_FEATURES = tuple(cg.DESCRIPTOR_NAMES) + (TEMPERATURE_FEATURE,)


def descriptor_row(mol: cg.MolGraph, T: float) -> np.ndarray:
    """Static descriptors of ``mol`` followed by the temperature."""
    return np.append(cg.static_descriptors(mol), float(T))


def attach_descriptors(dataset: Dataset, smiles_by_id: dict) -> Dataset:
    """Feature matrix of static descriptors plus temperature for every instance."""
    cache = {}
    rows = []
    for mid, T in zip(dataset.molecule_ids, dataset.temperatures):
        if mid not in cache:
            cache[mid] = cg.static_descriptors(cg.parse_smiles(smiles_by_id[mid]))
        rows.append(np.append(cache[mid], T))
    X = np.array(rows, dtype=float).reshape(len(rows), len(DESCRIPTOR_FEATURES))
    return dataset.with_features(X, DESCRIPTOR_FEATURES)


def molecule_medians(dataset: Dataset) -> dict:
    out = {}
    for mid in dataset.molecules:
        out[mid] = float(np.median(dataset.y[dataset.molecule_ids == mid]))
    return out


def stratified_group_split(dataset: Dataset, k_folds: int = 3, holdout: int = 1, seed: int = 0) -> dict:
    """Median-stratified, molecule-grouped partition map.

    Molecules are sorted by their median target and dealt round-robin into
    the ``k_folds + holdout`` partitions; the deal order of every block is
    rotated by a seeded offset so no partition is systematically favoured.
    """
    if holdout != 1:
        raise ValueError("exactly one holdout partition is supported")
    labels = [f"fold{k}" for k in range(k_folds)] + ["holdout"]
    n_parts = len(labels)
    med = molecule_medians(dataset)
    if len(med) < n_parts:
        raise TooFewGroups(f"{len(med)} molecules for {n_parts} partitions")
    ordered = sorted(med, key=lambda m: (med[m], str(m)))
    rng = np.random.default_rng(seed)
    out = {}
    for start in range(0, len(ordered), n_parts):
        offset = int(rng.integers(n_parts))
        for k, mid in enumerate(ordered[start:start + n_parts]):
            out[mid] = labels[(k + offset) % n_parts]
    return out


def check_partition(dataset: Dataset, partition: dict) -> None:
    """Raise if any molecule lacks a label or a partition is empty."""
    missing = [m for m in dataset.molecules if m not in partition]
    if missing:
        raise ValueError(f"molecules without partition: {missing[:5]}")
    used = set(partition[m] for m in dataset.molecules)
    empty = [p for p in PARTITIONS if p not in used]
    if empty:
        raise ValueError(f"empty partitions: {empty}")


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

RECORD_HEADER = ["id", "smiles", "A", "B", "C", "t_min_K", "t_max_K"]
DATASET_HEADER = ["molecule_id", "temperature_K", "log10_vp_pa", "partition"]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def read_records(path) -> list[AntoineRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames)[:7] != RECORD_HEADER:
            raise ValueError(f"expected header {','.join(RECORD_HEADER)}")
        out = []
        for row in reader:
            params = AntoineParams(
                float(row["A"]), float(row["B"]), float(row["C"]),
                float(row["t_min_K"]), float(row["t_max_K"]),
            )
            out.append(AntoineRecord(row["id"], row["smiles"], params))
    return out


def write_records(path, records: Iterable[AntoineRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            p = r.params
            w.writerow([r.id, r.smiles, fmt(p.A), fmt(p.B), fmt(p.C), fmt(p.t_min), fmt(p.t_max)])


def write_dataset(path, dataset: Dataset) -> None:
    labels = dataset.labels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for mid, T, y, lab in zip(dataset.molecule_ids, dataset.temperatures, dataset.y, labels):
            w.writerow([mid, fmt(T), fmt(y), lab])


def read_dataset(path) -> Dataset:
    ids, temps, ys, part = [], [], [], {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if list(reader.fieldnames or []) != DATASET_HEADER:
            raise ValueError(f"expected header {','.join(DATASET_HEADER)}")
        for row in reader:
            ids.append(row["molecule_id"])
            temps.append(float(row["temperature_K"]))
            ys.append(float(row["log10_vp_pa"]))
            if row["partition"]:
                part[row["molecule_id"]] = row["partition"]
    return Dataset(ids, temps, ys, partition=part)


def write_feature_matrix(path, names: Sequence[str], X: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names))
        for row in np.asarray(X, dtype=float):
            w.writerow([fmt(v) for v in row])


def read_feature_matrix(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    if len(set(names)) != len(names):
        raise ValueError("duplicate feature names")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains missing or non-finite values")
    return list(names), X
