"""Two-stage vapor-pressure screen for generated candidates.

Stage 1 drops candidates predicted above 1e-5 Pa at 387 K; stage 2 drops
survivors predicted above 5e-9 Pa at 300 K.  Both cuts keep values that sit
exactly on the threshold.  Only the predictive mean is thresholded.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import chemgraph as cg
from .errors import PredictorFailure, SmilesError
from .vapordata import DESCRIPTOR_FEATURES, descriptor_row, fmt

log = logging.getLogger(__name__)

STAGE1_T = 387.0
STAGE2_T = 300.0
STAGE1_LOG10_PA = -5.0
STAGE2_LOG10_PA = math.log10(5e-9)

VERDICTS = ("fail_stage1", "fail_stage2", "pass")


class PredictorHandle(Protocol):
    name: str

    def features(self, mol: cg.MolGraph, temperature: float) -> np.ndarray: ...

    def predict(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class ConstantPredictor:
    """Stub returning a fixed log10 Pa for every input."""

    def __init__(self, value: float, std: float = 0.0, name: str = "constant"):
        self.value = float(value)
        self.std = float(std)
        self.name = name

    def features(self, mol, temperature):
        return np.array([float(temperature)])

    def predict(self, rows):
        n = len(np.atleast_2d(rows))
        return np.full(n, self.value), np.full(n, self.std)


class LookupPredictor:
    """Fixture predictor keyed by canonical SMILES and temperature."""

    def __init__(self, table: dict, name: str = "lookup"):
        # table: smiles -> {temperature: value}
        self.table = {cg.to_smiles(cg.parse_smiles(s)): dict(v) for s, v in table.items()}
        self.name = name
        self._keys: list = []

    def features(self, mol, temperature):
        key = cg.to_smiles(mol)
        if key not in self.table or float(temperature) not in self.table[key]:
            raise PredictorFailure(f"no fixture value for {key} at {temperature} K")
        self._keys.append((key, float(temperature)))
        return np.array([len(self._keys) - 1, float(temperature)])

    def predict(self, rows):
        rows = np.atleast_2d(rows)
        vals = [self.table[self._keys[int(r[0])][0]][self._keys[int(r[0])][1]] for r in rows]
        return np.array(vals, dtype=float), np.zeros(len(vals))


class DescriptorEnsemblePredictor:
    """GPR ensemble over static descriptors; a desk-scale stand-in for a learned graph model."""

    def __init__(self, ensemble, feature_names: Sequence[str] = DESCRIPTOR_FEATURES,
                 name: str = "descriptor-gpr-ensemble"):
        self.ensemble = ensemble
        self.feature_names = list(feature_names)
        self.name = name

    def features(self, mol, temperature):
        return descriptor_row(mol, temperature)

    def predict(self, rows):
        from .subsearch import ensemble_predict
        return ensemble_predict(self.ensemble, np.atleast_2d(rows), self.feature_names)


@dataclass
class Candidate:
    smiles: str
    mol: cg.MolGraph | None
    error: str | None = None


def as_candidates(items: Iterable) -> list[Candidate]:
    out = []
    for it in items:
        if isinstance(it, Candidate):
            out.append(it)
        elif isinstance(it, cg.MolGraph):
            out.append(Candidate(cg.to_smiles(it), it))
        else:
            try:
                out.append(Candidate(str(it), cg.parse_smiles(str(it))))
            except SmilesError as exc:
                out.append(Candidate(str(it), None, f"parse: {exc}"))
    return out


def _predict_all(cands: Sequence[Candidate], predictor, T: float):
    """Mean, std and failure reason per candidate (NaN on failure)."""
    n = len(cands)
    mean = np.full(n, np.nan)
    std = np.full(n, np.nan)
    reasons: list = [c.error for c in cands]
    rows, ok = [], []
    for k, c in enumerate(cands):
        if c.mol is None:
            continue
        try:
            rows.append(np.asarray(predictor.features(c.mol, T), dtype=float))
            ok.append(k)
        except Exception as exc:  # predictor seam: any failure drops the candidate
            reasons[k] = f"features: {exc}"
    if ok:
        try:
            m, s = predictor.predict(np.vstack(rows))
            mean[ok], std[ok] = m, s
        except Exception:
            for r, k in zip(rows, ok):
                try:
                    m, s = predictor.predict(r[None, :])
                    mean[k], std[k] = m[0], s[0]
                except Exception as exc:
                    reasons[k] = f"predict: {exc}"
    for k in ok:
        if reasons[k] is None and not np.isfinite(mean[k]):
            reasons[k] = "predict: non-finite prediction"
    for k, r in enumerate(reasons):
        if r is not None:
            mean[k] = std[k] = np.nan
            log.warning("%s", PredictorFailure(f"{cands[k].smiles}: {r}"))
    return mean, std, reasons


@dataclass
class ScreenRow:
    smiles: str
    log10vp_387K: float = math.nan
    std_387K: float = math.nan
    log10vp_300K: float | None = None
    std_300K: float | None = None
    verdict: str = "fail_stage1"
    reason: str | None = None


@dataclass
class ScreenReport:
    rows: list = field(default_factory=list)
    predictor: str = ""

    def counts(self) -> dict:
        c = {v: 0 for v in VERDICTS}
        for r in self.rows:
            c[r.verdict] += 1
        return {
            "candidates": len(self.rows),
            "stage1_survivors": c["fail_stage2"] + c["pass"],
            "pass": c["pass"],
        }

    @property
    def passed(self) -> list:
        return [r.smiles for r in self.rows if r.verdict == "pass"]


def screen_stage1(candidates, predictor, threshold_pa: float = 1e-5, T: float = STAGE1_T):
    """Keep candidates whose predicted log10 Pa at ``T`` is at most log10(threshold)."""
    cands = as_candidates(candidates)
    cut = math.log10(threshold_pa)
    mean, std, reasons = _predict_all(cands, predictor, T)
    rows, survivors = [], []
    for c, m, s, r in zip(cands, mean, std, reasons):
        keep = r is None and m <= cut
        rows.append(ScreenRow(c.smiles, float(m), float(s), verdict="pass" if keep else "fail_stage1", reason=r))
        if keep:
            survivors.append(c)
    return survivors, rows


def screen_stage2(survivors, predictor, threshold_pa: float = 5e-9, T: float = STAGE2_T):
    """Keep stage-1 survivors whose predicted log10 Pa at ``T`` is at most log10(threshold)."""
    cands = as_candidates(survivors)
    cut = math.log10(threshold_pa)
    mean, std, reasons = _predict_all(cands, predictor, T)
    final, verdicts = [], []
    for c, m, s, r in zip(cands, mean, std, reasons):
        keep = r is None and m <= cut
        verdicts.append((float(m), float(s), "pass" if keep else "fail_stage2", r))
        if keep:
            final.append(c)
    return final, verdicts


def screen(candidates, predictor, stage1_pa: float = 1e-5, stage2_pa: float = 5e-9,
           T1: float = STAGE1_T, T2: float = STAGE2_T, predictor2=None) -> ScreenReport:
    """Both stages; ``predictor2`` (default: ``predictor``) serves the second."""
    cands = as_candidates(candidates)
    survivors, rows = screen_stage1(cands, predictor, stage1_pa, T1)
    _, second = screen_stage2(survivors, predictor2 or predictor, stage2_pa, T2)
    it = iter(second)
    for row in rows:
        if row.verdict == "pass":
            m, s, verdict, reason = next(it)
            row.log10vp_300K, row.std_300K, row.verdict = m, s, verdict
            row.reason = reason
    return ScreenReport(rows, getattr(predictor, "name", ""))


REPORT_HEADER = ["smiles", "log10vp_387K", "std_387K", "log10vp_300K", "std_300K", "verdict"]


def _cell(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else fmt(x)


def write_screen_report(path, report: ScreenReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in report.rows:
            w.writerow([r.smiles, _cell(r.log10vp_387K), _cell(r.std_387K),
                        _cell(r.log10vp_300K), _cell(r.std_300K), r.verdict])


def read_screen_report(path) -> ScreenReport:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for d in reader:
            def num(k, missing):
                return float(d[k]) if d[k] != "" else missing
            rows.append(ScreenRow(d["smiles"], num("log10vp_387K", math.nan), num("std_387K", math.nan),
                                  num("log10vp_300K", None), num("std_300K", None), d["verdict"]))
    return ScreenReport(rows)
