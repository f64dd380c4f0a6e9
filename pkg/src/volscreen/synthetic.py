"""Synthetic corpora with known structure, for tests and desk-scale runs."""
from __future__ import annotations

import numpy as np

from . import chemgraph as cg
from . import molgen
from .vapordata import AntoineParams, AntoineRecord, Dataset, stratified_group_split

TRUE_FEATURES = ("x1", "x2", "T")


def target_function(x1, x2, T):
    """Smooth nonlinear target in which each of the three inputs matters."""
    return 1.1 * x1 + 1.3 * np.tanh(x2) + 0.3 * x1 * x2 + 9.0 * (1.0 - 387.0 / np.asarray(T))


def feature_dataset(n_molecules: int = 120, n_temperatures: int = 3, n_decoys: int = 48,
                    noise: float = 0.1, seed: int = 0, t_range=(300.0, 450.0)) -> Dataset:
    """Molecule-grouped instances with two molecule features, temperature and decoys.

    ``x1``, ``x2`` and the decoys are constant within a molecule; each
    molecule is observed at ``n_temperatures`` random temperatures.  The
    partition map is attached.
    """
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n_molecules)
    x2 = rng.normal(size=n_molecules)
    decoys = rng.normal(size=(n_molecules, n_decoys))
    rows, ids, temps, ys = [], [], [], []
    for m in range(n_molecules):
        Ts = np.sort(rng.uniform(*t_range, size=n_temperatures))
        for T in Ts:
            y = target_function(x1[m], x2[m], T) + rng.normal(0.0, noise)
            ids.append(f"m{m:04d}")
            temps.append(T)
            ys.append(y)
            rows.append(np.r_[x1[m], x2[m], T, decoys[m]])
    names = list(TRUE_FEATURES) + [f"decoy{k:02d}" for k in range(n_decoys)]
    ds = Dataset(ids, temps, ys, np.array(rows), names)
    ds.partition = stratified_group_split(ds, seed=seed)
    return ds


def antoine_from_structure(mol: cg.MolGraph, rng=None) -> AntoineParams:
    """Plausible Antoine constants that grow less volatile with size and oxygen count."""
    mw = cg.mol_weight(mol)
    n_o = cg.element_counts(mol).get("O", 0)
    n_rings = int(cg.static_descriptors(mol)[cg.DESCRIPTOR_NAMES.index("n_rings")])
    A = 8.44
    B = 1000.0 + 9.0 * mw + 350.0 * n_o + 60.0 * n_rings
    if rng is not None:
        A += rng.normal(0.0, 0.05)
        B += rng.normal(0.0, 20.0)
    return AntoineParams(float(A), float(B), -70.0, 300.0, 460.0)


def antoine_corpus(n: int = 120, seed: int = 0, mw_range=(90.0, 420.0), p_fg: float = 0.05,
                   extras: bool = True) -> list[AntoineRecord]:
    """``n`` distinct generated molecules with Antoine records.

    With ``extras`` a few records that the composition filter must reject
    (foreign element, too few carbons) and one re-written isomer are added.
    """
    rng = np.random.default_rng(seed)
    records, seen = [], set()
    index = 0
    while len(records) < n:
        cfg = molgen.GrowthConfig(p_functional_group=p_fg, mw_max=float(rng.uniform(*mw_range)))
        mol, trace = molgen.generate(seed, cfg, index=index)
        index += 1
        if trace.smiles in seen or cg.element_counts(mol).get("C", 0) < 6:
            continue
        seen.add(trace.smiles)
        records.append(AntoineRecord(f"syn{len(records):04d}", trace.smiles, antoine_from_structure(mol, rng)))
    if extras:
        p = AntoineParams(8.0, 1500.0, -60.0, 250.0, 400.0)
        records.append(AntoineRecord("reject_n", "CCCCCCN", p))
        records.append(AntoineRecord("reject_c", "CCCO", p))
        # the first molecule again, written from the other end
        first = records[0]
        flipped = cg.to_smiles(cg.parse_smiles(first.smiles))
        records.append(AntoineRecord("isomer_dup", flipped, first.params))
    return records
